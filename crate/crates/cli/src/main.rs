use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use hmplan::io::{self, plan as planio, stl, GridFormat};
use hmplan::nullifier::{self, PlanConfig, PlanSequence, PlanTimings};
use hmplan::replay::{self, PlanStatistics};
use hmplan::toolpath;
use hmplan::{Error, StabilityMode, ToolSpec};

#[derive(Parser, Debug)]
#[command(
    name = "hmplan",
    version,
    about = "Hybrid additive/subtractive process planner for voxel models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Auto,
    Text,
    Bin,
    Stl,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StabilityArg {
    Local,
    Oracle,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute an interleaved AM/SM plan for a voxel model.
    Plan {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "auto")]
        format: FormatArg,
        /// Cells along the longest axis when the input is an STL mesh.
        #[arg(long, default_value_t = 64)]
        res: usize,
        #[arg(long, default_value_t = 10)]
        tool_length: i32,
        #[arg(long, default_value_t = 10)]
        delta: i32,
        #[arg(long)]
        no_preprocess: bool,
        /// Prefer eroding connected groups of at least M voxels.
        #[arg(long, num_args = 0..=1, default_missing_value = "10", value_name = "M")]
        mpfs: Option<usize>,
        /// Reserved; planning is deterministic.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "local")]
        stability: StabilityArg,
        #[arg(long, default_value = "plan.json")]
        out: PathBuf,
        /// Print plan statistics.
        #[arg(long)]
        stats: bool,
        /// Write a grid snapshot `layer_<K>.hmvox` whenever a new top layer starts.
        #[arg(long, value_name = "DIR")]
        progress_dump: Option<PathBuf>,
    },
    /// Verify a plan by executing its forward program.
    Replay {
        #[arg(long)]
        plan: PathBuf,
        /// Model the program must produce (defaults to the model stored in the plan).
        #[arg(long)]
        target: Option<PathBuf>,
        /// Keep going after violations and list all of them.
        #[arg(long)]
        audit: bool,
    },
    /// Print statistics of a plan.
    Stats {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Emit machine-neutral toolpaths for a plan.
    Toolpath {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long, default_value_t = 1.2)]
        voxel_size: f64,
        #[arg(long, default_value_t = 0.6)]
        nozzle: f64,
        #[arg(long, default_value = "toolpath.json")]
        out: PathBuf,
        /// Also write a G-code-like listing.
        #[arg(long, value_name = "FILE")]
        gcode: Option<PathBuf>,
    },
    /// Voxelize a closed binary STL mesh.
    Voxelize {
        #[arg(long)]
        stl: PathBuf,
        #[arg(long, default_value_t = 64)]
        res: usize,
        #[arg(long, default_value = "model.hmvox")]
        out: PathBuf,
    },
}

/// Exit status 2 for bad input, 1 for planning or verification failures.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(
            Error::Parse { .. }
            | Error::Io(_)
            | Error::Json(_)
            | Error::InvalidArgument(_)
            | Error::OutOfBounds { .. }
            | Error::NotWatertight { .. },
        ) => 2,
        Some(_) => 1,
        None => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn load_plan(path: &Path) -> Result<PlanSequence> {
    let text = std::fs::read_to_string(path)
        .map_err(Error::from)
        .with_context(|| format!("reading {}", path.display()))?;
    Ok(planio::plan_from_json(&text)?)
}

fn print_stats(s: &PlanStatistics, timings: Option<&PlanTimings>) {
    println!("model voxels:      {}", s.model_voxels);
    println!(
        "operations:        {} (AM {}, SM {})",
        s.total_ops, s.am_ops, s.sm_ops
    );
    println!(
        "support voxels:    {} (pre-processing {}, in-plan {})",
        s.support_voxels, s.preplanned_supports, s.inplan_supports
    );
    println!("tool switches:     {}", s.tool_switches);
    println!("operation density: {:.4}", s.operation_density);
    if let Some(t) = timings {
        println!(
            "time:              pre-processing {:.3}s, nullification {:.3}s ({} rounds)",
            t.preprocess.as_secs_f64(),
            t.nullification.as_secs_f64(),
            t.rounds
        );
    }
}

fn run(cmd: Command) -> Result<u8> {
    match cmd {
        Command::Plan {
            input,
            format,
            res,
            tool_length,
            delta,
            no_preprocess,
            mpfs,
            seed: _,
            stability,
            out,
            stats,
            progress_dump,
        } => {
            let format = match format {
                FormatArg::Auto => None,
                FormatArg::Text => Some(GridFormat::Text),
                FormatArg::Bin => Some(GridFormat::Binary),
                FormatArg::Stl => Some(GridFormat::Stl),
            };
            let model = io::read_grid(&input, format, res)
                .with_context(|| format!("reading {}", input.display()))?;
            let config = PlanConfig {
                tool_length,
                delta,
                mpfs,
                preprocess: !no_preprocess,
                stability: match stability {
                    StabilityArg::Local => StabilityMode::Local,
                    StabilityArg::Oracle => StabilityMode::Oracle,
                },
            };
            if let Some(dir) = &progress_dump {
                std::fs::create_dir_all(dir).map_err(Error::from)?;
            }
            let (plan, timings) = nullifier::plan_observed(&model, config, |k, g| {
                if let Some(dir) = &progress_dump {
                    io::write_grid(&dir.join(format!("layer_{k}.hmvox")), g)?;
                }
                Ok(())
            })?;
            std::fs::write(&out, planio::plan_to_json(&plan)?)
                .map_err(Error::from)
                .with_context(|| format!("writing {}", out.display()))?;
            if stats {
                print_stats(&replay::plan_statistics(&plan.ops, &model), Some(&timings));
            }
            println!("wrote {} operations to {}", plan.ops.len(), out.display());
            Ok(0)
        }
        Command::Replay {
            plan,
            target,
            audit,
        } => {
            let p = load_plan(&plan)?;
            let target = match target {
                Some(t) => io::read_grid(&t, None, 64)
                    .with_context(|| format!("reading {}", t.display()))?,
                None => p.initial.clone(),
            };
            let tool = ToolSpec::new(p.config.tool_length)?;
            let report = replay::replay(&p.ops, &target, tool, audit)?;
            if report.valid {
                println!("valid, exact match ({} steps)", report.steps_executed);
                return Ok(0);
            }
            let list = if audit {
                report.violations.clone()
            } else {
                report.first_violation.into_iter().collect()
            };
            for v in list {
                println!("violation at step {}: {:?} at {}", v.step, v.kind, v.voxel);
            }
            if !report.final_matches_target {
                println!("final state does not match the target");
            }
            println!("invalid");
            Ok(1)
        }
        Command::Stats { plan, json } => {
            let p = load_plan(&plan)?;
            let s = replay::plan_statistics(&p.ops, &p.initial);
            if json {
                println!("{}", serde_json::to_string_pretty(&s)?);
            } else {
                print_stats(&s, None);
            }
            Ok(0)
        }
        Command::Toolpath {
            plan,
            voxel_size,
            nozzle,
            out,
            gcode,
        } => {
            let p = load_plan(&plan)?;
            let program = replay::forward_program(&p.ops)?;
            let patches = toolpath::group_patches(&program)?;
            let doc = toolpath::emit_toolpath(&patches, voxel_size, nozzle, p.config.tool_length)?;
            std::fs::write(&out, doc.to_json()?).map_err(Error::from)?;
            if let Some(g) = gcode {
                std::fs::write(&g, doc.to_gcode()).map_err(Error::from)?;
            }
            println!(
                "wrote {} patches ({} tool changes) to {}",
                doc.patches.len(),
                doc.tool_changes(),
                out.display()
            );
            Ok(0)
        }
        Command::Voxelize {
            stl: path,
            res,
            out,
        } => {
            let bytes = std::fs::read(&path)
                .map_err(Error::from)
                .with_context(|| format!("reading {}", path.display()))?;
            let grid = stl::voxelize_mesh(&stl::parse_binary_stl(&bytes)?, res)?;
            io::write_grid(&out, &grid)?;
            let d = grid.dims();
            println!(
                "wrote {}x{}x{} grid with {} solid voxels to {}",
                d.nx,
                d.ny,
                d.nz,
                grid.solid_count(),
                out.display()
            );
            Ok(0)
        }
    }
}
