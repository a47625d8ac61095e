use hmplan::fixtures::{self, fill_box};
use hmplan::io::{self, plan as planio, stl};
use hmplan::nullifier::layer_clusters;
use hmplan::stability::is_stable_global;
use hmplan::toolpath;
use hmplan::{plan, replay, OpKind, PlanConfig, ToolSpec, Voxel, VoxelGrid};
use proptest::prelude::*;

fn arb_grid(max: usize) -> impl Strategy<Value = VoxelGrid> {
    (1..=max, 1..=max, 1..=max).prop_flat_map(|(nx, ny, nz)| {
        proptest::collection::vec(any::<bool>(), nx * ny * nz).prop_map(move |bits| {
            let mut g = VoxelGrid::new(nx, ny, nz).unwrap();
            for (l, b) in bits.into_iter().enumerate() {
                if b {
                    let v = g.dims().voxel(l);
                    g.set(v).unwrap();
                }
            }
            g
        })
    })
}

fn config(l: i32) -> PlanConfig {
    PlanConfig {
        tool_length: l,
        delta: l,
        ..PlanConfig::default()
    }
}

proptest! {
    #[test]
    fn text_format_round_trips(g in arb_grid(10)) {
        let text = io::to_text(&g);
        let back = io::parse_text(&text).unwrap();
        prop_assert_eq!(&back, &g);
        prop_assert_eq!(io::to_text(&back), text);
    }

    #[test]
    fn binary_format_round_trips(g in arb_grid(10)) {
        let bytes = io::to_binary(&g);
        let back = io::parse_binary(&bytes).unwrap();
        prop_assert_eq!(&back, &g);
        prop_assert_eq!(io::to_binary(&back), bytes);
    }

    #[test]
    fn truncated_binary_is_rejected(g in arb_grid(6), cut in 1usize..64) {
        let bytes = io::to_binary(&g);
        let keep = bytes.len().saturating_sub(cut);
        prop_assert!(io::parse_binary(&bytes[..keep]).is_err());
    }
}

#[test]
fn full_random_cube_round_trips() {
    let g = fixtures::random_blob(7, 10);
    assert_eq!(g.dims().as_array(), [10, 10, 10]);
    assert_eq!(io::parse_text(&io::to_text(&g)).unwrap(), g);
    assert_eq!(io::parse_binary(&io::to_binary(&g)).unwrap(), g);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    // Every plan on a random stable model replays with the exact oracle,
    // keeps the op-count identity and survives the plan file format.
    #[test]
    fn plans_are_valid_and_serializable(seed in 0u64..10_000, n in 6usize..12, l in 2i32..8, kind in 0u8..4) {
        let model = match kind {
            0 => fixtures::random_blob(seed, n),
            1 => fixtures::random_cantilever(seed, n),
            2 => fixtures::random_bridge(seed, n),
            _ => fixtures::random_cavity(seed, n),
        };
        prop_assume!(model.solid_count() > 0 && is_stable_global(&model, &hmplan::NoMask));
        let p = plan(&model, config(l)).unwrap();
        prop_assert_eq!(p.check_invariants(), Ok(()));
        let acc = p.ops.iter().filter(|o| o.kind == OpKind::Accretion).count();
        prop_assert_eq!(p.ops.len(), model.solid_count() + 2 * acc);

        let report = replay(&p.ops, &model, ToolSpec::new(l).unwrap(), false).unwrap();
        prop_assert!(report.valid, "{:?}", report.first_violation);
        prop_assert!(report.final_matches_target);

        let json = planio::plan_to_json(&p).unwrap();
        let back = planio::plan_from_json(&json).unwrap();
        prop_assert_eq!(planio::plan_to_json(&back).unwrap(), json);
    }
}

#[test]
fn planner_output_is_byte_identical_across_runs() {
    for (name, model) in fixtures::corpus(12, 99) {
        for cfg in [
            config(3),
            PlanConfig {
                mpfs: Some(10),
                ..config(3)
            },
        ] {
            let a = planio::plan_to_json(&plan(&model, cfg).unwrap()).unwrap();
            let b = planio::plan_to_json(&plan(&model, cfg).unwrap()).unwrap();
            assert_eq!(a, b, "{name}");
        }
    }
}

#[test]
fn toolpath_document_is_byte_identical_after_round_trip() {
    let model = fixtures::staircase_bridge();
    let p = plan(&model, config(4)).unwrap();
    let program = hmplan::forward_program(&p.ops).unwrap();
    let doc =
        toolpath::emit_toolpath(&toolpath::group_patches(&program).unwrap(), 1.2, 0.6, 4).unwrap();
    let json = doc.to_json().unwrap();
    assert_eq!(
        toolpath::ToolpathDocument::from_json(&json)
            .unwrap()
            .to_json()
            .unwrap(),
        json
    );
    let cover = toolpath::am_coverage(&doc);
    // 1.2 mm voxels with a 0.6 mm nozzle: two passes over every deposit.
    let am: Vec<Voxel> = program
        .iter()
        .filter(|o| o.kind == hmplan::replay::ForwardKind::Am)
        .map(|o| o.voxel)
        .collect();
    assert_eq!(cover.len(), am.len());
    for v in am {
        assert_eq!(cover.get(&v), Some(&2), "{v:?}");
    }
}

#[test]
fn sphere_volume_matches_analytic_oracle() {
    for r in [8.0, 11.0, 16.0] {
        let res = (2.0 * r) as usize;
        let mesh = stl::sphere_mesh([0.0; 3], r, 96, 192);
        let g = stl::voxelize_mesh(&mesh, res).unwrap();
        let exact = 4.0 / 3.0 * std::f64::consts::PI * r * r * r;
        let got = g.solid_count() as f64;
        assert!(
            (got - exact).abs() / exact < 0.10,
            "r={r}: {got} vs {exact:.1}"
        );
    }
}

#[test]
fn stl_file_voxelizes_like_the_mesh() {
    let mesh = stl::box_mesh([0.0; 3], [3.0, 3.0, 6.0]);
    let dir = tempfile_dir();
    let path = dir.join("box.stl");
    std::fs::write(&path, stl::write_binary_stl(&mesh)).unwrap();
    let g = io::read_grid(&path, None, 6).unwrap();
    assert_eq!(g, stl::voxelize_mesh(&mesh, 6).unwrap());
    assert_eq!(g.solid_count(), 54);
    std::fs::remove_dir_all(dir).unwrap();
}

fn tempfile_dir() -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("hmplan-props-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}

// Two six-voxel runs on layer 2 joined by a voxel with nothing underneath.
// Its enhancement needs one accretion, after which the layer erodes as a
// single thirteen-voxel run.
fn bridged_runs() -> VoxelGrid {
    let mut g = VoxelGrid::new(13, 3, 3).unwrap();
    fill_box(&mut g, [0, 1, 0], [4, 1, 1]);
    fill_box(&mut g, [8, 1, 0], [12, 1, 1]);
    fill_box(&mut g, [0, 1, 2], [12, 1, 2]);
    g
}

#[test]
fn mpfs_merges_bridged_runs_into_one_erosion_run() {
    let model = bridged_runs();
    let cfg = PlanConfig {
        mpfs: Some(10),
        ..config(2)
    };
    let p = plan(&model, cfg).unwrap();
    assert_eq!(p.check_invariants(), Ok(()));
    let report = replay(&p.ops, &model, ToolSpec::new(2).unwrap(), false).unwrap();
    assert!(report.valid, "{:?}", report.first_violation);

    let top: Vec<Voxel> = p
        .ops
        .iter()
        .take_while(|o| o.kind == OpKind::Accretion || o.voxel.k == 2)
        .filter(|o| o.kind == OpKind::Erosion)
        .map(|o| o.voxel)
        .collect();
    assert_eq!(top.len(), 13);
    assert_eq!(layer_clusters(&top).len(), 1);
    assert!(p.ops.iter().any(|o| o.kind == OpKind::Accretion));
}

#[test]
fn mpfs_still_erodes_isolated_voxels() {
    let mut model = VoxelGrid::new(5, 5, 2).unwrap();
    model.set(Voxel::new(2, 2, 0)).unwrap();
    model.set(Voxel::new(2, 2, 1)).unwrap();
    let p = plan(
        &model,
        PlanConfig {
            mpfs: Some(10),
            ..config(2)
        },
    )
    .unwrap();
    assert_eq!(p.ops.len(), 2);
    assert!(
        replay(&p.ops, &model, ToolSpec::new(2).unwrap(), false)
            .unwrap()
            .valid
    );
}
