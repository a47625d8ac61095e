use std::path::Path;
use std::process::{Command, Output};

use hmplan::fixtures;
use hmplan::io::{self, stl};

fn hmplan(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hmplan"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("spawn hmplan")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_model(dir: &Path, name: &str) {
    let g = fixtures::staircase_bridge();
    std::fs::write(dir.join(name), io::to_text(&g)).unwrap();
}

#[test]
fn plan_replay_stats_toolpath_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_model(d, "m.hmvox");

    let o = hmplan(
        &[
            "plan",
            "--input",
            "m.hmvox",
            "--out",
            "p.json",
            "--stats",
            "--tool-length",
            "4",
        ],
        d,
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(stdout(&o).contains("tool switches"));

    let o = hmplan(&["replay", "--plan", "p.json", "--target", "m.hmvox"], d);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("valid, exact match"));

    let o = hmplan(&["stats", "--plan", "p.json", "--json"], d);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(
        v["model_voxels"],
        fixtures::staircase_bridge().solid_count()
    );

    let o = hmplan(
        &[
            "toolpath", "--plan", "p.json", "--out", "tp.json", "--gcode", "tp.gcode",
        ],
        d,
    );
    assert_eq!(o.status.code(), Some(0));
    let doc: serde_json::Value =
        serde_json::from_slice(&std::fs::read(d.join("tp.json")).unwrap()).unwrap();
    assert!(!doc["patches"].as_array().unwrap().is_empty());
    assert!(std::fs::read_to_string(d.join("tp.gcode"))
        .unwrap()
        .contains("M6"));
}

#[test]
fn binary_input_and_mpfs_flag() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    io::write_grid(&d.join("m.hmvx"), &fixtures::staircase_bridge()).unwrap();
    let o = hmplan(
        &[
            "plan", "--input", "m.hmvx", "--format", "bin", "--mpfs", "--out", "p.json",
        ],
        d,
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let v: serde_json::Value =
        serde_json::from_slice(&std::fs::read(d.join("p.json")).unwrap()).unwrap();
    assert_eq!(v["tool"]["mpfs"], 10);
    let o = hmplan(
        &[
            "plan", "--input", "m.hmvx", "--mpfs", "3", "--out", "q.json",
        ],
        d,
    );
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value =
        serde_json::from_slice(&std::fs::read(d.join("q.json")).unwrap()).unwrap();
    assert_eq!(v["tool"]["mpfs"], 3);
}

#[test]
fn progress_dump_writes_one_snapshot_per_layer() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_model(d, "m.hmvox");
    let o = hmplan(
        &[
            "plan",
            "--input",
            "m.hmvox",
            "--out",
            "p.json",
            "--progress-dump",
            "dump",
        ],
        d,
    );
    assert_eq!(o.status.code(), Some(0));
    let mut layers = Vec::new();
    for e in std::fs::read_dir(d.join("dump")).unwrap() {
        let path = e.unwrap().path();
        let name = path.file_stem().unwrap().to_str().unwrap().to_owned();
        let k: usize = name.strip_prefix("layer_").unwrap().parse().unwrap();
        let snap = io::read_grid(&path, None, 0).unwrap();
        assert_eq!(snap.top_layer(), Some(k));
        layers.push(k);
    }
    layers.sort_unstable();
    assert_eq!(layers.first(), Some(&0));
    assert_eq!(
        layers.last().copied(),
        fixtures::staircase_bridge().top_layer()
    );
}

#[test]
fn unstable_model_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("u.hmvox"), "hmvox 1 1 2\n.\n\n#\n").unwrap();
    let o = hmplan(&["plan", "--input", "u.hmvox"], d);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not stable"));
}

#[test]
fn malformed_input_and_usage_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("bad.hmvox"), "hmvox 2 1 1\n#x\n").unwrap();
    let o = hmplan(&["plan", "--input", "bad.hmvox"], d);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));

    assert_eq!(
        hmplan(&["plan", "--input", "missing.hmvox"], d)
            .status
            .code(),
        Some(2)
    );
    assert_eq!(hmplan(&["plan", "--bogus"], d).status.code(), Some(2));
    assert_eq!(
        hmplan(&["replay", "--plan", "bad.hmvox"], d).status.code(),
        Some(2)
    );
}

#[test]
fn tampered_plan_fails_replay() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_model(d, "m.hmvox");
    assert_eq!(
        hmplan(&["plan", "--input", "m.hmvox", "--out", "p.json"], d)
            .status
            .code(),
        Some(0)
    );
    let mut v: serde_json::Value =
        serde_json::from_slice(&std::fs::read(d.join("p.json")).unwrap()).unwrap();
    // Dropping the last inverse op (the first forward deposit) leaves a hole.
    v["ops"].as_array_mut().unwrap().pop();
    std::fs::write(d.join("p.json"), v.to_string()).unwrap();
    let o = hmplan(&["replay", "--plan", "p.json", "--audit"], d);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("invalid"));
}

#[test]
fn voxelize_box_mesh() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let bytes = stl::write_binary_stl(&stl::box_mesh([0.0; 3], [4.0, 2.0, 1.0]));
    std::fs::write(d.join("b.stl"), bytes).unwrap();
    let o = hmplan(
        &[
            "voxelize", "--stl", "b.stl", "--res", "8", "--out", "b.hmvox",
        ],
        d,
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let g = io::read_grid(&d.join("b.hmvox"), None, 0).unwrap();
    assert_eq!(g.dims().as_array(), [8, 4, 2]);
    assert_eq!(g.solid_count(), 64);

    let mut open = stl::box_mesh([0.0; 3], [1.0; 3]);
    open.remove(2);
    std::fs::write(d.join("o.stl"), stl::write_binary_stl(&open)).unwrap();
    assert_eq!(
        hmplan(&["voxelize", "--stl", "o.stl", "--res", "4"], d)
            .status
            .code(),
        Some(2)
    );
}
