use std::fs;
use std::os::unix::fs::PermissionsExt;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bnnplan::domains::{random_toy, ToyShape};
use bnnplan::io::{read_wcnf, InstanceManifest};

fn bnnplan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bnnplan"))
        .args(args)
        .env_remove("BNNPLAN_SOLVER")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn field<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(": ")))
        .unwrap_or_else(|| panic!("no `{key}` in\n{text}"))
}

fn script(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, format!("#!/bin/sh\n{body}\n")).unwrap();
    fs::set_permissions(&path, fs::Permissions::from_mode(0o755)).unwrap();
    path
}

/// A two-state-bit toy written as a manifest.
fn toy_manifest(dir: &Path, seed: u64) -> PathBuf {
    let shape = ToyShape {
        state_bits: 2,
        action_bits: 2,
        hidden: vec![3],
        horizon: 3,
    };
    let (problem, bnn) = random_toy(&shape, seed).unwrap();
    let doc = InstanceManifest::from_parts(&problem, &bnn, InstanceManifest::plain_meta());
    let path = dir.join(format!("toy{seed}.json"));
    fs::write(&path, doc.write().unwrap()).unwrap();
    path
}

#[test]
fn generate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        let o = bnnplan(&[
            "generate",
            "--family",
            "navigation",
            "--n",
            "3",
            "--horizon",
            "4",
            "--seed",
            "7",
            "-o",
            p(out),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let c = dir.path().join("c.json");
    bnnplan(&[
        "generate",
        "--family",
        "navigation",
        "--n",
        "3",
        "--horizon",
        "4",
        "--seed",
        "8",
        "-o",
        p(&c),
    ]);
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
}

#[test]
fn encode_writes_wcnf_and_atlas() {
    let dir = tempfile::tempdir().unwrap();
    let m = toy_manifest(dir.path(), 1);
    let w = dir.path().join("out.wcnf");
    let o = bnnplan(&["encode", "-i", p(&m), "-o", p(&w), "--format", "wcnf2022"]);
    assert_eq!(code(&o), 0);
    let parsed = read_wcnf(&fs::read_to_string(&w).unwrap()).unwrap();
    assert!(parsed.top.is_none());
    let atlas: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out.atlas.json")).unwrap())
            .unwrap();
    assert_eq!(atlas["atlas"]["horizon"], 3);
    assert_eq!(atlas["atlas"]["x_first"], 1);
    assert_eq!(atlas["sum_soft"].as_u64().unwrap(), parsed.sum_soft());
}

#[test]
fn oracle_and_builtin_solve_agree() {
    let dir = tempfile::tempdir().unwrap();
    for seed in [0, 2, 3] {
        let m = toy_manifest(dir.path(), seed);
        let plan = dir.path().join(format!("plan{seed}.json"));
        let oracle = bnnplan(&["oracle", "-i", p(&m)]);
        let solved = bnnplan(&[
            "solve",
            "-i",
            p(&m),
            "--solver",
            "builtin",
            "--plan-out",
            p(&plan),
        ]);
        assert_eq!(code(&oracle), code(&solved));
        if code(&oracle) != 0 {
            continue;
        }
        let (o, s) = (stdout(&oracle), stdout(&solved));
        assert_eq!(field(&o, "scaled_reward"), field(&s, "scaled_reward"));
        assert_eq!(field(&s, "agree"), "true");
        let v = bnnplan(&["validate", "-i", p(&m), "--plan", p(&plan)]);
        assert_eq!(code(&v), 0);
        assert_eq!(field(&stdout(&v), "reward"), field(&o, "reward"));
    }
}

#[test]
fn solver_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let m = toy_manifest(dir.path(), 0);
    let o = Command::new(env!("CARGO_BIN_EXE_bnnplan"))
        .args(["solve", "-i", p(&m)])
        .env("BNNPLAN_SOLVER", "builtin")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert_eq!(field(&stdout(&o), "status"), "optimum");
    assert_eq!(code(&bnnplan(&["solve", "-i", p(&m)])), 2);
}

#[test]
fn validate_reports_violations() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("nav.json");
    bnnplan(&[
        "generate",
        "--family",
        "navigation",
        "--n",
        "3",
        "--horizon",
        "4",
        "--weight-mode",
        "handcrafted",
        "-o",
        p(&m),
    ]);
    let plan = dir.path().join("plan.json");
    fs::write(&plan, "[[0,0,1,0],[0,1,1,0],[0,0,0,0],[0,1,0,0]]").unwrap();
    let o = bnnplan(&["validate", "-i", p(&m), "--plan", p(&plan)]);
    assert_eq!(code(&o), 1);
    let text = stdout(&o);
    assert!(text.contains("violation: step 2 global"), "{text}");

    fs::write(&plan, "[[0,0,0,0],[0,0,0,0],[0,0,0,0],[0,0,0,0]]").unwrap();
    let o = bnnplan(&["validate", "-i", p(&m), "--plan", p(&plan)]);
    assert_eq!(code(&o), 1);
    assert!(
        stdout(&o).contains("violation: step 5 goal"),
        "{}",
        stdout(&o)
    );

    fs::write(&plan, "[[0,0,1,0]]").unwrap();
    assert_eq!(
        code(&bnnplan(&["validate", "-i", p(&m), "--plan", p(&plan)])),
        4
    );
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        code(&bnnplan(&["generate", "--family", "navigation", "--bogus"])),
        2
    );
    assert_eq!(code(&bnnplan(&["frobnicate"])), 2);
    assert_eq!(code(&bnnplan(&["--help"])), 0);
    let out = dir.path().join("x.json");
    let o = bnnplan(&[
        "generate",
        "--family",
        "inventory",
        "--n",
        "3",
        "--horizon",
        "5",
        "-o",
        p(&out),
    ]);
    assert_eq!(code(&o), 2, "no published architecture for N = 3");
    assert_eq!(code(&bnnplan(&["oracle", "-i", "/nonexistent/m.json"])), 4);

    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"schema": "bnnplan.instance.v1", "extra": 1}"#).unwrap();
    let o = bnnplan(&["encode", "-i", p(&bad), "-o", p(&dir.path().join("b.wcnf"))]);
    assert_eq!(code(&o), 4);

    let m = dir.path().join("big.json");
    bnnplan(&[
        "generate",
        "--family",
        "navigation",
        "--n",
        "3",
        "--horizon",
        "10",
        "--weight-mode",
        "handcrafted",
        "-o",
        p(&m),
    ]);
    assert_eq!(code(&bnnplan(&["oracle", "-i", p(&m)])), 3);
}

#[test]
fn external_solver_failures() {
    let dir = tempfile::tempdir().unwrap();
    let m = toy_manifest(dir.path(), 0);
    let slow = script(dir.path(), "slow.sh", "sleep 5");
    let o = bnnplan(&[
        "solve",
        "-i",
        p(&m),
        "--solver",
        p(&slow),
        "--timeout",
        "0.2",
    ]);
    assert_eq!(code(&o), 4);
    assert_eq!(field(&stdout(&o), "status"), "unknown");
    assert_eq!(field(&stdout(&o), "failure"), "timeout");

    let unsat = script(dir.path(), "unsat.sh", "echo 's UNSATISFIABLE'");
    let o = bnnplan(&["solve", "-i", p(&m), "--solver", p(&unsat)]);
    assert_eq!(code(&o), 1);
    assert_eq!(field(&stdout(&o), "status"), "unsat");

    let o = bnnplan(&["solve", "-i", p(&m), "--solver", "/nonexistent/solver"]);
    assert_eq!(code(&o), 4);
    assert!(field(&stdout(&o), "failure").starts_with("spawn"));
}

#[test]
fn external_solver_round_trip() {
    // replays the builtin optimum in competition output format
    let dir = tempfile::tempdir().unwrap();
    let m = toy_manifest(dir.path(), 3);
    let json = bnnplan(&["solve", "-i", p(&m), "--solver", "builtin", "--json"]);
    assert_eq!(code(&json), 0);
    let report: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    let cost = report["solver_cost"].as_u64().unwrap();
    let w = dir.path().join("toy.wcnf");
    bnnplan(&["encode", "-i", p(&m), "-o", p(&w)]);
    let (problem, bnn) = InstanceManifest::read(&fs::read_to_string(&m).unwrap())
        .unwrap()
        .to_parts()
        .unwrap();
    let art = bnnplan::encoder::encode(&problem, &bnn).unwrap();
    let (_, model) = bnnplan::cnf::search::Search::new(&art.formula)
        .optimize(&[])
        .unwrap();
    let bits: String = model.iter().map(|&b| if b { '1' } else { '0' }).collect();
    let replay = script(
        dir.path(),
        "replay.sh",
        &format!("echo 'c replay'\necho 'o {cost}'\necho 's OPTIMUM FOUND'\necho 'v {bits}'"),
    );
    let o = bnnplan(&["solve", "-i", p(&m), "--solver", p(&replay)]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let text = stdout(&o);
    assert_eq!(field(&text, "agree"), "true");
    assert_eq!(field(&text, "solver_cost"), cost.to_string());

    let liar = script(
        dir.path(),
        "liar.sh",
        &format!(
            "echo 'o {}'\necho 's OPTIMUM FOUND'\necho 'v {bits}'",
            cost + 1
        ),
    );
    let o = bnnplan(&["solve", "-i", p(&m), "--solver", p(&liar)]);
    assert_eq!(code(&o), 4);
    assert_eq!(field(&stdout(&o), "agree"), "false");
}

#[test]
fn grid_writes_named_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = bnnplan(&[
        "grid",
        "--family",
        "cellda",
        "-o",
        p(dir.path()),
        "--manifests-only",
        "--jobs",
        "2",
    ]);
    assert_eq!(code(&o), 0);
    let mut names: Vec<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names.len(), 10);
    assert_eq!(names[0], "cellda_N4_H10_x-axis.json");
    assert!(names.contains(&"cellda_N4_H8_y-axis.json".to_string()));
}
