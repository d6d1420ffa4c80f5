//! End-to-end tests against the built binary: exit codes, file round
//! trips, and the generation → verification → tampering cycle.

use std::path::Path;
use std::process::{Command, Output};

fn hedonic(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hedonic"))
        .args(args)
        .current_dir(dir)
        .env_remove("HDYN_NODE_CAP")
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("utf-8 stdout")
}

fn stderr(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).expect("utf-8 stderr")
}

fn write(dir: &Path, name: &str, content: &str) {
    std::fs::write(dir.join(name), content).expect("write fixture");
}

const TRIANGLE: &str = "class ASHG\nagents 3\nval 0 1 1\nval 0 2 1\nval 1 0 1\nval 1 2 1\nval 2 0 1\nval 2 1 1\n";
const SINGLETONS3: &str = "agents 3\n{0}\n{1}\n{2}\n";

#[test]
fn generated_bundles_pass_their_own_checks() {
    let dir = tempfile::tempdir().unwrap();
    let out = hedonic(dir.path(), &["gen", "quota-out", "--q", "1/2", "--out", "qo"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let out = hedonic(dir.path(), &["check", "qo"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("dynamics-cycle: ok"));
}

#[test]
fn quota_one_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = hedonic(dir.path(), &["gen", "quota-out", "--q", "1", "--out", "bad"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("quota must lie in [0, 1)"));
}

#[test]
fn tampered_bundles_fail_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = hedonic(dir.path(), &["gen", "quota-in", "--q", "0", "--out", "qi"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let game_file = dir.path().join("qi").join("game.hg");
    let text = std::fs::read_to_string(&game_file).unwrap();
    let tampered = text.replacen("val 0 4 -3", "val 0 4 999", 1);
    assert_ne!(text, tampered, "fixture entry disappeared");
    std::fs::write(&game_file, tampered).unwrap();
    let out = hedonic(dir.path(), &["check", "qi"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(stdout(&out).contains("FAIL"));
}

#[test]
fn check_leaves_bundles_byte_identical_and_gen_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a", "b"] {
        let out = hedonic(dir.path(), &["gen", "cis-exp", "--k", "5", "--out", name]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    for file in ["game.hg", "start.part", "manifest.json", "script-count-up.txt"] {
        let a = std::fs::read(dir.path().join("a").join(file)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical generations");
    }
}

#[test]
fn run_traces_replay_and_shortcut() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "tri.hg", TRIANGLE);
    write(dir.path(), "tri.part", SINGLETONS3);
    let out = hedonic(
        dir.path(),
        &[
            "run", "--game", "tri.hg", "--start", "tri.part", "--notion", "cis", "--trace",
            "tri.trace",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("outcome: Converged"));

    let out = hedonic(dir.path(), &["replay", "--game", "tri.hg", "--trace", "tri.trace"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).starts_with("Script OK, 2 steps"));

    let out = hedonic(
        dir.path(),
        &["shortcut", "--game", "tri.hg", "--trace", "tri.trace", "--out", "short.trace"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let out = hedonic(dir.path(), &["replay", "--game", "tri.hg", "--trace", "short.trace"]);
    assert!(out.status.success(), "{}", stderr(&out));
}

#[test]
fn digest_mismatch_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "tri.hg", TRIANGLE);
    write(dir.path(), "tri.part", SINGLETONS3);
    let out = hedonic(
        dir.path(),
        &[
            "run", "--game", "tri.hg", "--start", "tri.part", "--notion", "cis", "--trace",
            "tri.trace",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    // A different game with the same shape: the digest no longer matches.
    write(dir.path(), "other.hg", &TRIANGLE.replacen("val 2 1 1", "val 2 1 2", 1));
    let out = hedonic(dir.path(), &["replay", "--game", "other.hg", "--trace", "tri.trace"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("digest"));
}

#[test]
fn decide_exit_codes_track_the_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let out = hedonic(dir.path(), &["gen", "quota-in", "--q", "1/2", "--out", "qi"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let args = [
        "decide", "pcd", "--game", "qi/game.hg", "--start", "qi/start.part", "--notion",
        "vote 1 1/2",
    ];
    let out = hedonic(dir.path(), &args);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(stdout(&out), "No\n");

    let mut capped = args.to_vec();
    capped.extend(["--node-cap", "2"]);
    let out = hedonic(dir.path(), &capped);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stdout(&out), "Unknown\n");

    // The environment variable sets the default cap.
    let out = Command::new(env!("CARGO_BIN_EXE_hedonic"))
        .args(args)
        .current_dir(dir.path())
        .env("HDYN_NODE_CAP", "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn ir_cis_witness_replays() {
    let dir = tempfile::tempdir().unwrap();
    let out = hedonic(
        dir.path(),
        &["gen", "indset", "--vertices", "3", "--k", "3", "--out", "is"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let out = hedonic(
        dir.path(),
        &[
            "decide", "ir-cis", "--game", "is/game.hg", "--start", "is/start.part",
            "--witness", "witness.txt",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(stdout(&out), "Yes\n");
    assert!(dir.path().join("witness.txt").exists());
}

#[test]
fn dot_export_describes_the_graph() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "tri.hg", TRIANGLE);
    write(dir.path(), "tri.part", SINGLETONS3);
    let out = hedonic(
        dir.path(),
        &[
            "decide", "pcd", "--game", "tri.hg", "--start", "tri.part", "--notion", "cis",
            "--dot", "graph.dot",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let dot = std::fs::read_to_string(dir.path().join("graph.dot")).unwrap();
    assert!(dot.starts_with("digraph dynamics {"));
    assert!(dot.contains("doublecircle"), "sink missing: {dot}");
    assert!(dot.contains("{0,1,2}"));
}

#[test]
fn small_query_commands() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "tri.hg", TRIANGLE);
    let out = hedonic(dir.path(), &["stable-exists", "--game", "tri.hg", "--notion", "nash"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "Yes\n");

    let out = hedonic(dir.path(), &["s-of-game", "--game", "tri.hg"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "0\n");

    let out = hedonic(dir.path(), &["three-phase", "--game", "tri.hg"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("outcome: Converged"));
}

#[test]
fn unknown_flags_are_validation_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = hedonic(dir.path(), &["run", "--bogus"]);
    assert_eq!(out.status.code(), Some(3));
    let out = hedonic(dir.path(), &["--help"]);
    assert_eq!(out.status.code(), Some(0));
}
