//! End-to-end command-line behavior: the gen → synth → check → simulate
//! pipeline and the stable exit codes (0 success, 1 user/validation error,
//! 2 internal breach).

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn kbpc(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kbpc"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn tempdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("kbpc-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn pipeline_gen_synth_check_simulate() {
    let dir = tempdir("pipeline");
    let gen = kbpc(&["gen", "muddy", "-n", "3", "--out", "muddy3.kbp"], &dir);
    assert!(gen.status.success(), "{}", String::from_utf8_lossy(&gen.stderr));

    let synth = kbpc(&["synth", "--view", "spr", "muddy3.kbp"], &dir);
    assert!(synth.status.success(), "{}", String::from_utf8_lossy(&synth.stderr));
    let stdout = String::from_utf8_lossy(&synth.stdout);
    assert!(stdout.contains("slice 0: 7 states"), "slice sizes reported: {stdout}");

    // The emitted program and sidecar verify without synthesis internals.
    let check = kbpc(
        &["check", "--view", "spr", "--sidecar", "muddy3.synth.sidecar", "muddy3.kbp"],
        &dir,
    );
    assert!(check.status.success(), "{}", String::from_utf8_lossy(&check.stderr));
    let report = String::from_utf8_lossy(&check.stdout);
    assert!(report.contains("verdict=pass"));
    assert!(!report.contains("verdict=fail"));

    // The emitted standard program satisfies the knowledge-completion
    // formula at depth n under the clock view (its own history variables
    // realize perfect recall).
    let formula = "X^3 Forall x:Agent ((Knows x muddy[x]) \\/ (Knows x neg muddy[x]))";
    let mc = kbpc(&["check", "--view", "clk", "--formula", formula, "muddy3.synth.kbp"], &dir);
    assert!(mc.status.success(), "{}", String::from_utf8_lossy(&mc.stderr));

    // And fails two rounds earlier, with a counterexample trace.
    let refute = "X^1 Forall x:Agent ((Knows x muddy[x]) \\/ (Knows x neg muddy[x]))";
    let mc_bad = kbpc(
        &["check", "--view", "clk", "--formula", refute, "--trace-out", "cex.txt", "muddy3.synth.kbp"],
        &dir,
    );
    assert_eq!(mc_bad.status.code(), Some(1));
    let cex = std::fs::read_to_string(dir.join("cex.txt")).unwrap();
    assert!(cex.contains("state 0:"));

    let sim = kbpc(
        &[
            "simulate",
            "--init",
            "muddy[Child0]=true,muddy[Child1]=false,muddy[Child2]=false",
            "muddy3.synth.kbp",
        ],
        &dir,
    );
    assert!(sim.status.success());
    let trace = String::from_utf8_lossy(&sim.stdout);
    assert!(trace.contains("step 0: Child0=SayYes Child1=nil Child2=nil"), "{trace}");
}

#[test]
fn oracle_compare_agrees_on_small_models() {
    let dir = tempdir("oracle");
    kbpc(&["gen", "muddy", "-n", "2", "--out", "m2.kbp"], &dir);
    let cmp = kbpc(&["oracle-compare", "--view", "spr", "m2.kbp"], &dir);
    assert!(cmp.status.success(), "{}", String::from_utf8_lossy(&cmp.stderr));
    assert!(String::from_utf8_lossy(&cmp.stdout).contains("agree"));
}

#[test]
fn unsupported_view_is_rejected() {
    let dir = tempdir("obs");
    kbpc(&["gen", "muddy", "-n", "2", "--out", "m2.kbp"], &dir);
    let synth = kbpc(&["synth", "--view", "obs", "m2.kbp"], &dir);
    assert_eq!(synth.status.code(), Some(1));
    let err = String::from_utf8_lossy(&synth.stderr);
    assert!(err.contains("clk or spr"), "{err}");
}

#[test]
fn validation_failure_exits_one() {
    let dir = tempdir("invalid");
    std::fs::write(
        dir.join("bad.kbp"),
        "x: Bool\ninit_cond = true\nagent A \"p\" ( x )\n\
         protocol \"p\" ( x: observable Bool )\nbegin\nif true -> skip\nend\n",
    )
    .unwrap();
    let out = kbpc(&["synth", "--view", "clk", "bad.kbp"], &dir);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn simulate_rejects_knowledge_based_input() {
    let dir = tempdir("simkbp");
    kbpc(&["gen", "muddy", "-n", "2", "--out", "m2.kbp"], &dir);
    let out = kbpc(&["simulate", "m2.kbp"], &dir);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("standard"));
}

#[test]
fn election_crash_schedule_is_scriptable() {
    let dir = tempdir("election");
    kbpc(&["gen", "election", "-n", "3", "--steps", "3", "--out", "e3.kbp"], &dir);
    let synth = kbpc(&["synth", "--view", "spr", "e3.kbp"], &dir);
    assert!(synth.status.success(), "{}", String::from_utf8_lossy(&synth.stderr));
    let sim = kbpc(&["simulate", "--crash-schedule", "3:0", "e3.synth.kbp"], &dir);
    assert!(sim.status.success(), "{}", String::from_utf8_lossy(&sim.stderr));
    let trace = String::from_utf8_lossy(&sim.stdout);
    // A3's initial buffer reaches A1 with the from-3-value-0 marker.
    assert!(trace.contains("crashed[A3]=true"), "{trace}");
    let state1 = trace.lines().find(|l| l.starts_with("state 1:")).unwrap();
    assert!(state1.contains("from[A1]=3"), "{state1}");
    assert!(state1.contains("msg[A1]=0"), "{state1}");
}

#[test]
fn parallel_jobs_process_all_inputs() {
    let dir = tempdir("jobs");
    kbpc(&["gen", "muddy", "-n", "2", "--out", "a.kbp"], &dir);
    kbpc(&["gen", "muddy", "-n", "3", "--out", "b.kbp"], &dir);
    let out = kbpc(&["synth", "--view", "spr", "--jobs", "2", "a.kbp", "b.kbp"], &dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.join("a.synth.kbp").exists());
    assert!(dir.join("b.synth.kbp").exists());
}
