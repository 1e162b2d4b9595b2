use std::process::Command;

fn marq() -> Command {
    Command::new(env!("CARGO_BIN_EXE_marq"))
}

const TINY: &str = "\
hidden_sizes = [8]
num_quantiles = 4
batch_size = 8
pretraining_steps = 40
steps_per_iteration = 20
iterations = 2
eval_episodes = 3
buffer_capacity = 60
";

#[test]
fn verify_reports_every_check() {
    let out = marq().args(["verify", "--seed", "1"]).output().unwrap();
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(out.status.success(), "{stdout}");
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS")).count(), 5, "{stdout}");
}

#[test]
fn train_then_eval_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tiny.toml");
    std::fs::write(&cfg, TINY).unwrap();
    let out = marq()
        .args(["train", "--env", "grid_spread", "--variant", "marq_xent", "--lambda", "0.5", "--seed", "3"])
        .arg("--config")
        .arg(&cfg)
        .arg("--out-dir")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("marq_xent_lambda0.5_seed3.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    let ckpt = dir.path().join("marq_xent_lambda0.5_seed3.ckpt");
    let out = marq().args(["eval", "--episodes", "4", "--checkpoint"]).arg(&ckpt).output().unwrap();
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(out.status.success());
    assert!(stdout.contains("iteration=2 episodes=4"), "{stdout}");
}

#[test]
fn sweep_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tiny.toml");
    std::fs::write(&cfg, TINY).unwrap();
    let out = marq()
        .args(["sweep", "--lambdas", "0,1", "--seed", "0", "--variant", "marq_shared"])
        .arg("--config")
        .arg(&cfg)
        .arg("--out-dir")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("sweep.json").exists());
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 2);
}

#[test]
fn bad_arguments_fail_cleanly() {
    let out = marq().args(["train", "--variant", "nope"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown variant"));
    let out = marq().args(["eval", "--checkpoint", "/nonexistent/x.ckpt"]).output().unwrap();
    assert!(!out.status.success());
}
