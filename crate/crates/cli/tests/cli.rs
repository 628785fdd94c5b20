use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn dodgeball(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dodgeball"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn tiny_config(dir: &Path) -> String {
    let cfg = serde_json::json!({
        "epochs": 2,
        "samples_per_epoch": 100,
        "grad_steps_per_epoch": 4,
        "seeds": [0],
        "eval_every": 1,
        "eval_episodes": 1,
        "output_dir": dir.join("runs"),
        "sac": { "batch_size": 32, "hidden": [16, 16] }
    });
    let path = dir.join("tiny.json");
    fs::write(&path, cfg.to_string()).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn usage_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&dodgeball(&[], dir.path())), 1);
    assert_eq!(code(&dodgeball(&["fly"], dir.path())), 1);
    assert_eq!(code(&dodgeball(&["train", "--obs", "sideways"], dir.path())), 1);

    let out = dodgeball(&["train", "--mode", "hrl"], dir.path());
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--low"));

    let out = dodgeball(&["eval", "scripted", "--episodes", "0"], dir.path());
    assert_eq!(code(&out), 1);
}

#[test]
fn help_exits_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out = dodgeball(&["--help"], dir.path());
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("gradcheck"));
}

#[test]
fn runtime_failures_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&dodgeball(&["eval", "missing-checkpoint"], dir.path())), 2);
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"epochs\": }").unwrap();
    assert_eq!(code(&dodgeball(&["pretrain", "--config", bad.to_str().unwrap()], dir.path())), 2);
    let empty = dir.path().join("metrics.jsonl");
    fs::write(&empty, "").unwrap();
    assert_eq!(code(&dodgeball(&["plot", empty.to_str().unwrap()], dir.path())), 2);
}

#[test]
fn gradcheck_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dodgeball(&["gradcheck"], dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("networks"));
}

#[test]
fn scripted_policies_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let out = dodgeball(
        &["eval", "stationary", "--episodes", "1", "--out", report.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["mean_return"], -50.0);
    assert_eq!(json["dodge_rate"], 0.0);
}

#[test]
fn pretrain_train_eval_replay_plot() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let cfg = tiny_config(root);

    let out = dodgeball(&["pretrain", "--config", &cfg], root);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let low = String::from_utf8_lossy(&out.stdout).lines().next().unwrap().to_string();
    assert!(Path::new(&low).join("low.json").is_file());

    for obs in ["full", "partial"] {
        let out = dodgeball(&["train", "--config", &cfg, "--mode", "hrl", "--obs", obs, "--low", &low], root);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    let out = dodgeball(&["train", "--config", &cfg, "--mode", "e2e", "--seed", "3"], root);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let hrl = root.join("runs/hrl-full/seed-0");
    let ckpt = hrl.join("checkpoints/final");
    let out = dodgeball(&["eval", ckpt.to_str().unwrap(), "--episodes", "1"], root);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("mean return"));

    let e2e = root.join("runs/e2e-full/seed-3/checkpoints/final");
    let traces = root.join("traces");
    let out = dodgeball(
        &["replay", e2e.to_str().unwrap(), "--episodes", "2", "--out", traces.to_str().unwrap()],
        root,
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let lines = fs::read_to_string(traces.join("episode-1.jsonl")).unwrap().lines().count();
    assert_eq!(lines, 1000);

    let svg = root.join("curves.svg");
    let m1 = hrl.join("metrics.jsonl");
    let m2 = root.join("runs/hrl-partial/seed-0/metrics.jsonl");
    let out = dodgeball(
        &["plot", m1.to_str().unwrap(), m2.to_str().unwrap(), "--out", svg.to_str().unwrap()],
        root,
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<svg") && text.contains("hrl-full") && text.contains("hrl-partial"));
}
