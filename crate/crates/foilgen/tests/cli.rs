//! End-to-end tests of the `foilgen` binary: exit codes, file layout,
//! determinism, and overwrite guards.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn foilgen() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_foilgen"));
    cmd.env_remove("FOILGEN_XFOIL");
    cmd
}

fn run(args: &[&str]) -> Output {
    foilgen().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).to_string()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).to_string()
}

/// Builds a small dataset in `dir` and returns the table path.
fn small_dataset(dir: &Path) -> PathBuf {
    let out = run(&[
        "build-dataset",
        "--out",
        dir.to_str().unwrap(),
        "--codes",
        "0012,2412,4415,2606,1408,3410,4212,0009",
    ]);
    assert!(out.status.success(), "build-dataset failed: {}", stderr(&out));
    dir.join("dataset").join("dataset.csv")
}

#[test]
fn build_dataset_writes_manifest_and_counts() {
    let dir = tempfile::tempdir().unwrap();
    let table = small_dataset(dir.path());
    assert!(table.exists());
    assert!(table.with_extension("csv.meta").exists() || {
        // meta is `<path>.meta` appended, not an extension swap
        let mut os = table.as_os_str().to_owned();
        os.push(".meta");
        PathBuf::from(os).exists()
    });
    assert!(dir.path().join("effective.toml").exists());
}

#[test]
fn build_dataset_at_zero_alpha_keeps_symmetric_sections_at_zero_lift() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "build-dataset",
        "--out",
        dir.path().to_str().unwrap(),
        "--alpha",
        "0",
        "--codes",
        "0009,0012,0015,0021",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let table =
        std::fs::read_to_string(dir.path().join("dataset").join("dataset.csv")).unwrap();
    for line in table.lines().skip(1) {
        let cl: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!(cl.abs() <= 1e-3, "symmetric section at alpha=0 has cl {cl}");
    }
}

#[test]
fn build_dataset_xfoil_without_executable_is_config_error_without_partial_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "build-dataset",
        "--out",
        dir.path().to_str().unwrap(),
        "--backend",
        "xfoil",
        "--codes",
        "0012",
    ]);
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
    assert!(
        !dir.path().join("dataset").join("dataset.csv").exists(),
        "no partial files on configuration errors"
    );
}

#[test]
fn unknown_backend_and_bad_codes_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "build-dataset",
        "--out",
        dir.path().to_str().unwrap(),
        "--backend",
        "potential-flow-oracle",
    ]);
    assert_eq!(out.status.code(), Some(1));

    let out = run(&[
        "build-dataset",
        "--out",
        dir.path().to_str().unwrap(),
        "--codes",
        "001",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

fn train_small(dataset: &Path, out_dir: &Path, regime: &str, seed: &str) -> Output {
    run(&[
        "train",
        "--dataset",
        dataset.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--regime",
        regime,
        "--latent-dim",
        "3",
        "--iterations",
        "8",
        "--batch-size",
        "8",
        "--seed",
        seed,
        "--log-every",
        "4",
    ])
}

#[test]
fn train_writes_checkpoint_with_regime_tag_and_identical_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let dataset = small_dataset(dir.path());

    let out_a = dir.path().join("run_a");
    let out_b = dir.path().join("run_b");
    let a = train_small(&dataset, &out_a, "cwgan-gp", "7");
    assert!(a.status.success(), "{}", stderr(&a));
    let b = train_small(&dataset, &out_b, "cwgan-gp", "7");
    assert!(b.status.success(), "{}", stderr(&b));

    let ckpt = std::fs::read_to_string(out_a.join("checkpoints").join("final.ckpt")).unwrap();
    assert!(ckpt.starts_with("foilgen-checkpoint v1"));
    assert!(ckpt.contains("regime = cwgan-gp"));

    let hist_a = std::fs::read(out_a.join("checkpoints").join("loss_history.csv")).unwrap();
    let hist_b = std::fs::read(out_b.join("checkpoints").join("loss_history.csv")).unwrap();
    assert_eq!(hist_a, hist_b, "same seed must produce identical loss histories");

    // Different seed diverges.
    let out_c = dir.path().join("run_c");
    let c = train_small(&dataset, &out_c, "cwgan-gp", "8");
    assert!(c.status.success());
    let hist_c = std::fs::read(out_c.join("checkpoints").join("loss_history.csv")).unwrap();
    assert_ne!(hist_a, hist_c);
}

#[test]
fn train_refuses_overwrite_without_force() {
    let dir = tempfile::tempdir().unwrap();
    let dataset = small_dataset(dir.path());
    let out_dir = dir.path().join("run");
    assert!(train_small(&dataset, &out_dir, "cgan", "1").status.success());
    let again = train_small(&dataset, &out_dir, "cgan", "1");
    assert_eq!(again.status.code(), Some(1), "collision must be refused");
    assert!(stderr(&again).contains("--force"));
}

#[test]
fn train_rejects_critic_head_override_conflicting_with_regime() {
    let dir = tempfile::tempdir().unwrap();
    let dataset = small_dataset(dir.path());
    let config_path = dir.path().join("conf.toml");
    std::fs::write(&config_path, "[train]\ncritic_head = \"linear\"\n").unwrap();
    let out = foilgen()
        .args([
            "train",
            "--config",
            config_path.to_str().unwrap(),
            "--dataset",
            dataset.to_str().unwrap(),
            "--out",
            dir.path().join("run").to_str().unwrap(),
            "--regime",
            "cgan",
            "--iterations",
            "2",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
    assert!(stderr(&out).contains("inconsistent"));
}

#[test]
fn config_file_with_unknown_key_is_rejected_before_any_work() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("conf.toml");
    std::fs::write(&config_path, "[train]\nlerning_rate = 0.1\n").unwrap();
    let out = foilgen()
        .args([
            "js-check",
            "--config",
            config_path.to_str().unwrap(),
            "--trials",
            "1",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("lerning_rate"));
}

#[test]
fn sweep_small_grid_writes_wellformed_deterministic_report() {
    let dir = tempfile::tempdir().unwrap();
    let dataset = small_dataset(dir.path());
    let run_dir = dir.path().join("run");
    assert!(train_small(&dataset, &run_dir, "cwgan-gp", "7").status.success());
    let ckpt = run_dir.join("checkpoints").join("final.ckpt");

    let sweep = |out: &Path| {
        run(&[
            "sweep",
            "--checkpoint",
            ckpt.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--labels",
            "0.5:0.5:1.0",
            "--n",
            "2",
            "--seed",
            "3",
        ])
    };
    let sweep_a = dir.path().join("sweep_a");
    let sweep_b = dir.path().join("sweep_b");
    let a = sweep(&sweep_a);
    // Low success rates are evaluation results, not failures.
    assert!(a.status.success(), "{}", stderr(&a));
    let b = sweep(&sweep_b);
    assert!(b.status.success());

    let table_a = std::fs::read(sweep_a.join("sweep").join("sweep_table.csv")).unwrap();
    let table_b = std::fs::read(sweep_b.join("sweep").join("sweep_table.csv")).unwrap();
    assert_eq!(table_a, table_b, "same seed, same report bytes");

    let text = String::from_utf8(table_a).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "label,n_nonconv,n_fail,n_success,mse,mu,smooth_rate");
    assert_eq!(lines.len(), 1 + 2 + 1);

    for name in ["scatter.csv", "smooth_rate.csv", "mse.csv", "mu.csv", "summary.txt"] {
        assert!(sweep_a.join("sweep").join(name).exists(), "{name} missing");
    }

    // Overwrite guard on the sweep directory.
    let again = sweep(&sweep_a);
    assert_eq!(again.status.code(), Some(1));

    // report renders the saved sweep.
    let rep = run(&["report", "--sweep", sweep_a.join("sweep").to_str().unwrap()]);
    assert!(rep.status.success(), "{}", stderr(&rep));
    assert!(stdout(&rep).contains("rate_success"));
}

#[test]
fn generate_writes_coordinate_files() {
    let dir = tempfile::tempdir().unwrap();
    let dataset = small_dataset(dir.path());
    let run_dir = dir.path().join("run");
    assert!(train_small(&dataset, &run_dir, "cgan", "2").status.success());
    let ckpt = run_dir.join("checkpoints").join("final.ckpt");

    let gen_dir = dir.path().join("generated");
    let out = run(&[
        "generate",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--label",
        "0.8",
        "--n",
        "3",
        "--out",
        gen_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    for k in 0..3 {
        let path = gen_dir.join("shapes").join(format!("sample_{k:02}.dat"));
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 1 + 248, "{path:?}");
    }
}

#[test]
fn js_check_exit_codes() {
    let ok = run(&["js-check", "--trials", "100"]);
    assert!(ok.status.success(), "{}", stderr(&ok));
    assert!(stdout(&ok).contains("max |V(D*, G)"));

    let usage = run(&["js-check", "--trials", "0"]);
    assert_eq!(usage.status.code(), Some(1));
}

#[test]
fn unknown_subcommand_and_flags_exit_one_help_exits_zero() {
    let bad = run(&["frobnicate"]);
    assert_eq!(bad.status.code(), Some(1));

    let bad_flag = run(&["js-check", "--trails", "3"]);
    assert_eq!(bad_flag.status.code(), Some(1));

    let help = run(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
    assert!(stdout(&help).contains("build-dataset"));
}

#[test]
fn missing_checkpoint_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "sweep",
        "--checkpoint",
        dir.path().join("nope.ckpt").to_str().unwrap(),
        "--out",
        dir.path().join("s").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
}
