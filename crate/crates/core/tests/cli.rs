//! End-to-end runs of the `phaseformer` binary on small fixtures.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use phaseformer::data::{load_csv, ForecastData, Part};
use phaseformer::model::checkpoint;
use phaseformer::training::forward_window;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_phaseformer");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

/// Seven hourly channels of noisy daily cycles, 600 rows (360/120/120).
fn fixture(dir: &Path) -> PathBuf {
    let mut text = String::from("date,HUFL,HULL,MUFL,MULL,LUFL,LULL,OT\n");
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for t in 0..600usize {
        let (day, h) = (t / 24, t % 24);
        let stamp = format!("2016-{:02}-{:02} {:02}:00:00", 7 + day / 28, 1 + day % 28, h);
        let vals: Vec<String> = (0..7)
            .map(|c| {
                let v = (2.0 * std::f64::consts::PI * t as f64 / 24.0 + c as f64).sin() * (1.0 + c as f64)
                    + 0.1 * rng.sample::<f64, _>(StandardNormal);
                format!("{v:.6}")
            })
            .collect();
        text.push_str(&format!("{stamp},{}\n", vals.join(",")));
    }
    let path = dir.join("ETTh1.csv");
    std::fs::write(&path, text).unwrap();
    path
}

const SMALL: [&str; 8] = ["--l-in", "96", "--l-out", "24", "--epochs", "2", "--routers", "4"];

fn train_into(data: &Path, out: &Path) -> Value {
    let mut args = vec!["train", "--data", data.to_str().unwrap(), "--out", out.to_str().unwrap(), "--no-timing"];
    args.extend_from_slice(&SMALL);
    stdout_json(&run(&args))
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut reader = csv::Reader::from_path(path).unwrap();
    let header = reader.headers().unwrap().iter().map(String::from).collect();
    let rows = reader
        .records()
        .map(|r| r.unwrap().iter().skip(1).map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn train_writes_outputs_and_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let data = fixture(tmp.path());
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let report = train_into(&data, &a);
    train_into(&data, &b);
    for name in ["checkpoint.phfm", "report.json", "run_config.toml"] {
        assert!(a.join(name).is_file(), "{name} missing");
    }
    assert_eq!(std::fs::read(a.join("report.json")).unwrap(), std::fs::read(b.join("report.json")).unwrap());
    assert_eq!(std::fs::read(a.join("checkpoint.phfm")).unwrap(), std::fs::read(b.join("checkpoint.phfm")).unwrap());
    assert!(report["test_mse"].as_f64().unwrap().is_finite());
    assert_eq!(report["seconds"].as_f64(), Some(0.0));
}

#[test]
fn eval_reproduces_the_training_report() {
    let tmp = tempfile::tempdir().unwrap();
    let data = fixture(tmp.path());
    let out = tmp.path().join("run");
    let report = train_into(&data, &out);
    let ckpt = out.join("checkpoint.phfm");
    let args = ["eval", "--checkpoint", ckpt.to_str().unwrap(), "--data", data.to_str().unwrap()];
    let first = stdout_json(&run(&args));
    let second = stdout_json(&run(&args));
    assert_eq!(first, second);
    assert_eq!(first["mse"], report["test_mse"]);
    assert_eq!(first["mae"], report["test_mae"]);

    // A horizon that is not a multiple of l_phase is fine; one beyond the
    // predicted periods is not.
    let mut odd = args.to_vec();
    odd.extend(["--horizon", "7"]);
    assert!(stdout_json(&run(&odd))["mse"].as_f64().unwrap().is_finite());
    let mut long = args.to_vec();
    long.extend(["--horizon", "25"]);
    assert_eq!(code(&run(&long)), 3);
}

#[test]
fn missing_input_exits_2_and_names_the_path() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope.csv");
    let out = run(&["train", "--data", missing.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.csv"));
    let out = run(&["eval", "--checkpoint", missing.to_str().unwrap(), "--synthetic", "sine"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn stability_command_is_exact_without_noise() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().to_str().unwrap();
    let out = run(&["diagnose", "stability", "--trials", "100", "--noise", "0", "--eps", "0", "--out", dir]);
    let summary = stdout_json(&out);
    assert!(summary["max_d_phase"].as_f64().unwrap() <= 1e-8);
    assert_eq!(summary["phase_holds"].as_u64(), Some(100));
    assert!(tmp.path().join("stability.json").is_file());

    let noisy = stdout_json(&run(&["diagnose", "stability", "--trials", "20", "--out", dir]));
    assert_eq!(noisy["phase_holds"].as_u64(), Some(20));
    assert_eq!(noisy["patch_holds"].as_u64(), Some(20));

    // Rank beyond the day count is an invalid spec.
    assert_eq!(code(&run(&["diagnose", "stability", "--rank", "50", "--trials", "1", "--out", dir])), 4);
}

#[test]
fn mmd_command_separates_token_kinds() {
    let tmp = tempfile::tempdir().unwrap();
    let report = stdout_json(&run(&["diagnose", "mmd", "--out", tmp.path().to_str().unwrap()]));
    assert!(report["phase_mean"].as_f64().unwrap() < report["patch_mean"].as_f64().unwrap());
    for name in ["mmd_phase.csv", "mmd_patch.csv", "mmd.json"] {
        assert!(tmp.path().join(name).is_file(), "{name} missing");
    }
    let (header, rows) = read_csv(&tmp.path().join("mmd_phase.csv"));
    assert_eq!(header, ["week", "mmd2"]);
    assert_eq!(rows.len(), 19);
    assert!(rows.iter().all(|r| r[0] >= 0.0));
}

#[test]
fn pca_command_finds_the_daily_rank() {
    let tmp = tempfile::tempdir().unwrap();
    let report = stdout_json(&run(&["diagnose", "pca", "--out", tmp.path().to_str().unwrap()]));
    assert_eq!(report["phase_effective_dim"].as_u64(), Some(2));
    assert!(report["patch_effective_dim"].as_u64().unwrap() >= 5);
    let (_, rows) = read_csv(&tmp.path().join("pca_phase.csv"));
    let last = rows.last().unwrap();
    assert!((last[1] - 1.0).abs() < 1e-9, "cumulative ratio ends at {}", last[1]);

    let data = fixture(tmp.path());
    let report = stdout_json(&run(&["diagnose", "pca", "--data", data.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]));
    assert!(report["phase_effective_dim"].as_u64().unwrap() >= 1);
    let bad = run(&["diagnose", "pca", "--data", data.to_str().unwrap(), "--channel", "7"]);
    assert_eq!(code(&bad), 5);
}

#[test]
fn benchmark_counts_are_small_and_linear() {
    let preset = stdout_json(&run(&["benchmark"]));
    assert_eq!(preset["params"].as_u64(), Some(1116));
    assert!(preset["params"].as_u64().unwrap() <= 2000);

    let out = run(&["benchmark", "--sweep", "360,720,1080"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("l_in,params,flops"));
    let flops: Vec<f64> = lines.map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert_eq!(flops.len(), 3);
    assert!(((flops[2] - flops[1]) - (flops[1] - flops[0])).abs() < 1e-9);
    assert!(flops[1] > flops[0]);
}

#[test]
fn inspect_attention_matches_the_library() {
    let tmp = tempfile::tempdir().unwrap();
    let data = fixture(tmp.path());
    let run_dir = tmp.path().join("run");
    train_into(&data, &run_dir);
    let ckpt = run_dir.join("checkpoint.phfm");
    let dump = tmp.path().join("attn");
    let info = stdout_json(&run(&[
        "inspect-attention",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
        "--window",
        "3",
        "--out",
        dump.to_str().unwrap(),
    ]));
    assert_eq!(info["files"].as_array().unwrap().len(), 2);

    let (config, params) = checkpoint::load(&ckpt).unwrap();
    let raw = load_csv(&data).unwrap();
    let prepared = ForecastData::prepare(&raw).unwrap();
    let windows = prepared.windows(Part::Test, config.l_in, config.l_out).unwrap();
    let (cache, _) = forward_window(&params, &config, windows[3].x).unwrap();
    let layer = &cache.layers[0];

    for (name, expected, shape) in [
        ("attention_l0_h0_agg.csv", &layer.agg_weights()[0], (config.m, config.l_phase)),
        ("attention_l0_h0_dist.csv", &layer.dist_weights()[0], (config.l_phase, config.m)),
    ] {
        let (_, rows) = read_csv(&dump.join(name));
        assert_eq!((rows.len(), rows[0].len()), shape, "{name}");
        for (r, row) in rows.iter().enumerate() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            for (c, v) in row.iter().enumerate() {
                assert!((v - expected.row(r)[c]).abs() <= 1e-12);
            }
        }
    }

    let bad = run(&[
        "inspect-attention",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
        "--window",
        "100000",
        "--out",
        dump.to_str().unwrap(),
    ]);
    assert_eq!(code(&bad), 5);
}

#[test]
fn config_file_drives_training_and_rejects_unknown_keys() {
    let tmp = tempfile::tempdir().unwrap();
    let data = fixture(tmp.path());
    let out = tmp.path().join("from_config");
    let cfg = tmp.path().join("run.toml");
    std::fs::write(
        &cfg,
        format!(
            "[run]\nout = {:?}\ntiming = false\n\n[data]\npath = {:?}\n\n[model]\nl_in = 48\nl_out = 24\nm = 2\n\n[train]\nepochs = 1\n",
            out.to_str().unwrap(),
            data.to_str().unwrap()
        ),
    )
    .unwrap();
    let report = stdout_json(&run(&["train", "--config", cfg.to_str().unwrap()]));
    assert_eq!(report["train_mse"].as_array().unwrap().len(), 1);
    let (config, _) = checkpoint::load(&out.join("checkpoint.phfm")).unwrap();
    assert_eq!((config.l_in, config.l_out, config.m), (48, 24, 2));

    let bad = tmp.path().join("bad.toml");
    std::fs::write(&bad, "[model]\nrouters = 4\n").unwrap();
    let failed = run(&["train", "--config", bad.to_str().unwrap(), "--synthetic", "sine"]);
    assert!(!failed.status.success());
    assert!(String::from_utf8_lossy(&failed.stderr).contains("routers"));
}
