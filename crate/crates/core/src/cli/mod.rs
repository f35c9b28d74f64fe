//! Command-line surface: `train`, `eval`, `diagnose {mmd|pca|stability}`,
//! `benchmark` and `inspect-attention`.
//!
//! Machine-readable results go to standard output (JSON) and to files in
//! the output directory (JSON, CSV, TOML, checkpoints); logs go to standard
//! error.

mod config;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

pub use config::{DataSection, ModelSection, Preset, RunConfig, RunSection, SyntheticKind, TrainSection};

use crate::data::{gen_drifting_cycles, gen_low_rank, gen_rotating_low_rank, load_csv, ForecastData, Part, SyntheticLowRank};
use crate::diagnostics::{build_token_sets, explained_variance, effective_dim, stability_trials, weekly_drift_with, Bandwidth};
use crate::error::Error;
use crate::model::{checkpoint, ModelParams};
use crate::numerics::Matrix;
use crate::training::{evaluate_windows, forward_window, train};

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_MISSING_INPUT: i32 = 2;
pub const EXIT_MISMATCH: i32 = 3;
pub const EXIT_INVALID_SPEC: i32 = 4;
pub const EXIT_BAD_INDEX: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "phaseformer", version, about = "Phase-tokenized routing transformer for periodic time series")]
pub struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train on a dataset and write checkpoint, report and resolved config.
    Train(TrainArgs),
    /// Print test-split MSE/MAE of a checkpoint as JSON.
    Eval(EvalArgs),
    /// Token-space diagnostics.
    #[command(subcommand)]
    Diagnose(Diagnose),
    /// Print parameter and FLOP counts.
    Benchmark(BenchmarkArgs),
    /// Dump the attention matrices of one window as CSV.
    InspectAttention(InspectArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct DataArgs {
    /// CSV with a leading timestamp column.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Use a generated series instead of a file.
    #[arg(long, value_enum)]
    pub synthetic: Option<SyntheticKind>,
    #[arg(long)]
    pub length: Option<usize>,
    #[arg(long)]
    pub period: Option<usize>,
    #[arg(long)]
    pub channels: Option<usize>,
    /// Noise standard deviation of the synthetic sine.
    #[arg(long)]
    pub noise: Option<f64>,
}

impl DataArgs {
    fn apply(&self, d: &mut DataSection) {
        if let Some(p) = &self.data {
            d.path = Some(p.clone());
        }
        if let Some(s) = self.synthetic {
            d.synthetic = Some(s);
            if self.data.is_none() {
                d.path = None;
            }
        }
        set(&mut d.length, self.length);
        set(&mut d.period, self.period);
        set(&mut d.channels, self.channels);
        set(&mut d.noise, self.noise);
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct ModelArgs {
    /// Layer/router preset, applied before the individual overrides.
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    #[arg(long)]
    pub l_in: Option<usize>,
    #[arg(long)]
    pub l_out: Option<usize>,
    #[arg(long)]
    pub l_phase: Option<usize>,
    /// Latent width.
    #[arg(long)]
    pub d: Option<usize>,
    /// Number of routers.
    #[arg(long)]
    pub routers: Option<usize>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub heads: Option<usize>,
    #[arg(long)]
    pub residual: bool,
}

impl ModelArgs {
    fn apply(&self, m: &mut ModelSection) {
        if let Some(p) = self.preset {
            p.apply(m);
        }
        set(&mut m.l_in, self.l_in);
        set(&mut m.l_out, self.l_out);
        set(&mut m.l_phase, self.l_phase);
        set(&mut m.d, self.d);
        set(&mut m.m, self.routers);
        set(&mut m.n_layers, self.layers);
        set(&mut m.n_heads, self.heads);
        m.residual |= self.residual;
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Store 0 seconds in the report so reruns are byte-identical.
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Train,
    Val,
    Test,
}

impl From<SplitArg> for Part {
    fn from(s: SplitArg) -> Self {
        match s {
            SplitArg::Train => Part::Train,
            SplitArg::Val => Part::Val,
            SplitArg::Test => Part::Test,
        }
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    /// Forecast steps to score; defaults to the checkpoint's l_out.
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long, value_enum, default_value = "test")]
    pub split: SplitArg,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    /// Index into the split's windows (channel-major, stride 1).
    #[arg(long)]
    pub window: usize,
    #[arg(long, value_enum, default_value = "test")]
    pub split: SplitArg,
}

#[derive(Debug, Subcommand)]
pub enum Diagnose {
    /// Week-over-week MMD² of phase and patch tokens.
    Mmd(MmdArgs),
    /// Explained-variance spectra and effective dimensions.
    Pca(PcaArgs),
    /// Subspace stability bounds over seeded low-rank trials.
    Stability(StabilityArgs),
}

#[derive(Debug, Args)]
pub struct MmdArgs {
    /// CSV input; without it a drifting-cycle series is generated.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub channel: usize,
    #[arg(long, default_value_t = 24)]
    pub l_phase: usize,
    #[arg(long, default_value_t = 20)]
    pub weeks: usize,
    #[arg(long, default_value_t = 0.1)]
    pub drift: f64,
    /// Fixed kernel γ instead of the median heuristic.
    #[arg(long)]
    pub gamma: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PcaArgs {
    /// CSV input; without it a rank-2 daily-cycle matrix is generated.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub channel: usize,
    #[arg(long, default_value_t = 24)]
    pub l_phase: usize,
    #[arg(long, default_value_t = 40)]
    pub days: usize,
    #[arg(long, default_value_t = 24)]
    pub hours: usize,
    #[arg(long, default_value_t = 0.01)]
    pub noise: f64,
    #[arg(long, default_value_t = 0.9)]
    pub threshold: f64,
}

#[derive(Debug, Args)]
pub struct StabilityArgs {
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 40)]
    pub days: usize,
    #[arg(long, default_value_t = 28)]
    pub hours: usize,
    #[arg(long, default_value_t = 3)]
    pub rank: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub noise: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub eps: f64,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Comma-separated look-back lengths; prints a CSV instead of JSON.
    #[arg(long, value_delimiter = ',')]
    pub sweep: Option<Vec<usize>>,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

/// A failed command: exit code and message for standard error.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => EXIT_MISSING_INPUT,
            Error::Spec(_) | Error::IllPosed { .. } => EXIT_INVALID_SPEC,
            _ => EXIT_OTHER,
        };
        Failure::new(code, e.to_string())
    }
}

type CmdResult = std::result::Result<(), Failure>;

/// Runs one parsed command and returns its exit code.
pub fn run(cli: Cli) -> i32 {
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn base_config(cli: &Cli) -> std::result::Result<RunConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    set(&mut cfg.run.seed, cli.seed);
    if let Some(out) = &cli.out {
        cfg.run.out = out.clone();
    }
    Ok(cfg)
}

fn dispatch(cli: Cli) -> CmdResult {
    let cfg = base_config(&cli)?;
    match &cli.command {
        Command::Train(args) => cmd_train(cfg, args),
        Command::Eval(args) => cmd_eval(cfg, args),
        Command::Diagnose(Diagnose::Mmd(args)) => cmd_mmd(cfg, args),
        Command::Diagnose(Diagnose::Pca(args)) => cmd_pca(cfg, args),
        Command::Diagnose(Diagnose::Stability(args)) => cmd_stability(cfg, args),
        Command::Benchmark(args) => cmd_benchmark(cfg, args),
        Command::InspectAttention(args) => cmd_inspect(cfg, args),
    }
}

fn out_dir(cfg: &RunConfig) -> std::result::Result<PathBuf, Failure> {
    let dir = cfg.run.out.clone();
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    Ok(dir)
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> CmdResult {
    fs::write(path, contents).map_err(|e| Failure::from(Error::io(path, e)))
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("plain data serializes")
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> CmdResult {
    let io_err = |e: csv::Error| Failure::new(EXIT_OTHER, format!("writing {}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io_err)?;
    w.write_record(header).map_err(io_err)?;
    for row in rows {
        w.write_record(&row).map_err(io_err)?;
    }
    w.flush().map_err(|e| Failure::from(Error::io(path, e)))
}

fn matrix_rows(m: &Matrix) -> Vec<Vec<String>> {
    (0..m.rows()).map(|r| m.row(r).iter().map(|v| v.to_string()).collect()).collect()
}

fn cmd_train(mut cfg: RunConfig, args: &TrainArgs) -> CmdResult {
    args.data.apply(&mut cfg.data);
    args.model.apply(&mut cfg.model);
    set(&mut cfg.train.epochs, args.epochs);
    set(&mut cfg.train.batch, args.batch);
    set(&mut cfg.train.patience, args.patience);
    set(&mut cfg.train.lr, args.lr);
    if args.no_timing {
        cfg.run.timing = false;
    }
    let model = cfg.model_config();
    model.validate()?;
    let raw = cfg.data.load(cfg.run.seed)?;
    let data = ForecastData::prepare(&raw)?;
    log::info!(
        "training on {} ({} rows, {} channels), {} parameters",
        raw.name,
        raw.len(),
        raw.n_channels(),
        model.count_params()
    );
    let (params, mut report) = train(&data, &model, &cfg.train_config())?;
    if !cfg.run.timing {
        report.seconds = 0.0;
    }
    let dir = out_dir(&cfg)?;
    checkpoint::save(&dir.join("checkpoint.phfm"), &model, &params)?;
    let json = to_json(&report);
    write_file(&dir.join("report.json"), &json)?;
    write_file(&dir.join("run_config.toml"), cfg.to_toml())?;
    println!("{json}");
    Ok(())
}

fn load_checkpoint(path: &Path) -> std::result::Result<(crate::model::ModelConfig, ModelParams), Failure> {
    checkpoint::load(path).map_err(|e| match e {
        Error::Io { .. } => Failure::from(e),
        other => Failure::new(EXIT_MISMATCH, other.to_string()),
    })
}

fn cmd_eval(mut cfg: RunConfig, args: &EvalArgs) -> CmdResult {
    let (model, params) = load_checkpoint(&args.checkpoint)?;
    let horizon = args.horizon.unwrap_or(model.l_out);
    let capacity = model.p_out() * model.l_phase;
    if horizon == 0 || horizon > capacity {
        return Err(Failure::new(
            EXIT_MISMATCH,
            format!("horizon {horizon} is outside 1..={capacity} predicted by the checkpoint"),
        ));
    }
    args.data.apply(&mut cfg.data);
    let raw = cfg.data.load(cfg.run.seed)?;
    let data = ForecastData::prepare(&raw)?;
    let windows = data
        .windows(args.split.into(), model.l_in, horizon)
        .map_err(|e| Failure::new(EXIT_MISMATCH, e.to_string()))?;
    let metrics = evaluate_windows(&params, &model, &windows)?;
    println!("{}", to_json(&metrics));
    Ok(())
}

fn csv_channel(path: &Path, channel: usize) -> std::result::Result<Vec<f64>, Failure> {
    let raw = load_csv(path)?;
    if channel >= raw.n_channels() {
        return Err(Failure::new(
            EXIT_BAD_INDEX,
            format!("channel {channel} out of range for {} channels", raw.n_channels()),
        ));
    }
    Ok(raw.channel(channel))
}

fn cmd_mmd(cfg: RunConfig, args: &MmdArgs) -> CmdResult {
    if args.l_phase == 0 {
        return Err(Error::Spec("l_phase must be positive".into()).into());
    }
    let series = match &args.data {
        Some(path) => csv_channel(path, args.channel)?,
        None => {
            if args.weeks < 2 || args.drift.is_nan() || args.drift < 0.0 {
                return Err(Error::Spec("drifting cycles need ≥ 2 weeks and a nonnegative drift".into()).into());
            }
            gen_drifting_cycles(args.weeks, args.l_phase, args.drift, cfg.run.seed)
        }
    };
    let bandwidth = match args.gamma {
        Some(g) if g > 0.0 => Bandwidth::Gamma(g),
        Some(g) => return Err(Error::Spec(format!("γ = {g} must be positive")).into()),
        None => Bandwidth::Median,
    };
    let report = weekly_drift_with(&series, args.l_phase, crate::data::DAYS_PER_WEEK, bandwidth)?;
    let dir = out_dir(&cfg)?;
    for (name, curve) in [("mmd_phase.csv", &report.phase), ("mmd_patch.csv", &report.patch)] {
        let rows = curve.iter().enumerate().map(|(i, v)| vec![(i + 1).to_string(), v.to_string()]);
        write_csv(&dir.join(name), &["week", "mmd2"], rows)?;
    }
    let json = to_json(&report);
    write_file(&dir.join("mmd.json"), &json)?;
    println!("{json}");
    Ok(())
}

fn spectrum_rows(ratios: &[f64]) -> Vec<Vec<String>> {
    let mut cumulative = 0.0;
    ratios
        .iter()
        .enumerate()
        .map(|(k, r)| {
            cumulative += r;
            vec![(k + 1).to_string(), r.to_string(), cumulative.to_string()]
        })
        .collect()
}

fn cmd_pca(cfg: RunConfig, args: &PcaArgs) -> CmdResult {
    if !(args.threshold > 0.0 && args.threshold <= 1.0) {
        return Err(Error::Spec(format!("threshold {} must lie in (0, 1]", args.threshold)).into());
    }
    let (phase, patch) = match &args.data {
        Some(path) => {
            let series = csv_channel(path, args.channel)?;
            let (phase, patch) = build_token_sets(&series, args.l_phase, crate::data::DAYS_PER_WEEK)?;
            (phase.tokens, patch.tokens)
        }
        None => {
            let spec = SyntheticLowRank::daily_cycles(args.days, args.hours, args.noise, 0.0, cfg.run.seed)?;
            let phase = gen_low_rank(&spec)?.x.transpose();
            (phase, gen_rotating_low_rank(&spec)?)
        }
    };
    let (phase_ratios, patch_ratios) = (explained_variance(&phase)?, explained_variance(&patch)?);
    let dir = out_dir(&cfg)?;
    let header = ["component", "ratio", "cumulative"];
    write_csv(&dir.join("pca_phase.csv"), &header, spectrum_rows(&phase_ratios))?;
    write_csv(&dir.join("pca_patch.csv"), &header, spectrum_rows(&patch_ratios))?;
    let json = to_json(&json!({
        "threshold": args.threshold,
        "phase_effective_dim": effective_dim(&phase, args.threshold)?,
        "patch_effective_dim": effective_dim(&patch, args.threshold)?,
    }));
    write_file(&dir.join("pca.json"), &json)?;
    println!("{json}");
    Ok(())
}

fn cmd_stability(cfg: RunConfig, args: &StabilityArgs) -> CmdResult {
    if args.trials == 0 {
        return Err(Error::Spec("at least one trial is needed".into()).into());
    }
    let summary = stability_trials(
        args.days,
        args.hours,
        args.rank,
        args.noise,
        args.eps,
        cfg.run.seed,
        args.trials,
    )?;
    let json = to_json(&summary);
    write_file(&out_dir(&cfg)?.join("stability.json"), &json)?;
    println!("{json}");
    Ok(())
}

fn cmd_benchmark(mut cfg: RunConfig, args: &BenchmarkArgs) -> CmdResult {
    args.model.apply(&mut cfg.model);
    let count = |model: &crate::model::ModelConfig| -> std::result::Result<(usize, u64), Failure> {
        model.validate()?;
        let allocated = ModelParams::init(model)?.num_scalars();
        let params = model.count_params();
        if allocated != params {
            return Err(Failure::new(EXIT_OTHER, format!("{allocated} allocated vs {params} counted")));
        }
        Ok((params, model.estimate_flops()))
    };
    match &args.sweep {
        Some(lengths) => {
            println!("l_in,params,flops");
            for &l_in in lengths {
                cfg.model.l_in = l_in;
                let (params, flops) = count(&cfg.model_config())?;
                println!("{l_in},{params},{flops}");
            }
        }
        None => {
            let (params, flops) = count(&cfg.model_config())?;
            println!("{}", to_json(&json!({ "params": params, "flops": flops })));
        }
    }
    Ok(())
}

fn cmd_inspect(mut cfg: RunConfig, args: &InspectArgs) -> CmdResult {
    let (model, params) = load_checkpoint(&args.checkpoint)?;
    args.data.apply(&mut cfg.data);
    let raw = cfg.data.load(cfg.run.seed)?;
    let data = ForecastData::prepare(&raw)?;
    let windows = data
        .windows(args.split.into(), model.l_in, model.l_out)
        .map_err(|e| Failure::new(EXIT_MISMATCH, e.to_string()))?;
    let Some(window) = windows.get(args.window) else {
        return Err(Failure::new(
            EXIT_BAD_INDEX,
            format!("window {} out of range, split has {}", args.window, windows.len()),
        ));
    };
    let (cache, _) = forward_window(&params, &model, window.x)?;
    let dir = out_dir(&cfg)?;
    let mut files = Vec::new();
    for (layer, lc) in cache.layers.iter().enumerate() {
        for (head, (agg, dist)) in lc.agg_weights().iter().zip(lc.dist_weights()).enumerate() {
            for (kind, m, row_label, col_label) in [("agg", agg, "router", "phase"), ("dist", dist, "phase", "router")] {
                let name = format!("attention_l{layer}_h{head}_{kind}.csv");
                let header: Vec<String> = std::iter::once(row_label.to_string())
                    .chain((0..m.cols()).map(|c| format!("{col_label}{c}")))
                    .collect();
                let header: Vec<&str> = header.iter().map(String::as_str).collect();
                let rows = matrix_rows(m).into_iter().enumerate().map(|(r, mut row)| {
                    row.insert(0, r.to_string());
                    row
                });
                write_csv(&dir.join(&name), &header, rows)?;
                files.push(name);
            }
        }
    }
    println!(
        "{}",
        to_json(&json!({
            "window": args.window,
            "channel": window.channel,
            "start": window.start,
            "files": files,
        }))
    );
    Ok(())
}
