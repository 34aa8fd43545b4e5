//! `spikenav` command line.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::dataset::{
    load_dataset, rasterize_scan, DEFAULT_HALF_EXTENT_M, DEFAULT_WINDOW_LEN,
};
use crate::simgen::{balanced_counts, default_scenarios, generate_dataset_counts, SimConfig, WorldSpec};
use crate::snn::{load_weights, Architecture, InputScaling, Mode};
use crate::training::{evaluate_model, train_model, StepRecord, TrainConfig, TrainOutcome};

use super::flops::{count_flops, measure_activity, Activity};
use super::report::{compare_models, export_report, ReportInputs};
use super::stats::{welch_t_test, WelchInput};
use super::sweep::{alpha_sweep, default_alphas};
use super::ExperimentError;

pub const SEED_ENV: &str = "SPIKENAV_SEED";

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// 38 sessions, 90 epochs, 5 folds.
    Paper,
    /// 12 sessions, 20 epochs, 3 folds.
    Ci,
}

impl Preset {
    pub fn sessions(self) -> usize {
        match self {
            Self::Paper => 38,
            Self::Ci => 12,
        }
    }

    pub fn train_config(self) -> TrainConfig {
        match self {
            Self::Paper => TrainConfig::paper(),
            Self::Ci => TrainConfig::ci(),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "spikenav", version, about = "LIDAR spike-frame obstacle avoidance: data, training, analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate synthetic sessions with the simulated rover.
    Gen(GenArgs),
    /// Re-rasterize the scans of a dataset and export the set cells per frame.
    Rasterize(RasterizeArgs),
    /// Cross-validated training of one model.
    Train(TrainArgs),
    /// Evaluate a weights file on a dataset.
    Eval(EvalArgs),
    /// Train over a grid of membrane decay values.
    Sweep(SweepArgs),
    /// Welch's t-test from summary statistics.
    Stats(StatsArgs),
    /// FLOPs per inference for the CNN and SNN variants.
    Flops(FlopsArgs),
    /// SNN and CNN training, their comparison, FLOPs and plots in one run.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
pub struct GenArgs {
    /// Use the first N built-in scenarios.
    #[arg(long, default_value_t = 6)]
    pub scenarios: usize,
    /// Sessions per scenario (overrides --sessions).
    #[arg(long)]
    pub per: Option<usize>,
    /// Total sessions, spread evenly over the scenarios.
    #[arg(long)]
    pub sessions: Option<usize>,
    /// Additional world files (JSON), used instead of the built-in scenarios.
    #[arg(long = "world")]
    pub worlds: Vec<PathBuf>,
    #[arg(long)]
    pub max_frames: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Preset::Paper)]
    pub preset: Preset,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct RasterizeArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_HALF_EXTENT_M)]
    pub half_extent: f64,
}

#[derive(Args, Debug, Clone)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub model: Option<Mode>,
    #[arg(long)]
    pub input_scaling: Option<InputScaling>,
    #[arg(long)]
    pub window: Option<usize>,
    /// Worker threads for folds and sweep points.
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long, value_enum, default_value_t = Preset::Paper)]
    pub preset: Preset,
    /// Per-epoch progress on stderr.
    #[arg(long)]
    pub verbose: bool,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub weights: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_WINDOW_LEN)]
    pub window: usize,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub train: TrainArgs,
    /// Comma-separated α values; defaults to 0.1, 0.2, …, 1.0.
    #[arg(long, value_delimiter = ',')]
    pub alphas: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
pub struct StatsArgs {
    #[arg(long)]
    pub mu1: f64,
    #[arg(long)]
    pub sd1: f64,
    #[arg(long)]
    pub n1: usize,
    #[arg(long)]
    pub mu2: f64,
    #[arg(long)]
    pub sd2: f64,
    #[arg(long)]
    pub n2: usize,
}

#[derive(Args, Debug)]
pub struct FlopsArgs {
    /// SNN weights used to measure activity (default: untrained full-size model).
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Sessions to measure spike activity on; without it the worst case is reported.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_WINDOW_LEN)]
    pub window: usize,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    #[command(flatten)]
    pub train: TrainArgs,
    /// Also run an α sweep over these values.
    #[arg(long, value_delimiter = ',')]
    pub alphas: Option<Vec<f64>>,
}

/// `--seed`, else `SPIKENAV_SEED`, else 0.
fn resolve_seed(flag: Option<u64>) -> Result<u64, ExperimentError> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| ExperimentError::InvalidInput(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        Err(_) => Ok(0),
    }
}

fn configure_jobs(jobs: Option<usize>) {
    if let Some(n) = jobs {
        // Fails only if the pool already exists, in which case it is kept.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

impl TrainArgs {
    pub fn config(&self) -> Result<TrainConfig, ExperimentError> {
        let d = self.preset.train_config();
        let cfg = TrainConfig {
            epochs: self.epochs.unwrap_or(d.epochs),
            batch_size: self.batch.unwrap_or(d.batch_size),
            lr: self.lr.unwrap_or(d.lr),
            alpha: self.alpha.unwrap_or(d.alpha),
            input_scaling: self.input_scaling.or(d.input_scaling),
            mode: self.model.unwrap_or(d.mode),
            window_len: self.window.unwrap_or(d.window_len),
            seed: resolve_seed(self.seed)?,
            folds: self.folds.unwrap_or(d.folds),
            verbose: self.verbose,
            ..d
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io { path: path.to_path_buf(), source }
}

/// Steps of the first test session of the first fold.
fn first_session_steps(outcome: &TrainOutcome) -> Vec<StepRecord> {
    let Some(eval) = outcome.evaluations.first() else { return Vec::new() };
    let Some(first) = eval.steps.first() else { return Vec::new() };
    eval.steps.iter().filter(|s| s.session_id == first.session_id).cloned().collect()
}

fn summary(out: &mut String, name: &str, o: &TrainOutcome) {
    let r = &o.report;
    let _ = writeln!(
        out,
        "{name}: test loss {:.4} ± {:.4} over {} folds, flip rate {:.4}",
        r.mean_test_loss,
        r.std_test_loss,
        r.folds.len(),
        r.mean_flip_rate
    );
}

fn cmd_gen(a: &GenArgs, out: &mut String) -> Result<(), ExperimentError> {
    let seed = resolve_seed(a.seed)?;
    let worlds: Vec<WorldSpec> = if a.worlds.is_empty() {
        let all = default_scenarios();
        if a.scenarios == 0 || a.scenarios > all.len() {
            return Err(ExperimentError::InvalidInput(format!(
                "--scenarios must be between 1 and {}",
                all.len()
            )));
        }
        all.into_iter().take(a.scenarios).collect()
    } else {
        a.worlds
            .iter()
            .map(|p| {
                let text = std::fs::read_to_string(p).map_err(io_err(p))?;
                Ok(WorldSpec::from_json(&text)?)
            })
            .collect::<Result<_, ExperimentError>>()?
    };
    let counts = match (a.per, a.sessions) {
        (Some(p), _) => vec![p; worlds.len()],
        (None, Some(n)) => balanced_counts(n, worlds.len()),
        (None, None) => balanced_counts(a.preset.sessions(), worlds.len()),
    };
    let mut cfg = SimConfig::default();
    if let Some(m) = a.max_frames {
        cfg.max_frames = m;
    }
    let manifest = generate_dataset_counts(&worlds, &counts, &cfg, seed, &a.out)?;
    let _ = writeln!(out, "wrote {} sessions to {}", manifest.sessions.len(), a.out.display());
    Ok(())
}

fn cmd_rasterize(a: &RasterizeArgs, out: &mut String) -> Result<(), ExperimentError> {
    let sessions = load_dataset(&a.data)?;
    std::fs::create_dir_all(&a.out).map_err(io_err(&a.out))?;
    for s in &sessions {
        let mut csv = String::from("frame,row,col\n");
        let mut cells = 0usize;
        for (k, scan) in s.scans.iter().enumerate() {
            let f = rasterize_scan(scan, a.half_extent);
            for i in 0..crate::dataset::GRID_CELLS {
                let c = f.get(i / crate::dataset::GRID_SIZE, i % crate::dataset::GRID_SIZE) as u8;
                if c != 0 {
                    let _ = writeln!(csv, "{k},{},{}", i / crate::dataset::GRID_SIZE, i % crate::dataset::GRID_SIZE);
                    cells += 1;
                }
            }
        }
        let p = a.out.join(format!("{}_spikes.csv", s.id));
        std::fs::write(&p, csv).map_err(io_err(&p))?;
        let _ = writeln!(
            out,
            "{}: {} frames, {:.1} set cells per frame",
            s.id,
            s.len(),
            cells as f64 / s.len().max(1) as f64
        );
    }
    Ok(())
}

fn run_training(a: &TrainArgs, mode: Option<Mode>) -> Result<(TrainOutcome, Vec<crate::dataset::Session>), ExperimentError> {
    configure_jobs(a.jobs);
    let mut cfg = a.config()?;
    if let Some(m) = mode {
        cfg.mode = m;
    }
    let sessions = load_dataset(&a.data)?;
    let outcome = train_model(&sessions, &cfg)?;
    Ok((outcome, sessions))
}

fn cmd_train(a: &TrainArgs, out: &mut String) -> Result<(), ExperimentError> {
    let (outcome, _) = run_training(a, None)?;
    outcome.write(&a.out)?;
    let steps = first_session_steps(&outcome);
    export_report(&a.out, &ReportInputs { outputs: Some(&steps), ..Default::default() })?;
    summary(out, &outcome.report.config.mode.to_string(), &outcome);
    let _ = writeln!(out, "wrote {}", a.out.display());
    Ok(())
}

fn cmd_eval(a: &EvalArgs, out: &mut String) -> Result<(), ExperimentError> {
    let model = load_weights(&a.weights)?;
    let sessions = load_dataset(&a.data)?;
    let refs: Vec<_> = sessions.iter().collect();
    let ev = evaluate_model(&model, &refs, a.window)?;
    let _ = writeln!(
        out,
        "{} windows: test loss {:.4}, flip rate {:.4}{}",
        ev.windows,
        ev.test_loss,
        ev.flip_rate,
        if ev.flip_rate_defined { "" } else { " (no steady-label steps)" }
    );
    if let Some(dir) = &a.out {
        let first = ev.steps.first().map(|s| s.session_id.clone()).unwrap_or_default();
        let steps: Vec<_> = ev.steps.iter().filter(|s| s.session_id == first).cloned().collect();
        export_report(dir, &ReportInputs { outputs: Some(&steps), ..Default::default() })?;
        let p = dir.join("eval.json");
        let summary = serde_json::json!({
            "test_loss": ev.test_loss,
            "flip_rate": ev.flip_rate,
            "flip_rate_defined": ev.flip_rate_defined,
            "windows": ev.windows,
        });
        std::fs::write(&p, serde_json::to_string_pretty(&summary).expect("json")).map_err(io_err(&p))?;
    }
    Ok(())
}

fn cmd_sweep(a: &SweepArgs, out: &mut String) -> Result<(), ExperimentError> {
    configure_jobs(a.train.jobs);
    let cfg = a.train.config()?;
    let alphas = a.alphas.clone().unwrap_or_else(default_alphas);
    let sessions = load_dataset(&a.train.data)?;
    let (sweep, _) = alpha_sweep(&sessions, &alphas, &cfg)?;
    export_report(&a.train.out, &ReportInputs { sweep: Some(&sweep), ..Default::default() })?;
    for e in &sweep.entries {
        match &e.error {
            None => {
                let _ = writeln!(
                    out,
                    "alpha {:<4} loss {:.4} ± {:.4}  flip rate {:.4}",
                    e.alpha, e.mean_loss, e.std_loss, e.flip_rate
                );
            }
            Some(err) => {
                let _ = writeln!(out, "alpha {:<4} failed: {err}", e.alpha);
            }
        }
    }
    if let Some(b) = sweep.best_alpha {
        let _ = writeln!(out, "best alpha {b}");
    }
    Ok(())
}

fn cmd_stats(a: &StatsArgs, out: &mut String) -> Result<(), ExperimentError> {
    let r = welch_t_test(&WelchInput { mu1: a.mu1, sd1: a.sd1, n1: a.n1, mu2: a.mu2, sd2: a.sd2, n2: a.n2 })?;
    let _ = writeln!(
        out,
        "t={:.3} (t = {:.4}), dof={:.3}, p={:.4}",
        r.t_value.abs(),
        r.t_value,
        r.dof,
        r.p_value
    );
    Ok(())
}

fn cmd_flops(a: &FlopsArgs, out: &mut String) -> Result<(), ExperimentError> {
    let report = match &a.data {
        None => count_flops(&Architecture::default(), &Activity::WorstCase)?,
        Some(data) => {
            let model = match &a.weights {
                Some(w) => load_weights(w)?,
                None => {
                    let mut m = crate::snn::NetworkModel::new(
                        Architecture::default(),
                        Mode::Snn,
                        Default::default(),
                        resolve_seed(a.seed)?,
                    );
                    let sessions = load_dataset(data)?;
                    let refs: Vec<_> = sessions.iter().collect();
                    let (mean, std) = crate::training::kinematics_stats(&refs);
                    m.set_kinematics_stats(mean, std);
                    m
                }
            };
            let sessions = load_dataset(data)?;
            let refs: Vec<_> = sessions.iter().collect();
            let counts = measure_activity(&model, &refs, a.window)?;
            count_flops(&model.arch, &Activity::from_counts(&counts))?
        }
    };
    for l in &report.layers {
        let _ = writeln!(
            out,
            "{:<6} CNN {:>12.0}  SNN {:>12.1}  (input activity {:.3})",
            l.name, l.cnn_flops, l.snn_flops, l.input_activity
        );
    }
    let _ = writeln!(
        out,
        "total  CNN {:>12.0}  SNN {:>12.1}  ratio {:.3}",
        report.cnn_total,
        report.snn_total,
        report.snn_total / report.cnn_total
    );
    if let Some(dir) = &a.out {
        export_report(dir, &ReportInputs { flops: Some(&report), ..Default::default() })?;
    }
    Ok(())
}

fn cmd_report(a: &ReportArgs, out: &mut String) -> Result<(), ExperimentError> {
    let (snn, sessions) = run_training(&a.train, Some(Mode::Snn))?;
    let (cnn, _) = run_training(&a.train, Some(Mode::Cnn))?;
    snn.write(&a.train.out.join("snn"))?;
    cnn.write(&a.train.out.join("cnn"))?;
    let comparison = compare_models(&snn.report, &cnn.report)?;

    let model = &snn.models[0];
    let test_ids = &snn.report.folds[0].test_session_ids;
    let test: Vec<_> = sessions.iter().filter(|s| test_ids.contains(&s.id)).collect();
    let counts = measure_activity(model, &test, snn.report.config.window_len)?;
    let flops = count_flops(&model.arch, &Activity::from_counts(&counts))?;

    let sweep = match &a.alphas {
        Some(alphas) => Some(alpha_sweep(&sessions, alphas, &snn.report.config)?.0),
        None => None,
    };
    let steps = first_session_steps(&snn);
    export_report(
        &a.train.out,
        &ReportInputs {
            sweep: sweep.as_ref(),
            outputs: Some(&steps),
            flops: Some(&flops),
            comparison: Some(&comparison),
        },
    )?;
    summary(out, "snn", &snn);
    summary(out, "cnn", &cnn);
    let w = &comparison.welch;
    let _ = writeln!(out, "welch: t={:.4}, dof={:.3}, p={:.4}", w.t_value, w.dof, w.p_value);
    let _ = writeln!(
        out,
        "flops per inference: CNN {:.0}, SNN {:.1} ({:.1}%)",
        flops.cnn_total,
        flops.snn_total,
        100.0 * flops.snn_total / flops.cnn_total
    );
    if let Some(s) = &sweep {
        if let Some(b) = s.best_alpha {
            let _ = writeln!(out, "best alpha {b}");
        }
    }
    let _ = writeln!(out, "wrote {}", a.train.out.display());
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<String, ExperimentError> {
    let mut out = String::new();
    match &cli.command {
        Command::Gen(a) => cmd_gen(a, &mut out)?,
        Command::Rasterize(a) => cmd_rasterize(a, &mut out)?,
        Command::Train(a) => cmd_train(a, &mut out)?,
        Command::Eval(a) => cmd_eval(a, &mut out)?,
        Command::Sweep(a) => cmd_sweep(a, &mut out)?,
        Command::Stats(a) => cmd_stats(a, &mut out)?,
        Command::Flops(a) => cmd_flops(a, &mut out)?,
        Command::Report(a) => cmd_report(a, &mut out)?,
    }
    Ok(out)
}

/// Parses `argv` (including the program name), runs the command and returns the
/// exit code: 0 success, 1 usage error, 2 runtime failure.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    0
                }
                _ => {
                    let _ = e.print();
                    1
                }
            };
        }
    };
    match execute(&cli) {
        Ok(text) => {
            let _ = std::io::stdout().write_all(text.as_bytes());
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<Cli, clap::Error> {
        Cli::try_parse_from(std::iter::once("spikenav").chain(args.iter().copied()))
    }

    #[test]
    fn stats_output() {
        let cli = parse(&["stats", "--mu1", "0.09", "--sd1", "0.035", "--n1", "5", "--mu2", "0.091", "--sd2", "0.034", "--n2", "5"]).unwrap();
        let out = execute(&cli).unwrap();
        assert!(out.contains("t=0.046"), "{out}");
        assert!(out.contains("p=0.9646"), "{out}");
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run_cli(["spikenav", "frobnicate"]), 1);
        assert_eq!(run_cli(["spikenav", "stats", "--mu1", "1"]), 1);
        assert_eq!(run_cli(["spikenav", "stats", "--mu1", "1", "--sd1", "0", "--n1", "3", "--mu2", "2", "--sd2", "0", "--n2", "3"]), 2);
        assert_eq!(run_cli(["spikenav", "train", "--data", "/nonexistent/dir", "--out", "/tmp/x"]), 2);
    }

    #[test]
    fn train_flags_and_presets() {
        let cli = parse(&["train", "--data", "d", "--out", "o", "--preset", "ci", "--model", "cnn", "--alpha", "1.0", "--seed", "5"]).unwrap();
        let Command::Train(a) = cli.command else { panic!() };
        let cfg = a.config().unwrap();
        assert_eq!((cfg.epochs, cfg.folds, cfg.seed, cfg.mode), (20, 3, 5, Mode::Cnn));
        assert_eq!(cfg.lif_params().unwrap().input_scaling, InputScaling::Unscaled);
        let cli = parse(&["train", "--data", "d", "--out", "o", "--alpha", "1.0", "--input-scaling", "scaled"]).unwrap();
        let Command::Train(a) = cli.command else { panic!() };
        assert!(a.config().is_err());
        assert!(parse(&["train", "--data", "d", "--out", "o", "--model", "rnn"]).is_err());
        let cli = parse(&["sweep", "--data", "d", "--out", "o", "--alphas", "0.3,0.6,1.0"]).unwrap();
        let Command::Sweep(a) = cli.command else { panic!() };
        assert_eq!(a.alphas, Some(vec![0.3, 0.6, 1.0]));
    }

    #[test]
    fn gen_counts() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("data");
        let cli = parse(&["gen", "--scenarios", "6", "--per", "2", "--seed", "7", "--max-frames", "30", "--out", out.to_str().unwrap()]).unwrap();
        execute(&cli).unwrap();
        let m = crate::dataset::read_manifest(&out).unwrap();
        assert_eq!(m.sessions.len(), 12);
        let dirs = std::fs::read_dir(&out).unwrap().filter(|e| e.as_ref().unwrap().path().is_dir()).count();
        assert_eq!(dirs, 12);
    }
}
