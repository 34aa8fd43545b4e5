use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{make_windows, CommandVector, Session, DEFAULT_WINDOW_LEN};
use crate::snn::{
    save_weights, Architecture, InputScaling, LifParams, Mode, NetworkModel, ParamSet, KIN_DIM,
};

use super::adam::{adam_step, AdamState};
use super::eval::{evaluate_model, Evaluation};
use super::folds::{kfold_split, FoldSplit};
use super::loss::{mse_grad, mse_loss};
use super::TrainError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub alpha: f64,
    pub threshold: f64,
    /// `None` picks scaled input below α = 1 and unscaled at α = 1.
    pub input_scaling: Option<InputScaling>,
    pub mode: Mode,
    pub window_len: usize,
    pub seed: u64,
    pub folds: usize,
    #[serde(default)]
    pub arch: Architecture,
    /// Print one line per epoch to stderr.
    #[serde(skip)]
    pub verbose: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 90,
            batch_size: 16,
            lr: 1e-3,
            alpha: 0.6,
            threshold: 1.0,
            input_scaling: None,
            mode: Mode::Snn,
            window_len: DEFAULT_WINDOW_LEN,
            seed: 0,
            folds: 5,
            arch: Architecture::default(),
            verbose: false,
        }
    }
}

impl TrainConfig {
    /// Full-length schedule: 90 epochs, 5 folds.
    pub fn paper() -> Self {
        Self::default()
    }

    /// Desk-scale schedule: 20 epochs, 3 folds.
    pub fn ci() -> Self {
        Self {
            epochs: 20,
            folds: 3,
            ..Self::default()
        }
    }

    pub fn lif_params(&self) -> Result<LifParams, TrainError> {
        let scaling = self.input_scaling.unwrap_or(if self.alpha == 1.0 {
            InputScaling::Unscaled
        } else {
            InputScaling::Scaled
        });
        Ok(LifParams::new(self.alpha, self.threshold, scaling)?)
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        if self.epochs == 0 || self.batch_size == 0 || self.window_len == 0 || self.folds == 0 {
            return Err(TrainError::InvalidConfig(
                "epochs, batch size, window length and folds must be positive".into(),
            ));
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(TrainError::InvalidConfig(format!("bad learning rate {}", self.lr)));
        }
        self.lif_params().map(|_| ())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold_index: usize,
    pub train_session_ids: Vec<String>,
    pub test_session_ids: Vec<String>,
    /// Mean window loss per epoch, measured before each batch's update.
    pub train_loss: Vec<f64>,
    /// Mean batch gradient L2 norm per epoch.
    pub grad_norm: Vec<f64>,
    pub test_loss: f64,
    pub flip_rate: f64,
    pub flip_rate_defined: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub config: TrainConfig,
    pub folds: Vec<FoldReport>,
    pub mean_test_loss: f64,
    /// Sample standard deviation (n − 1) over folds.
    pub std_test_loss: f64,
    pub mean_flip_rate: f64,
    pub std_flip_rate: f64,
}

impl TrainReport {
    pub fn test_losses(&self) -> Vec<f64> {
        self.folds.iter().map(|f| f.test_loss).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// `epoch,fold,loss` rows, epochs counted from 1.
    pub fn train_curve_csv(&self) -> String {
        let mut s = String::from("epoch,fold,loss\n");
        for f in &self.folds {
            for (e, l) in f.train_loss.iter().enumerate() {
                let _ = writeln!(s, "{},{},{}", e + 1, f.fold_index, l);
            }
        }
        s
    }
}

/// Mean and sample standard deviation; the deviation is 0 for fewer than two values.
pub fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Per-component mean and population standard deviation of all kinematics frames.
pub fn kinematics_stats(sessions: &[&Session]) -> ([f64; KIN_DIM], [f64; KIN_DIM]) {
    let mut sum = [0.0; KIN_DIM];
    let mut n = 0usize;
    for s in sessions {
        for k in &s.kinematics {
            for (a, v) in sum.iter_mut().zip(k.to_array()) {
                *a += v;
            }
            n += 1;
        }
    }
    let n = n.max(1) as f64;
    let mean = sum.map(|v| v / n);
    let mut sq = [0.0; KIN_DIM];
    for s in sessions {
        for k in &s.kinematics {
            for ((a, v), m) in sq.iter_mut().zip(k.to_array()).zip(mean) {
                *a += (v - m) * (v - m);
            }
        }
    }
    (mean, sq.map(|v| (v / n).sqrt()))
}

/// A window converted to network inputs once, reused every epoch.
struct Prepared {
    frames: Vec<Vec<f64>>,
    kin: Vec<[f64; KIN_DIM]>,
    labels: Vec<CommandVector>,
}

/// Loss and parameter gradient of one window, gradient scaled by `scale`.
fn window_grad(model: &NetworkModel, w: &Prepared, scale: f64) -> Result<(f64, ParamSet), TrainError> {
    let tr = model.forward_sequence(&w.frames, &w.kin)?;
    let loss = mse_loss(&tr.preds, &w.labels)?;
    let mut d = mse_grad(&tr.preds, &w.labels)?;
    for v in &mut d {
        v[0] *= scale;
        v[1] *= scale;
    }
    Ok((loss, model.backward(&tr, &d)?))
}

/// Trains one fold from a fresh seeded initialization and evaluates it on the held-out sessions.
pub fn train_fold(
    sessions: &[Session],
    split: &FoldSplit,
    cfg: &TrainConfig,
) -> Result<(NetworkModel, FoldReport, Evaluation), TrainError> {
    cfg.validate()?;
    let by_id: HashMap<&str, &Session> = sessions.iter().map(|s| (s.id.as_str(), s)).collect();
    let pick = |ids: &[String]| -> Result<Vec<&Session>, TrainError> {
        ids.iter()
            .map(|id| by_id.get(id.as_str()).copied().ok_or_else(|| TrainError::UnknownSession(id.clone())))
            .collect()
    };
    let train = pick(&split.train_session_ids)?;
    let test = pick(&split.test_session_ids)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(split.fold_index as u64 + 1);
    let mut model = NetworkModel::new(cfg.arch, cfg.mode, cfg.lif_params()?, rng.next_u64());
    let (mean, std) = kinematics_stats(&train);
    model.set_kinematics_stats(mean, std);

    let mut windows = Vec::new();
    for s in &train {
        for w in make_windows(s, cfg.window_len)? {
            let (frames, kin) = model.prepare_window(&w);
            windows.push(Prepared { frames, kin, labels: w.labels });
        }
    }
    if windows.is_empty() {
        return Err(TrainError::InvalidConfig(format!(
            "fold {}: no training windows of length {}",
            split.fold_index, cfg.window_len
        )));
    }

    let mut adam = AdamState::new(&model.params);
    let mut order: Vec<usize> = (0..windows.len()).collect();
    let mut train_loss = Vec::with_capacity(cfg.epochs);
    let mut grad_norm = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let (mut loss_sum, mut norm_sum, mut batches) = (0.0, 0.0, 0usize);
        for (b, batch) in order.chunks(cfg.batch_size).enumerate() {
            let scale = 1.0 / batch.len() as f64;
            let results = batch
                .par_iter()
                .map(|&i| window_grad(&model, &windows[i], scale))
                .collect::<Result<Vec<_>, _>>()?;
            let mut grads = model.params.zeros_like();
            for (loss, g) in &results {
                if !loss.is_finite() {
                    return Err(TrainError::NonFiniteLoss {
                        fold: split.fold_index,
                        epoch,
                        batch: b,
                    });
                }
                loss_sum += loss;
                grads.add_scaled(g, 1.0);
            }
            norm_sum += grads.l2_norm();
            batches += 1;
            adam_step(&mut model.params, &grads, &mut adam, cfg.lr)?;
        }
        let epoch_loss = loss_sum / windows.len() as f64;
        if cfg.verbose {
            eprintln!(
                "fold {} epoch {:>3}/{}: loss {:.5}",
                split.fold_index,
                epoch + 1,
                cfg.epochs,
                epoch_loss
            );
        }
        train_loss.push(epoch_loss);
        grad_norm.push(norm_sum / batches as f64);
    }

    let eval = evaluate_model(&model, &test, cfg.window_len)?;
    let report = FoldReport {
        fold_index: split.fold_index,
        train_session_ids: split.train_session_ids.clone(),
        test_session_ids: split.test_session_ids.clone(),
        train_loss,
        grad_norm,
        test_loss: eval.test_loss,
        flip_rate: eval.flip_rate,
        flip_rate_defined: eval.flip_rate_defined,
    };
    Ok((model, report, eval))
}

/// Everything produced by a cross-validated training run.
#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub models: Vec<NetworkModel>,
    pub report: TrainReport,
    pub evaluations: Vec<Evaluation>,
}

impl TrainOutcome {
    /// Writes `report.json`, `train_curve.csv` and `fold<k>.weights` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), TrainError> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| TrainError::Io { path, source }
        };
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        let p = dir.join("report.json");
        std::fs::write(&p, self.report.to_json()).map_err(io(&p))?;
        let p = dir.join("train_curve.csv");
        std::fs::write(&p, self.report.train_curve_csv()).map_err(io(&p))?;
        for (k, m) in self.models.iter().enumerate() {
            save_weights(m, &dir.join(format!("fold{k}.weights")))?;
        }
        Ok(())
    }
}

/// Runs `only` (all folds when `None`) of a seeded session-level k-fold split.
pub fn train_folds(
    sessions: &[Session],
    cfg: &TrainConfig,
    only: Option<&[usize]>,
) -> Result<TrainOutcome, TrainError> {
    cfg.validate()?;
    if sessions.is_empty() {
        return Err(TrainError::TooFewSessions { sessions: 0, folds: cfg.folds });
    }
    let ids: Vec<String> = sessions.iter().map(|s| s.id.clone()).collect();
    let mut splits = kfold_split(&ids, cfg.folds, cfg.seed)?;
    if let Some(keep) = only {
        splits.retain(|s| keep.contains(&s.fold_index));
    }
    let results = splits
        .par_iter()
        .map(|s| train_fold(sessions, s, cfg))
        .collect::<Result<Vec<_>, _>>()?;

    let mut models = Vec::new();
    let mut folds = Vec::new();
    let mut evaluations = Vec::new();
    for (m, r, e) in results {
        models.push(m);
        folds.push(r);
        evaluations.push(e);
    }
    let (mean_test_loss, std_test_loss) = mean_std(&folds.iter().map(|f| f.test_loss).collect::<Vec<_>>());
    let (mean_flip_rate, std_flip_rate) = mean_std(&folds.iter().map(|f| f.flip_rate).collect::<Vec<_>>());
    Ok(TrainOutcome {
        models,
        report: TrainReport {
            config: cfg.clone(),
            folds,
            mean_test_loss,
            std_test_loss,
            mean_flip_rate,
            std_flip_rate,
        },
        evaluations,
    })
}

/// Full k-fold cross-validation.
pub fn train_model(sessions: &[Session], cfg: &TrainConfig) -> Result<TrainOutcome, TrainError> {
    train_folds(sessions, cfg, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_std_values() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_std(&[7.0]), (7.0, 0.0));
    }

    #[test]
    fn presets() {
        let p = TrainConfig::paper();
        assert_eq!((p.epochs, p.batch_size, p.lr, p.folds, p.window_len), (90, 16, 1e-3, 5, 20));
        let c = TrainConfig::ci();
        assert_eq!((c.epochs, c.folds), (20, 3));
        let one = TrainConfig { alpha: 1.0, ..c.clone() };
        assert_eq!(one.lif_params().unwrap().input_scaling, InputScaling::Unscaled);
        let bad = TrainConfig {
            alpha: 1.0,
            input_scaling: Some(InputScaling::Scaled),
            ..c
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn config_json_round_trip() {
        let c = TrainConfig { alpha: 0.3, mode: Mode::Cnn, ..TrainConfig::ci() };
        let back: TrainConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }
}
