//! Cross-validated training over a grid of membrane decay values.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Session;
use crate::snn::{InputScaling, Mode};
use crate::training::{train_model, TrainConfig, TrainOutcome};

use super::ExperimentError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub alpha: f64,
    pub input_scaling: Option<InputScaling>,
    pub mean_loss: f64,
    pub std_loss: f64,
    pub flip_rate: f64,
    pub fold_losses: Vec<f64>,
    /// Set when training at this α failed; the numbers are then NaN.
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub entries: Vec<SweepEntry>,
    /// α with the lowest mean test loss among successful entries.
    pub best_alpha: Option<f64>,
}

impl SweepResult {
    pub fn from_entries(entries: Vec<SweepEntry>) -> Self {
        let best_alpha = entries
            .iter()
            .filter(|e| e.error.is_none() && e.mean_loss.is_finite())
            .min_by(|a, b| a.mean_loss.total_cmp(&b.mean_loss))
            .map(|e| e.alpha);
        Self { entries, best_alpha }
    }

    pub fn entry(&self, alpha: f64) -> Option<&SweepEntry> {
        self.entries.iter().find(|e| e.alpha == alpha)
    }

    /// `alpha,mean_loss,std_loss,flip_rate`; failed points are written as NaN.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("alpha,mean_loss,std_loss,flip_rate\n");
        for e in &self.entries {
            let _ = writeln!(s, "{},{},{},{}", e.alpha, e.mean_loss, e.std_loss, e.flip_rate);
        }
        s
    }

    /// Inverse of [`to_csv`](Self::to_csv) for the columns it carries.
    pub fn from_csv(text: &str) -> Result<Self, ExperimentError> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some("alpha,mean_loss,std_loss,flip_rate") {
            return Err(ExperimentError::InvalidInput("unexpected sweep CSV header".into()));
        }
        let mut entries = Vec::new();
        for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let v = line
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| ExperimentError::InvalidInput(format!("sweep CSV row {}: {e}", i + 2)))?;
            if v.len() != 4 {
                return Err(ExperimentError::InvalidInput(format!(
                    "sweep CSV row {} has {} fields",
                    i + 2,
                    v.len()
                )));
            }
            entries.push(SweepEntry {
                alpha: v[0],
                input_scaling: None,
                mean_loss: v[1],
                std_loss: v[2],
                flip_rate: v[3],
                fold_losses: Vec::new(),
                error: v[1].is_nan().then(|| "failed".to_string()),
            });
        }
        Ok(Self::from_entries(entries))
    }
}

/// Per-α configuration: α = 1 always uses unscaled input.
pub fn config_for_alpha(base: &TrainConfig, alpha: f64) -> TrainConfig {
    TrainConfig {
        alpha,
        mode: Mode::Snn,
        input_scaling: if alpha == 1.0 {
            Some(InputScaling::Unscaled)
        } else {
            base.input_scaling
        },
        ..base.clone()
    }
}

/// Runs full k-fold training for every α. A failing α is recorded, not fatal.
pub fn alpha_sweep(
    sessions: &[Session],
    alphas: &[f64],
    base: &TrainConfig,
) -> Result<(SweepResult, Vec<Option<TrainOutcome>>), ExperimentError> {
    if alphas.is_empty() {
        return Err(ExperimentError::InvalidInput("no alpha values given".into()));
    }
    if let Some(a) = alphas.iter().find(|a| !(**a > 0.0 && **a <= 1.0)) {
        return Err(ExperimentError::InvalidInput(format!("alpha {a} is outside (0, 1]")));
    }
    let runs: Vec<_> = alphas
        .par_iter()
        .map(|&alpha| {
            let cfg = config_for_alpha(base, alpha);
            (alpha, cfg.input_scaling, train_model(sessions, &cfg))
        })
        .collect();
    let mut entries = Vec::new();
    let mut outcomes = Vec::new();
    for (alpha, input_scaling, run) in runs {
        match run {
            Ok(out) => {
                let r = &out.report;
                entries.push(SweepEntry {
                    alpha,
                    input_scaling,
                    mean_loss: r.mean_test_loss,
                    std_loss: r.std_test_loss,
                    flip_rate: r.mean_flip_rate,
                    fold_losses: r.test_losses(),
                    error: None,
                });
                outcomes.push(Some(out));
            }
            Err(e) => {
                entries.push(SweepEntry {
                    alpha,
                    input_scaling,
                    mean_loss: f64::NAN,
                    std_loss: f64::NAN,
                    flip_rate: f64::NAN,
                    fold_losses: Vec::new(),
                    error: Some(e.to_string()),
                });
                outcomes.push(None);
            }
        }
    }
    Ok((SweepResult::from_entries(entries), outcomes))
}

/// The default grid 0.1, 0.2, …, 1.0.
pub fn default_alphas() -> Vec<f64> {
    (1..=10).map(|i| i as f64 / 10.0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(alpha: f64, loss: f64) -> SweepEntry {
        SweepEntry {
            alpha,
            input_scaling: None,
            mean_loss: loss,
            std_loss: loss / 3.0,
            flip_rate: 0.1 * alpha,
            fold_losses: vec![],
            error: None,
        }
    }

    #[test]
    fn best_alpha_and_csv_round_trip() {
        let r = SweepResult::from_entries(vec![entry(0.3, 0.21), entry(0.6, 0.0912345678901), entry(1.0, 0.4)]);
        assert_eq!(r.best_alpha, Some(0.6));
        let csv = r.to_csv();
        assert_eq!(csv.lines().count(), 4);
        let back = SweepResult::from_csv(&csv).unwrap();
        assert_eq!(back, r);
        let single = SweepResult::from_entries(vec![entry(0.6, 0.5)]);
        assert_eq!(single.best_alpha, Some(0.6));
    }

    #[test]
    fn failed_entries_are_skipped_for_best() {
        let mut bad = entry(0.2, f64::NAN);
        bad.error = Some("boom".into());
        let r = SweepResult::from_entries(vec![bad, entry(0.9, 1.0)]);
        assert_eq!(r.best_alpha, Some(0.9));
        let back = SweepResult::from_csv(&r.to_csv()).unwrap();
        assert!(back.entries[0].error.is_some());
    }

    #[test]
    fn alpha_one_is_unscaled() {
        let base = TrainConfig::ci();
        assert_eq!(config_for_alpha(&base, 1.0).input_scaling, Some(InputScaling::Unscaled));
        assert_eq!(config_for_alpha(&base, 0.6).input_scaling, None);
        assert_eq!(default_alphas().len(), 10);
        assert!(alpha_sweep(&[], &[1.5], &base).is_err());
        assert!(alpha_sweep(&[], &[], &base).is_err());
    }
}
