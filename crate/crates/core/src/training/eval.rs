use serde::{Deserialize, Serialize};

use crate::dataset::{make_windows, CommandVector, Session};
use crate::snn::NetworkModel;

use super::loss::mse_loss;
use super::TrainError;

/// Transition counts for the spurious-flip metric.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlipCounts {
    /// Steps where the output direction changed while the label did not, per channel.
    pub flips: [usize; 2],
    /// Steps where the label did not change, per channel.
    pub steady: [usize; 2],
}

impl FlipCounts {
    pub fn add(&mut self, other: &FlipCounts) {
        for c in 0..2 {
            self.flips[c] += other.flips[c];
            self.steady[c] += other.steady[c];
        }
    }

    /// Mean over channels of flips / steady steps. Channels with no steady steps
    /// are left out; if neither has any, the rate is 0 and `false` is returned.
    pub fn rate(&self) -> (f64, bool) {
        let per: Vec<f64> = (0..2)
            .filter(|&c| self.steady[c] > 0)
            .map(|c| self.flips[c] as f64 / self.steady[c] as f64)
            .collect();
        if per.is_empty() {
            (0.0, false)
        } else {
            (per.iter().sum::<f64>() / per.len() as f64, true)
        }
    }
}

/// Direction of an output channel. SNN outputs are exactly ±1; CNN outputs are
/// read by sign, with 0 counting as positive.
fn direction(v: f64) -> i8 {
    if v >= 0.0 {
        1
    } else {
        -1
    }
}

/// Counts flips along one contiguous output sequence.
pub fn flip_counts(outputs: &[[f64; 2]], labels: &[[f64; 2]]) -> FlipCounts {
    let mut fc = FlipCounts::default();
    for k in 1..outputs.len().min(labels.len()) {
        for c in 0..2 {
            if labels[k][c] == labels[k - 1][c] {
                fc.steady[c] += 1;
                if direction(outputs[k][c]) != direction(outputs[k - 1][c]) {
                    fc.flips[c] += 1;
                }
            }
        }
    }
    fc
}

/// One evaluated step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub session_id: String,
    pub k: usize,
    pub label: [f64; 2],
    pub pred: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    /// Mean of per-window MSE.
    pub test_loss: f64,
    pub flip_rate: f64,
    /// False when no steady-label steps existed, so the flip rate is a placeholder 0.
    pub flip_rate_defined: bool,
    pub flips: FlipCounts,
    pub windows: usize,
    pub steps: Vec<StepRecord>,
}

/// Runs every full window of `sessions` from zero state. Flips are counted over
/// each session's concatenated window outputs.
pub fn evaluate_model(
    model: &NetworkModel,
    sessions: &[&Session],
    window_len: usize,
) -> Result<Evaluation, TrainError> {
    let mut losses = Vec::new();
    let mut flips = FlipCounts::default();
    let mut steps = Vec::new();
    for s in sessions {
        let mut preds = Vec::new();
        let mut labels: Vec<CommandVector> = Vec::new();
        for w in make_windows(s, window_len)? {
            let tr = model.forward_window(&w)?;
            losses.push(mse_loss(&tr.preds, &w.labels)?);
            for (i, (p, y)) in tr.preds.iter().zip(&w.labels).enumerate() {
                steps.push(StepRecord {
                    session_id: s.id.clone(),
                    k: w.start + i,
                    label: y.to_f64(),
                    pred: *p,
                });
            }
            preds.extend_from_slice(&tr.preds);
            labels.extend_from_slice(&w.labels);
        }
        let lab: Vec<[f64; 2]> = labels.iter().map(CommandVector::to_f64).collect();
        flips.add(&flip_counts(&preds, &lab));
    }
    if losses.is_empty() {
        return Err(TrainError::EmptyTestSet);
    }
    let test_loss = losses.iter().sum::<f64>() / losses.len() as f64;
    let (flip_rate, flip_rate_defined) = flips.rate();
    Ok(Evaluation {
        test_loss,
        flip_rate,
        flip_rate_defined,
        flips,
        windows: losses.len(),
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_outputs_do_not_flip() {
        let labels: Vec<[f64; 2]> = [[1.0, 1.0]; 4]
            .into_iter()
            .chain([[1.0, -1.0]; 4])
            .chain([[-1.0, 1.0]; 3])
            .collect();
        let fc = flip_counts(&labels, &labels);
        assert_eq!(fc.flips, [0, 0]);
        assert_eq!(fc.rate(), (0.0, true));
    }

    #[test]
    fn isolated_flip_counts_two_transitions() {
        let labels = vec![[1.0, 1.0]; 10];
        let mut out = labels.clone();
        out[4] = [-1.0, -1.0];
        let fc = flip_counts(&out, &labels);
        assert_eq!(fc.flips, [2, 2]);
        assert_eq!(fc.steady, [9, 9]);
        assert!((fc.rate().0 - 2.0 / 9.0).abs() < 1e-15);
        // One channel only: the other contributes 0.
        out[4] = [-1.0, 1.0];
        assert!((flip_counts(&out, &labels).rate().0 - 1.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn alternating_labels_are_degenerate() {
        let labels: Vec<[f64; 2]> = (0..6)
            .map(|k| if k % 2 == 0 { [1.0, 1.0] } else { [-1.0, -1.0] })
            .collect();
        let fc = flip_counts(&labels, &labels);
        assert_eq!(fc.steady, [0, 0]);
        assert_eq!(fc.rate(), (0.0, false));
    }

    #[test]
    fn continuous_outputs_flip_on_sign() {
        let labels = vec![[1.0, 1.0]; 3];
        let out = [[0.2, 0.9], [0.05, 0.8], [-0.01, 0.7]];
        assert_eq!(flip_counts(&out, &labels).flips, [1, 0]);
    }
}
