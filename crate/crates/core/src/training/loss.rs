use crate::dataset::CommandVector;

use super::TrainError;

/// Mean squared error over every step and both channels.
pub fn mse_loss(pred: &[[f64; 2]], labels: &[CommandVector]) -> Result<f64, TrainError> {
    check(pred, labels)?;
    let sum: f64 = pred
        .iter()
        .zip(labels)
        .map(|(p, y)| {
            let y = y.to_f64();
            (p[0] - y[0]).powi(2) + (p[1] - y[1]).powi(2)
        })
        .sum();
    Ok(sum / (2 * pred.len()) as f64)
}

/// Gradient of [`mse_loss`] with respect to each prediction.
pub fn mse_grad(pred: &[[f64; 2]], labels: &[CommandVector]) -> Result<Vec<[f64; 2]>, TrainError> {
    check(pred, labels)?;
    let n = pred.len() as f64;
    Ok(pred
        .iter()
        .zip(labels)
        .map(|(p, y)| {
            let y = y.to_f64();
            [(p[0] - y[0]) / n, (p[1] - y[1]) / n]
        })
        .collect())
}

fn check(pred: &[[f64; 2]], labels: &[CommandVector]) -> Result<(), TrainError> {
    if pred.len() != labels.len() {
        return Err(TrainError::LengthMismatch {
            predictions: pred.len(),
            labels: labels.len(),
        });
    }
    if pred.is_empty() {
        return Err(TrainError::InvalidConfig("empty prediction sequence".into()));
    }
    Ok(())
}
