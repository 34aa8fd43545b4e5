//! Welch's unequal-variance t-test.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::ExperimentError;

/// Summary statistics of two samples.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WelchInput {
    pub mu1: f64,
    pub sd1: f64,
    pub n1: usize,
    pub mu2: f64,
    pub sd2: f64,
    pub n2: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WelchResult {
    pub t_value: f64,
    /// Welch–Satterthwaite degrees of freedom.
    pub dof: f64,
    /// Two-tailed.
    pub p_value: f64,
}

/// CDF of Student's t with `dof` degrees of freedom.
pub fn student_t_cdf(t: f64, dof: f64) -> f64 {
    StudentsT::new(0.0, 1.0, dof)
        .expect("positive degrees of freedom")
        .cdf(t)
}

pub fn welch_t_test(input: &WelchInput) -> Result<WelchResult, ExperimentError> {
    let WelchInput { mu1, sd1, n1, mu2, sd2, n2 } = *input;
    if n1 < 2 || n2 < 2 {
        return Err(ExperimentError::InvalidInput(format!(
            "each sample needs at least 2 observations, got {n1} and {n2}"
        )));
    }
    if !(sd1 >= 0.0 && sd2 >= 0.0) || ![mu1, sd1, mu2, sd2].iter().all(|v| v.is_finite()) {
        return Err(ExperimentError::InvalidInput(
            "means must be finite and deviations non-negative".into(),
        ));
    }
    let v1 = sd1 * sd1 / n1 as f64;
    let v2 = sd2 * sd2 / n2 as f64;
    let se2 = v1 + v2;
    if se2 == 0.0 {
        if mu1 == mu2 {
            // Both samples constant and equal: no evidence of a difference.
            return Ok(WelchResult { t_value: 0.0, dof: (n1 + n2 - 2) as f64, p_value: 1.0 });
        }
        return Err(ExperimentError::InvalidInput("degenerate variance".into()));
    }
    let t = (mu1 - mu2) / se2.sqrt();
    let dof = se2 * se2 / (v1 * v1 / (n1 - 1) as f64 + v2 * v2 / (n2 - 1) as f64);
    let p = (2.0 * student_t_cdf(-t.abs(), dof)).clamp(0.0, 1.0);
    Ok(WelchResult { t_value: t, dof, p_value: p })
}

/// Welch test directly on two samples (sample standard deviations).
pub fn welch_from_samples(a: &[f64], b: &[f64]) -> Result<WelchResult, ExperimentError> {
    let stats = |v: &[f64]| {
        let (m, s) = crate::training::mean_std(v);
        (m, s, v.len())
    };
    let (mu1, sd1, n1) = stats(a);
    let (mu2, sd2, n2) = stats(b);
    welch_t_test(&WelchInput { mu1, sd1, n1, mu2, sd2, n2 })
}
