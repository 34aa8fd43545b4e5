//! Leaky integrate-and-fire dynamics and the Gaussian surrogate derivative.
//!
//! One step of a layer, per neuron:
//!
//! ```text
//! V' = α·V + g·J          g = 1 − α (scaled) or 1 (unscaled)
//! s  = [V' ≥ θ]
//! V  ← 0 if s else V'
//! ```
//!
//! For backpropagation the spike derivative ds/dV is replaced by
//! `exp(−2(V−θ)²)/√(2π)` and the reset is treated as a pass-through, so
//! `dL/dV_t = dL/ds_t · σ'(V_t − θ) + α · dL/dV_{t+1}` with `V_t` the pre-reset value.

use serde::{Deserialize, Serialize};

use super::ModelError;

/// `1/√(2π)`, the surrogate's peak value.
pub const SURROGATE_PEAK: f64 = 0.398_942_280_401_432_7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputScaling {
    /// `V' = αV + (1−α)J`
    Scaled,
    /// `V' = αV + J`; the only usable form at α = 1 (integrate-and-fire).
    Unscaled,
}

impl std::str::FromStr for InputScaling {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "scaled" => Ok(Self::Scaled),
            "unscaled" => Ok(Self::Unscaled),
            other => Err(format!("unknown input scaling {other:?}")),
        }
    }
}

impl std::fmt::Display for InputScaling {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Scaled => "scaled",
            Self::Unscaled => "unscaled",
        })
    }
}

/// How a neuron turns its membrane potential into an output.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpikeFn {
    /// Heaviside spike with reset to zero; surrogate gradient in the backward pass.
    #[default]
    Hard,
    /// Gradient-checking mode: output `¼(1 + erf(√2·(V−θ)))`, no reset. Its exact
    /// derivative equals the surrogate, so BPTT in this mode is a true gradient.
    SmoothProbe,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LifParams {
    pub alpha: f64,
    pub threshold: f64,
    pub input_scaling: InputScaling,
}

impl LifParams {
    pub fn new(alpha: f64, threshold: f64, input_scaling: InputScaling) -> Result<Self, ModelError> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(ModelError::InvalidParams(format!("alpha must be in (0, 1], got {alpha}")));
        }
        if !(threshold > 0.0 && threshold.is_finite()) {
            return Err(ModelError::InvalidParams(format!(
                "threshold must be positive, got {threshold}"
            )));
        }
        if alpha == 1.0 && input_scaling == InputScaling::Scaled {
            return Err(ModelError::InvalidParams(
                "alpha = 1 with scaled input discards all input; use unscaled".into(),
            ));
        }
        Ok(Self {
            alpha,
            threshold,
            input_scaling,
        })
    }

    /// Scaled input below α = 1, unscaled at α = 1.
    pub fn for_alpha(alpha: f64) -> Result<Self, ModelError> {
        let scaling = if alpha == 1.0 {
            InputScaling::Unscaled
        } else {
            InputScaling::Scaled
        };
        Self::new(alpha, 1.0, scaling)
    }

    /// Multiplier applied to the input current.
    pub fn input_gain(&self) -> f64 {
        match self.input_scaling {
            InputScaling::Scaled => 1.0 - self.alpha,
            InputScaling::Unscaled => 1.0,
        }
    }
}

impl Default for LifParams {
    fn default() -> Self {
        Self {
            alpha: 0.6,
            threshold: 1.0,
            input_scaling: InputScaling::Scaled,
        }
    }
}

/// Gaussian surrogate for ds/dV, evaluated at the threshold-centered potential.
pub fn surrogate_grad(v_centered: f64) -> f64 {
    SURROGATE_PEAK * (-2.0 * v_centered * v_centered).exp()
}

/// Smooth stand-in for the spike used by [`SpikeFn::SmoothProbe`].
pub fn smooth_spike(v_centered: f64) -> f64 {
    0.25 * (1.0 + statrs::function::erf::erf(std::f64::consts::SQRT_2 * v_centered))
}

/// Backward factor ds/dV for a neuron whose pre-reset potential was `v_pre`.
pub fn spike_grad_factor(v_pre: f64, threshold: f64) -> f64 {
    surrogate_grad(v_pre - threshold)
}

/// Advances one layer by one step, writing outputs to `spikes` and the pre-reset
/// potentials to `v_pre` when given.
pub fn lif_step_into(
    v: &mut [f64],
    params: &LifParams,
    spike_fn: SpikeFn,
    j: &[f64],
    spikes: &mut [f64],
    mut v_pre: Option<&mut [f64]>,
) {
    let a = params.alpha;
    let g = params.input_gain();
    let th = params.threshold;
    for i in 0..v.len() {
        let vp = a * v[i] + g * j[i];
        if let Some(buf) = v_pre.as_deref_mut() {
            buf[i] = vp;
        }
        match spike_fn {
            SpikeFn::Hard => {
                if vp >= th {
                    spikes[i] = 1.0;
                    v[i] = 0.0;
                } else {
                    spikes[i] = 0.0;
                    v[i] = vp;
                }
            }
            SpikeFn::SmoothProbe => {
                spikes[i] = smooth_spike(vp - th);
                v[i] = vp;
            }
        }
    }
}

/// Membrane potentials of one layer; starts at zero.
#[derive(Clone, Debug, PartialEq)]
pub struct LifLayerState {
    pub v: Vec<f64>,
}

impl LifLayerState {
    pub fn zeros(n: usize) -> Self {
        Self { v: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn reset(&mut self) {
        self.v.iter_mut().for_each(|x| *x = 0.0);
    }
}

/// One hard-spiking step. Returns the spike vector; `state` holds the post-reset potentials.
pub fn lif_step(
    state: &mut LifLayerState,
    params: &LifParams,
    j: &[f64],
) -> Result<Vec<f64>, ModelError> {
    if j.len() != state.len() {
        return Err(ModelError::ShapeMismatch {
            context: "lif input".into(),
            expected: state.len(),
            found: j.len(),
        });
    }
    let mut spikes = vec![0.0; j.len()];
    lif_step_into(&mut state.v, params, SpikeFn::Hard, j, &mut spikes, None);
    Ok(spikes)
}

/// Reverse pass through `T` steps of one LIF layer.
///
/// `v_pre[t]` are the recorded pre-reset potentials and `d_out[t]` the loss
/// gradient with respect to the layer's outputs. Writes dL/dJ into `d_in`.
pub fn lif_backward(
    params: &LifParams,
    v_pre: &[Vec<f64>],
    d_out: &[Vec<f64>],
    d_in: &mut [Vec<f64>],
) {
    let n = v_pre.first().map_or(0, Vec::len);
    let a = params.alpha;
    let g = params.input_gain();
    let th = params.threshold;
    let mut carry = vec![0.0; n];
    for t in (0..v_pre.len()).rev() {
        let (vp, dy, dj) = (&v_pre[t], &d_out[t], &mut d_in[t]);
        for i in 0..n {
            let mut delta = a * carry[i];
            if dy[i] != 0.0 {
                delta += dy[i] * spike_grad_factor(vp[i], th);
            }
            carry[i] = delta;
            dj[i] = g * delta;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scaled(alpha: f64) -> LifParams {
        LifParams::new(alpha, 1.0, InputScaling::Scaled).unwrap()
    }

    #[test]
    fn scaled_step_below_threshold() {
        let mut s = LifLayerState::zeros(1);
        let spikes = lif_step(&mut s, &scaled(0.6), &[1.0]).unwrap();
        assert_eq!(spikes, vec![0.0]);
        assert!((s.v[0] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn scaled_step_fires_and_resets() {
        let mut s = LifLayerState { v: vec![0.9] };
        // 0.6·0.9 + 0.4·2 = 1.34 ≥ 1
        let spikes = lif_step(&mut s, &scaled(0.6), &[2.0]).unwrap();
        assert_eq!(spikes, vec![1.0]);
        assert_eq!(s.v[0], 0.0);
    }

    #[test]
    fn integrate_and_fire_accumulates() {
        let p = LifParams::new(1.0, 1.0, InputScaling::Unscaled).unwrap();
        let mut s = LifLayerState { v: vec![0.5] };
        let spikes = lif_step(&mut s, &p, &[0.3]).unwrap();
        assert_eq!(spikes, vec![0.0]);
        assert!((s.v[0] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn params_validation() {
        assert!(LifParams::new(0.0, 1.0, InputScaling::Scaled).is_err());
        assert!(LifParams::new(1.2, 1.0, InputScaling::Scaled).is_err());
        assert!(LifParams::new(0.5, 0.0, InputScaling::Scaled).is_err());
        assert!(LifParams::new(1.0, 1.0, InputScaling::Scaled).is_err());
        assert_eq!(LifParams::for_alpha(1.0).unwrap().input_scaling, InputScaling::Unscaled);
        assert_eq!(LifParams::for_alpha(0.6).unwrap().input_scaling, InputScaling::Scaled);
    }

    #[test]
    fn shape_mismatch() {
        let mut s = LifLayerState::zeros(2);
        assert!(lif_step(&mut s, &scaled(0.5), &[1.0]).is_err());
    }

    #[test]
    fn surrogate_values() {
        assert!((surrogate_grad(0.0) - 0.3989423).abs() < 1e-7);
        assert_eq!(surrogate_grad(0.0), SURROGATE_PEAK);
        assert!((surrogate_grad(0.5) - 0.24197072451914337).abs() < 1e-15);
        assert!((surrogate_grad(0.5) - 0.2419707).abs() < 1e-7);
        assert_eq!(surrogate_grad(1e3), 0.0);
        assert_eq!(surrogate_grad(-1e3), 0.0);
        // Far below threshold: V − θ = −5.
        let far = spike_grad_factor(-4.0, 1.0);
        assert!((far - 7.69459862670642e-23).abs() < 1e-30);
        assert_eq!(spike_grad_factor(1.0, 1.0), SURROGATE_PEAK);
    }

    #[test]
    fn smooth_spike_derivative_is_surrogate() {
        for &v in &[-1.3, -0.2, 0.0, 0.4, 1.1] {
            let h = 1e-6;
            let fd = (smooth_spike(v + h) - smooth_spike(v - h)) / (2.0 * h);
            assert!((fd - surrogate_grad(v)).abs() < 1e-9, "v={v}");
        }
    }
}
