use crate::snn::ParamSet;

use super::TrainError;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// First and second moment estimates, one tensor per parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: ParamSet,
    pub v: ParamSet,
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(params: &ParamSet) -> Self {
        Self {
            m: params.zeros_like(),
            v: params.zeros_like(),
            step: 0,
            beta1: ADAM_BETA1,
            beta2: ADAM_BETA2,
            eps: ADAM_EPS,
        }
    }
}

/// One bias-corrected Adam update. Nothing is modified if any gradient is non-finite.
pub fn adam_step(
    params: &mut ParamSet,
    grads: &ParamSet,
    state: &mut AdamState,
    lr: f64,
) -> Result<(), TrainError> {
    if !params.same_layout(grads) || !params.same_layout(&state.m) {
        return Err(TrainError::InvalidConfig(
            "parameter, gradient and moment layouts differ".into(),
        ));
    }
    if let Some((name, _)) = grads
        .iter()
        .find(|(_, t)| t.data().iter().any(|v| !v.is_finite()))
    {
        return Err(TrainError::NonFiniteGradient(name.to_string()));
    }
    state.step += 1;
    let (b1, b2, eps) = (state.beta1, state.beta2, state.eps);
    let c1 = 1.0 - b1.powi(state.step as i32);
    let c2 = 1.0 - b2.powi(state.step as i32);
    let moments = state.m.tensors_mut().zip(state.v.tensors_mut());
    for ((p, g), (m, v)) in params.tensors_mut().zip(grads.iter().map(|(_, t)| t)).zip(moments) {
        let it = p
            .data_mut()
            .iter_mut()
            .zip(g.data())
            .zip(m.data_mut().iter_mut().zip(v.data_mut()));
        for ((p, &g), (m, v)) in it {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let mh = *m / c1;
            let vh = *v / c2;
            *p -= lr * mh / (vh.sqrt() + eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snn::Tensor;

    fn scalar(v: f64) -> ParamSet {
        let mut p = ParamSet::default();
        p.push("p", Tensor::from_vec(&[1], vec![v]).unwrap());
        p
    }

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        let mut p = scalar(0.37);
        let mut s = AdamState::new(&p);
        adam_step(&mut p, &scalar(0.0), &mut s, 1e-3).unwrap();
        assert_eq!(p.tensor(0).data()[0], 0.37);
        assert_eq!(s.m.tensor(0).data()[0], 0.0);
        assert_eq!(s.v.tensor(0).data()[0], 0.0);
        assert_eq!(s.step, 1);
    }

    #[test]
    fn first_step_value() {
        let mut p = scalar(1.0);
        let mut s = AdamState::new(&p);
        adam_step(&mut p, &scalar(1.0), &mut s, 1e-3).unwrap();
        let expect = 1.0 - 1e-3 * (1.0 / (1.0 + 1e-8));
        assert!((p.tensor(0).data()[0] - expect).abs() < 1e-15);
        assert!((p.tensor(0).data()[0] - 0.999).abs() < 1e-10);
        adam_step(&mut p, &scalar(1.0), &mut s, 1e-3).unwrap();
        assert!(p.tensor(0).data()[0] < expect);
    }

    #[test]
    fn zero_learning_rate_is_bit_identical() {
        let mut p = scalar(-0.123456789);
        let before = p.clone();
        let mut s = AdamState::new(&p);
        adam_step(&mut p, &scalar(5.0), &mut s, 0.0).unwrap();
        assert_eq!(p.tensor(0).data()[0].to_bits(), before.tensor(0).data()[0].to_bits());
    }

    #[test]
    fn non_finite_gradient_names_tensor() {
        let mut p = scalar(1.0);
        let mut s = AdamState::new(&p);
        let err = adam_step(&mut p, &scalar(f64::NAN), &mut s, 1e-3).unwrap_err();
        assert!(err.to_string().contains("\"p\"") || err.to_string().contains(" p"));
        assert_eq!(p.tensor(0).data()[0], 1.0);
        assert_eq!(s.step, 0);
    }

    #[test]
    fn layout_mismatch() {
        let mut p = scalar(1.0);
        let mut s = AdamState::new(&p);
        let mut g = ParamSet::default();
        g.push("q", Tensor::zeros(&[2]));
        assert!(adam_step(&mut p, &g, &mut s, 1e-3).is_err());
    }
}
