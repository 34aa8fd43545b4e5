//! Fully connected spiking stack, used for small-scale gradient checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::layers::{Activation, Dense};
use super::lif::{LifParams, SpikeFn};
use super::tensor::{ParamSet, Tensor};
use super::ModelError;

/// Dense + LIF layers; `sizes = [inputs, hidden…, outputs]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpikingMlp {
    pub sizes: Vec<usize>,
    pub lif: LifParams,
    pub spike_fn: SpikeFn,
    pub params: ParamSet,
}

#[derive(Clone, Debug, Default)]
pub struct MlpTrace {
    inputs: Vec<Vec<Vec<f64>>>,
    pre: Vec<Vec<Vec<f64>>>,
    pub outputs: Vec<Vec<Vec<f64>>>,
}

impl MlpTrace {
    /// Outputs of the last layer at each step.
    pub fn last(&self) -> &[Vec<f64>] {
        self.outputs.last().map_or(&[], Vec::as_slice)
    }
}

impl SpikingMlp {
    pub fn new(sizes: &[usize], lif: LifParams, spike_fn: SpikeFn, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamSet::default();
        for (i, w) in sizes.windows(2).enumerate() {
            let bound = (6.0 / w[0] as f64).sqrt();
            let data = (0..w[0] * w[1]).map(|_| rng.random_range(-bound..bound)).collect();
            params.push(
                format!("fc{}.weight", i + 1),
                Tensor::from_vec(&[w[1], w[0]], data).expect("sized"),
            );
            params.push(format!("fc{}.bias", i + 1), Tensor::zeros(&[w[1]]));
        }
        Self {
            sizes: sizes.to_vec(),
            lif,
            spike_fn,
            params,
        }
    }

    fn layer(&self, i: usize) -> Dense {
        Dense {
            nin: self.sizes[i],
            nout: self.sizes[i + 1],
        }
    }

    fn act(&self) -> Activation {
        Activation::Lif {
            params: self.lif,
            spike_fn: self.spike_fn,
        }
    }

    /// Runs the sequence `xs` from zero state.
    pub fn forward(&self, xs: &[Vec<f64>]) -> Result<MlpTrace, ModelError> {
        let act = self.act();
        let mut tr = MlpTrace::default();
        let mut x = xs.to_vec();
        for i in 0..self.sizes.len() - 1 {
            let d = self.layer(i);
            let mut v = vec![0.0; d.nout];
            let (mut pre, mut out) = (Vec::new(), Vec::new());
            for xt in &x {
                let mut j = vec![0.0; d.nout];
                d.forward(
                    xt,
                    self.params.tensor(2 * i).data(),
                    self.params.tensor(2 * i + 1).data(),
                    &mut j,
                )?;
                let (mut p, mut o) = (vec![0.0; d.nout], vec![0.0; d.nout]);
                act.step(&mut v, &j, &mut o, Some(&mut p));
                pre.push(p);
                out.push(o);
            }
            tr.inputs.push(x);
            tr.pre.push(pre);
            x = out.clone();
            tr.outputs.push(out);
        }
        Ok(tr)
    }

    /// Parameter gradients given dL/d(last-layer output) at each step.
    pub fn backward(&self, tr: &MlpTrace, d_out: &[Vec<f64>]) -> Result<ParamSet, ModelError> {
        if tr.outputs.is_empty() {
            return Err(ModelError::MissingTrace);
        }
        let act = self.act();
        let steps = d_out.len();
        let mut g = self.params.zeros_like();
        let mut dy = d_out.to_vec();
        for i in (0..self.sizes.len() - 1).rev() {
            let d = self.layer(i);
            let mut dj = vec![vec![0.0; d.nout]; steps];
            act.backward(&tr.pre[i], &tr.outputs[i], &dy, &mut dj);
            let mut dx = vec![vec![0.0; d.nin]; steps];
            let mut gw = vec![0.0; d.nin * d.nout];
            let mut gb = vec![0.0; d.nout];
            for t in 0..steps {
                d.backward(
                    &tr.inputs[i][t],
                    self.params.tensor(2 * i).data(),
                    &dj[t],
                    &mut gw,
                    &mut gb,
                    Some(&mut dx[t]),
                );
            }
            g.tensor_mut(2 * i).data_mut().copy_from_slice(&gw);
            g.tensor_mut(2 * i + 1).data_mut().copy_from_slice(&gb);
            dy = dx;
        }
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snn::lif::{smooth_spike, surrogate_grad, InputScaling};

    #[test]
    fn smooth_probe_bptt_matches_finite_differences() {
        // Two layers, four neurons (2 + 2), three steps.
        let lif = LifParams::new(0.6, 1.0, InputScaling::Scaled).unwrap();
        let mut net = SpikingMlp::new(&[3, 2, 2], lif, SpikeFn::SmoothProbe, 11);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for t in net.params.tensors_mut() {
            t.data_mut().iter_mut().for_each(|v| *v = rng.random_range(-2.0..2.0));
        }
        let xs: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..3).map(|_| rng.random_range(-1.0..3.0)).collect())
            .collect();
        let c: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..2).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let loss = |n: &SpikingMlp| -> f64 {
            let tr = n.forward(&xs).unwrap();
            tr.last()
                .iter()
                .zip(&c)
                .map(|(y, c)| y.iter().zip(c).map(|(a, b)| a * b).sum::<f64>())
                .sum()
        };
        let tr = net.forward(&xs).unwrap();
        let g = net.backward(&tr, &c).unwrap();
        let h = 1e-5;
        for ti in 0..net.params.len() {
            for i in 0..net.params.tensor(ti).len() {
                let (mut p, mut m) = (net.clone(), net.clone());
                p.params.tensor_mut(ti).data_mut()[i] += h;
                m.params.tensor_mut(ti).data_mut()[i] -= h;
                let fd = (loss(&p) - loss(&m)) / (2.0 * h);
                let an = g.tensor(ti).data()[i];
                assert!(
                    (fd - an).abs() <= 1e-4 * fd.abs().max(an.abs()) + 1e-10,
                    "{}[{i}]: fd {fd} vs bptt {an}",
                    net.params.name(ti)
                );
            }
        }
        // Sanity: the probe output really is the smooth function.
        assert!(tr.last().iter().flatten().all(|&y| y > 0.0 && y < 0.5));
        let _ = smooth_spike(0.0);
    }

    /// Forward-mode (tangent) differentiation of a hand-unrolled 1→1→1 chain:
    /// neuron A sees `x_t`, neuron B sees A's spikes. Same surrogate rule and
    /// pass-through reset, coded independently of the layer machinery.
    fn tangent_chain(p: [f64; 4], alpha: f64, xs: &[f64], ys: &[f64], wrt: usize) -> (f64, f64) {
        let [wa, ba, wb, bb] = p;
        let seed = |k: usize| if k == wrt { 1.0 } else { 0.0 };
        let g = 1.0 - alpha;
        let (mut va, mut dva, mut vb, mut dvb) = (0.0, 0.0, 0.0, 0.0);
        let (mut loss, mut dloss) = (0.0, 0.0);
        for (&x, &y) in xs.iter().zip(ys) {
            let ja = wa * x + ba;
            let dja = seed(0) * x + seed(1);
            let pa = alpha * va + g * ja;
            let dpa = alpha * dva + g * dja;
            let sa = if pa >= 1.0 { 1.0 } else { 0.0 };
            let dsa = surrogate_grad(pa - 1.0) * dpa;
            va = if sa == 1.0 { 0.0 } else { pa };
            dva = dpa;

            let jb = wb * sa + bb;
            let djb = seed(2) * sa + wb * dsa + seed(3);
            let pb = alpha * vb + g * jb;
            let dpb = alpha * dvb + g * djb;
            let sb = if pb >= 1.0 { 1.0 } else { 0.0 };
            let dsb = surrogate_grad(pb - 1.0) * dpb;
            vb = if sb == 1.0 { 0.0 } else { pb };
            dvb = dpb;

            loss += (sb - y) * (sb - y);
            dloss += 2.0 * (sb - y) * dsb;
        }
        (loss, dloss)
    }

    #[test]
    fn hard_mode_bptt_matches_forward_mode_oracle() {
        let alpha = 0.6;
        let lif = LifParams::new(alpha, 1.0, InputScaling::Scaled).unwrap();
        let cases: [([f64; 4], [f64; 3], [f64; 3]); 3] = [
            ([1.3, 0.4, 2.1, 0.2], [1.5, 2.0, 0.7], [1.0, 0.0, 1.0]),
            ([0.9, 1.2, 1.4, 0.8], [2.5, -0.3, 1.1], [0.0, 1.0, 1.0]),
            ([2.0, -0.2, -0.5, 2.6], [0.4, 1.9, 1.6], [1.0, 1.0, 0.0]),
        ];
        for (p, xs, ys) in cases {
            let mut net = SpikingMlp::new(&[1, 1, 1], lif, SpikeFn::Hard, 0);
            for (k, v) in p.iter().enumerate() {
                net.params.tensor_mut(k).data_mut()[0] = *v;
            }
            let xv: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
            let tr = net.forward(&xv).unwrap();
            let d: Vec<Vec<f64>> = tr
                .last()
                .iter()
                .zip(&ys)
                .map(|(s, y)| vec![2.0 * (s[0] - y)])
                .collect();
            let g = net.backward(&tr, &d).unwrap();
            let loss: f64 = tr.last().iter().zip(&ys).map(|(s, y)| (s[0] - y).powi(2)).sum();
            for k in 0..4 {
                let (l, dl) = tangent_chain(p, alpha, &xs, &ys, k);
                assert_eq!(l, loss);
                let an = g.tensor(k).data()[0];
                assert!((an - dl).abs() <= 1e-12, "param {k}: bptt {an} vs oracle {dl}");
            }
            assert!(g.l2_norm() > 0.0);
        }
    }

    #[test]
    fn backward_needs_trace() {
        let net = SpikingMlp::new(&[2, 2], LifParams::default(), SpikeFn::Hard, 1);
        assert!(matches!(
            net.backward(&MlpTrace::default(), &[]),
            Err(ModelError::MissingTrace)
        ));
    }
}
