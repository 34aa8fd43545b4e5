//! The two-path fusion network and its non-spiking twin.
//!
//! ```text
//! frame 59×59×1 ─ conv3x3 → act → pool2 ─ conv3x3 → act → pool2 ─ conv3x3 → act → pool2
//!               ─ flatten ─ FC1 → act ──────────────┐
//! kinematics 5 ─ FC2 → act ─ FC3 → act ─────────────┴─ concat ─ FC4 → out-act → 2
//! ```
//!
//! In SNN mode every `act` is a LIF layer and the output pair is remapped from
//! {0,1} to {−1,1}. In CNN mode hidden layers use ReLU, the output uses tanh,
//! and frames are processed independently.
//!
//! Training runs layer by layer over the whole window (all timesteps of one
//! layer, then the next), which is equivalent to stepping the full network
//! because no layer feeds back into an earlier one.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{CommandVector, KinematicsVector, SpikeFrame, Window, GRID_CELLS, GRID_SIZE};

use super::layers::{remap_output, Activation, Conv3x3, Dense, MaxPool2};
use super::lif::{LifParams, SpikeFn};
use super::tensor::{ParamSet, Tensor};
use super::ModelError;

pub const KIN_DIM: usize = 5;
pub const OUT_DIM: usize = 2;
/// Normalized kinematics beyond this many standard deviations are rejected.
pub const KIN_GUARD_SIGMAS: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Snn,
    Cnn,
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "snn" => Ok(Self::Snn),
            "cnn" => Ok(Self::Cnn),
            other => Err(format!("unknown model kind {other:?}")),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Snn => "snn",
            Self::Cnn => "cnn",
        })
    }
}

/// Layer widths. The default is the full-size network; tests use narrower ones.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub conv_channels: [usize; 3],
    pub fc1: usize,
    pub fc2: usize,
    pub fc3: usize,
}

impl Default for Architecture {
    fn default() -> Self {
        Self {
            conv_channels: [8, 16, 32],
            fc1: 64,
            fc2: 16,
            fc3: 32,
        }
    }
}

impl Architecture {
    /// Spatial side length entering conv stage `k` (59, 29, 14) and after the last pool (7).
    pub fn side(&self, k: usize) -> usize {
        (0..k).fold(GRID_SIZE, |s, _| s / 2)
    }

    pub fn conv(&self, k: usize) -> Conv3x3 {
        let s = self.side(k);
        Conv3x3 {
            h: s,
            w: s,
            cin: if k == 0 { 1 } else { self.conv_channels[k - 1] },
            cout: self.conv_channels[k],
        }
    }

    pub fn pool(&self, k: usize) -> MaxPool2 {
        let s = self.side(k);
        MaxPool2 {
            h: s,
            w: s,
            c: self.conv_channels[k],
        }
    }

    pub fn flat_len(&self) -> usize {
        let s = self.side(3);
        s * s * self.conv_channels[2]
    }

    pub fn fc1(&self) -> Dense {
        Dense { nin: self.flat_len(), nout: self.fc1 }
    }

    pub fn fc2(&self) -> Dense {
        Dense { nin: KIN_DIM, nout: self.fc2 }
    }

    pub fn fc3(&self) -> Dense {
        Dense { nin: self.fc2, nout: self.fc3 }
    }

    pub fn fused_len(&self) -> usize {
        self.fc1 + self.fc3
    }

    pub fn fc4(&self) -> Dense {
        Dense { nin: self.fused_len(), nout: OUT_DIM }
    }

    /// Parameter names and shapes in storage order.
    pub fn param_shapes(&self) -> Vec<(String, Vec<usize>)> {
        let mut v = Vec::new();
        for k in 0..3 {
            let c = self.conv(k);
            v.push((format!("conv{}.weight", k + 1), c.weight_shape().to_vec()));
            v.push((format!("conv{}.bias", k + 1), vec![c.cout]));
        }
        for (i, d) in [(1, self.fc1()), (2, self.fc2()), (3, self.fc3()), (4, self.fc4())] {
            v.push((format!("fc{i}.weight"), d.weight_shape().to_vec()));
            v.push((format!("fc{i}.bias"), vec![d.nout]));
        }
        v
    }

    /// Recovers the widths from a parameter set, checking every shape.
    pub fn from_params(params: &ParamSet) -> Result<Self, ModelError> {
        let shape = |name: &str| -> Result<Vec<usize>, ModelError> {
            params
                .get(name)
                .map(|t| t.shape().to_vec())
                .ok_or_else(|| ModelError::Format(format!("missing tensor {name}")))
        };
        let c = |k: usize| -> Result<usize, ModelError> {
            shape(&format!("conv{k}.weight"))?
                .get(3)
                .copied()
                .ok_or_else(|| ModelError::Format(format!("conv{k}.weight is not 4-d")))
        };
        let rows = |name: &str| -> Result<usize, ModelError> {
            shape(name)?
                .first()
                .copied()
                .ok_or_else(|| ModelError::Format(format!("{name} is a scalar")))
        };
        let arch = Self {
            conv_channels: [c(1)?, c(2)?, c(3)?],
            fc1: rows("fc1.weight")?,
            fc2: rows("fc2.weight")?,
            fc3: rows("fc3.weight")?,
        };
        let expected = arch.param_shapes();
        if params.len() != expected.len() {
            return Err(ModelError::Format(format!(
                "expected {} tensors, found {}",
                expected.len(),
                params.len()
            )));
        }
        for (i, (name, shape)) in expected.iter().enumerate() {
            if params.name(i) != name || params.tensor(i).shape() != shape.as_slice() {
                return Err(ModelError::Format(format!(
                    "tensor {i}: expected {name} {shape:?}, found {} {:?}",
                    params.name(i),
                    params.tensor(i).shape()
                )));
            }
        }
        Ok(arch)
    }
}

/// Kind of a node in the layer graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerKind {
    Conv3x3,
    Maxpool2,
    FullyConnected,
    Lif,
    Relu,
    Tanh,
    Flatten,
    Concat,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub name: String,
    pub kind: LayerKind,
    pub in_shape: Vec<usize>,
    pub out_shape: Vec<usize>,
}

// Parameter slots in `ParamSet` order.
const CONV_W: [usize; 3] = [0, 2, 4];
const CONV_B: [usize; 3] = [1, 3, 5];
const FC1_W: usize = 6;
const FC1_B: usize = 7;
const FC2_W: usize = 8;
const FC2_B: usize = 9;
const FC3_W: usize = 10;
const FC3_B: usize = 11;
const FC4_W: usize = 12;
const FC4_B: usize = 13;

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkModel {
    pub arch: Architecture,
    pub mode: Mode,
    pub lif: LifParams,
    pub spike_fn: SpikeFn,
    pub params: ParamSet,
    pub kin_mean: [f64; KIN_DIM],
    pub kin_std: [f64; KIN_DIM],
}

/// Membrane potentials for every spiking layer, carried between steps.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkState {
    conv: [Vec<f64>; 3],
    fc1: Vec<f64>,
    fc2: Vec<f64>,
    fc3: Vec<f64>,
    out: Vec<f64>,
}

impl NetworkState {
    pub fn zeros(arch: &Architecture) -> Self {
        Self {
            conv: std::array::from_fn(|k| vec![0.0; arch.conv(k).out_len()]),
            fc1: vec![0.0; arch.fc1],
            fc2: vec![0.0; arch.fc2],
            fc3: vec![0.0; arch.fc3],
            out: vec![0.0; OUT_DIM],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.conv
            .iter()
            .chain([&self.fc1, &self.fc2, &self.fc3, &self.out])
            .all(|v| v.iter().all(|&x| x == 0.0))
    }

    /// Every stored potential, layer by layer.
    pub fn potentials(&self) -> impl Iterator<Item = f64> + '_ {
        self.conv
            .iter()
            .chain([&self.fc1, &self.fc2, &self.fc3, &self.out])
            .flat_map(|v| v.iter().copied())
    }
}

/// Result of one inference step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOutput {
    /// Real-valued prediction: remapped spikes (SNN) or tanh outputs (CNN).
    pub pred: [f64; 2],
    /// The motor command for hard-spiking SNNs; `None` otherwise.
    pub command: Option<CommandVector>,
}

/// Per-layer activity recorded during one step or window; used for FLOP accounting.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ActivityCounts {
    /// Non-zero inputs seen by conv1..3, fc1, fc2, fc3, fc4, summed over steps.
    pub input_events: [f64; 7],
    pub steps: usize,
}

#[derive(Clone, Debug, Default)]
struct LayerTrace {
    /// Input to the weighted layer at each step.
    input: Vec<Vec<f64>>,
    /// Pre-reset potential (LIF) or input current.
    pre: Vec<Vec<f64>>,
    out: Vec<Vec<f64>>,
}

/// Everything the backward pass needs from a forward run over one window.
#[derive(Clone, Debug, Default)]
pub struct ForwardTrace {
    conv: [LayerTrace; 3],
    argmax: [Vec<Vec<u32>>; 3],
    fc1: LayerTrace,
    fc2: LayerTrace,
    fc3: LayerTrace,
    fc4: LayerTrace,
    pub preds: Vec<[f64; 2]>,
}

impl ForwardTrace {
    pub fn len(&self) -> usize {
        self.preds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.preds.is_empty()
    }

    /// Raw output-layer activations (spikes for SNN) at each step.
    pub fn outputs(&self) -> &[Vec<f64>] {
        &self.fc4.out
    }

    /// Non-zero input counts per weighted layer, summed over the window.
    pub fn activity(&self) -> ActivityCounts {
        let nnz = |v: &[Vec<f64>]| -> f64 {
            v.iter().map(|x| x.iter().filter(|&&a| a != 0.0).count() as f64).sum()
        };
        ActivityCounts {
            input_events: [
                nnz(&self.conv[0].input),
                nnz(&self.conv[1].input),
                nnz(&self.conv[2].input),
                nnz(&self.fc1.input),
                nnz(&self.fc2.input),
                nnz(&self.fc3.input),
                nnz(&self.fc4.input),
            ],
            steps: self.len(),
        }
    }
}

fn run_activation(act: &Activation, currents: Vec<Vec<f64>>, input: Vec<Vec<f64>>) -> LayerTrace {
    let n = currents.first().map_or(0, Vec::len);
    let mut state = vec![0.0; n];
    let mut pre = Vec::with_capacity(currents.len());
    let mut out = Vec::with_capacity(currents.len());
    for j in &currents {
        let mut p = vec![0.0; n];
        let mut o = vec![0.0; n];
        act.step(&mut state, j, &mut o, Some(&mut p));
        pre.push(p);
        out.push(o);
    }
    LayerTrace { input, pre, out }
}

impl NetworkModel {
    /// Weights uniform in `±√(6/fan_in)` (divided by the LIF input gain in SNN
    /// mode), biases zero, from a seeded generator.
    pub fn new(arch: Architecture, mode: Mode, lif: LifParams, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // Spiking layers see g·J per step; dividing by g keeps the first-step
        // drive the same for every α, otherwise deep layers start silent at small g.
        let gain = match mode {
            Mode::Snn => lif.input_gain(),
            Mode::Cnn => 1.0,
        };
        let mut params = ParamSet::default();
        for (name, shape) in arch.param_shapes() {
            let mut t = Tensor::zeros(&shape);
            if name.ends_with(".weight") {
                let fan_in: usize = if shape.len() == 4 {
                    shape[0] * shape[1] * shape[2]
                } else {
                    shape[1]
                };
                let bound = (6.0 / fan_in as f64).sqrt() / gain;
                t.data_mut()
                    .iter_mut()
                    .for_each(|w| *w = rng.random_range(-bound..bound));
            }
            params.push(name, t);
        }
        Self::with_params(arch, mode, lif, params)
    }

    /// All weights and biases zero.
    pub fn zeros(arch: Architecture, mode: Mode, lif: LifParams) -> Self {
        let mut params = ParamSet::default();
        for (name, shape) in arch.param_shapes() {
            params.push(name, Tensor::zeros(&shape));
        }
        Self::with_params(arch, mode, lif, params)
    }

    fn with_params(arch: Architecture, mode: Mode, lif: LifParams, params: ParamSet) -> Self {
        Self {
            arch,
            mode,
            lif,
            spike_fn: SpikeFn::Hard,
            params,
            kin_mean: [0.0; KIN_DIM],
            kin_std: [1.0; KIN_DIM],
        }
    }

    pub fn from_parts(
        mode: Mode,
        lif: LifParams,
        params: ParamSet,
        kin_mean: [f64; KIN_DIM],
        kin_std: [f64; KIN_DIM],
    ) -> Result<Self, ModelError> {
        let arch = Architecture::from_params(&params)?;
        let mut m = Self::with_params(arch, mode, lif, params);
        m.kin_mean = kin_mean;
        m.kin_std = kin_std;
        Ok(m)
    }

    pub fn hidden_activation(&self) -> Activation {
        match self.mode {
            Mode::Snn => Activation::Lif { params: self.lif, spike_fn: self.spike_fn },
            Mode::Cnn => Activation::Relu,
        }
    }

    pub fn output_activation(&self) -> Activation {
        match self.mode {
            Mode::Snn => Activation::Lif { params: self.lif, spike_fn: self.spike_fn },
            Mode::Cnn => Activation::Tanh,
        }
    }

    /// Stores z-score statistics; standard deviations below 1e-9 are replaced by 1.
    pub fn set_kinematics_stats(&mut self, mean: [f64; KIN_DIM], std: [f64; KIN_DIM]) {
        self.kin_mean = mean;
        self.kin_std = std.map(|s| if s > 1e-9 { s } else { 1.0 });
    }

    pub fn normalize_kinematics(&self, k: &KinematicsVector) -> [f64; KIN_DIM] {
        let a = k.to_array();
        std::array::from_fn(|i| (a[i] - self.kin_mean[i]) / self.kin_std[i])
    }

    fn check_kin(z: &[f64; KIN_DIM]) -> Result<(), ModelError> {
        if z.iter().any(|v| !v.is_finite() || v.abs() > KIN_GUARD_SIGMAS) {
            return Err(ModelError::UnnormalizedKinematics(*z));
        }
        Ok(())
    }

    fn map_output(&self, y: &[f64]) -> [f64; 2] {
        match self.mode {
            Mode::Snn => [2.0 * y[0] - 1.0, 2.0 * y[1] - 1.0],
            Mode::Cnn => [y[0], y[1]],
        }
    }

    pub fn layer_specs(&self) -> Vec<LayerSpec> {
        let a = &self.arch;
        let hidden = if self.mode == Mode::Snn { LayerKind::Lif } else { LayerKind::Relu };
        let out = if self.mode == Mode::Snn { LayerKind::Lif } else { LayerKind::Tanh };
        let spec = |name: String, kind, i: Vec<usize>, o: Vec<usize>| LayerSpec {
            name,
            kind,
            in_shape: i,
            out_shape: o,
        };
        let mut v = Vec::new();
        for k in 0..3 {
            let c = a.conv(k);
            let p = a.pool(k);
            let hwc = vec![c.h, c.w, c.cout];
            v.push(spec(format!("conv{}", k + 1), LayerKind::Conv3x3, vec![c.h, c.w, c.cin], hwc.clone()));
            v.push(spec(format!("act{}", k + 1), hidden, hwc.clone(), hwc.clone()));
            v.push(spec(format!("pool{}", k + 1), LayerKind::Maxpool2, hwc, vec![p.out_h(), p.out_w(), p.c]));
        }
        let s = a.side(3);
        v.push(spec("flatten".into(), LayerKind::Flatten, vec![s, s, a.conv_channels[2]], vec![a.flat_len()]));
        for (name, d) in [("fc1", a.fc1()), ("fc2", a.fc2()), ("fc3", a.fc3())] {
            v.push(spec(name.into(), LayerKind::FullyConnected, vec![d.nin], vec![d.nout]));
            v.push(spec(format!("{name}_act"), hidden, vec![d.nout], vec![d.nout]));
        }
        v.push(spec("concat".into(), LayerKind::Concat, vec![a.fc1, a.fc3], vec![a.fused_len()]));
        let d = a.fc4();
        v.push(spec("fc4".into(), LayerKind::FullyConnected, vec![d.nin], vec![d.nout]));
        v.push(spec("fc4_act".into(), out, vec![d.nout], vec![d.nout]));
        v
    }

    fn p(&self, i: usize) -> &[f64] {
        self.params.tensor(i).data()
    }

    /// One inference step with state carried in `state`.
    pub fn forward_step(
        &self,
        frame: &SpikeFrame,
        kin: &[f64; KIN_DIM],
        state: &mut NetworkState,
    ) -> Result<StepOutput, ModelError> {
        Self::check_kin(kin)?;
        let a = &self.arch;
        let hidden = self.hidden_activation();
        let stateless = self.mode == Mode::Cnn;
        if stateless {
            *state = NetworkState::zeros(a);
        }
        let mut x = frame.to_f64();
        for k in 0..3 {
            let conv = a.conv(k);
            let mut j = vec![0.0; conv.out_len()];
            conv.forward(&x, self.p(CONV_W[k]), self.p(CONV_B[k]), &mut j)?;
            let mut s = vec![0.0; conv.out_len()];
            hidden.step(&mut state.conv[k], &j, &mut s, None);
            let pool = a.pool(k);
            let mut pooled = vec![0.0; pool.out_len()];
            let mut arg = vec![0; pool.out_len()];
            pool.forward(&s, &mut pooled, &mut arg)?;
            x = pooled;
        }
        let dense = |d: Dense, w: usize, b: usize, x: &[f64], v: &mut Vec<f64>, act: &Activation| {
            let mut j = vec![0.0; d.nout];
            d.forward(x, self.p(w), self.p(b), &mut j)?;
            let mut o = vec![0.0; d.nout];
            act.step(v, &j, &mut o, None);
            Ok::<_, ModelError>(o)
        };
        let lidar = dense(a.fc1(), FC1_W, FC1_B, &x, &mut state.fc1, &hidden)?;
        let k1 = dense(a.fc2(), FC2_W, FC2_B, kin, &mut state.fc2, &hidden)?;
        let k2 = dense(a.fc3(), FC3_W, FC3_B, &k1, &mut state.fc3, &hidden)?;
        let fused: Vec<f64> = lidar.into_iter().chain(k2).collect();
        let y = dense(a.fc4(), FC4_W, FC4_B, &fused, &mut state.out, &self.output_activation())?;
        if stateless {
            *state = NetworkState::zeros(a);
        }
        let command = match (self.mode, self.spike_fn) {
            (Mode::Snn, SpikeFn::Hard) => Some(remap_output([y[0], y[1]])?),
            _ => None,
        };
        Ok(StepOutput {
            pred: self.map_output(&y),
            command,
        })
    }

    /// Runs a whole sequence from zero state, recording what BPTT needs.
    /// `frames[t]` are 59×59 binary images in row-major order.
    pub fn forward_sequence(
        &self,
        frames: &[Vec<f64>],
        kin: &[[f64; KIN_DIM]],
    ) -> Result<ForwardTrace, ModelError> {
        ModelError::expect_len("kinematics sequence", frames.len(), kin.len())?;
        for f in frames {
            ModelError::expect_len("frame", GRID_CELLS, f.len())?;
        }
        for z in kin {
            Self::check_kin(z)?;
        }
        let a = &self.arch;
        let hidden = self.hidden_activation();
        let mut tr = ForwardTrace::default();

        let mut x: Vec<Vec<f64>> = frames.to_vec();
        for k in 0..3 {
            let conv = a.conv(k);
            let currents = x
                .iter()
                .map(|xt| {
                    let mut j = vec![0.0; conv.out_len()];
                    conv.forward(xt, self.p(CONV_W[k]), self.p(CONV_B[k]), &mut j)?;
                    Ok(j)
                })
                .collect::<Result<Vec<_>, ModelError>>()?;
            let lt = run_activation(&hidden, currents, x);
            let pool = a.pool(k);
            let mut pooled = Vec::with_capacity(lt.out.len());
            let mut args = Vec::with_capacity(lt.out.len());
            for s in &lt.out {
                let mut p = vec![0.0; pool.out_len()];
                let mut arg = vec![0; pool.out_len()];
                pool.forward(s, &mut p, &mut arg)?;
                pooled.push(p);
                args.push(arg);
            }
            tr.conv[k] = lt;
            tr.argmax[k] = args;
            x = pooled;
        }

        let dense_seq = |d: Dense, w: usize, b: usize, input: Vec<Vec<f64>>, act: &Activation| {
            let currents = input
                .iter()
                .map(|xt| {
                    let mut j = vec![0.0; d.nout];
                    d.forward(xt, self.p(w), self.p(b), &mut j)?;
                    Ok(j)
                })
                .collect::<Result<Vec<_>, ModelError>>()?;
            Ok::<_, ModelError>(run_activation(act, currents, input))
        };
        tr.fc1 = dense_seq(a.fc1(), FC1_W, FC1_B, x, &hidden)?;
        tr.fc2 = dense_seq(a.fc2(), FC2_W, FC2_B, kin.iter().map(|z| z.to_vec()).collect(), &hidden)?;
        tr.fc3 = dense_seq(a.fc3(), FC3_W, FC3_B, tr.fc2.out.clone(), &hidden)?;
        let fused: Vec<Vec<f64>> = tr
            .fc1
            .out
            .iter()
            .zip(&tr.fc3.out)
            .map(|(l, k)| l.iter().chain(k).copied().collect())
            .collect();
        tr.fc4 = dense_seq(a.fc4(), FC4_W, FC4_B, fused, &self.output_activation())?;
        tr.preds = tr.fc4.out.iter().map(|y| self.map_output(y)).collect();
        Ok(tr)
    }

    /// Frames and normalized kinematics for a window.
    pub fn prepare_window(&self, w: &Window) -> (Vec<Vec<f64>>, Vec<[f64; KIN_DIM]>) {
        (
            w.frames.iter().map(SpikeFrame::to_f64).collect(),
            w.kinematics.iter().map(|k| self.normalize_kinematics(k)).collect(),
        )
    }

    pub fn forward_window(&self, w: &Window) -> Result<ForwardTrace, ModelError> {
        let (frames, kin) = self.prepare_window(w);
        self.forward_sequence(&frames, &kin)
    }

    /// Reverse pass. `d_pred[t]` is dL/d(prediction) at step `t`; returns parameter gradients.
    pub fn backward(&self, tr: &ForwardTrace, d_pred: &[[f64; 2]]) -> Result<ParamSet, ModelError> {
        if tr.is_empty() {
            return Err(ModelError::MissingTrace);
        }
        ModelError::expect_len("prediction gradient", tr.len(), d_pred.len())?;
        let a = &self.arch;
        let hidden = self.hidden_activation();
        let mut g = self.params.zeros_like();
        let steps = tr.len();
        let remap_gain = if self.mode == Mode::Snn { 2.0 } else { 1.0 };

        let d_y: Vec<Vec<f64>> = d_pred
            .iter()
            .map(|d| vec![remap_gain * d[0], remap_gain * d[1]])
            .collect();

        // Dense layer: activation backward, then weights, returning dL/d(input).
        let mut dense_back = |d: Dense,
                              w: usize,
                              b: usize,
                              lt: &LayerTrace,
                              act: &Activation,
                              d_out: &[Vec<f64>],
                              need_dx: bool|
         -> Vec<Vec<f64>> {
            let mut dj = vec![vec![0.0; d.nout]; steps];
            act.backward(&lt.pre, &lt.out, d_out, &mut dj);
            let mut dx = vec![vec![0.0; d.nin]; if need_dx { steps } else { 0 }];
            let (gw, gb) = two_mut(&mut g, w, b);
            for t in 0..steps {
                d.backward(
                    &lt.input[t],
                    self.p(w),
                    &dj[t],
                    gw,
                    gb,
                    if need_dx { Some(&mut dx[t]) } else { None },
                );
            }
            dx
        };

        let d_fused = dense_back(a.fc4(), FC4_W, FC4_B, &tr.fc4, &self.output_activation(), &d_y, true);
        let (d_lidar, d_kin): (Vec<_>, Vec<_>) = d_fused
            .into_iter()
            .map(|v| {
                let (l, k) = v.split_at(a.fc1);
                (l.to_vec(), k.to_vec())
            })
            .unzip();
        let d_k1 = dense_back(a.fc3(), FC3_W, FC3_B, &tr.fc3, &hidden, &d_kin, true);
        dense_back(a.fc2(), FC2_W, FC2_B, &tr.fc2, &hidden, &d_k1, false);
        let mut d_pooled = dense_back(a.fc1(), FC1_W, FC1_B, &tr.fc1, &hidden, &d_lidar, true);

        for k in (0..3).rev() {
            let conv = a.conv(k);
            let pool = a.pool(k);
            let lt = &tr.conv[k];
            let d_s: Vec<Vec<f64>> = d_pooled
                .iter()
                .zip(&tr.argmax[k])
                .map(|(dp, arg)| {
                    let mut ds = vec![0.0; pool.in_len()];
                    pool.backward(dp, arg, &mut ds);
                    ds
                })
                .collect();
            let mut dj = vec![vec![0.0; conv.out_len()]; steps];
            hidden.backward(&lt.pre, &lt.out, &d_s, &mut dj);
            let need_dx = k > 0;
            let mut dx = vec![vec![0.0; conv.in_len()]; if need_dx { steps } else { 0 }];
            let (gw, gb) = two_mut(&mut g, CONV_W[k], CONV_B[k]);
            for t in 0..steps {
                conv.backward(
                    &lt.input[t],
                    self.p(CONV_W[k]),
                    &dj[t],
                    gw,
                    gb,
                    if need_dx { Some(&mut dx[t]) } else { None },
                );
            }
            d_pooled = dx;
        }
        Ok(g)
    }
}

/// Mutable data of two distinct tensors in a parameter set.
fn two_mut(g: &mut ParamSet, i: usize, j: usize) -> (&mut [f64], &mut [f64]) {
    assert!(i < j);
    let mut it = g.tensors_mut().skip(i);
    let a = it.next().expect("index in range");
    let b = it.nth(j - i - 1).expect("index in range");
    (a.data_mut(), b.data_mut())
}
