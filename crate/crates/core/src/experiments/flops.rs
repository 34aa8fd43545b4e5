//! Per-inference operation counts for the CNN and SNN variants.
//!
//! Accounting model:
//! * CNN: 2 FLOPs per multiply-accumulate, 1 per activation evaluation.
//! * SNN synaptic path: 1 FLOP per addition triggered by an input spike
//!   (spike count × fan-out); real-valued inputs (kinematics) cost 2 per MAC.
//! * SNN neurons: 3 FLOPs per LIF update (leak multiply, add, threshold compare).
//! * Biases and max pooling are not counted.
//!
//! Conv MACs count only connections that land inside the image, so padding
//! is free. An input spike's conv fan-out is taken as the layer average.

use serde::{Deserialize, Serialize};

use crate::dataset::{make_windows, Session};
use crate::snn::{ActivityCounts, Architecture, NetworkModel};

use super::ExperimentError;

pub const CNN_FLOPS_PER_MAC: f64 = 2.0;
pub const CNN_FLOPS_PER_ACTIVATION: f64 = 1.0;
pub const SNN_FLOPS_PER_ADD: f64 = 1.0;
pub const SNN_FLOPS_PER_UPDATE: f64 = 3.0;

pub const ACCOUNTING: &str = "CNN: 2 per MAC + 1 per activation; SNN: 1 per spike-driven addition, \
2 per MAC on real-valued inputs, 3 per LIF update; biases and pooling not counted";

/// A weighted layer as seen by the cost model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostLayer {
    pub name: String,
    /// Number of input values per step.
    pub inputs: usize,
    /// Output neurons (= activations) per step.
    pub neurons: usize,
    /// Dense multiply-accumulates per step.
    pub macs: usize,
    /// Inputs are real-valued rather than spikes.
    pub real_input: bool,
}

impl CostLayer {
    pub fn dense(name: &str, nin: usize, nout: usize, real_input: bool) -> Self {
        Self {
            name: name.into(),
            inputs: nin,
            neurons: nout,
            macs: nin * nout,
            real_input,
        }
    }
}

/// The weighted layers of the fusion network, in forward order.
pub fn cost_layers(arch: &Architecture) -> Vec<CostLayer> {
    let mut v = Vec::new();
    for k in 0..3 {
        let c = arch.conv(k);
        v.push(CostLayer {
            name: format!("conv{}", k + 1),
            inputs: c.in_len(),
            neurons: c.out_len(),
            macs: c.connections(),
            real_input: false,
        });
    }
    v.push(CostLayer::dense("fc1", arch.flat_len(), arch.fc1, false));
    v.push(CostLayer::dense("fc2", crate::snn::KIN_DIM, arch.fc2, true));
    v.push(CostLayer::dense("fc3", arch.fc2, arch.fc3, false));
    v.push(CostLayer::dense("fc4", arch.fused_len(), crate::snn::OUT_DIM, false));
    v
}

/// Input activity assumed for the SNN count.
#[derive(Clone, Debug, PartialEq)]
pub enum Activity {
    /// Mean non-zero inputs per step, one value per cost layer.
    Measured(Vec<f64>),
    /// Every input spikes at every step.
    WorstCase,
}

impl Activity {
    /// Per-step means from counts accumulated over evaluation windows.
    pub fn from_counts(c: &ActivityCounts) -> Self {
        let steps = c.steps.max(1) as f64;
        Self::Measured(c.input_events.iter().map(|v| v / steps).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerFlops {
    pub name: String,
    pub macs: usize,
    pub cnn_flops: f64,
    /// Mean input events per step used for the SNN count.
    pub input_events: f64,
    /// `input_events / inputs`.
    pub input_activity: f64,
    /// Synaptic operations: spike-driven additions, or MACs for real-valued input.
    pub snn_synaptic_ops: f64,
    pub snn_synaptic: f64,
    pub snn_neuron: f64,
    pub snn_flops: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlopsReport {
    pub layers: Vec<LayerFlops>,
    pub cnn_total: f64,
    pub snn_synaptic_ops: f64,
    pub snn_synaptic_total: f64,
    pub snn_total: f64,
    pub cnn_macs: usize,
    pub worst_case: bool,
    pub accounting: String,
}

pub fn count_flops_layers(layers: &[CostLayer], activity: &Activity) -> Result<FlopsReport, ExperimentError> {
    if let Activity::Measured(a) = activity {
        if a.len() != layers.len() {
            return Err(ExperimentError::InvalidInput(format!(
                "activity has {} entries for {} layers",
                a.len(),
                layers.len()
            )));
        }
    }
    let mut out = Vec::with_capacity(layers.len());
    for (i, l) in layers.iter().enumerate() {
        let events = match activity {
            Activity::Measured(a) => a[i],
            Activity::WorstCase => l.inputs as f64,
        };
        if !(events >= 0.0 && events <= l.inputs as f64) {
            return Err(ExperimentError::InvalidInput(format!(
                "{}: {events} input events for {} inputs",
                l.name, l.inputs
            )));
        }
        let (ops, snn_synaptic) = if l.real_input {
            (l.macs as f64, CNN_FLOPS_PER_MAC * l.macs as f64)
        } else {
            // events × average fan-out, ordered so full activity gives exactly `macs`
            let adds = l.macs as f64 * events / l.inputs as f64;
            (adds, SNN_FLOPS_PER_ADD * adds)
        };
        let snn_neuron = SNN_FLOPS_PER_UPDATE * l.neurons as f64;
        out.push(LayerFlops {
            name: l.name.clone(),
            macs: l.macs,
            cnn_flops: CNN_FLOPS_PER_MAC * l.macs as f64 + CNN_FLOPS_PER_ACTIVATION * l.neurons as f64,
            input_events: events,
            input_activity: events / l.inputs as f64,
            snn_synaptic_ops: ops,
            snn_synaptic,
            snn_neuron,
            snn_flops: snn_synaptic + snn_neuron,
        });
    }
    Ok(FlopsReport {
        cnn_total: out.iter().map(|l| l.cnn_flops).sum(),
        snn_synaptic_ops: out.iter().map(|l| l.snn_synaptic_ops).sum(),
        snn_synaptic_total: out.iter().map(|l| l.snn_synaptic).sum(),
        snn_total: out.iter().map(|l| l.snn_flops).sum(),
        cnn_macs: out.iter().map(|l| l.macs).sum(),
        layers: out,
        worst_case: matches!(activity, Activity::WorstCase),
        accounting: ACCOUNTING.into(),
    })
}

/// Non-zero layer inputs accumulated over every full window of `sessions`.
pub fn measure_activity(
    model: &NetworkModel,
    sessions: &[&Session],
    window_len: usize,
) -> Result<ActivityCounts, ExperimentError> {
    let mut total = ActivityCounts::default();
    for s in sessions {
        for w in make_windows(s, window_len)? {
            let a = model.forward_window(&w)?.activity();
            for (t, v) in total.input_events.iter_mut().zip(a.input_events) {
                *t += v;
            }
            total.steps += a.steps;
        }
    }
    if total.steps == 0 {
        return Err(ExperimentError::InvalidInput("no full windows to measure activity on".into()));
    }
    Ok(total)
}

pub fn count_flops(arch: &Architecture, activity: &Activity) -> Result<FlopsReport, ExperimentError> {
    count_flops_layers(&cost_layers(arch), activity)
}
