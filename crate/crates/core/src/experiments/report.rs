//! CSV, JSON and SVG artifacts.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::training::{StepRecord, TrainReport};

use super::flops::FlopsReport;
use super::plot::{bar_chart, line_chart, Series};
use super::stats::{welch_from_samples, WelchResult};
use super::sweep::SweepResult;
use super::ExperimentError;

/// SNN vs CNN on the same folds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelComparison {
    pub snn_fold_losses: Vec<f64>,
    pub cnn_fold_losses: Vec<f64>,
    pub snn_mean: f64,
    pub snn_std: f64,
    pub cnn_mean: f64,
    pub cnn_std: f64,
    pub welch: WelchResult,
}

pub fn compare_models(snn: &TrainReport, cnn: &TrainReport) -> Result<ModelComparison, ExperimentError> {
    let a = snn.test_losses();
    let b = cnn.test_losses();
    Ok(ModelComparison {
        welch: welch_from_samples(&a, &b)?,
        snn_mean: snn.mean_test_loss,
        snn_std: snn.std_test_loss,
        cnn_mean: cnn.mean_test_loss,
        cnn_std: cnn.std_test_loss,
        snn_fold_losses: a,
        cnn_fold_losses: b,
    })
}

/// `k,label_r,label_l,pred_r,pred_l` for one session's steps.
pub fn outputs_csv(steps: &[StepRecord]) -> String {
    let mut s = String::from("k,label_r,label_l,pred_r,pred_l\n");
    for r in steps {
        let _ = writeln!(s, "{},{},{},{},{}", r.k, r.label[0], r.label[1], r.pred[0], r.pred[1]);
    }
    s
}

/// One row per layer plus a `total` row.
pub fn flops_csv(r: &FlopsReport) -> String {
    let mut s = String::from("layer,macs,cnn_flops,snn_input_activity,snn_synaptic_flops,snn_neuron_flops,snn_flops\n");
    for l in &r.layers {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            l.name, l.macs, l.cnn_flops, l.input_activity, l.snn_synaptic, l.snn_neuron, l.snn_flops
        );
    }
    let neuron: f64 = r.layers.iter().map(|l| l.snn_neuron).sum();
    let _ = writeln!(
        s,
        "total,{},{},,{},{},{}",
        r.cnn_macs, r.cnn_total, r.snn_synaptic_total, neuron, r.snn_total
    );
    s
}

pub fn sweep_svg(r: &SweepResult) -> String {
    let pts: Vec<_> = r.entries.iter().map(|e| (e.alpha, e.mean_loss)).collect();
    let errs: Vec<_> = r.entries.iter().map(|e| if e.std_loss.is_finite() { e.std_loss } else { 0.0 }).collect();
    let flips: Vec<_> = r.entries.iter().map(|e| (e.alpha, e.flip_rate)).collect();
    line_chart(
        "Test loss and flip rate vs membrane decay",
        "alpha",
        "value",
        &[
            Series { label: "mean test loss ± std", points: pts, errors: Some(errs), step: false },
            Series { label: "flip rate", points: flips, errors: None, step: false },
        ],
    )
}

/// Two step charts (right and left channel) of predictions against labels.
pub fn outputs_svg(steps: &[StepRecord], channel: usize) -> String {
    let name = if channel == 0 { "right" } else { "left" };
    let label: Vec<_> = steps.iter().map(|r| (r.k as f64, r.label[channel])).collect();
    let pred: Vec<_> = steps.iter().map(|r| (r.k as f64, r.pred[channel])).collect();
    line_chart(
        &format!("{name} motor: prediction vs label"),
        "frame",
        "direction",
        &[
            Series { label: "label", points: label, errors: None, step: true },
            Series { label: "prediction", points: pred, errors: None, step: true },
        ],
    )
}

pub fn flops_svg(r: &FlopsReport) -> String {
    let cats: Vec<String> = r.layers.iter().map(|l| l.name.clone()).collect();
    bar_chart(
        "FLOPs per inference by layer",
        "FLOPs",
        &cats,
        &[
            ("CNN", r.layers.iter().map(|l| l.cnn_flops).collect()),
            ("SNN", r.layers.iter().map(|l| l.snn_flops).collect()),
        ],
    )
}

/// Whatever results are available for [`export_report`].
#[derive(Default)]
pub struct ReportInputs<'a> {
    pub sweep: Option<&'a SweepResult>,
    /// Per-step records of a single session.
    pub outputs: Option<&'a [StepRecord]>,
    pub flops: Option<&'a FlopsReport>,
    pub comparison: Option<&'a ModelComparison>,
}

fn write(dir: &Path, name: &str, text: &str, written: &mut Vec<PathBuf>) -> Result<(), ExperimentError> {
    let p = dir.join(name);
    std::fs::write(&p, text).map_err(|source| ExperimentError::Io { path: p.clone(), source })?;
    written.push(p);
    Ok(())
}

/// Writes CSV/JSON/SVG files for every result present; returns the paths written.
pub fn export_report(dir: &Path, inputs: &ReportInputs) -> Result<Vec<PathBuf>, ExperimentError> {
    std::fs::create_dir_all(dir).map_err(|source| ExperimentError::Io { path: dir.to_path_buf(), source })?;
    let mut written = Vec::new();
    if let Some(s) = inputs.sweep {
        write(dir, "sweep.csv", &s.to_csv(), &mut written)?;
        write(dir, "sweep.json", &serde_json::to_string_pretty(s).expect("serializable"), &mut written)?;
        write(dir, "sweep.svg", &sweep_svg(s), &mut written)?;
    }
    if let Some(o) = inputs.outputs {
        write(dir, "outputs_vs_labels.csv", &outputs_csv(o), &mut written)?;
        write(dir, "outputs_right.svg", &outputs_svg(o, 0), &mut written)?;
        write(dir, "outputs_left.svg", &outputs_svg(o, 1), &mut written)?;
    }
    if let Some(f) = inputs.flops {
        write(dir, "flops.csv", &flops_csv(f), &mut written)?;
        write(dir, "flops.json", &serde_json::to_string_pretty(f).expect("serializable"), &mut written)?;
        write(dir, "flops.svg", &flops_svg(f), &mut written)?;
    }
    if let Some(c) = inputs.comparison {
        write(dir, "comparison.json", &serde_json::to_string_pretty(c).expect("serializable"), &mut written)?;
    }
    Ok(written)
}
