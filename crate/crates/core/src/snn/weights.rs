//! Plain-text weights file.
//!
//! ```text
//! {"format":"SPIKENAV1","mode":"snn","alpha":0.6,"theta":1.0,"input_scaling":"scaled","kin_mean":[…],"kin_std":[…]}
//! conv1.weight 3 3 1 8
//! <values, one row of the last dimension per line>
//! conv1.bias 8
//! …
//! ```
//!
//! Floats are written in Rust's shortest round-trip form, so loading returns
//! bit-identical values.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::lif::{InputScaling, LifParams};
use super::network::{Mode, NetworkModel, KIN_DIM};
use super::tensor::{ParamSet, Tensor};
use super::ModelError;

pub const WEIGHTS_FORMAT: &str = "SPIKENAV1";

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    mode: Mode,
    alpha: f64,
    theta: f64,
    input_scaling: InputScaling,
    kin_mean: [f64; KIN_DIM],
    kin_std: [f64; KIN_DIM],
}

pub fn write_weights(model: &NetworkModel) -> String {
    let header = Header {
        format: WEIGHTS_FORMAT.into(),
        mode: model.mode,
        alpha: model.lif.alpha,
        theta: model.lif.threshold,
        input_scaling: model.lif.input_scaling,
        kin_mean: model.kin_mean,
        kin_std: model.kin_std,
    };
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    for (name, t) in model.params.iter() {
        out.push_str(name);
        for d in t.shape() {
            let _ = write!(out, " {d}");
        }
        out.push('\n');
        let row = t.shape().last().copied().unwrap_or(1).max(1);
        for chunk in t.data().chunks(row) {
            let mut first = true;
            for v in chunk {
                if !first {
                    out.push(' ');
                }
                first = false;
                let _ = write!(out, "{v}");
            }
            out.push('\n');
        }
    }
    out
}

pub fn read_weights(text: &str) -> Result<NetworkModel, ModelError> {
    let mut lines = text.lines().enumerate();
    let (_, first) = lines
        .next()
        .ok_or_else(|| ModelError::Format("empty file".into()))?;
    let header: Header =
        serde_json::from_str(first).map_err(|e| ModelError::Format(format!("header: {e}")))?;
    if header.format != WEIGHTS_FORMAT {
        return Err(ModelError::Format(format!(
            "unsupported format {:?}",
            header.format
        )));
    }
    let lif = LifParams::new(header.alpha, header.theta, header.input_scaling)?;

    let mut params = ParamSet::default();
    while let Some((ln, line)) = lines.next() {
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let name = parts.next().expect("non-empty line");
        let shape = parts
            .map(|d| d.parse::<usize>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| ModelError::Format(format!("line {}: bad dimension: {e}", ln + 1)))?;
        let n: usize = shape.iter().product();
        let mut data = Vec::with_capacity(n);
        while data.len() < n {
            let (vl, vline) = lines.next().ok_or_else(|| {
                ModelError::Format(format!("{name}: expected {n} values, found {}", data.len()))
            })?;
            for tok in vline.split_whitespace() {
                let v = tok.parse::<f64>().map_err(|e| {
                    ModelError::Format(format!("line {}: bad value {tok:?}: {e}", vl + 1))
                })?;
                data.push(v);
            }
        }
        if data.len() != n {
            return Err(ModelError::Format(format!(
                "{name}: expected {n} values, found {}",
                data.len()
            )));
        }
        params.push(name, Tensor::from_vec(&shape, data)?);
    }
    NetworkModel::from_parts(header.mode, lif, params, header.kin_mean, header.kin_std)
}

pub fn save_weights(model: &NetworkModel, path: &Path) -> Result<(), ModelError> {
    std::fs::write(path, write_weights(model)).map_err(|source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_weights(path: &Path) -> Result<NetworkModel, ModelError> {
    let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_weights(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snn::network::Architecture;

    #[test]
    fn round_trip_is_bit_identical() {
        let mut m = NetworkModel::new(
            Architecture::default(),
            Mode::Snn,
            LifParams::for_alpha(1.0).unwrap(),
            99,
        );
        m.set_kinematics_stats([0.1, -0.2, 1e-3, 0.3, 1.0 / 3.0], [0.5, 0.25, 0.07, 0.01, 0.9]);
        m.params.tensor_mut(1).data_mut()[0] = 1e-300;
        m.params.tensor_mut(1).data_mut()[1] = -0.1 - 0.2;
        let text = write_weights(&m);
        assert!(text.lines().nth(1).unwrap().starts_with("conv1.weight 3 3 1 8"));
        let back = read_weights(&text).unwrap();
        assert_eq!(back.arch, m.arch);
        assert_eq!(back.lif, m.lif);
        assert_eq!(back.kin_mean, m.kin_mean);
        for ((_, a), (_, b)) in back.params.iter().zip(m.params.iter()) {
            let bits = |t: &Tensor| t.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(a), bits(b));
        }
    }

    #[test]
    fn cnn_header() {
        let m = NetworkModel::zeros(Architecture::default(), Mode::Cnn, LifParams::default());
        let text = write_weights(&m);
        let header: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(header["format"], "SPIKENAV1");
        assert_eq!(header["mode"], "cnn");
        assert_eq!(header["input_scaling"], "scaled");
        assert_eq!(read_weights(&text).unwrap().mode, Mode::Cnn);
    }

    #[test]
    fn rejects_truncated_and_foreign_files() {
        let m = NetworkModel::zeros(Architecture::default(), Mode::Snn, LifParams::default());
        let text = write_weights(&m);
        let cut: String = text.lines().take(5).collect::<Vec<_>>().join("\n");
        assert!(matches!(read_weights(&cut), Err(ModelError::Format(_))));
        let foreign = text.replacen("SPIKENAV1", "OTHER", 1);
        assert!(matches!(read_weights(&foreign), Err(ModelError::Format(_))));
        assert!(read_weights("").is_err());
    }
}
