//! Fixed-length training chunks cut from a session.

use super::scan::SpikeFrame;
use super::session::{CommandVector, KinematicsVector, Session};
use super::DatasetError;

/// Default number of frames per training window.
pub const DEFAULT_WINDOW_LEN: usize = 20;

/// A contiguous slice of one session. Membrane state starts at zero for every window.
#[derive(Clone, Debug, PartialEq)]
pub struct Window {
    pub session_id: String,
    pub start: usize,
    pub frames: Vec<SpikeFrame>,
    pub kinematics: Vec<KinematicsVector>,
    pub labels: Vec<CommandVector>,
}

impl Window {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// One past the last session frame covered.
    pub fn end(&self) -> usize {
        self.start + self.len()
    }
}

/// Cuts `s` into consecutive non-overlapping windows of `length` frames,
/// discarding a shorter trailing remainder.
pub fn make_windows(s: &Session, length: usize) -> Result<Vec<Window>, DatasetError> {
    if length == 0 {
        return Err(DatasetError::Invalid("window length must be at least 1".into()));
    }
    s.validate()?;
    Ok((0..s.len() / length)
        .map(|i| {
            let range = i * length..(i + 1) * length;
            Window {
                session_id: s.id.clone(),
                start: range.start,
                frames: s.spikes[range.clone()].to_vec(),
                kinematics: s.kinematics[range.clone()].to_vec(),
                labels: s.commands[range].to_vec(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{LidarDetection, SessionSource};

    fn session(n: usize) -> Session {
        Session::from_streams(
            "w",
            10.0,
            5.0,
            SessionSource::Synthetic,
            None,
            (0..n)
                .map(|k| vec![LidarDetection::from_degrees(1.0, k as f64).unwrap()])
                .collect(),
            vec![KinematicsVector::default(); n],
            (0..n).map(|k| CommandVector::ALL[k % 4]).collect(),
        )
        .unwrap()
    }

    #[test]
    fn counts() {
        assert_eq!(make_windows(&session(200), 20).unwrap().len(), 10);
        assert!(make_windows(&session(19), 20).unwrap().is_empty());
        let w = make_windows(&session(45), 20).unwrap();
        assert_eq!(w.len(), 2);
        assert_eq!((w[0].start, w[1].end()), (0, 40));
    }

    #[test]
    fn zero_length_rejected() {
        assert!(make_windows(&session(5), 0).is_err());
    }

    #[test]
    fn windows_carry_per_frame_labels() {
        let s = session(45);
        for w in make_windows(&s, 20).unwrap() {
            assert_eq!(w.labels, s.commands[w.start..w.end()]);
            assert_eq!(w.frames.len(), 20);
            assert_eq!(w.frames[0].frame_index(), w.start);
        }
    }
}
