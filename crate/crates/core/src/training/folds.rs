use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::TrainError;

/// One cross-validation fold, split at session level.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSplit {
    pub fold_index: usize,
    pub train_session_ids: Vec<String>,
    pub test_session_ids: Vec<String>,
}

/// Shuffles sessions with `seed` and deals them into `folds` test groups whose
/// sizes differ by at most one (larger groups first). Train lists keep the
/// input order.
pub fn kfold_split(session_ids: &[String], folds: usize, seed: u64) -> Result<Vec<FoldSplit>, TrainError> {
    if folds < 2 {
        return Err(TrainError::InvalidConfig(format!("need at least 2 folds, got {folds}")));
    }
    if session_ids.len() < folds {
        return Err(TrainError::TooFewSessions {
            sessions: session_ids.len(),
            folds,
        });
    }
    let mut order: Vec<usize> = (0..session_ids.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (base, extra) = (session_ids.len() / folds, session_ids.len() % folds);
    let mut start = 0;
    let mut out = Vec::with_capacity(folds);
    for k in 0..folds {
        let size = base + usize::from(k < extra);
        let mut test = order[start..start + size].to_vec();
        test.sort_unstable();
        start += size;
        out.push(FoldSplit {
            fold_index: k,
            train_session_ids: (0..session_ids.len())
                .filter(|i| test.binary_search(i).is_err())
                .map(|i| session_ids[i].clone())
                .collect(),
            test_session_ids: test.iter().map(|&i| session_ids[i].clone()).collect(),
        });
    }
    Ok(out)
}
