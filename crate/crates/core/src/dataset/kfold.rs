use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::LabeledSequence;
use crate::error::{Error, Result};

/// Train/test record indices for one fold, both ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Grouped k-fold split: every record sharing a `source` lands in the same
/// test fold. Sources are shuffled by `seed` and dealt round-robin, so the
/// number of sources per fold differs by at most one.
pub fn kfold_split(records: &[LabeledSequence], k: usize, seed: u64) -> Result<Vec<Fold>> {
    let sources: Vec<&str> = records.iter().map(|r| r.source.as_str()).collect();
    kfold_groups(&sources, k, seed)
}

pub(crate) fn kfold_groups(sources: &[&str], k: usize, seed: u64) -> Result<Vec<Fold>> {
    let mut groups: Vec<&str> = sources.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    if k < 2 || groups.len() < k {
        return Err(Error::Config(format!(
            "k = {k} needs 2 <= k <= number of sources ({})",
            groups.len()
        )));
    }
    groups.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let fold_of: BTreeMap<&str, usize> = groups.iter().enumerate().map(|(i, g)| (*g, i % k)).collect();

    let mut folds = vec![
        Fold {
            train: Vec::new(),
            test: Vec::new()
        };
        k
    ];
    for (i, s) in sources.iter().enumerate() {
        let f = fold_of[s];
        for (j, fold) in folds.iter_mut().enumerate() {
            if j == f {
                fold.test.push(i);
            } else {
                fold.train.push(i);
            }
        }
    }
    Ok(folds)
}
