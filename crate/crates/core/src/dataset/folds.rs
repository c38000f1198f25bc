use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{DatasetManifest, FeatureSet};
use crate::error::{Error, Result};
use crate::seeds;

/// Assignment of every segment (and so every record of it) to one fold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub n_folds: usize,
    /// Indexed by segment id.
    pub assignment: Vec<usize>,
}

impl FoldPlan {
    pub fn fold_of(&self, segment: usize) -> usize {
        self.assignment[segment]
    }

    pub fn segments_in(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&s| self.assignment[s] == fold)
            .collect()
    }

    pub fn validate(&self, manifest: &DatasetManifest) -> Result<()> {
        if self.assignment.len() != manifest.n_segments {
            return Err(Error::DimensionMismatch {
                context: "fold plan segments",
                expected: manifest.n_segments,
                found: self.assignment.len(),
            });
        }
        if let Some(bad) = self.assignment.iter().find(|&&f| f >= self.n_folds) {
            return Err(Error::Data(format!("fold index {bad} ≥ {}", self.n_folds)));
        }
        Ok(())
    }
}

/// Category-stratified segment folds.
///
/// Segments of each category are shuffled and dealt round-robin, with the
/// dealing position carried over between categories.
pub fn stratified_folds(manifest: &DatasetManifest, n_folds: usize, seed: u64) -> Result<FoldPlan> {
    manifest.validate()?;
    if n_folds < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {n_folds}")));
    }
    let per_category = manifest.segments_per_category();
    if per_category < n_folds {
        return Err(Error::Config(format!(
            "{per_category} segments per category cannot fill {n_folds} folds"
        )));
    }
    let mut rng = seeds::rng(seed);
    let mut assignment = vec![0; manifest.n_segments];
    let mut next = 0;
    for c in 0..manifest.n_categories() {
        let mut segs: Vec<usize> = (c * per_category..(c + 1) * per_category).collect();
        segs.shuffle(&mut rng);
        for s in segs {
            assignment[s] = next;
            next = (next + 1) % n_folds;
        }
    }
    Ok(FoldPlan { n_folds, assignment })
}

/// Splits `set` into (train, test) by the fold of each record's segment.
pub fn split(set: &FeatureSet, plan: &FoldPlan, test_fold: usize) -> Result<(FeatureSet, FeatureSet)> {
    if test_fold >= plan.n_folds {
        return Err(Error::Config(format!(
            "fold {test_fold} out of range for {} folds",
            plan.n_folds
        )));
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (i, id) in set.ids.iter().enumerate() {
        let fold = *plan
            .assignment
            .get(id.segment)
            .ok_or_else(|| Error::Data(format!("segment {} missing from fold plan", id.segment)))?;
        if fold == test_fold {
            test.push(i);
        } else {
            train.push(i);
        }
    }
    Ok((set.select(&train), set.select(&test)))
}
