//! Subset selection over the unlabeled pool: random, entropy top-b and
//! k-center greedy.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::datagen::PatchId;
use crate::error::{shape, Error, Result};
use crate::ndgrad::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    Random,
    Uncertainty,
    Coreset,
}

impl SamplerKind {
    pub const ALL: [SamplerKind; 3] = [SamplerKind::Random, SamplerKind::Uncertainty, SamplerKind::Coreset];

    pub fn as_str(self) -> &'static str {
        match self {
            SamplerKind::Random => "random",
            SamplerKind::Uncertainty => "uncertainty",
            SamplerKind::Coreset => "coreset",
        }
    }
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SamplerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(SamplerKind::Random),
            "uncertainty" => Ok(SamplerKind::Uncertainty),
            "coreset" => Ok(SamplerKind::Coreset),
            other => Err(Error::Validation(format!(
                "unknown sampler {other:?}, expected random, uncertainty or coreset"
            ))),
        }
    }
}

/// Candidate pool ids with their encoder features and optional
/// uncertainty scores.
#[derive(Clone, Debug, PartialEq)]
pub struct Candidates {
    ids: Vec<PatchId>,
    features: Tensor,
    scores: Option<Vec<f64>>,
}

impl Candidates {
    pub fn new(ids: Vec<PatchId>, features: Tensor) -> Result<Self> {
        if features.rows() != ids.len() {
            return Err(shape(
                "candidates",
                format!("{} feature rows for {} ids", features.rows(), ids.len()),
            ));
        }
        let mut seen = HashSet::with_capacity(ids.len());
        if let Some(dup) = ids.iter().find(|id| !seen.insert(**id)) {
            return Err(Error::Validation(format!("duplicate candidate id {dup}")));
        }
        Ok(Self {
            ids,
            features,
            scores: None,
        })
    }

    pub fn with_scores(mut self, scores: Vec<f64>) -> Result<Self> {
        if scores.len() != self.ids.len() {
            return Err(shape(
                "candidates",
                format!("{} scores for {} ids", scores.len(), self.ids.len()),
            ));
        }
        self.scores = Some(scores);
        Ok(self)
    }

    pub fn ids(&self) -> &[PatchId] {
        &self.ids
    }

    pub fn features(&self) -> &Tensor {
        &self.features
    }

    pub fn scores(&self) -> Option<&[f64]> {
        self.scores.as_deref()
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// `min(cap, |pool|)` ids drawn uniformly without replacement, in draw order.
pub fn subsample_candidates<R: Rng + ?Sized>(
    pool: &[PatchId],
    cap: usize,
    rng: &mut R,
) -> Result<Vec<PatchId>> {
    if cap == 0 {
        return Err(Error::Validation("candidate cap must be >= 1".into()));
    }
    let k = cap.min(pool.len());
    Ok(index::sample(rng, pool.len(), k).into_iter().map(|i| pool[i]).collect())
}

/// `min(b, |ids|)` ids drawn uniformly without replacement.
pub fn sample_random<R: Rng + ?Sized>(ids: &[PatchId], budget: usize, rng: &mut R) -> Vec<PatchId> {
    let k = budget.min(ids.len());
    index::sample(rng, ids.len(), k).into_iter().map(|i| ids[i]).collect()
}

/// The `b` highest-scoring ids, ordered by descending score and then
/// ascending id.
pub fn sample_uncertainty(candidates: &Candidates, budget: usize) -> Result<Vec<PatchId>> {
    let scores = candidates
        .scores()
        .ok_or_else(|| Error::Contract("uncertainty sampling needs candidate scores".into()))?;
    if let Some(s) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::Contract(format!("non-finite uncertainty score {s}")));
    }
    let mut order: Vec<(f64, PatchId)> = scores.iter().copied().zip(candidates.ids.iter().copied()).collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    Ok(order.into_iter().take(budget).map(|(_, id)| id).collect())
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Farthest-first traversal starting from the already-selected rows
/// `selected`.
///
/// Each of the `b` rounds picks the candidate whose distance to its nearest
/// member of the current set is largest (ties to the smaller id) and adds it
/// to the set. Nearest-member distances are cached and refreshed against the
/// newest member only. Returns the picked ids in selection order.
pub fn k_center_greedy(candidates: &Candidates, selected: &Tensor, budget: usize) -> Result<Vec<PatchId>> {
    if candidates.is_empty() || budget == 0 {
        return Ok(Vec::new());
    }
    let dim = candidates.features.cols();
    if selected.cols() != dim {
        return Err(shape(
            "k_center_greedy",
            format!("selected width {}, candidate width {dim}", selected.cols()),
        ));
    }
    if selected.rows() == 0 {
        return Err(Error::Contract(
            "k-center greedy needs a non-empty initial set".into(),
        ));
    }
    let feats = &candidates.features;
    let n = candidates.len();
    let mut nearest: Vec<f64> = (0..n)
        .map(|i| {
            selected
                .row_iter()
                .map(|s| euclidean(feats.row(i), s))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let mut taken = vec![false; n];
    let rounds = budget.min(n);
    let mut picked = Vec::with_capacity(rounds);
    for _ in 0..rounds {
        let mut best: Option<usize> = None;
        for i in (0..n).filter(|&i| !taken[i]) {
            best = match best {
                None => Some(i),
                Some(j) => match nearest[i].total_cmp(&nearest[j]) {
                    Ordering::Greater => Some(i),
                    Ordering::Equal if candidates.ids[i] < candidates.ids[j] => Some(i),
                    _ => Some(j),
                },
            };
        }
        let u = best.expect("rounds <= untaken candidates");
        taken[u] = true;
        picked.push(candidates.ids[u]);
        let center = feats.row(u);
        for i in 0..n {
            if !taken[i] {
                let d = euclidean(feats.row(i), center);
                if d < nearest[i] {
                    nearest[i] = d;
                }
            }
        }
    }
    Ok(picked)
}
