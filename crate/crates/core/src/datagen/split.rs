use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Dataset, Label, Patch, PatchId};
use crate::error::{Error, Result};
use crate::ndgrad::Tensor;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub labeled_size: usize,
    pub test_size: usize,
    /// Draw the labeled set with the dataset's class ratio instead of
    /// uniformly at random.
    pub stratify_labeled: bool,
    pub seed: u64,
}

/// Unlabeled pool. Labels are dropped at construction; only ids and pixels
/// remain.
#[derive(Clone, Debug, PartialEq)]
pub struct UnlabeledPool {
    side: usize,
    ids: Vec<PatchId>,
    pixels: Vec<Vec<f64>>,
    index: HashMap<PatchId, usize>,
}

impl UnlabeledPool {
    pub fn new(side: usize, items: Vec<(PatchId, Vec<f64>)>) -> Result<Self> {
        let mut index = HashMap::with_capacity(items.len());
        let mut ids = Vec::with_capacity(items.len());
        let mut pixels = Vec::with_capacity(items.len());
        for (i, (id, px)) in items.into_iter().enumerate() {
            if px.len() != side * side {
                return Err(Error::Validation(format!(
                    "patch {id} has {} pixels, expected {}",
                    px.len(),
                    side * side
                )));
            }
            if index.insert(id, i).is_some() {
                return Err(Error::Validation(format!("duplicate patch id {id}")));
            }
            ids.push(id);
            pixels.push(px);
        }
        Ok(Self {
            side,
            ids,
            pixels,
            index,
        })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Ids in ascending order.
    pub fn ids(&self) -> &[PatchId] {
        &self.ids
    }

    pub fn contains(&self, id: PatchId) -> bool {
        self.index.contains_key(&id)
    }

    pub fn pixels(&self, id: PatchId) -> Option<&[f64]> {
        self.index.get(&id).map(|&i| self.pixels[i].as_slice())
    }

    /// Stacks the pixels of `ids` into a `len × side²` matrix.
    pub fn matrix(&self, ids: &[PatchId]) -> Result<Tensor> {
        let rows = ids
            .iter()
            .map(|id| {
                self.pixels(*id)
                    .ok_or_else(|| Error::Contract(format!("id {id} is not in the unlabeled pool")))
            })
            .collect::<Result<Vec<_>>>()?;
        Tensor::from_rows(&rows, self.side * self.side)
    }
}

/// Patches with visible labels (the proxy training set or the test set).
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledSet {
    pub side: usize,
    pub patches: Vec<Patch>,
}

impl LabeledSet {
    pub fn len(&self) -> usize {
        self.patches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }

    pub fn ids(&self) -> Vec<PatchId> {
        self.patches.iter().map(|p| p.id).collect()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.patches.iter().map(|p| p.label).collect()
    }

    pub fn positives(&self) -> usize {
        self.patches.iter().filter(|p| p.label.is_positive()).count()
    }

    pub fn matrix(&self) -> Tensor {
        let rows: Vec<&[f64]> = self.patches.iter().map(|p| p.pixels.as_slice()).collect();
        Tensor::from_rows(&rows, self.side * self.side).expect("patches share one side length")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Pools {
    pub unlabeled: UnlabeledPool,
    pub labeled: LabeledSet,
    pub test: LabeledSet,
}

fn take_stratified(
    pos: &mut Vec<Patch>,
    neg: &mut Vec<Patch>,
    count: usize,
    ratio: f64,
    what: &str,
) -> Result<Vec<Patch>> {
    let want_pos = (count as f64 * ratio).round() as usize;
    let want_neg = count - want_pos;
    if want_pos > pos.len() || want_neg > neg.len() {
        return Err(Error::Validation(format!(
            "{what} of {count} needs {want_pos} positives and {want_neg} negatives, \
             only {} and {} available",
            pos.len(),
            neg.len()
        )));
    }
    let mut out: Vec<Patch> = pos.drain(..want_pos).collect();
    out.extend(neg.drain(..want_neg));
    Ok(out)
}

/// Partitions `dataset` into an unlabeled pool, a labeled proxy-training set
/// and a class-stratified test set. All three are sorted by id.
pub fn split_pools(dataset: &Dataset, spec: &SplitSpec) -> Result<Pools> {
    let n = dataset.len();
    if spec.labeled_size == 0 {
        return Err(Error::Validation("labeled_size must be at least 1".into()));
    }
    if spec.labeled_size + spec.test_size >= n {
        return Err(Error::Validation(format!(
            "labeled_size {} + test_size {} must be smaller than the dataset size {n}",
            spec.labeled_size, spec.test_size
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut order: Vec<&Patch> = dataset.patches.iter().collect();
    order.shuffle(&mut rng);
    let (mut pos, mut neg): (Vec<Patch>, Vec<Patch>) =
        order.into_iter().cloned().partition(|p| p.label.is_positive());
    let ratio = pos.len() as f64 / n as f64;

    let mut test = take_stratified(&mut pos, &mut neg, spec.test_size, ratio, "test set")?;
    let (mut labeled, mut unlabeled) = if spec.stratify_labeled {
        let labeled = take_stratified(&mut pos, &mut neg, spec.labeled_size, ratio, "labeled set")?;
        (labeled, pos.into_iter().chain(neg).collect::<Vec<_>>())
    } else {
        let mut rest: Vec<Patch> = pos.into_iter().chain(neg).collect();
        rest.shuffle(&mut rng);
        let labeled: Vec<Patch> = rest.drain(..spec.labeled_size).collect();
        (labeled, rest)
    };

    test.sort_by_key(|p| p.id);
    labeled.sort_by_key(|p| p.id);
    unlabeled.sort_by_key(|p| p.id);
    let side = dataset.side;
    Ok(Pools {
        unlabeled: UnlabeledPool::new(side, unlabeled.into_iter().map(|p| (p.id, p.pixels)).collect())?,
        labeled: LabeledSet {
            side,
            patches: labeled,
        },
        test: LabeledSet {
            side,
            patches: test,
        },
    })
}
