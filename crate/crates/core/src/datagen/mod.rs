//! Synthetic imbalanced patch datasets, two-view augmentation, and the
//! unlabeled / labeled / test partition.
//!
//! Each class is a smooth random texture prototype. Positives come from a
//! single prototype; negatives are spread round-robin over
//! `negative_subclusters` further prototypes. Every patch is its prototype plus
//! independent per-pixel Gaussian noise, clipped to `[0, 1]`.

mod augment;
mod io;
mod split;

pub use augment::{augment, augment_pair, AugmentationConfig};
pub use io::{read_dataset, write_csv, write_dataset, FORMAT_VERSION, MAGIC};
pub use split::{split_pools, LabeledSet, Pools, SplitSpec, UnlabeledPool};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type PatchId = u64;

/// Binary tissue label; the minority class is positive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    pub fn from_bit(bit: u8) -> Option<Self> {
        match bit {
            0 => Some(Label::Negative),
            1 => Some(Label::Positive),
            _ => None,
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            Label::Negative => 0,
            Label::Positive => 1,
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Patch {
    pub id: PatchId,
    pub label: Label,
    /// Row-major `side × side` intensities in `[0, 1]`.
    pub pixels: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub side: usize,
    pub seed: u64,
    pub patches: Vec<Patch>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.patches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.patches.iter().filter(|p| p.label.is_positive()).count()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub pool_size: usize,
    pub positive_fraction: f64,
    pub negative_subclusters: usize,
    pub patch_side: usize,
    /// Standard deviation of prototype intensities around mid-grey.
    pub cluster_separation: f64,
    /// Standard deviation of per-patch pixel noise.
    pub noise_scale: f64,
    pub seed: u64,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            pool_size: 2000,
            positive_fraction: 0.14317,
            negative_subclusters: 8,
            patch_side: 8,
            cluster_separation: 0.2,
            noise_scale: 0.2,
            seed: 0,
        }
    }
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Validation(m));
        if !(self.positive_fraction > 0.0 && self.positive_fraction < 1.0) {
            return fail(format!(
                "positive_fraction must lie in (0, 1), got {}",
                self.positive_fraction
            ));
        }
        if self.pool_size < 10 {
            return fail(format!("pool_size must be at least 10, got {}", self.pool_size));
        }
        if self.negative_subclusters == 0 {
            return fail("negative_subclusters must be at least 1".into());
        }
        if self.patch_side == 0 {
            return fail("patch_side must be at least 1".into());
        }
        if !(self.cluster_separation.is_finite() && self.cluster_separation >= 0.0) {
            return fail(format!("cluster_separation must be >= 0, got {}", self.cluster_separation));
        }
        if !(self.noise_scale.is_finite() && self.noise_scale >= 0.0) {
            return fail(format!("noise_scale must be >= 0, got {}", self.noise_scale));
        }
        let pos = self.positive_count();
        if pos == 0 || pos == self.pool_size {
            return fail(format!(
                "pool_size {} x positive_fraction {} leaves a class empty",
                self.pool_size, self.positive_fraction
            ));
        }
        Ok(())
    }

    /// `round(pool_size × positive_fraction)`.
    pub fn positive_count(&self) -> usize {
        (self.pool_size as f64 * self.positive_fraction).round() as usize
    }
}

/// Smooth texture: white noise, 3×3 circular box blur, standardized, then
/// scaled around 0.5.
fn prototype<R: Rng>(side: usize, separation: f64, rng: &mut R) -> Vec<f64> {
    let n = side * side;
    let white: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let mut smooth = vec![0.0; n];
    for r in 0..side {
        for c in 0..side {
            let mut acc = 0.0;
            for dr in [side - 1, 0, 1] {
                for dc in [side - 1, 0, 1] {
                    acc += white[((r + dr) % side) * side + (c + dc) % side];
                }
            }
            smooth[r * side + c] = acc;
        }
    }
    let mean = smooth.iter().sum::<f64>() / n as f64;
    let var = smooth.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    let sd = if var > 0.0 { var.sqrt() } else { 1.0 };
    smooth
        .iter()
        .map(|v| (0.5 + separation * (v - mean) / sd).clamp(0.0, 1.0))
        .collect()
}

/// Generates a labeled dataset; ids are `0..pool_size` in a shuffled class
/// order.
pub fn generate_dataset(spec: &DatasetSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let side = spec.patch_side;
    let protos: Vec<Vec<f64>> = (0..=spec.negative_subclusters)
        .map(|_| prototype(side, spec.cluster_separation, &mut rng))
        .collect();

    let positives = spec.positive_count();
    // cluster 0 is the positive class
    let mut clusters: Vec<usize> = (0..spec.pool_size)
        .map(|i| {
            if i < positives {
                0
            } else {
                1 + (i - positives) % spec.negative_subclusters
            }
        })
        .collect();
    clusters.shuffle(&mut rng);

    let patches = clusters
        .into_iter()
        .enumerate()
        .map(|(id, cluster)| {
            let pixels = protos[cluster]
                .iter()
                .map(|&p| {
                    let noise: f64 = rng.sample(StandardNormal);
                    (p + spec.noise_scale * noise).clamp(0.0, 1.0)
                })
                .collect();
            Patch {
                id: id as PatchId,
                label: if cluster == 0 {
                    Label::Positive
                } else {
                    Label::Negative
                },
                pixels,
            }
        })
        .collect();
    Ok(Dataset {
        side,
        seed: spec.seed,
        patches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positive_count_follows_rounding() {
        let spec = DatasetSpec {
            pool_size: 1000,
            ..DatasetSpec::default()
        };
        let ds = generate_dataset(&spec).unwrap();
        assert_eq!(ds.len(), 1000);
        assert_eq!(ds.positives(), 143);
        assert_eq!(ds.len() - ds.positives(), 857);
    }

    #[test]
    fn deterministic_per_seed() {
        let spec = DatasetSpec::default();
        assert_eq!(generate_dataset(&spec).unwrap(), generate_dataset(&spec).unwrap());
        let other = DatasetSpec { seed: 1, ..spec };
        assert_ne!(
            generate_dataset(&DatasetSpec::default()).unwrap(),
            generate_dataset(&other).unwrap()
        );
    }

    #[test]
    fn invalid_specs() {
        for bad in [
            DatasetSpec { positive_fraction: 0.0, ..Default::default() },
            DatasetSpec { positive_fraction: 1.0, ..Default::default() },
            DatasetSpec { pool_size: 9, ..Default::default() },
            DatasetSpec { negative_subclusters: 0, ..Default::default() },
            DatasetSpec { noise_scale: -1.0, ..Default::default() },
        ] {
            assert!(matches!(generate_dataset(&bad), Err(Error::Validation(_))), "{bad:?}");
        }
    }

    #[test]
    fn ids_unique_and_pixels_in_range() {
        let ds = generate_dataset(&DatasetSpec::default()).unwrap();
        let mut ids: Vec<_> = ds.patches.iter().map(|p| p.id).collect();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), ds.len());
        assert!(ds
            .patches
            .iter()
            .all(|p| p.pixels.len() == 64 && p.pixels.iter().all(|v| (0.0..=1.0).contains(v))));
    }

    #[test]
    fn negatives_cover_every_subcluster() {
        // With zero noise, patches of one cluster are identical.
        let spec = DatasetSpec { noise_scale: 0.0, pool_size: 200, ..Default::default() };
        let ds = generate_dataset(&spec).unwrap();
        let mut distinct: Vec<&Vec<f64>> = Vec::new();
        for p in ds.patches.iter().filter(|p| !p.label.is_positive()) {
            if !distinct.contains(&&p.pixels) {
                distinct.push(&p.pixels);
            }
        }
        assert_eq!(distinct.len(), 8);
    }
}
