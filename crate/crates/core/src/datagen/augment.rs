use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of the stochastic view family.
///
/// One draw applies, in order: a translation by up to `max_shift` pixels per
/// axis with edge replication, optional horizontal and vertical flips (each
/// with probability 1/2), an optional rotation by 0°, +90° or −90°, a random
/// contrast and brightness change of relative size `intensity_jitter`, and
/// additive Gaussian noise with standard deviation `noise_sigma`. The result
/// is clipped to `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugmentationConfig {
    pub noise_sigma: f64,
    pub max_shift: usize,
    pub flip_horizontal: bool,
    pub flip_vertical: bool,
    pub rotate_90: bool,
    pub intensity_jitter: f64,
}

impl Default for AugmentationConfig {
    fn default() -> Self {
        Self {
            noise_sigma: 0.05,
            max_shift: 1,
            flip_horizontal: true,
            flip_vertical: true,
            rotate_90: true,
            intensity_jitter: 0.1,
        }
    }
}

impl AugmentationConfig {
    /// The identity transform.
    pub fn none() -> Self {
        Self {
            noise_sigma: 0.0,
            max_shift: 0,
            flip_horizontal: false,
            flip_vertical: false,
            rotate_90: false,
            intensity_jitter: 0.0,
        }
    }

    pub fn validate(&self, side: usize) -> Result<()> {
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::Validation(format!(
                "noise_sigma must be >= 0, got {}",
                self.noise_sigma
            )));
        }
        if !(self.intensity_jitter.is_finite() && self.intensity_jitter >= 0.0) {
            return Err(Error::Validation(format!(
                "intensity_jitter must be >= 0, got {}",
                self.intensity_jitter
            )));
        }
        if side > 0 && self.max_shift >= side {
            return Err(Error::Validation(format!(
                "max_shift {} must be smaller than the patch side {side}",
                self.max_shift
            )));
        }
        Ok(())
    }
}

/// One random view of a `side × side` patch.
pub fn augment<R: Rng + ?Sized>(
    pixels: &[f64],
    side: usize,
    cfg: &AugmentationConfig,
    rng: &mut R,
) -> Vec<f64> {
    debug_assert_eq!(pixels.len(), side * side);
    let s = side as isize;
    let mut view = pixels.to_vec();

    if cfg.max_shift > 0 {
        let m = cfg.max_shift as i64;
        let dy = rng.random_range(-m..=m) as isize;
        let dx = rng.random_range(-m..=m) as isize;
        let src = view.clone();
        for r in 0..s {
            let sr = (r + dy).clamp(0, s - 1);
            for c in 0..s {
                let sc = (c + dx).clamp(0, s - 1);
                view[(r * s + c) as usize] = src[(sr * s + sc) as usize];
            }
        }
    }
    if cfg.flip_horizontal && rng.random_bool(0.5) {
        for row in view.chunks_exact_mut(side) {
            row.reverse();
        }
    }
    if cfg.flip_vertical && rng.random_bool(0.5) {
        let src = view.clone();
        for r in 0..side {
            view[r * side..(r + 1) * side]
                .copy_from_slice(&src[(side - 1 - r) * side..(side - r) * side]);
        }
    }
    if cfg.rotate_90 {
        match rng.random_range(0..3u8) {
            1 => view = rotate_ccw(&view, side),
            2 => view = rotate_cw(&view, side),
            _ => {}
        }
    }
    if cfg.intensity_jitter > 0.0 {
        let j = cfg.intensity_jitter;
        let contrast = 1.0 + rng.random_range(-j..=j);
        let brightness = rng.random_range(-j..=j);
        for v in view.iter_mut() {
            *v = (*v - 0.5) * contrast + 0.5 + brightness;
        }
    }
    if cfg.noise_sigma > 0.0 {
        for v in view.iter_mut() {
            let n: f64 = rng.sample(StandardNormal);
            *v += cfg.noise_sigma * n;
        }
    }
    for v in view.iter_mut() {
        *v = v.clamp(0.0, 1.0);
    }
    view
}

/// Two independent draws from the view family applied to the same patch.
pub fn augment_pair<R: Rng + ?Sized>(
    pixels: &[f64],
    side: usize,
    cfg: &AugmentationConfig,
    rng: &mut R,
) -> (Vec<f64>, Vec<f64>) {
    let a = augment(pixels, side, cfg, rng);
    let b = augment(pixels, side, cfg, rng);
    (a, b)
}

fn rotate_cw(src: &[f64], side: usize) -> Vec<f64> {
    let mut out = vec![0.0; src.len()];
    for r in 0..side {
        for c in 0..side {
            out[c * side + (side - 1 - r)] = src[r * side + c];
        }
    }
    out
}

fn rotate_ccw(src: &[f64], side: usize) -> Vec<f64> {
    let mut out = vec![0.0; src.len()];
    for r in 0..side {
        for c in 0..side {
            out[(side - 1 - c) * side + r] = src[r * side + c];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ramp(side: usize) -> Vec<f64> {
        (0..side * side).map(|i| i as f64 / (side * side) as f64).collect()
    }

    #[test]
    fn identity_config_returns_original() {
        let px = ramp(4);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (a, b) = augment_pair(&px, 4, &AugmentationConfig::none(), &mut rng);
        assert_eq!(a, px);
        assert_eq!(b, px);
    }

    #[test]
    fn noisy_views_differ_and_stay_in_range() {
        let px = ramp(8);
        let cfg = AugmentationConfig {
            noise_sigma: 0.3,
            ..AugmentationConfig::none()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (a, b) = augment_pair(&px, 8, &cfg, &mut rng);
        assert_ne!(a, b);
        assert!(a.iter().chain(&b).all(|v| (0.0..=1.0).contains(v)));
        assert_eq!(a.len(), 64);
    }

    #[test]
    fn fixed_rng_reproduces_pair() {
        let px = ramp(8);
        let cfg = AugmentationConfig::default();
        let p1 = augment_pair(&px, 8, &cfg, &mut ChaCha8Rng::seed_from_u64(9));
        let p2 = augment_pair(&px, 8, &cfg, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(p1, p2);
    }

    #[test]
    fn rotations_are_inverse() {
        let px = ramp(5);
        assert_eq!(rotate_ccw(&rotate_cw(&px, 5), 5), px);
        let four = (0..4).fold(px.clone(), |acc, _| rotate_cw(&acc, 5));
        assert_eq!(four, px);
        // top-left moves to top-right under a clockwise turn
        assert_eq!(rotate_cw(&px, 5)[4], px[0]);
    }

    #[test]
    fn shift_must_be_smaller_than_side() {
        let cfg = AugmentationConfig {
            max_shift: 8,
            ..AugmentationConfig::none()
        };
        assert!(cfg.validate(8).is_err());
        assert!(AugmentationConfig::default().validate(8).is_ok());
    }
}
