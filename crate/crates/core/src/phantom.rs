//! Synthetic slices with exact ground truth.
//!
//! A phantom is a constant background with a lesion of one of three
//! shapes, optional CSF-like distractor ring, and additive Gaussian noise
//! clamped to `[0, 1]`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::tuner::SliceInput;
use crate::{BinaryMask, Error, GrayImage, Result};

/// Lobe centres sit this many radii either side of the phantom centre.
const LOBE_OFFSET: f64 = 1.6;
/// Background gap between the lesion and the distractor ring, in pixels.
const RING_GAP: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LesionShape {
    Disk,
    /// Two disks joined by a horizontal bridge `bridge_width` rows tall.
    TwoLobesWithBridge,
    /// The two-lobe lesion enclosed by a ring at `distractor_mean`,
    /// separated from it by a thin background gap.
    AnnulusAdjacentDistractor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhantomSpec {
    pub width: usize,
    pub height: usize,
    pub lesion_shape: LesionShape,
    /// Lesion centre in pixel coordinates.
    pub center: (f64, f64),
    /// Disk radius, or per-lobe radius for the two-lobe shapes.
    pub radius: f64,
    pub lesion_mean: f64,
    pub background_mean: f64,
    pub distractor_mean: f64,
    pub noise_sigma: f64,
    pub bridge_width: usize,
    pub rng_seed: u64,
}

impl Default for PhantomSpec {
    fn default() -> Self {
        PhantomSpec {
            width: 96,
            height: 96,
            lesion_shape: LesionShape::Disk,
            center: (47.5, 47.5),
            radius: 16.0,
            lesion_mean: 0.3,
            background_mean: 0.6,
            distractor_mean: 0.2,
            noise_sigma: 0.03,
            bridge_width: 1,
            rng_seed: 0,
        }
    }
}

impl PhantomSpec {
    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lesion_mean", self.lesion_mean),
            ("background_mean", self.background_mean),
            ("distractor_mean", self.distractor_mean),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter(format!(
                    "{name} = {v} outside [0, 1]"
                )));
            }
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "noise_sigma = {}",
                self.noise_sigma
            )));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::InvalidParameter(format!("radius = {}", self.radius)));
        }
        Ok(())
    }

    fn ring_radii(&self) -> (f64, f64) {
        let inner = (1.0 + LOBE_OFFSET) * self.radius + RING_GAP;
        (inner, inner + (self.radius / 3.0).max(2.0))
    }

    /// Half-extents of everything drawn, around `center`.
    fn extent(&self) -> (f64, f64) {
        let r = self.radius;
        let bridge = self.bridge_width as f64 / 2.0 + 1.0;
        match self.lesion_shape {
            LesionShape::Disk => (r, r),
            LesionShape::TwoLobesWithBridge => ((1.0 + LOBE_OFFSET) * r, r.max(bridge)),
            LesionShape::AnnulusAdjacentDistractor => {
                let outer = self.ring_radii().1;
                (outer, outer)
            }
        }
    }

    fn in_lesion(&self, x: usize, y: usize) -> bool {
        let (cx, cy) = self.center;
        let (px, py) = (x as f64, y as f64);
        let r2 = self.radius * self.radius;
        let in_disk = |ox: f64, oy: f64| (px - ox).powi(2) + (py - oy).powi(2) <= r2;
        match self.lesion_shape {
            LesionShape::Disk => in_disk(cx, cy),
            LesionShape::TwoLobesWithBridge | LesionShape::AnnulusAdjacentDistractor => {
                let off = LOBE_OFFSET * self.radius;
                if in_disk(cx - off, cy) || in_disk(cx + off, cy) {
                    return true;
                }
                let y0 = cy.round() as i64 - (self.bridge_width as i64) / 2;
                let yi = y as i64;
                yi >= y0
                    && yi < y0 + self.bridge_width as i64
                    && px >= (cx - off).round()
                    && px <= (cx + off).round()
            }
        }
    }

    fn in_distractor(&self, x: usize, y: usize) -> bool {
        if self.lesion_shape != LesionShape::AnnulusAdjacentDistractor {
            return false;
        }
        let (inner, outer) = self.ring_radii();
        let d = (x as f64 - self.center.0).hypot(y as f64 - self.center.1);
        d >= inner && d <= outer
    }

    /// Jittered copies for a multi-slice corpus: slice `i` varies the
    /// radius by ±20%, shifts the centre by up to 4 px and gets its own
    /// noise seed. Deterministic in `self.rng_seed`.
    pub fn corpus(&self, count: usize) -> Vec<PhantomSpec> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.rng_seed);
        (0..count)
            .map(|i| {
                let mut s = self.clone();
                s.radius = self.radius * rng.random_range(0.8..=1.2);
                let jitter = (rng.random_range(-4.0..=4.0), rng.random_range(-4.0..=4.0));
                let shifted = (self.center.0 + jitter.0, self.center.1 + jitter.1);
                s.rng_seed = self
                    .rng_seed
                    .wrapping_mul(0x9e37_79b9_7f4a_7c15)
                    .wrapping_add(i as u64 + 1);
                let candidate = PhantomSpec {
                    center: shifted,
                    ..s.clone()
                };
                if candidate.fits() {
                    s.center = shifted;
                }
                s
            })
            .collect()
    }

    fn fits(&self) -> bool {
        let (ex, ey) = self.extent();
        let (cx, cy) = self.center;
        cx - ex >= 0.0
            && cy - ey >= 0.0
            && cx + ex <= (self.width as f64 - 1.0)
            && cy + ey <= (self.height as f64 - 1.0)
    }
}

/// The default tuning corpus: 128x128 slices alternating a disk of radius
/// about 28 and a two-lobe lesion of lobe radius about 16 with a 3-row
/// bridge, at noise 0.03 and a 0.3 lesion/background gap.
///
/// Lesions are large next to the 15 px ROI margin so that spatial
/// clustering of the ROI can land seeds inside them.
pub fn reference_corpus(count: usize, rng_seed: u64) -> Vec<PhantomSpec> {
    let base = PhantomSpec {
        width: 128,
        height: 128,
        center: (63.5, 63.5),
        ..Default::default()
    };
    let disks = PhantomSpec {
        radius: 28.0,
        rng_seed,
        ..base.clone()
    }
    .corpus(count.div_ceil(2));
    let lobes = PhantomSpec {
        lesion_shape: LesionShape::TwoLobesWithBridge,
        radius: 16.0,
        bridge_width: 3,
        rng_seed: rng_seed.wrapping_add(1),
        ..base
    }
    .corpus(count / 2);
    let mut out = Vec::with_capacity(count);
    let mut lobes = lobes.into_iter();
    for d in disks {
        out.push(d);
        out.extend(lobes.next());
    }
    out
}

/// Like [`reference_corpus`] but every slice is a two-lobe lesion joined by
/// a one-row bridge and ringed by a CSF-like distractor.
pub fn distractor_corpus(count: usize, rng_seed: u64) -> Vec<PhantomSpec> {
    PhantomSpec {
        width: 128,
        height: 128,
        center: (63.5, 63.5),
        lesion_shape: LesionShape::AnnulusAdjacentDistractor,
        radius: 14.0,
        bridge_width: 1,
        rng_seed,
        ..Default::default()
    }
    .corpus(count)
}

/// Renders each spec as a tuning slice (index = position) with the ROI
/// derived from the ground truth.
pub fn tuning_slices(specs: &[PhantomSpec]) -> Result<Vec<SliceInput>> {
    specs
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let (img, gt) = generate_phantom(s)?;
            Ok(SliceInput::with_dilated_roi(i, img, gt))
        })
        .collect()
}

/// Renders the phantom and its ground-truth lesion mask.
pub fn generate_phantom(spec: &PhantomSpec) -> Result<(GrayImage, BinaryMask)> {
    spec.validate()?;
    if !spec.fits() {
        return Err(Error::ShapeOutOfBounds {
            width: spec.width,
            height: spec.height,
        });
    }
    let mask = BinaryMask::from_fn(spec.width, spec.height, |x, y| spec.in_lesion(x, y));
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let noise =
        (spec.noise_sigma > 0.0).then(|| Normal::new(0.0, spec.noise_sigma).expect("finite sigma"));
    let img = GrayImage::from_fn(spec.width, spec.height, |x, y| {
        let base = if mask.get(x, y) {
            spec.lesion_mean
        } else if spec.in_distractor(x, y) {
            spec.distractor_mean
        } else {
            spec.background_mean
        };
        let n = noise.as_ref().map_or(0.0, |d| d.sample(&mut rng));
        (base + n).clamp(0.0, 1.0)
    })?;
    Ok((img, mask))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_disk_has_two_levels() {
        let spec = PhantomSpec {
            noise_sigma: 0.0,
            ..Default::default()
        };
        let (img, mask) = generate_phantom(&spec).unwrap();
        let mut levels: Vec<u64> = img.data().iter().map(|v| v.to_bits()).collect();
        levels.sort_unstable();
        levels.dedup();
        assert_eq!(levels.len(), 2);
        for y in 0..spec.height {
            for x in 0..spec.width {
                let expect = spec.lesion_mean == img.get(x, y);
                assert_eq!(mask.get(x, y), expect);
            }
        }
    }

    #[test]
    fn deterministic() {
        let spec = PhantomSpec {
            rng_seed: 42,
            lesion_shape: LesionShape::AnnulusAdjacentDistractor,
            radius: 8.0,
            ..Default::default()
        };
        let a = generate_phantom(&spec).unwrap();
        let b = generate_phantom(&spec).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn out_of_bounds() {
        let spec = PhantomSpec {
            radius: 60.0,
            ..Default::default()
        };
        assert!(matches!(
            generate_phantom(&spec),
            Err(Error::ShapeOutOfBounds { .. })
        ));
        let spec = PhantomSpec {
            lesion_mean: 1.5,
            ..Default::default()
        };
        assert!(matches!(
            generate_phantom(&spec),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn distractor_not_in_mask() {
        let spec = PhantomSpec {
            lesion_shape: LesionShape::AnnulusAdjacentDistractor,
            radius: 8.0,
            noise_sigma: 0.0,
            ..Default::default()
        };
        let (img, mask) = generate_phantom(&spec).unwrap();
        let ring = img
            .data()
            .iter()
            .filter(|&&v| v == spec.distractor_mean)
            .count();
        assert!(ring > 0);
        assert!(mask.pixels().all(|p| img.at(p) == spec.lesion_mean));
    }

    #[test]
    fn reference_corpora_render() {
        let specs = reference_corpus(5, 3);
        assert_eq!(specs.len(), 5);
        assert_eq!(specs[1].lesion_shape, LesionShape::TwoLobesWithBridge);
        assert!(specs
            .iter()
            .chain(&distractor_corpus(4, 3))
            .all(|s| generate_phantom(s).is_ok()));
        assert_eq!(reference_corpus(5, 3), specs);
    }

    #[test]
    fn corpus_is_deterministic_and_fits() {
        let base = PhantomSpec {
            rng_seed: 9,
            ..Default::default()
        };
        let a = base.corpus(10);
        assert_eq!(a, base.corpus(10));
        assert!(a.iter().all(|s| generate_phantom(s).is_ok()));
        let seeds: std::collections::HashSet<_> = a.iter().map(|s| s.rng_seed).collect();
        assert_eq!(seeds.len(), 10);
    }
}
