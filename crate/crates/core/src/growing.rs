//! Fuzzy seeded region growing.
//!
//! Each seed grows its own region breadth-first over 8-connected
//! neighbours. A neighbour joins when its Gaussian membership against the
//! region's running mean and standard deviation reaches the fuzzy
//! threshold; the statistics are updated as soon as it joins. A pixel is
//! considered at most once per seed. The final mask is the union of all
//! per-seed regions.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::seeds::SeedSet;
use crate::{BinaryMask, Error, GrayImage, Pixel, Result};

/// Neighbour offsets in scan order N, NE, E, SE, S, SW, W, NW.
pub const NEIGHBOURS_8: [(isize, isize); 8] = [
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
];

/// Running count, mean and sum of squared deviations (Welford).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionStats {
    n: u64,
    mean: f64,
    m2: f64,
}

impl RegionStats {
    pub fn new(x: f64) -> Self {
        RegionStats {
            n: 1,
            mean: x,
            m2: 0.0,
        }
    }

    /// Statistics of a non-empty batch, built by sequential updates.
    pub fn from_values(values: impl IntoIterator<Item = f64>) -> Option<Self> {
        let mut it = values.into_iter();
        let mut s = RegionStats::new(it.next()?);
        for v in it {
            s = s.update(v);
        }
        Some(s)
    }

    #[must_use]
    pub fn update(self, x: f64) -> Self {
        let n = self.n + 1;
        let delta = x - self.mean;
        let mean = self.mean + delta / n as f64;
        let m2 = self.m2 + delta * (x - mean);
        RegionStats { n, mean, m2 }
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn m2(&self) -> f64 {
        self.m2
    }

    /// Population variance.
    pub fn variance(&self) -> f64 {
        (self.m2 / self.n as f64).max(0.0)
    }

    pub fn std(&self) -> f64 {
        self.variance().sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GrowParams {
    /// Minimum membership for admission, in (0, 1].
    pub fuzzy_threshold: f64,
    /// Lower bound on the region std used by the membership function.
    pub sigma_floor: f64,
}

impl Default for GrowParams {
    fn default() -> Self {
        GrowParams {
            fuzzy_threshold: 0.5,
            sigma_floor: 0.005,
        }
    }
}

impl GrowParams {
    pub fn new(fuzzy_threshold: f64) -> Self {
        GrowParams {
            fuzzy_threshold,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fuzzy_threshold > 0.0 && self.fuzzy_threshold <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "fuzzy_threshold {} not in (0, 1]",
                self.fuzzy_threshold
            )));
        }
        if !(self.sigma_floor > 0.0 && self.sigma_floor.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sigma_floor {} must be positive",
                self.sigma_floor
            )));
        }
        Ok(())
    }
}

/// Peak-normalized Gaussian membership of `x`: `exp(-(x - mean)^2 / (2 s^2))`
/// with `s = max(std, sigma_floor)`. Equals 1 at the mean.
#[inline]
pub fn membership(x: f64, stats: &RegionStats, sigma_floor: f64) -> f64 {
    let s = stats.std().max(sigma_floor);
    let d = x - stats.mean();
    (-(d * d) / (2.0 * s * s)).exp()
}

/// One admitted pixel and the membership that admitted it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Admission {
    pub pixel: Pixel,
    pub membership: f64,
}

/// Full record of one growth, for inspection and replay.
#[derive(Debug, Clone)]
pub struct GrowTrace {
    pub region: BinaryMask,
    /// Statistics of the seed's clipped 3x3 neighbourhood.
    pub initial: RegionStats,
    /// Admissions in order; the seed itself is not listed.
    pub admissions: Vec<Admission>,
    pub final_stats: RegionStats,
}

fn neighbour(p: Pixel, (dx, dy): (isize, isize), w: usize, h: usize) -> Option<Pixel> {
    let x = p.x.checked_add_signed(dx)?;
    let y = p.y.checked_add_signed(dy)?;
    (x < w && y < h).then_some(Pixel::new(x, y))
}

fn seed_stats(img: &GrayImage, seed: Pixel) -> RegionStats {
    let (w, h) = (img.width(), img.height());
    let mut values = vec![img.at(seed)];
    for y in seed.y.saturating_sub(1)..=(seed.y + 1).min(h - 1) {
        for x in seed.x.saturating_sub(1)..=(seed.x + 1).min(w - 1) {
            if (x, y) != (seed.x, seed.y) {
                values.push(img.get(x, y));
            }
        }
    }
    RegionStats::from_values(values).expect("non-empty")
}

/// Grows one region and records every admission.
pub fn grow_region_traced(img: &GrayImage, seed: Pixel, params: &GrowParams) -> Result<GrowTrace> {
    if !img.contains(seed) {
        return Err(Error::SeedOutOfBounds {
            x: seed.x,
            y: seed.y,
        });
    }
    params.validate()?;
    let (w, h) = (img.width(), img.height());
    let mut region = BinaryMask::empty(w, h);
    let mut visited = vec![false; w * h];
    let initial = seed_stats(img, seed);
    let mut stats = initial;
    let mut admissions = Vec::new();
    let mut frontier = VecDeque::new();

    visited[seed.y * w + seed.x] = true;
    region.set(seed.x, seed.y, true);
    frontier.push_back(seed);
    while let Some(p) = frontier.pop_front() {
        for off in NEIGHBOURS_8 {
            let Some(q) = neighbour(p, off, w, h) else {
                continue;
            };
            let idx = q.y * w + q.x;
            if visited[idx] {
                continue;
            }
            visited[idx] = true;
            let v = img.at(q);
            let m = membership(v, &stats, params.sigma_floor);
            if m >= params.fuzzy_threshold {
                region.set(q.x, q.y, true);
                stats = stats.update(v);
                admissions.push(Admission {
                    pixel: q,
                    membership: m,
                });
                frontier.push_back(q);
            }
        }
    }
    Ok(GrowTrace {
        region,
        initial,
        admissions,
        final_stats: stats,
    })
}

pub fn grow_region(img: &GrayImage, seed: Pixel, params: &GrowParams) -> Result<BinaryMask> {
    grow_region_traced(img, seed, params).map(|t| t.region)
}

/// Union of independent per-seed growths.
pub fn fisrg(img: &GrayImage, seeds: &SeedSet, params: &GrowParams) -> Result<BinaryMask> {
    if seeds.is_empty() {
        return Err(Error::EmptySeedSet);
    }
    let mut out = BinaryMask::empty(img.width(), img.height());
    for &seed in seeds.points() {
        out.union_with(&grow_region(img, seed, params)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn membership_examples() {
        let s = RegionStats::from_values([0.4, 0.5, 0.6]).unwrap();
        assert_eq!(membership(s.mean(), &s, 0.005), 1.0);
        let m = membership(s.mean() + s.std(), &s, 0.005);
        assert!((m - (-0.5f64).exp()).abs() < 1e-12);
        assert!((m - 0.60653).abs() < 1e-5);

        let flat = RegionStats::new(0.3);
        let expect = (-(0.02f64 * 0.02) / (2.0 * 0.01 * 0.01)).exp();
        assert!((membership(0.32, &flat, 0.01) - expect).abs() < 1e-12);
    }

    #[test]
    fn welford_examples() {
        let s = RegionStats::new(0.5).update(0.5);
        assert_eq!((s.count(), s.mean(), s.m2()), (2, 0.5, 0.0));

        let s = RegionStats::from_values([0.2, 0.4, 0.6]).unwrap();
        assert!((s.mean() - 0.4).abs() < 1e-12);
        assert!((s.variance() - 0.08 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_image_fills() {
        let img = GrayImage::filled(12, 9, 0.42).unwrap();
        for t in [0.1, 0.5, 1.0] {
            let m = grow_region(&img, Pixel::new(3, 4), &GrowParams::new(t)).unwrap();
            assert_eq!(m.count(), 12 * 9);
        }
    }

    #[test]
    fn threshold_one_rejects_off_mean_neighbours() {
        // Every neighbour differs from the seed-neighbourhood mean.
        let img =
            GrayImage::from_fn(7, 7, |x, y| if (x + y) % 2 == 0 { 0.2 } else { 0.8 }).unwrap();
        let m = grow_region(&img, Pixel::new(3, 3), &GrowParams::new(1.0)).unwrap();
        assert_eq!(m.count(), 1);
        assert!(m.get(3, 3));
    }

    #[test]
    fn seed_out_of_bounds() {
        let img = GrayImage::filled(4, 4, 0.5).unwrap();
        assert!(matches!(
            grow_region(&img, Pixel::new(4, 0), &GrowParams::default()),
            Err(Error::SeedOutOfBounds { x: 4, y: 0 })
        ));
    }

    #[test]
    fn invalid_params() {
        let img = GrayImage::filled(4, 4, 0.5).unwrap();
        for t in [0.0, -0.1, 1.5, f64::NAN] {
            assert!(grow_region(&img, Pixel::new(0, 0), &GrowParams::new(t)).is_err());
        }
    }

    #[test]
    fn empty_seed_set() {
        let img = GrayImage::filled(4, 4, 0.5).unwrap();
        assert!(matches!(
            fisrg(&img, &SeedSet::default(), &GrowParams::default()),
            Err(Error::EmptySeedSet)
        ));
    }

    #[test]
    fn trace_stats_match_batch() {
        let img = GrayImage::from_fn(16, 16, |x, y| {
            0.5 + 0.01 * (((x * 7 + y * 3) % 5) as f64 - 2.0)
        })
        .unwrap();
        let t = grow_region_traced(&img, Pixel::new(0, 0), &GrowParams::new(0.2)).unwrap();
        let mut values = vec![img.get(0, 0), img.get(1, 0), img.get(0, 1), img.get(1, 1)];
        values.extend(t.admissions.iter().map(|a| img.at(a.pixel)));
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        assert_eq!(t.final_stats.count() as usize, values.len());
        assert!((t.final_stats.mean() - mean).abs() < 1e-9);
        assert!((t.final_stats.variance() - var).abs() < 1e-9);
    }
}
