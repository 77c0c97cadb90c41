//! Automatic seed selection inside a region of interest.
//!
//! Random ROI pixels are clustered on their spatial coordinates; each
//! centroid becomes a seed if it lands inside the ROI on locally
//! homogeneous tissue and keeps its distance from seeds already accepted.
//! Unfilled slots are retried with a fresh sample up to a fixed budget.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{BinaryMask, Error, GrayImage, Pixel, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SeedCriteria {
    /// Half-size of the homogeneity window.
    pub window_radius: usize,
    /// Maximum population std of intensities inside the window.
    pub max_local_std: f64,
    /// Minimum Euclidean distance between accepted seeds, in pixels.
    pub min_separation: f64,
    /// ROI samples per attempt; `None` means `max(50, 10 k)`.
    pub sample_count: Option<usize>,
    pub max_attempts: usize,
    pub kmeans_max_iter: usize,
    pub kmeans_tol: f64,
}

impl Default for SeedCriteria {
    fn default() -> Self {
        SeedCriteria {
            window_radius: 2,
            max_local_std: 0.05,
            min_separation: 5.0,
            sample_count: None,
            max_attempts: 5,
            kmeans_max_iter: 100,
            kmeans_tol: 1e-3,
        }
    }
}

impl SeedCriteria {
    pub fn samples_for(&self, k: usize) -> usize {
        self.sample_count.unwrap_or(50.max(10 * k))
    }

    fn validate(&self, k: usize) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if self.window_radius < 1 {
            return bad("window_radius must be at least 1");
        }
        if self.min_separation.is_nan() || self.min_separation < 0.0 {
            return bad("min_separation must be non-negative");
        }
        if self.max_attempts < 1 {
            return bad("max_attempts must be at least 1");
        }
        if self.samples_for(k) < k {
            return bad("sample_count must be at least k");
        }
        Ok(())
    }
}

/// Accepted seed pixels, in acceptance order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SeedSet(Vec<Pixel>);

impl SeedSet {
    pub fn new(points: Vec<Pixel>) -> Self {
        SeedSet(points)
    }

    pub fn points(&self) -> &[Pixel] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Continuous 2D point, used for k-means.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    fn dist2(self, o: Point2) -> f64 {
        (self.x - o.x).powi(2) + (self.y - o.y).powi(2)
    }
}

impl From<Pixel> for Point2 {
    fn from(p: Pixel) -> Self {
        Point2::new(p.x as f64, p.y as f64)
    }
}

fn sample_pixels<R: Rng>(pixels: &[Pixel], n: usize, rng: &mut R) -> Vec<Pixel> {
    (0..n)
        .map(|_| pixels[rng.random_range(0..pixels.len())])
        .collect()
}

/// Draws `n` ROI pixels uniformly with replacement.
pub fn sample_roi(mask: &BinaryMask, n: usize, rng_seed: u64) -> Result<Vec<Pixel>> {
    let pixels: Vec<Pixel> = mask.pixels().collect();
    if pixels.is_empty() {
        return Err(Error::EmptyRoi);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    Ok(sample_pixels(&pixels, n, &mut rng))
}

fn distinct_count(points: &[Point2]) -> usize {
    let mut keys: Vec<(u64, u64)> = points
        .iter()
        .map(|p| (p.x.to_bits(), p.y.to_bits()))
        .collect();
    keys.sort_unstable();
    keys.dedup();
    keys.len()
}

/// Output of [`kmeans`].
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    pub centroids: Vec<Point2>,
    /// Cluster index of every input point under the final centroids.
    pub labels: Vec<usize>,
    /// Sum of squared distances after each assignment step.
    pub inertia: Vec<f64>,
}

fn nearest(p: Point2, centroids: &[Point2]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = p.dist2(*c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn kmeans_pp<R: Rng>(points: &[Point2], k: usize, rng: &mut R) -> Vec<Point2> {
    let mut centroids = vec![points[rng.random_range(0..points.len())]];
    let mut d2: Vec<f64> = points.iter().map(|p| p.dist2(centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let mut target = rng.random::<f64>() * total;
        let mut pick = d2.iter().rposition(|&d| d > 0.0).unwrap_or(0);
        for (i, &d) in d2.iter().enumerate() {
            if d > 0.0 && target < d {
                pick = i;
                break;
            }
            target -= d;
        }
        let c = points[pick];
        centroids.push(c);
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(p.dist2(c));
        }
    }
    centroids
}

/// Lloyd's algorithm with k-means++ initialisation.
///
/// Stops once no centroid moves by `tol` or more, or after `max_iter`
/// rounds. A cluster left empty takes the point farthest from its own
/// centroid.
pub fn kmeans<R: Rng>(
    points: &[Point2],
    k: usize,
    max_iter: usize,
    tol: f64,
    rng: &mut R,
) -> Result<Clustering> {
    let distinct = distinct_count(points);
    if k < 1 || k > distinct {
        return Err(Error::InvalidK { k, distinct });
    }
    let mut centroids = kmeans_pp(points, k, rng);
    let mut labels = vec![0; points.len()];
    let mut dists = vec![0.0; points.len()];
    let mut inertia = Vec::new();

    for _ in 0..max_iter.max(1) {
        for (i, p) in points.iter().enumerate() {
            (labels[i], dists[i]) = nearest(*p, &centroids);
        }
        inertia.push(dists.iter().sum());

        let mut sums = vec![(0.0, 0.0, 0usize); k];
        for (p, &l) in points.iter().zip(&labels) {
            let s = &mut sums[l];
            s.0 += p.x;
            s.1 += p.y;
            s.2 += 1;
        }
        let mut next: Vec<Point2> = sums
            .iter()
            .zip(&centroids)
            .map(|(&(sx, sy, n), &old)| {
                if n == 0 {
                    old
                } else {
                    Point2::new(sx / n as f64, sy / n as f64)
                }
            })
            .collect();
        let mut taken = vec![false; points.len()];
        for j in (0..k).filter(|&j| sums[j].2 == 0) {
            let far = (0..points.len())
                .filter(|&i| !taken[i])
                .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)));
            if let Some(i) = far {
                taken[i] = true;
                next[j] = points[i];
            }
        }
        let shift = centroids
            .iter()
            .zip(&next)
            .map(|(a, b)| a.dist2(*b).sqrt())
            .fold(0.0, f64::max);
        centroids = next;
        if shift < tol {
            break;
        }
    }
    for (i, p) in points.iter().enumerate() {
        labels[i] = nearest(*p, &centroids).0;
    }
    Ok(Clustering {
        centroids,
        labels,
        inertia,
    })
}

pub(crate) fn round_to_pixel(c: Point2, img: &GrayImage) -> Option<Pixel> {
    let (x, y) = (c.x.round(), c.y.round());
    if x < 0.0 || y < 0.0 || !x.is_finite() || !y.is_finite() {
        return None;
    }
    let p = Pixel::new(x as usize, y as usize);
    img.contains(p).then_some(p)
}

/// Population std of the window of half-size `radius` around `p`,
/// clipped to the image.
pub fn local_std(img: &GrayImage, p: Pixel, radius: usize) -> f64 {
    let x0 = p.x.saturating_sub(radius);
    let y0 = p.y.saturating_sub(radius);
    let x1 = (p.x + radius).min(img.width() - 1);
    let y1 = (p.y + radius).min(img.height() - 1);
    let (mut n, mut sum, mut sq) = (0.0, 0.0, 0.0);
    for y in y0..=y1 {
        for x in x0..=x1 {
            let v = img.get(x, y);
            n += 1.0;
            sum += v;
            sq += v * v;
        }
    }
    let mean = sum / n;
    (sq / n - mean * mean).max(0.0).sqrt()
}

/// Checks ROI membership, window homogeneity and separation from the
/// seeds accepted so far, after rounding `c` to the nearest pixel.
pub fn validate_centroid(
    img: &GrayImage,
    roi: &BinaryMask,
    c: Point2,
    accepted: &[Pixel],
    crit: &SeedCriteria,
) -> bool {
    let Some(p) = round_to_pixel(c, img) else {
        return false;
    };
    roi.at(p)
        && local_std(img, p, crit.window_radius) <= crit.max_local_std
        && accepted
            .iter()
            .all(|a| a.distance(p) >= crit.min_separation)
}

/// Selects up to `k` seeds. Deterministic in `rng_seed`.
///
/// Returns fewer than `k` seeds when the attempt budget runs out;
/// fails only when nothing validated.
pub fn select_seeds(
    img: &GrayImage,
    roi: &BinaryMask,
    k: usize,
    crit: &SeedCriteria,
    rng_seed: u64,
) -> Result<SeedSet> {
    if !img.same_shape(roi) {
        return Err(Error::dims(
            format!("{}x{}", img.width(), img.height()),
            format!("{}x{}", roi.width(), roi.height()),
        ));
    }
    if k < 1 {
        return Err(Error::InvalidK { k, distinct: 0 });
    }
    crit.validate(k)?;
    let pixels: Vec<Pixel> = roi.pixels().collect();
    if pixels.is_empty() {
        return Err(Error::EmptyRoi);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let n = crit.samples_for(k);
    let mut accepted: Vec<Pixel> = Vec::with_capacity(k);

    for _ in 0..crit.max_attempts {
        let unfilled = k - accepted.len();
        if unfilled == 0 {
            break;
        }
        let sample: Vec<Point2> = sample_pixels(&pixels, n, &mut rng)
            .into_iter()
            .map(Point2::from)
            .collect();
        let kk = unfilled.min(distinct_count(&sample));
        let clusters = kmeans(&sample, kk, crit.kmeans_max_iter, crit.kmeans_tol, &mut rng)?;
        for c in clusters.centroids {
            if accepted.len() == k {
                break;
            }
            if validate_centroid(img, roi, c, &accepted, crit) {
                accepted.push(round_to_pixel(c, img).expect("validated"));
            }
        }
    }
    if accepted.is_empty() {
        return Err(Error::NoValidSeeds);
    }
    Ok(SeedSet(accepted))
}
