//! Gaussian denoising.

use crate::par::{for_each_row, Execution};
use crate::{Error, GrayImage, Result};

/// Square Gaussian kernel truncated at `ceil(3 sigma)`, unit sum.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel2D {
    radius: usize,
    weights: Vec<f64>,
}

impl Kernel2D {
    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn side(&self) -> usize {
        2 * self.radius + 1
    }

    /// Row-major weights, `side()` squared.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weight at offset (dx, dy) from the centre.
    pub fn at(&self, dx: isize, dy: isize) -> f64 {
        let r = self.radius as isize;
        self.weights[((dy + r) as usize) * self.side() + (dx + r) as usize]
    }
}

fn radius_for(sigma: f64) -> usize {
    (3.0 * sigma).ceil() as usize
}

pub fn gaussian_kernel(sigma: f64) -> Result<Kernel2D> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::NonPositiveSigma(sigma));
    }
    let radius = radius_for(sigma);
    let r = radius as isize;
    let denom = 2.0 * sigma * sigma;
    let mut weights: Vec<f64> = (-r..=r)
        .flat_map(|j| (-r..=r).map(move |i| (-((i * i + j * j) as f64) / denom).exp()))
        .collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    Ok(Kernel2D { radius, weights })
}

/// Normalized 1D profile; its outer product with itself is the 2D kernel.
fn gaussian_1d(sigma: f64) -> Vec<f64> {
    let r = radius_for(sigma) as isize;
    let denom = 2.0 * sigma * sigma;
    let mut w: Vec<f64> = (-r..=r)
        .map(|i| (-((i * i) as f64) / denom).exp())
        .collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    w
}

/// Half-sample symmetric reflection: `... b a | a b c | c b ...`.
#[inline]
pub(crate) fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let m = i.rem_euclid(period);
    (if m < n { m } else { period - 1 - m }) as usize
}

/// Smooths `img` with a Gaussian of standard deviation `sigma`.
///
/// `sigma <= 0` returns the input unchanged. Borders are reflect-padded.
pub fn denoise(img: &GrayImage, sigma: f64) -> GrayImage {
    denoise_with(img, sigma, Execution::default())
}

pub fn denoise_with(img: &GrayImage, sigma: f64, exec: Execution) -> GrayImage {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return img.clone();
    }
    let (w, h) = (img.width(), img.height());
    if w == 0 || h == 0 {
        return img.clone();
    }
    let k = gaussian_1d(sigma);
    let r = (k.len() / 2) as isize;
    let src = img.data();

    let mut horiz = vec![0.0; w * h];
    for_each_row(&mut horiz, w, exec, |y, row| {
        let line = &src[y * w..(y + 1) * w];
        for (x, out) in row.iter_mut().enumerate() {
            *out = k
                .iter()
                .enumerate()
                .map(|(t, wt)| wt * line[reflect(x as isize + t as isize - r, w)])
                .sum();
        }
    });

    let mut out = vec![0.0; w * h];
    for_each_row(&mut out, w, exec, |y, row| {
        for (t, wt) in k.iter().enumerate() {
            let sy = reflect(y as isize + t as isize - r, h);
            let line = &horiz[sy * w..(sy + 1) * w];
            for (o, v) in row.iter_mut().zip(line) {
                *o += wt * v;
            }
        }
        row.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
    });
    GrayImage::from_raw(w, h, out)
}
