#![allow(dead_code)]

use std::collections::VecDeque;

use fisrg::growing::NEIGHBOURS_8;
use fisrg::{BinaryMask, GrayImage, Pixel};

fn neighbours(p: Pixel, w: usize, h: usize) -> impl Iterator<Item = Pixel> {
    NEIGHBOURS_8.into_iter().filter_map(move |(dx, dy)| {
        let x = p.x.checked_add_signed(dx)?;
        let y = p.y.checked_add_signed(dy)?;
        (x < w && y < h).then_some(Pixel::new(x, y))
    })
}

/// 8-connected set of pixels reachable from `seed` through pixels where
/// `inside` holds. `seed` is included if `inside(seed)`.
pub fn flood(w: usize, h: usize, seed: Pixel, inside: impl Fn(Pixel) -> bool) -> BinaryMask {
    let mut out = BinaryMask::empty(w, h);
    if !inside(seed) {
        return out;
    }
    out.set(seed.x, seed.y, true);
    let mut queue = VecDeque::from([seed]);
    while let Some(p) = queue.pop_front() {
        for q in neighbours(p, w, h) {
            if !out.at(q) && inside(q) {
                out.set(q.x, q.y, true);
                queue.push_back(q);
            }
        }
    }
    out
}

/// Union over seeds of the 8-connected plateau holding each seed's value.
pub fn plateau_oracle(img: &GrayImage, seeds: &[Pixel]) -> BinaryMask {
    let (w, h) = (img.width(), img.height());
    let mut out = BinaryMask::empty(w, h);
    for &s in seeds {
        let v = img.at(s);
        out.union_with(&flood(w, h, s, |p| img.at(p) == v));
    }
    out
}

/// Number of 8-connected components of `mask`.
pub fn components(mask: &BinaryMask) -> usize {
    let (w, h) = (mask.width(), mask.height());
    let mut seen = BinaryMask::empty(w, h);
    let mut n = 0;
    for p in mask.pixels() {
        if !seen.at(p) {
            n += 1;
            seen.union_with(&flood(w, h, p, |q| mask.at(q)));
        }
    }
    n
}

/// Pixels whose clipped 3x3 neighbourhood is a single intensity.
pub fn flat_pixels(img: &GrayImage) -> Vec<Pixel> {
    let (w, h) = (img.width(), img.height());
    (0..h)
        .flat_map(|y| (0..w).map(move |x| Pixel::new(x, y)))
        .filter(|&p| neighbours(p, w, h).all(|q| img.at(q) == img.at(p)))
        .collect()
}
