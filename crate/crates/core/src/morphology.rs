//! Binary dilation and erosion with square or disk structuring elements.
//!
//! Pixels outside the image count as background for both operations, so
//! erosion eats into masks that touch the border.

use serde::{Deserialize, Serialize};

use crate::{BinaryMask, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeShape {
    #[default]
    Square,
    Disk,
}

/// Centred structuring element of odd `size` (side or diameter).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StructuringElement {
    shape: SeShape,
    size: usize,
}

impl StructuringElement {
    pub fn new(shape: SeShape, size: usize) -> Result<Self> {
        if size == 0 || size.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "structuring element size {size} must be odd and positive"
            )));
        }
        Ok(StructuringElement { shape, size })
    }

    pub fn square(size: usize) -> Result<Self> {
        Self::new(SeShape::Square, size)
    }

    pub fn disk(size: usize) -> Result<Self> {
        Self::new(SeShape::Disk, size)
    }

    pub fn shape(&self) -> SeShape {
        self.shape
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn radius(&self) -> usize {
        self.size / 2
    }

    /// Offsets covered by the element; symmetric under negation.
    pub fn offsets(&self) -> Vec<(isize, isize)> {
        let r = self.radius() as isize;
        let mut out = Vec::new();
        for dy in -r..=r {
            for dx in -r..=r {
                if self.shape == SeShape::Square || dx * dx + dy * dy <= r * r {
                    out.push((dx, dy));
                }
            }
        }
        out
    }
}

/// 1D running OR (`any = true`) or AND over a window of half-width `r`
/// along the rows (`horizontal`) or columns of `src`. Out of bounds is false.
fn sweep(src: &[bool], w: usize, h: usize, r: usize, horizontal: bool, any: bool) -> Vec<bool> {
    let mut out = vec![false; w * h];
    let (len, lines) = if horizontal { (w, h) } else { (h, w) };
    let idx = |line: usize, i: usize| {
        if horizontal {
            line * w + i
        } else {
            i * w + line
        }
    };
    for line in 0..lines {
        // count of true pixels in the current window
        let mut count = 0usize;
        for i in 0..r.min(len) {
            count += src[idx(line, i)] as usize;
        }
        for i in 0..len {
            if i + r < len {
                count += src[idx(line, i + r)] as usize;
            }
            if i > r {
                count -= src[idx(line, i - r - 1)] as usize;
            }
            out[idx(line, i)] = if any {
                count > 0
            } else {
                // the full window must be in bounds and all true
                i >= r && i + r < len && count == 2 * r + 1
            };
        }
    }
    out
}

fn apply(m: &BinaryMask, se: &StructuringElement, any: bool) -> BinaryMask {
    let (w, h) = (m.width(), m.height());
    let bits = match se.shape() {
        SeShape::Square => {
            let r = se.radius();
            let rows = sweep(m.bits(), w, h, r, true, any);
            sweep(&rows, w, h, r, false, any)
        }
        SeShape::Disk => {
            let offsets = se.offsets();
            let src = m.bits();
            let mut out = vec![false; w * h];
            for y in 0..h {
                for x in 0..w {
                    let hit = |&(dx, dy): &(isize, isize)| match (
                        x.checked_add_signed(dx),
                        y.checked_add_signed(dy),
                    ) {
                        (Some(sx), Some(sy)) if sx < w && sy < h => src[sy * w + sx],
                        _ => false,
                    };
                    out[y * w + x] = if any {
                        offsets.iter().any(hit)
                    } else {
                        offsets.iter().all(hit)
                    };
                }
            }
            out
        }
    };
    BinaryMask::new(w, h, bits).expect("same shape")
}

pub fn dilate(m: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    apply(m, se, true)
}

pub fn erode(m: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    apply(m, se, false)
}

/// Dilation with `dilate_size` followed by erosion with `erode_size`.
pub fn postprocess(
    m: &BinaryMask,
    dilate_size: usize,
    erode_size: usize,
    shape: SeShape,
) -> Result<BinaryMask> {
    if dilate_size < erode_size {
        return Err(Error::KernelOrderViolation {
            dilate: dilate_size,
            erode: erode_size,
        });
    }
    let d = StructuringElement::new(shape, dilate_size)?;
    let e = StructuringElement::new(shape, erode_size)?;
    Ok(erode(&dilate(m, &d), &e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Pixel;

    /// Direct definition over the offset list.
    fn naive(m: &BinaryMask, se: &StructuringElement, any: bool) -> BinaryMask {
        let offsets = se.offsets();
        BinaryMask::from_fn(m.width(), m.height(), |x, y| {
            let hit = |&(dx, dy): &(isize, isize)| {
                let (sx, sy) = (x as isize + dx, y as isize + dy);
                sx >= 0 && sy >= 0 && m.at(Pixel::new(sx as usize, sy as usize))
            };
            if any {
                offsets.iter().any(hit)
            } else {
                offsets.iter().all(hit)
            }
        })
    }

    fn from_rows(rows: &[&str]) -> BinaryMask {
        let w = rows[0].len();
        BinaryMask::from_fn(w, rows.len(), |x, y| rows[y].as_bytes()[x] == b'#')
    }

    #[test]
    fn point_dilates_to_block() {
        let mut m = BinaryMask::empty(5, 5);
        m.set(2, 2, true);
        let d = dilate(&m, &StructuringElement::square(3).unwrap());
        assert_eq!(d, from_rows(&[".....", ".###.", ".###.", ".###.", "....."]));
        let e = erode(&d, &StructuringElement::square(3).unwrap());
        assert_eq!(e, m);
    }

    #[test]
    fn empty_stays_empty() {
        let m = BinaryMask::empty(6, 4);
        for se in [
            StructuringElement::square(5).unwrap(),
            StructuringElement::disk(5).unwrap(),
        ] {
            assert!(dilate(&m, &se).is_empty());
            assert!(erode(&m, &se).is_empty());
        }
    }

    #[test]
    fn full_mask_loses_border() {
        let m = BinaryMask::full(5, 4);
        let e = erode(&m, &StructuringElement::square(3).unwrap());
        assert_eq!(e, from_rows(&[".....", ".###.", ".###.", "....."]));
    }

    #[test]
    fn gap_of_one_bridged() {
        let m = from_rows(&[".....", "#.#..", "....."]);
        let d = dilate(&m, &StructuringElement::square(3).unwrap());
        assert_eq!(d, from_rows(&["####.", "####.", "####."]));
    }

    #[test]
    fn hole_filled_by_postprocess() {
        let m = from_rows(&["#####", "#####", "##.##", "#####", "#####"]);
        let out = postprocess(&m, 3, 3, SeShape::Square).unwrap();
        // 3x3 dilation fills the hole; erosion then keeps only pixels whose
        // whole window lies inside the image.
        assert!(out.get(2, 2));
        assert_eq!(
            out,
            from_rows(&[".....", ".###.", ".###.", ".###.", "....."])
        );
    }

    #[test]
    fn kernel_order_violation() {
        let m = BinaryMask::empty(3, 3);
        assert!(matches!(
            postprocess(&m, 3, 5, SeShape::Square),
            Err(Error::KernelOrderViolation {
                dilate: 3,
                erode: 5
            })
        ));
        assert!(postprocess(&m, 4, 3, SeShape::Square).is_err());
    }

    #[test]
    fn separable_square_matches_naive() {
        let m = BinaryMask::from_fn(17, 11, |x, y| {
            (x * 7 + y * 13) % 5 < 2 || (x > 4 && x < 12 && y > 2 && y < 9)
        });
        for size in [1, 3, 5, 7, 9, 25] {
            let se = StructuringElement::square(size).unwrap();
            assert_eq!(dilate(&m, &se), naive(&m, &se, true), "dilate {size}");
            assert_eq!(erode(&m, &se), naive(&m, &se, false), "erode {size}");
        }
    }

    #[test]
    fn disk_offsets() {
        let se = StructuringElement::disk(5).unwrap();
        let offs = se.offsets();
        assert_eq!(offs.len(), 13);
        assert!(!offs.contains(&(2, 2)));
        assert!(offs.contains(&(2, 0)));
        assert!(StructuringElement::disk(4).is_err());
    }
}
