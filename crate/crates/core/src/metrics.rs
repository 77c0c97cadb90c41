//! Overlap and prevalence measures.

use serde::{Deserialize, Serialize};

use crate::{BinaryMask, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub dice: f64,
    pub lesion_pct: f64,
    pub elapsed_ms: f64,
}

/// Dice similarity `2|X ∩ Y| / (|X| + |Y|)`. Two empty masks score 1.
pub fn dice(x: &BinaryMask, y: &BinaryMask) -> Result<f64> {
    if !x.same_shape(y) {
        return Err(Error::dims(
            format!("{}x{}", x.width(), x.height()),
            format!("{}x{}", y.width(), y.height()),
        ));
    }
    let (mut inter, mut total) = (0usize, 0usize);
    for (&a, &b) in x.bits().iter().zip(y.bits()) {
        inter += (a && b) as usize;
        total += a as usize + b as usize;
    }
    if total == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * inter as f64 / total as f64)
}

/// Share of foreground pixels, in percent.
pub fn lesion_percentage(gt: &BinaryMask) -> f64 {
    let n = gt.width() * gt.height();
    if n == 0 {
        return 0.0;
    }
    100.0 * gt.count() as f64 / n as f64
}
