//! Deterministic data transforms: score discretization, grid mini-patch
//! sampling, pixel unshuffle, the train/test split and a raw array format.

mod array_io;
mod grid;
mod split;

use std::fmt;

use ndarray::Array3;
use serde::{Deserialize, Serialize};

use crate::error::PrepError;
pub use array_io::{decode_array, encode_array, read_array, write_array, Element, ARRAY_MAGIC};
pub use grid::{grid_minipatch, sample_offsets, FrameGridSpec, PatchOffsets};
pub use split::{split_dataset, DatasetSplit, MANIFEST_HEADER};

/// Five ordered quality levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QualityLevel {
    Bad,
    Poor,
    Fair,
    Good,
    Excellent,
}

impl QualityLevel {
    pub const ALL: [QualityLevel; 5] = [
        QualityLevel::Bad,
        QualityLevel::Poor,
        QualityLevel::Fair,
        QualityLevel::Good,
        QualityLevel::Excellent,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            QualityLevel::Bad => "bad",
            QualityLevel::Poor => "poor",
            QualityLevel::Fair => "fair",
            QualityLevel::Good => "good",
            QualityLevel::Excellent => "excellent",
        }
    }

    /// 1 for bad up to 5 for excellent.
    pub fn index(self) -> usize {
        self as usize + 1
    }
}

impl fmt::Display for QualityLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Boundary slack, relative to one interval width.
const BOUNDARY_TOLERANCE: f64 = 1e-9;

/// Level `i` covers `(m + (i−1)w, m + i·w]` with `w = (M − m) / 5`; the
/// lowest score `s = m` is bad.
pub fn quality_level(s: f64, m: f64, max: f64) -> Result<QualityLevel, PrepError> {
    if !m.is_finite() || !max.is_finite() || m >= max {
        return Err(PrepError::InvalidBounds { m, max });
    }
    if !(m..=max).contains(&s) {
        return Err(PrepError::OutOfRange { s, m, max });
    }
    let position = 5.0 * (s - m) / (max - m);
    let i = (position - BOUNDARY_TOLERANCE).ceil().clamp(1.0, 5.0) as usize;
    Ok(QualityLevel::ALL[i - 1])
}

fn divisible(h: usize, w: usize, r: usize) -> Result<(), PrepError> {
    if r == 0 || !h.is_multiple_of(r) || !w.is_multiple_of(r) {
        return Err(PrepError::NotDivisible {
            factor: r,
            height: h,
            width: w,
        });
    }
    Ok(())
}

/// Space-to-depth: `out[i, j, c·(r·di + dj) + k] = input[r·i + di, r·j + dj, k]`.
/// Cuts the number of spatial positions by `r²`.
pub fn pixel_unshuffle<T: Clone>(input: &Array3<T>, r: usize) -> Result<Array3<T>, PrepError> {
    let (h, w, c) = input.dim();
    divisible(h, w, r)?;
    let blocks = input
        .view()
        .into_shape_with_order((h / r, r, w / r, r, c))
        .expect("standard layout view reshapes")
        .permuted_axes([0, 2, 1, 3, 4]);
    Ok(blocks
        .as_standard_layout()
        .into_owned()
        .into_shape_with_order((h / r, w / r, r * r * c))
        .expect("element count preserved"))
}

/// Inverse of [`pixel_unshuffle`].
pub fn pixel_shuffle<T: Clone>(input: &Array3<T>, r: usize) -> Result<Array3<T>, PrepError> {
    let (h, w, cr) = input.dim();
    if r == 0 || cr % (r * r) != 0 {
        return Err(PrepError::BadChannels { channels: cr, factor: r });
    }
    let c = cr / (r * r);
    let blocks = input
        .view()
        .into_shape_with_order((h, w, r, r, c))
        .expect("standard layout view reshapes")
        .permuted_axes([0, 2, 1, 3, 4]);
    Ok(blocks
        .as_standard_layout()
        .into_owned()
        .into_shape_with_order((h * r, w * r, c))
        .expect("element count preserved"))
}
