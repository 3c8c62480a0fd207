use ndarray::{s, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::PrepError;

/// Grid mini-patch sampling parameters: an `L × L` grid with one `P × P`
/// patch per cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameGridSpec {
    pub grid: usize,
    pub patch: usize,
    pub seed: u64,
}

impl Default for FrameGridSpec {
    fn default() -> Self {
        FrameGridSpec {
            grid: 7,
            patch: 32,
            seed: 0,
        }
    }
}

impl FrameGridSpec {
    /// Side length of the spliced map, `L·P`.
    pub fn output_side(&self) -> usize {
        self.grid * self.patch
    }

    pub fn check(&self, height: usize, width: usize) -> Result<(), PrepError> {
        if self.grid == 0 || self.patch == 0 || self.output_side() > height.min(width) {
            return Err(PrepError::InfeasibleGrid {
                grid: self.grid,
                patch: self.patch,
                height,
                width,
            });
        }
        Ok(())
    }
}

/// Cell boundaries along one axis: cell `i` spans `[⌊i·n/L⌋, ⌊(i+1)·n/L⌋)`.
fn bounds(n: usize, l: usize, i: usize) -> (usize, usize) {
    (i * n / l, (i + 1) * n / l)
}

/// Top-left corner of the patch drawn in each grid cell, in source frame
/// coordinates, indexed `[row][col]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchOffsets {
    pub corners: Vec<Vec<(usize, usize)>>,
}

/// Draws one patch position per cell, uniformly within the cell. Cells are
/// visited row by row and each draws its row offset before its column
/// offset.
pub fn sample_offsets(spec: &FrameGridSpec, height: usize, width: usize) -> Result<PatchOffsets, PrepError> {
    spec.check(height, width)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let l = spec.grid;
    let corners = (0..l)
        .map(|i| {
            let (y0, y1) = bounds(height, l, i);
            (0..l)
                .map(|j| {
                    let (x0, x1) = bounds(width, l, j);
                    let dy = rng.random_range(0..=(y1 - y0 - spec.patch));
                    let dx = rng.random_range(0..=(x1 - x0 - spec.patch));
                    (y0 + dy, x0 + dx)
                })
                .collect()
        })
        .collect();
    Ok(PatchOffsets { corners })
}

/// Splices one patch per grid cell into an `(L·P) × (L·P) × C` map per
/// frame. Offsets are drawn once and reused for every frame so the patches
/// stay temporally aligned.
pub fn grid_minipatch<T: Clone + Default>(
    frames: &[Array3<T>],
    spec: &FrameGridSpec,
) -> Result<Vec<Array3<T>>, PrepError> {
    let first = frames.first().ok_or(PrepError::NoFrames)?;
    let shape = first.dim();
    if let Some(f) = frames.iter().find(|f| f.dim() != shape) {
        return Err(PrepError::ShapeMismatch(shape, f.dim()));
    }
    let (h, w, c) = shape;
    let offsets = sample_offsets(spec, h, w)?;
    let p = spec.patch;
    let side = spec.output_side();

    Ok(frames
        .iter()
        .map(|frame| {
            let mut out = Array3::<T>::default((side, side, c));
            for (i, row) in offsets.corners.iter().enumerate() {
                for (j, &(y, x)) in row.iter().enumerate() {
                    out.slice_mut(s![i * p..(i + 1) * p, j * p..(j + 1) * p, ..])
                        .assign(&frame.slice(s![y..y + p, x..x + p, ..]));
                }
            }
            out
        })
        .collect())
}
