use serde::{Deserialize, Serialize};

use super::NormalizedGaze;

/// Splat bandwidth in normalized units.
pub const HEATMAP_KERNEL_SIGMA: f64 = 0.05;

/// Splats are truncated at this many sigmas.
const KERNEL_SUPPORT: f64 = 4.0;

/// Square density grid over the unit square; cell `(row, col)` covers
/// `v ∈ [row/n, (row+1)/n)`, `u ∈ [col/n, (col+1)/n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heatmap {
    pub n: usize,
    pub cells: Vec<f64>,
}

impl Heatmap {
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.cells[row * self.n + col]
    }

    pub fn cell_center(&self, row: usize, col: usize) -> [f64; 2] {
        let n = self.n as f64;
        [(col as f64 + 0.5) / n, (row as f64 + 0.5) / n]
    }

    pub fn total(&self) -> f64 {
        self.cells.iter().sum()
    }

    /// `(row, col)` of the largest cell (first in row-major order on ties).
    pub fn argmax(&self) -> (usize, usize) {
        let k = self
            .cells
            .iter()
            .enumerate()
            .fold(0, |best, (k, &x)| if x > self.cells[best] { k } else { best });
        (k / self.n, k % self.n)
    }
}

/// Unnormalized Gaussian-kernel density on an `n × n` grid.
pub fn accumulate_heatmap_raw(samples: &[NormalizedGaze], grid_n: usize) -> Heatmap {
    assert!(grid_n >= 2, "heatmap needs at least 2x2 cells");
    let n = grid_n as f64;
    let mut cells = vec![0.0; grid_n * grid_n];
    let reach = (KERNEL_SUPPORT * HEATMAP_KERNEL_SIGMA * n).ceil() as isize;
    let inv2s2 = 1.0 / (2.0 * HEATMAP_KERNEL_SIGMA * HEATMAP_KERNEL_SIGMA);
    for s in samples {
        let col0 = (s.u * n).floor() as isize;
        let row0 = (s.v * n).floor() as isize;
        for row in (row0 - reach).max(0)..=(row0 + reach).min(grid_n as isize - 1) {
            let cv = (row as f64 + 0.5) / n;
            for col in (col0 - reach).max(0)..=(col0 + reach).min(grid_n as isize - 1) {
                let cu = (col as f64 + 0.5) / n;
                let d2 = (cu - s.u).powi(2) + (cv - s.v).powi(2);
                cells[row as usize * grid_n + col as usize] += (-d2 * inv2s2).exp();
            }
        }
    }
    Heatmap { n: grid_n, cells }
}

/// Density scaled so the densest cell is 1; all zeros when empty.
pub fn accumulate_heatmap(samples: &[NormalizedGaze], grid_n: usize) -> Heatmap {
    let mut h = accumulate_heatmap_raw(samples, grid_n);
    let max = h.cells.iter().cloned().fold(0.0, f64::max);
    if max > 0.0 {
        h.cells.iter_mut().for_each(|c| *c /= max);
    }
    h
}

/// Red for high intensity through yellow to green for low intensity.
pub fn heat_color(intensity: f64) -> [u8; 3] {
    let x = intensity.clamp(0.0, 1.0);
    let r = (255.0 * (2.0 * x).min(1.0)).round() as u8;
    let g = (255.0 * (2.0 * (1.0 - x)).min(1.0)).round() as u8;
    [r, g, 0]
}
