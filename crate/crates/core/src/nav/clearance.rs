use crate::world::{CellIndex, OccupancyGrid};

/// Exact point-to-obstacle distance queries against the blocked cells of
/// a grid.
///
/// For every cell within `range` of an obstacle the map stores the
/// blocked cells that can be nearest to some point of that cell: if the
/// cell center is `d` from the closest blocked square, any point of the
/// cell is within `d + h` of it (`h` the half diagonal), so only squares
/// within `d + 2h` of the center qualify.
#[derive(Debug, Clone)]
pub struct ClearanceMap {
    grid: OccupancyGrid,
    center_dist: Vec<f64>,
    offsets: Vec<u32>,
    candidates: Vec<u32>,
    range: f64,
}

impl ClearanceMap {
    /// `range` bounds the distances answered from the precomputed lists;
    /// larger caps still answer exactly through a window search.
    pub fn new(grid: &OccupancyGrid, range: f64) -> Self {
        let res = grid.resolution();
        let half_diag = res * std::f64::consts::FRAC_1_SQRT_2;
        let blocked = grid.blocked_cells();

        let mut center_dist = vec![range; grid.len()];
        let reach = (range / res).ceil() as isize + 1;
        for &b in &blocked {
            for_window(grid, b, reach, |c| {
                let d = grid.distance_to_cell(grid.world_of(c), b);
                let k = grid.flat(c);
                if d < center_dist[k] {
                    center_dist[k] = d;
                }
            });
        }

        let mut offsets = Vec::with_capacity(grid.len() + 1);
        let mut candidates = Vec::new();
        offsets.push(0);
        for k in 0..grid.len() {
            let d = center_dist[k];
            if d < range {
                let c = grid.unflat(k);
                let center = grid.world_of(c);
                let limit = d + 2.0 * half_diag;
                let reach = (limit / res).ceil() as isize + 1;
                for_window(grid, c, reach, |n| {
                    if grid.get(n).is_blocked() && grid.distance_to_cell(center, n) <= limit {
                        candidates.push(grid.flat(n) as u32);
                    }
                });
            }
            offsets.push(candidates.len() as u32);
        }
        Self {
            grid: grid.clone(),
            center_dist,
            offsets,
            candidates,
            range,
        }
    }

    pub fn grid(&self) -> &OccupancyGrid {
        &self.grid
    }

    /// `min(distance from p to the nearest blocked cell, cap)`. Points
    /// outside the grid have zero clearance.
    pub fn clearance(&self, p: [f64; 2], cap: f64) -> f64 {
        let g = &self.grid;
        let Some(c) = g.cell_of(p) else {
            return 0.0;
        };
        let half_diag = g.resolution() * std::f64::consts::FRAC_1_SQRT_2;
        let k = g.flat(c);
        let d_center = self.center_dist[k];
        if d_center - half_diag >= cap {
            return cap;
        }
        if d_center < self.range {
            let list = &self.candidates[self.offsets[k] as usize..self.offsets[k + 1] as usize];
            return list
                .iter()
                .map(|&b| g.distance_to_cell(p, g.unflat(b as usize)))
                .fold(cap, f64::min);
        }
        let reach = (cap / g.resolution()).ceil() as isize + 1;
        let mut best = cap;
        for_window(g, c, reach, |n| {
            if g.get(n).is_blocked() {
                best = best.min(g.distance_to_cell(p, n));
            }
        });
        best
    }
}

fn for_window(grid: &OccupancyGrid, c: CellIndex, reach: isize, mut f: impl FnMut(CellIndex)) {
    let (ci, cj) = (c.i as isize, c.j as isize);
    for j in (cj - reach).max(0)..=(cj + reach).min(grid.height() as isize - 1) {
        for i in (ci - reach).max(0)..=(ci + reach).min(grid.width() as isize - 1) {
            f(CellIndex::new(i as usize, j as usize));
        }
    }
}
