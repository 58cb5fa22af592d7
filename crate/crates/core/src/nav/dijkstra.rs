use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::world::{Cell, CellIndex, OccupancyGrid, Pose};

/// Radius around an unreachable goal (or blocked start) searched for the
/// nearest Free cell.
pub const GOAL_STANDOFF: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedPath {
    pub waypoints: Vec<[f64; 2]>,
    /// In cell steps: 1 per straight move, √2 per diagonal.
    pub total_cost: f64,
    pub straight_steps: u32,
    pub diagonal_steps: u32,
}

impl PlannedPath {
    pub fn goal(&self) -> [f64; 2] {
        *self.waypoints.last().expect("paths are non-empty")
    }

    pub fn length_m(&self) -> f64 {
        self.waypoints
            .windows(2)
            .map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]))
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error, Serialize, Deserialize)]
pub enum PlanError {
    #[error("start pose has no free cell within the standoff radius")]
    StartBlocked,
    #[error("goal is unreachable")]
    NoPath,
}

/// Path cost as exact step counts; the scalar value is derived once so
/// equal paths always report bit-identical costs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Steps {
    straight: u32,
    diagonal: u32,
}

impl Steps {
    const ZERO: Steps = Steps { straight: 0, diagonal: 0 };

    fn value(self) -> f64 {
        self.straight as f64 + self.diagonal as f64 * std::f64::consts::SQRT_2
    }

    fn add(self, diagonal: bool) -> Steps {
        if diagonal {
            Steps { diagonal: self.diagonal + 1, ..self }
        } else {
            Steps { straight: self.straight + 1, ..self }
        }
    }
}

#[derive(Debug, PartialEq)]
struct Frontier {
    cost: f64,
    steps: Steps,
    cell: usize,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed: BinaryHeap is a max-heap.
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.cell.cmp(&self.cell))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

const MOVES: [(isize, isize); 8] = [
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (1, -1),
    (-1, 1),
    (-1, -1),
];

/// Neighbours reachable in one step. Diagonal moves require both
/// orthogonally adjacent cells to be free so paths never clip a corner.
pub(crate) fn free_neighbours(
    grid: &OccupancyGrid,
    c: CellIndex,
) -> impl Iterator<Item = (CellIndex, bool)> + '_ {
    let free = move |i: isize, j: isize| {
        grid.in_bounds(i, j) && grid.get(CellIndex::new(i as usize, j as usize)) == Cell::Free
    };
    let (ci, cj) = (c.i as isize, c.j as isize);
    MOVES.iter().filter_map(move |&(di, dj)| {
        let (i, j) = (ci + di, cj + dj);
        if !free(i, j) {
            return None;
        }
        let diagonal = di != 0 && dj != 0;
        if diagonal && !(free(ci + di, cj) && free(ci, cj + dj)) {
            return None;
        }
        Some((CellIndex::new(i as usize, j as usize), diagonal))
    })
}

/// Nearest Free cell to `p` (by cell-center distance, then flat index)
/// whose center lies within `radius`.
pub(crate) fn nearest_free(grid: &OccupancyGrid, p: [f64; 2], radius: f64) -> Option<CellIndex> {
    if let Some(c) = grid.cell_of(p) {
        if grid.get(c) == Cell::Free {
            return Some(c);
        }
    }
    let res = grid.resolution();
    let reach = (radius / res).ceil() as isize + 1;
    let ci = (p[0] / res).floor() as isize;
    let cj = (p[1] / res).floor() as isize;
    let mut best: Option<(f64, usize)> = None;
    for j in cj - reach..=cj + reach {
        for i in ci - reach..=ci + reach {
            if !grid.in_bounds(i, j) {
                continue;
            }
            let c = CellIndex::new(i as usize, j as usize);
            if grid.get(c) != Cell::Free {
                continue;
            }
            let w = grid.world_of(c);
            let d = (w[0] - p[0]).hypot(w[1] - p[1]);
            if d > radius {
                continue;
            }
            let key = (d, grid.flat(c));
            if best.is_none_or(|b| key.0 < b.0 || (key.0 == b.0 && key.1 < b.1)) {
                best = Some(key);
            }
        }
    }
    best.map(|(_, k)| grid.unflat(k))
}

/// Minimum-cost 8-connected path over Free cells of an inflated grid.
pub fn plan_dijkstra(
    grid: &OccupancyGrid,
    start: &Pose,
    goal: [f64; 2],
) -> Result<PlannedPath, PlanError> {
    let s = nearest_free(grid, start.position(), GOAL_STANDOFF).ok_or(PlanError::StartBlocked)?;
    let g = nearest_free(grid, goal, GOAL_STANDOFF).ok_or(PlanError::NoPath)?;
    let (s, g) = (grid.flat(s), grid.flat(g));

    let mut best: Vec<Option<Steps>> = vec![None; grid.len()];
    let mut parent = vec![usize::MAX; grid.len()];
    let mut done = vec![false; grid.len()];
    let mut heap = BinaryHeap::new();
    best[s] = Some(Steps::ZERO);
    heap.push(Frontier { cost: 0.0, steps: Steps::ZERO, cell: s });

    while let Some(Frontier { steps, cell, .. }) = heap.pop() {
        if done[cell] {
            continue;
        }
        done[cell] = true;
        if cell == g {
            break;
        }
        for (n, diagonal) in free_neighbours(grid, grid.unflat(cell)) {
            let k = grid.flat(n);
            if done[k] {
                continue;
            }
            let cand = steps.add(diagonal);
            if best[k].is_none_or(|b| cand.value() < b.value()) {
                best[k] = Some(cand);
                parent[k] = cell;
                heap.push(Frontier { cost: cand.value(), steps: cand, cell: k });
            }
        }
    }

    let steps = match best[g] {
        Some(st) if done[g] => st,
        _ => return Err(PlanError::NoPath),
    };
    let mut cells = vec![g];
    while *cells.last().unwrap() != s {
        cells.push(parent[*cells.last().unwrap()]);
    }
    cells.reverse();
    Ok(PlannedPath {
        waypoints: cells.into_iter().map(|k| grid.world_of(grid.unflat(k))).collect(),
        total_cost: steps.value(),
        straight_steps: steps.straight,
        diagonal_steps: steps.diagonal,
    })
}
