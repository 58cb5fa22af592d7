use serde::{Deserialize, Serialize};

/// Tri-state occupancy. Planners treat `Occupied` and `Inflated` alike.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Cell {
    Free,
    Occupied,
    Inflated,
}

impl Cell {
    pub fn is_blocked(self) -> bool {
        !matches!(self, Cell::Free)
    }
}

/// Column `i` runs along world x, row `j` along world y.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellIndex {
    pub i: usize,
    pub j: usize,
}

impl CellIndex {
    pub fn new(i: usize, j: usize) -> Self {
        Self { i, j }
    }
}

/// Occupancy grid with its origin at world (0, 0); cell `(i, j)` covers
/// `[i·res, (i+1)·res) × [j·res, (j+1)·res)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    width: usize,
    height: usize,
    resolution: f64,
    cells: Vec<Cell>,
}

impl OccupancyGrid {
    pub fn new(width: usize, height: usize, resolution: f64) -> Self {
        assert!(width > 0 && height > 0, "grid dimensions must be positive");
        assert!(resolution > 0.0, "grid resolution must be positive");
        Self {
            width,
            height,
            resolution,
            cells: vec![Cell::Free; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Row-major flat index, also the planner's tie-break key.
    pub fn flat(&self, c: CellIndex) -> usize {
        c.j * self.width + c.i
    }

    pub fn unflat(&self, k: usize) -> CellIndex {
        CellIndex::new(k % self.width, k / self.width)
    }

    pub fn in_bounds(&self, i: isize, j: isize) -> bool {
        i >= 0 && j >= 0 && (i as usize) < self.width && (j as usize) < self.height
    }

    pub fn get(&self, c: CellIndex) -> Cell {
        self.cells[self.flat(c)]
    }

    pub fn set(&mut self, c: CellIndex, cell: Cell) {
        let k = self.flat(c);
        self.cells[k] = cell;
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    /// Cell containing a world point, `None` when outside the grid.
    pub fn cell_of(&self, p: [f64; 2]) -> Option<CellIndex> {
        let i = (p[0] / self.resolution).floor();
        let j = (p[1] / self.resolution).floor();
        if !i.is_finite() || !j.is_finite() || i < 0.0 || j < 0.0 {
            return None;
        }
        let (i, j) = (i as usize, j as usize);
        (i < self.width && j < self.height).then_some(CellIndex::new(i, j))
    }

    /// World coordinates of a cell center.
    pub fn world_of(&self, c: CellIndex) -> [f64; 2] {
        [
            (c.i as f64 + 0.5) * self.resolution,
            (c.j as f64 + 0.5) * self.resolution,
        ]
    }

    /// Whether a world point is inside the grid and on a `Free` cell.
    pub fn is_free_at(&self, p: [f64; 2]) -> bool {
        self.cell_of(p).is_some_and(|c| self.get(c) == Cell::Free)
    }

    /// Euclidean distance from a point to the closed square of a cell.
    pub fn distance_to_cell(&self, p: [f64; 2], c: CellIndex) -> f64 {
        let half = 0.5 * self.resolution;
        let center = self.world_of(c);
        let dx = ((p[0] - center[0]).abs() - half).max(0.0);
        let dy = ((p[1] - center[1]).abs() - half).max(0.0);
        dx.hypot(dy)
    }

    pub fn iter_cells(&self) -> impl Iterator<Item = (CellIndex, Cell)> + '_ {
        self.cells
            .iter()
            .enumerate()
            .map(|(k, &cell)| (self.unflat(k), cell))
    }

    pub fn occupied_cells(&self) -> Vec<CellIndex> {
        self.iter_cells()
            .filter(|(_, c)| *c == Cell::Occupied)
            .map(|(c, _)| c)
            .collect()
    }

    pub fn blocked_cells(&self) -> Vec<CellIndex> {
        self.iter_cells()
            .filter(|(_, c)| c.is_blocked())
            .map(|(c, _)| c)
            .collect()
    }

    /// Marks every cell whose center lies in the axis-aligned world
    /// rectangle `[x0, x1] × [y0, y1]` as occupied.
    pub fn fill_rect(&mut self, x0: f64, y0: f64, x1: f64, y1: f64) {
        for j in 0..self.height {
            for i in 0..self.width {
                let c = CellIndex::new(i, j);
                let [x, y] = self.world_of(c);
                if x >= x0 && x <= x1 && y >= y0 && y <= y1 {
                    self.set(c, Cell::Occupied);
                }
            }
        }
    }

    /// Occupies the outermost ring of cells.
    pub fn add_border_walls(&mut self) {
        for i in 0..self.width {
            self.set(CellIndex::new(i, 0), Cell::Occupied);
            self.set(CellIndex::new(i, self.height - 1), Cell::Occupied);
        }
        for j in 0..self.height {
            self.set(CellIndex::new(0, j), Cell::Occupied);
            self.set(CellIndex::new(self.width - 1, j), Cell::Occupied);
        }
    }

    /// Copy with every `Inflated` cell reset to `Free`.
    pub fn without_inflation(&self) -> OccupancyGrid {
        let mut g = self.clone();
        for c in g.cells.iter_mut() {
            if *c == Cell::Inflated {
                *c = Cell::Free;
            }
        }
        g
    }
}

/// Marks as `Inflated` every `Free` cell whose center is within `radius`
/// of the square of some `Occupied` cell. Existing states are kept.
pub fn inflate(grid: &OccupancyGrid, radius: f64) -> OccupancyGrid {
    assert!(radius >= 0.0, "inflation radius must be non-negative");
    let mut out = grid.clone();
    if radius == 0.0 {
        return out;
    }
    let reach = (radius / grid.resolution).ceil() as isize + 1;
    for occ in grid.occupied_cells() {
        let (oi, oj) = (occ.i as isize, occ.j as isize);
        for dj in -reach..=reach {
            for di in -reach..=reach {
                let (i, j) = (oi + di, oj + dj);
                if !grid.in_bounds(i, j) {
                    continue;
                }
                let c = CellIndex::new(i as usize, j as usize);
                if out.get(c) == Cell::Free && grid.distance_to_cell(grid.world_of(c), occ) <= radius
                {
                    out.set(c, Cell::Inflated);
                }
            }
        }
    }
    out
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridFile {
    width: usize,
    height: usize,
    resolution: f64,
    occupied: Vec<[usize; 2]>,
}

impl Serialize for OccupancyGrid {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        GridFile {
            width: self.width,
            height: self.height,
            resolution: self.resolution,
            occupied: self.occupied_cells().iter().map(|c| [c.i, c.j]).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for OccupancyGrid {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let f = GridFile::deserialize(d)?;
        if f.width == 0 || f.height == 0 {
            return Err(D::Error::custom("grid width and height must be positive"));
        }
        if !(f.resolution > 0.0 && f.resolution.is_finite()) {
            return Err(D::Error::custom("grid resolution must be positive"));
        }
        let mut g = OccupancyGrid::new(f.width, f.height, f.resolution);
        for [i, j] in f.occupied {
            if i >= f.width || j >= f.height {
                return Err(D::Error::custom(format!("occupied cell [{i}, {j}] out of bounds")));
            }
            g.set(CellIndex::new(i, j), Cell::Occupied);
        }
        Ok(g)
    }
}
