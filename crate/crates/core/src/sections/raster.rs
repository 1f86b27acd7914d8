use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform cell grid covering the box `D = [x0, x0 + nx·h] × [y0, y0 + ny·h]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub origin: [f64; 2],
}

impl Grid {
    pub fn new(nx: usize, ny: usize, h: f64, origin: [f64; 2]) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidInput("grid needs at least one cell".into()));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidInput(format!("cell size must be positive, got {h}")));
        }
        if !(origin[0].is_finite() && origin[1].is_finite()) {
            return Err(Error::InvalidInput("grid origin must be finite".into()));
        }
        Ok(Self { nx, ny, h, origin })
    }

    /// Grid of `nx × ny` cells of side `h` centered on the origin.
    pub fn centered(nx: usize, ny: usize, h: f64) -> Result<Self> {
        Self::new(nx, ny, h, [-0.5 * nx as f64 * h, -0.5 * ny as f64 * h])
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.nx, idx / self.nx)
    }

    #[inline]
    pub fn cell_center(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.origin[0] + (i as f64 + 0.5) * self.h,
            self.origin[1] + (j as f64 + 0.5) * self.h,
        ]
    }

    pub fn box_center(&self) -> [f64; 2] {
        [
            self.origin[0] + 0.5 * self.nx as f64 * self.h,
            self.origin[1] + 0.5 * self.ny as f64 * self.h,
        ]
    }

    pub fn box_max(&self) -> [f64; 2] {
        [
            self.origin[0] + self.nx as f64 * self.h,
            self.origin[1] + self.ny as f64 * self.h,
        ]
    }

    #[inline]
    pub fn cell_area(&self) -> f64 {
        self.h * self.h
    }

    pub fn vertex_position(&self, v: Vertex) -> [f64; 2] {
        [
            self.origin[0] + v.i as f64 * self.h,
            self.origin[1] + v.j as f64 * self.h,
        ]
    }

    /// Same shape and spacing, up to a relative tolerance on `h` and the origin.
    pub fn matches(&self, other: &Grid) -> bool {
        let tol = 1e-12 * self.h.max(other.h);
        self.nx == other.nx
            && self.ny == other.ny
            && (self.h - other.h).abs() <= tol
            && (self.origin[0] - other.origin[0]).abs() <= tol * 1e3
            && (self.origin[1] - other.origin[1]).abs() <= tol * 1e3
    }

    pub fn ensure_matches(&self, other: &Grid) -> Result<()> {
        if self.matches(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{}x{} h={} origin={:?} vs {}x{} h={} origin={:?}",
                self.nx, self.ny, self.h, self.origin, other.nx, other.ny, other.h, other.origin
            )))
        }
    }
}

/// Direction of a cell-to-cell edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    /// Between cells `(i, j)` and `(i + 1, j)`.
    X,
    /// Between cells `(i, j)` and `(i, j + 1)`.
    Y,
}

/// Shared face of two neighboring cells, named by its lower-left cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub axis: Axis,
}

impl Edge {
    pub fn x(i: usize, j: usize) -> Self {
        Self { i, j, axis: Axis::X }
    }

    pub fn y(i: usize, j: usize) -> Self {
        Self { i, j, axis: Axis::Y }
    }

    /// The two cells separated by this edge.
    pub fn cells(&self) -> [(usize, usize); 2] {
        match self.axis {
            Axis::X => [(self.i, self.j), (self.i + 1, self.j)],
            Axis::Y => [(self.i, self.j), (self.i, self.j + 1)],
        }
    }

    /// Edge between two 4-neighbors, if they are neighbors.
    pub fn between(a: (usize, usize), b: (usize, usize)) -> Option<Self> {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        if lo.1 == hi.1 && lo.0 + 1 == hi.0 {
            Some(Edge::x(lo.0, lo.1))
        } else if lo.0 == hi.0 && lo.1 + 1 == hi.1 {
            Some(Edge::y(lo.0, lo.1))
        } else {
            None
        }
    }
}

/// Grid vertex `(x0 + i·h, y0 + j·h)` with `0 ≤ i ≤ nx`, `0 ≤ j ≤ ny`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Vertex {
    pub i: usize,
    pub j: usize,
}

impl Vertex {
    pub fn new(i: usize, j: usize) -> Self {
        Self { i, j }
    }

    /// Cells touching this vertex that exist on the grid.
    pub fn incident_cells(&self, grid: &Grid) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(4);
        for (di, dj) in [(0usize, 0usize), (1, 0), (0, 1), (1, 1)] {
            if self.i >= di && self.j >= dj {
                let (ci, cj) = (self.i - di, self.j - dj);
                if ci < grid.nx && cj < grid.ny {
                    out.push((ci, cj));
                }
            }
        }
        out
    }

    /// The four cell faces meeting at this vertex that lie inside the grid.
    pub fn incident_edges(&self, grid: &Grid) -> Vec<Edge> {
        let (i, j) = (self.i, self.j);
        let mut out = Vec::with_capacity(4);
        // vertical faces (between horizontal neighbors) above and below the vertex
        if i >= 1 && i < grid.nx {
            if j < grid.ny {
                out.push(Edge::x(i - 1, j));
            }
            if j >= 1 {
                out.push(Edge::x(i - 1, j - 1));
            }
        }
        // horizontal faces left and right of the vertex
        if j >= 1 && j < grid.ny {
            if i < grid.nx {
                out.push(Edge::y(i, j - 1));
            }
            if i >= 1 {
                out.push(Edge::y(i - 1, j - 1));
            }
        }
        out
    }
}

/// Binary cell mask on a grid with optional zero-measure obstructions.
///
/// Crack edges sever the coupling between two masked cells; pinned
/// vertices sever the four faces meeting at the vertex. Neither changes
/// the measure.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterDomain {
    grid: Grid,
    mask: Vec<bool>,
    cracks: BTreeSet<Edge>,
    pins: BTreeSet<Vertex>,
}

impl RasterDomain {
    pub fn empty(grid: Grid) -> Self {
        Self {
            grid,
            mask: vec![false; grid.len()],
            cracks: BTreeSet::new(),
            pins: BTreeSet::new(),
        }
    }

    pub fn from_mask(grid: Grid, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "mask has {} entries, grid has {} cells",
                mask.len(),
                grid.len()
            )));
        }
        Ok(Self {
            grid,
            mask,
            cracks: BTreeSet::new(),
            pins: BTreeSet::new(),
        })
    }

    /// Masks every cell whose center satisfies `inside`.
    pub fn from_fn(grid: Grid, inside: impl Fn(f64, f64) -> bool) -> Self {
        let mut d = Self::empty(grid);
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let [x, y] = grid.cell_center(i, j);
                d.mask[grid.index(i, j)] = inside(x, y);
            }
        }
        d
    }

    /// Same grid, no cells.
    pub fn blank_like(&self) -> Self {
        Self::empty(self.grid)
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    #[inline]
    pub fn is_masked(&self, i: usize, j: usize) -> bool {
        i < self.grid.nx && j < self.grid.ny && self.mask[self.grid.index(i, j)]
    }

    /// Masked test with signed coordinates; anything off-grid is unmasked.
    #[inline]
    pub fn is_masked_signed(&self, i: isize, j: isize) -> bool {
        i >= 0 && j >= 0 && self.is_masked(i as usize, j as usize)
    }

    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        let idx = self.grid.index(i, j);
        self.mask[idx] = value;
        if !value {
            self.prune_obstructions();
        }
    }

    pub fn cell_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&m| m)
    }

    /// Lebesgue measure `h² · #cells`.
    pub fn measure(&self) -> f64 {
        self.cell_count() as f64 * self.grid.cell_area()
    }

    pub fn cracks(&self) -> &BTreeSet<Edge> {
        &self.cracks
    }

    pub fn pins(&self) -> &BTreeSet<Vertex> {
        &self.pins
    }

    pub fn has_fractures(&self) -> bool {
        !self.cracks.is_empty() || !self.pins.is_empty()
    }

    /// Marks an edge between two masked cells as severed.
    pub fn add_crack(&mut self, e: Edge) -> Result<()> {
        let [(ai, aj), (bi, bj)] = e.cells();
        if !(self.is_masked(ai, aj) && self.is_masked(bi, bj)) {
            return Err(Error::InvalidInput(format!(
                "crack edge {e:?} does not separate two masked cells"
            )));
        }
        self.cracks.insert(e);
        Ok(())
    }

    /// Pins a vertex adjacent to at least one masked cell.
    pub fn add_pin(&mut self, v: Vertex) -> Result<()> {
        if v.i > self.grid.nx || v.j > self.grid.ny {
            return Err(Error::InvalidInput(format!("vertex {v:?} is off the grid")));
        }
        if !v
            .incident_cells(&self.grid)
            .iter()
            .any(|&(i, j)| self.is_masked(i, j))
        {
            return Err(Error::InvalidInput(format!(
                "pinned vertex {v:?} touches no masked cell"
            )));
        }
        self.pins.insert(v);
        Ok(())
    }

    /// Same mask with all cracks and pins removed.
    pub fn without_fractures(&self) -> Self {
        Self {
            grid: self.grid,
            mask: self.mask.clone(),
            cracks: BTreeSet::new(),
            pins: BTreeSet::new(),
        }
    }

    /// Whether the edge between two cells is severed by a crack or a pin.
    pub fn is_severed(&self, e: Edge) -> bool {
        if self.cracks.contains(&e) {
            return true;
        }
        if self.pins.is_empty() {
            return false;
        }
        // the two end vertices of the face
        let (v0, v1) = match e.axis {
            Axis::X => (Vertex::new(e.i + 1, e.j), Vertex::new(e.i + 1, e.j + 1)),
            Axis::Y => (Vertex::new(e.i, e.j + 1), Vertex::new(e.i + 1, e.j + 1)),
        };
        self.pins.contains(&v0) || self.pins.contains(&v1)
    }

    /// Every edge between two masked cells that is severed by a crack or a pin.
    pub fn severed_edges(&self) -> BTreeSet<Edge> {
        let mut out = self.cracks.clone();
        for v in &self.pins {
            for e in v.incident_edges(&self.grid) {
                let [(ai, aj), (bi, bj)] = e.cells();
                if self.is_masked(ai, aj) && self.is_masked(bi, bj) {
                    out.insert(e);
                }
            }
        }
        out
    }

    /// Cells in `self` and not in `other`, or vice versa.
    pub fn mask_difference_count(&self, other: &RasterDomain) -> Result<usize> {
        self.grid.ensure_matches(&other.grid)?;
        Ok(self
            .mask
            .iter()
            .zip(&other.mask)
            .filter(|(a, b)| a != b)
            .count())
    }

    /// `self ⊆ other` as cell masks.
    pub fn mask_subset_of(&self, other: &RasterDomain) -> bool {
        self.grid.matches(&other.grid)
            && self.mask.iter().zip(&other.mask).all(|(&a, &b)| !a || b)
    }

    /// Checks the crack and pin invariants.
    pub fn validate(&self) -> Result<()> {
        for e in &self.cracks {
            let [(ai, aj), (bi, bj)] = e.cells();
            if !(self.is_masked(ai, aj) && self.is_masked(bi, bj)) {
                return Err(Error::InvalidInput(format!(
                    "crack edge {e:?} does not separate two masked cells"
                )));
            }
        }
        for v in &self.pins {
            if !v
                .incident_cells(&self.grid)
                .iter()
                .any(|&(i, j)| self.is_masked(i, j))
            {
                return Err(Error::InvalidInput(format!(
                    "pinned vertex {v:?} touches no masked cell"
                )));
            }
        }
        Ok(())
    }

    fn prune_obstructions(&mut self) {
        let grid = self.grid;
        let mask = &self.mask;
        let masked = |i: usize, j: usize| i < grid.nx && j < grid.ny && mask[grid.index(i, j)];
        self.cracks.retain(|e| {
            let [(ai, aj), (bi, bj)] = e.cells();
            masked(ai, aj) && masked(bi, bj)
        });
        self.pins
            .retain(|v| v.incident_cells(&grid).iter().any(|&(i, j)| masked(i, j)));
    }

    /// Bounding box of the masked cells as `(i_min, j_min, i_max, j_max)`, inclusive.
    pub fn bounding_cells(&self) -> Option<(usize, usize, usize, usize)> {
        let mut bb: Option<(usize, usize, usize, usize)> = None;
        for (idx, &m) in self.mask.iter().enumerate() {
            if m {
                let (i, j) = self.grid.coords(idx);
                bb = Some(match bb {
                    None => (i, j, i, j),
                    Some((a, b, c, d)) => (a.min(i), b.min(j), c.max(i), d.max(j)),
                });
            }
        }
        bb
    }
}
