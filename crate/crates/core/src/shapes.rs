//! Built-in test domains.
//!
//! Every generator rasterizes by cell centers on a grid whose box is
//! centered on the origin, so the symmetrization lines pass through the
//! origin.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sections::{Axis, Edge, Grid, RasterDomain};

/// Centered grid with cell size `h` covering `[-half_w, half_w] × [-half_h, half_h]`.
///
/// Cell counts are rounded up to even numbers so that the box center
/// falls on a grid line.
pub fn centered_grid(half_w: f64, half_h: f64, h: f64) -> Result<Grid> {
    let even = |half: f64| {
        let n = (2.0 * half / h - 1e-9).ceil() as usize;
        n + n % 2
    };
    Grid::centered(even(half_w), even(half_h), h)
}

/// Axis-aligned `w × hgt` rectangle centered on the origin.
pub fn rectangle(grid: Grid, w: f64, hgt: f64) -> RasterDomain {
    RasterDomain::from_fn(grid, |x, y| x.abs() < 0.5 * w && y.abs() < 0.5 * hgt)
}

pub fn disk(grid: Grid, r: f64) -> RasterDomain {
    RasterDomain::from_fn(grid, |x, y| x * x + y * y < r * r)
}

pub fn ellipse(grid: Grid, a: f64, b: f64) -> RasterDomain {
    RasterDomain::from_fn(grid, |x, y| (x / a).powi(2) + (y / b).powi(2) < 1.0)
}

/// Rectangle `[-w/2, w/2] × [-r, r]` capped by half-disks of radius `r`.
pub fn stadium(grid: Grid, w: f64, r: f64) -> RasterDomain {
    RasterDomain::from_fn(grid, |x, y| {
        let dx = (x.abs() - 0.5 * w).max(0.0);
        dx * dx + y * y < r * r
    })
}

/// L-shape: the square `[-s, s]²` without its upper-right quadrant.
pub fn l_shape(grid: Grid, s: f64) -> RasterDomain {
    RasterDomain::from_fn(grid, |x, y| {
        x.abs() < s && y.abs() < s && !(x > 0.0 && y > 0.0)
    })
}

/// Polygon interior by the even-odd rule on cell centers.
pub fn polygon(grid: Grid, vertices: &[[f64; 2]]) -> RasterDomain {
    RasterDomain::from_fn(grid, |x, y| point_in_polygon(vertices, x, y))
}

pub fn point_in_polygon(v: &[[f64; 2]], x: f64, y: f64) -> bool {
    let mut inside = false;
    let n = v.len();
    let mut j = n.wrapping_sub(1);
    for i in 0..n {
        let (xi, yi) = (v[i][0], v[i][1]);
        let (xj, yj) = (v[j][0], v[j][1]);
        if (yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi {
            inside = !inside;
        }
        j = i;
    }
    inside
}

/// Star-shaped polygon with `n` vertices at random angles and radii in `[r_min, r_max]`.
pub fn random_star_polygon<R: Rng>(rng: &mut R, n: usize, r_min: f64, r_max: f64) -> Vec<[f64; 2]> {
    let mut angles: Vec<f64> = (0..n)
        .map(|_| rng.gen_range(0.0..std::f64::consts::TAU))
        .collect();
    angles.sort_by(f64::total_cmp);
    angles
        .into_iter()
        .map(|a| {
            let r = rng.gen_range(r_min..=r_max);
            [r * a.cos(), r * a.sin()]
        })
        .collect()
}

/// Rectangle with a parallel-walled slot cut from its top edge.
///
/// The body is `[-w/2, w/2] × [-(base + depth)/2, (base + depth)/2]`; the
/// slot `|x| < notch_width/2` occupies its top `depth`. Under horizontal
/// sections (`θ = π/2`) every slotted row holds two parts with the same
/// length-to-spacing ratio, so all of them collide at the same time and
/// the slot closes into a slit along its whole depth at once.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Notched {
    pub width: f64,
    pub base: f64,
    pub depth: f64,
    pub notch_width: f64,
}

impl Default for Notched {
    fn default() -> Self {
        Self {
            width: 3.0,
            base: 2.0,
            depth: 2.0,
            notch_width: 1.0,
        }
    }
}

impl Notched {
    pub fn validate(&self) -> Result<()> {
        let ok = self.width > 0.0
            && self.base > 0.0
            && self.depth > 0.0
            && self.notch_width > 0.0
            && self.notch_width < self.width;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("invalid notch geometry {self:?}")))
        }
    }

    pub fn height(&self) -> f64 {
        self.base + self.depth
    }

    /// `τ` at which the slot closes under horizontal symmetrization.
    ///
    /// Parts of length `L = (w - g)/2` whose centers are `D = (w + g)/2`
    /// apart touch at contraction factor `L/D`.
    pub fn closing_tau(&self) -> f64 {
        let l = 0.5 * (self.width - self.notch_width);
        let d = 0.5 * (self.width + self.notch_width);
        1.0 - l / d
    }

    pub fn build(&self, grid: Grid) -> Result<RasterDomain> {
        self.validate()?;
        let top = 0.5 * self.height();
        let slot_floor = top - self.depth;
        let (hw, hg) = (0.5 * self.width, 0.5 * self.notch_width);
        Ok(RasterDomain::from_fn(grid, |x, y| {
            x.abs() < hw && y.abs() < top && !(y > slot_floor && x.abs() < hg)
        }))
    }

    /// Horizontal symmetrization at the closing time, seen from the left:
    /// the two prongs have met on the center line but are still separated
    /// by a crack over the slot depth. Clearing the crack gives the domain
    /// right after the closing time.
    pub fn slit(&self, grid: Grid) -> Result<RasterDomain> {
        self.validate()?;
        let top = 0.5 * self.height();
        let slot_floor = top - self.depth;
        let (hw, hp) = (0.5 * self.width, 0.5 * (self.width - self.notch_width));
        let mut d = RasterDomain::from_fn(grid, |x, y| {
            y.abs() < top && x.abs() < if y > slot_floor { hp } else { hw }
        });
        let c = grid.box_center();
        // the grid line closest to the symmetry axis
        let i_line = ((c[0] - grid.origin[0]) / grid.h).round() as usize;
        if i_line == 0 || i_line >= grid.nx {
            return Err(Error::InvalidInput("slit line falls outside the grid".into()));
        }
        for j in 0..grid.ny {
            let [_, y] = grid.cell_center(i_line, j);
            if y > slot_floor && d.is_masked(i_line - 1, j) && d.is_masked(i_line, j) {
                d.add_crack(Edge {
                    i: i_line - 1,
                    j,
                    axis: Axis::X,
                })?;
            }
        }
        Ok(d)
    }
}

/// Named built-in shapes with their default geometry and grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Builtin {
    /// `w × hgt` rectangle.
    Rectangle { w: f64, hgt: f64 },
    Disk { r: f64 },
    Ellipse { a: f64, b: f64 },
    Stadium { w: f64, r: f64 },
    LShape { s: f64 },
    Notched(Notched),
    /// The notched shape at its closing time, prongs still cracked apart.
    Slit(Notched),
}

impl Builtin {
    pub fn names() -> &'static [&'static str] {
        &["rectangle", "square", "disk", "ellipse", "stadium", "lshape", "notched", "slit"]
    }

    /// Default instance by name.
    pub fn by_name(name: &str) -> Result<Self> {
        Ok(match name {
            "rectangle" => Builtin::Rectangle { w: 2.0, hgt: 1.0 },
            "square" => Builtin::Rectangle { w: 1.0, hgt: 1.0 },
            "disk" => Builtin::Disk { r: 1.0 },
            "ellipse" => Builtin::Ellipse { a: 1.0, b: 0.5 },
            "stadium" => Builtin::Stadium { w: 1.0, r: 0.5 },
            "lshape" => Builtin::LShape { s: 0.5 },
            "notched" => Builtin::Notched(Notched::default()),
            "slit" => Builtin::Slit(Notched::default()),
            other => {
                return Err(Error::InvalidInput(format!(
                    "unknown shape '{other}', expected one of {:?}",
                    Self::names()
                )))
            }
        })
    }

    /// Half extents of the shape's bounding box.
    pub fn half_extent(&self) -> [f64; 2] {
        match *self {
            Builtin::Rectangle { w, hgt } => [0.5 * w, 0.5 * hgt],
            Builtin::Disk { r } => [r, r],
            Builtin::Ellipse { a, b } => [a, b],
            Builtin::Stadium { w, r } => [0.5 * w + r, r],
            Builtin::LShape { s } => [s, s],
            Builtin::Notched(n) | Builtin::Slit(n) => [0.5 * n.width, 0.5 * n.height()],
        }
    }

    /// Square box large enough to hold every Steiner symmetral of the shape.
    pub fn default_grid(&self, h: f64, margin: f64) -> Result<Grid> {
        let [a, b] = self.half_extent();
        let half = (a * a + b * b).sqrt() + margin;
        centered_grid(half, half, h)
    }

    pub fn build(&self, grid: Grid) -> Result<RasterDomain> {
        Ok(match *self {
            Builtin::Rectangle { w, hgt } => rectangle(grid, w, hgt),
            Builtin::Disk { r } => disk(grid, r),
            Builtin::Ellipse { a, b } => ellipse(grid, a, b),
            Builtin::Stadium { w, r } => stadium(grid, w, r),
            Builtin::LShape { s } => l_shape(grid, s),
            Builtin::Notched(n) => n.build(grid)?,
            Builtin::Slit(n) => n.slit(grid)?,
        })
    }
}
