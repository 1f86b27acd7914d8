use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::raster::{Edge, RasterDomain};
use crate::error::{Error, Result};
use crate::interval_flow::{flow_union_at_factor, Interval, IntervalUnion};

/// A planar domain cut into parallel scanline sections.
///
/// Column `k` is the scanline through `c + x'_k · n`, where `c` is the box
/// center of the grid the domain came from, `n = (cos θ, sin θ)` and
/// `x'_k = x_lo + (k + ½)·dx`. Section coordinates run along
/// `e = (-sin θ, cos θ)` and are measured from the symmetrization line
/// through `c`, so symmetrizing a column centers it on that line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionedDomain {
    pub theta: f64,
    pub x_lo: f64,
    pub dx: f64,
    pub columns: Vec<IntervalUnion>,
}

impl SectionedDomain {
    pub fn new(theta: f64, x_lo: f64, dx: f64, columns: Vec<IntervalUnion>) -> Result<Self> {
        if !(dx.is_finite() && dx > 0.0) {
            return Err(Error::InvalidInput(format!("column width must be positive, got {dx}")));
        }
        if columns.is_empty() {
            return Err(Error::InvalidInput("sectioned domain needs at least one column".into()));
        }
        if !theta.is_finite() || !x_lo.is_finite() {
            return Err(Error::InvalidInput("theta and x_lo must be finite".into()));
        }
        Ok(Self {
            theta,
            x_lo,
            dx,
            columns,
        })
    }

    pub fn measure(&self) -> f64 {
        self.dx * self.columns.iter().map(IntervalUnion::total_length).sum::<f64>()
    }

    pub fn column_center(&self, k: usize) -> f64 {
        self.x_lo + (k as f64 + 0.5) * self.dx
    }

    pub fn is_empty(&self) -> bool {
        self.columns.iter().all(IntervalUnion::is_empty)
    }

    /// Columnwise point-set inclusion with endpoint tolerance.
    pub fn is_subset_of(&self, other: &SectionedDomain, tol: f64) -> bool {
        self.columns.len() == other.columns.len()
            && self
                .columns
                .iter()
                .zip(&other.columns)
                .all(|(a, b)| a.is_subset_of(b, tol))
    }
}

/// How a direction sits relative to the grid axes.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Orientation {
    /// θ = 0: columns are grid columns, sections run along +y.
    Columns,
    /// θ = π/2: columns are grid rows, sections run along -x.
    Rows,
    Rotated { n: [f64; 2], e: [f64; 2] },
}

const AXIS_SNAP: f64 = 1e-12;

/// Reduces an angle to `[0, π)`.
pub fn normalize_angle(theta: f64) -> f64 {
    let pi = std::f64::consts::PI;
    let t = theta.rem_euclid(pi);
    if (pi - t).abs() < AXIS_SNAP {
        0.0
    } else {
        t
    }
}

fn orientation(theta: f64) -> Orientation {
    let t = normalize_angle(theta);
    let half_pi = std::f64::consts::FRAC_PI_2;
    if t.abs() < AXIS_SNAP {
        Orientation::Columns
    } else if (t - half_pi).abs() < AXIS_SNAP {
        Orientation::Rows
    } else {
        let (s, c) = t.sin_cos();
        Orientation::Rotated {
            n: [c, s],
            e: [-s, c],
        }
    }
}

/// Section extraction settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SectionOptions {
    /// Scanlines per grid cell width.
    pub supersample: usize,
}

impl Default for SectionOptions {
    fn default() -> Self {
        Self { supersample: 1 }
    }
}

/// Sections a raster domain along direction `theta` with default density.
pub fn section(domain: &RasterDomain, theta: f64) -> Result<SectionedDomain> {
    section_with(domain, theta, SectionOptions::default())
}

/// Exact intersections of scanlines with the union of masked cells.
///
/// Cracks and pins carry no measure and are not represented in sections.
pub fn section_with(
    domain: &RasterDomain,
    theta: f64,
    opts: SectionOptions,
) -> Result<SectionedDomain> {
    if opts.supersample == 0 {
        return Err(Error::InvalidInput("supersample factor must be at least 1".into()));
    }
    let grid = *domain.grid();
    let h = grid.h;
    let ss = opts.supersample;
    let dx = h / ss as f64;
    let c = grid.box_center();
    let theta = normalize_angle(theta);

    match orientation(theta) {
        Orientation::Columns => {
            let x_lo = grid.origin[0] - c[0];
            let off = grid.origin[1] - c[1];
            let columns = (0..grid.nx * ss)
                .map(|k| {
                    let i = k / ss;
                    runs(grid.ny, |j| domain.is_masked(i, j))
                        .into_iter()
                        .map(|(j0, j1)| {
                            Interval::new(off + j0 as f64 * h, off + j1 as f64 * h)
                        })
                        .collect::<Result<Vec<_>>>()
                        .map(IntervalUnion::normalized)
                })
                .collect::<Result<Vec<_>>>()?;
            SectionedDomain::new(theta, x_lo, dx, columns)
        }
        Orientation::Rows => {
            let x_lo = grid.origin[1] - c[1];
            let off = grid.origin[0] - c[0];
            let columns = (0..grid.ny * ss)
                .map(|k| {
                    let j = k / ss;
                    runs(grid.nx, |i| domain.is_masked(i, j))
                        .into_iter()
                        .map(|(i0, i1)| {
                            // along-section coordinate is -(x - cx)
                            Interval::new(-(off + i1 as f64 * h), -(off + i0 as f64 * h))
                        })
                        .collect::<Result<Vec<_>>>()
                        .map(IntervalUnion::normalized)
                })
                .collect::<Result<Vec<_>>>()?;
            SectionedDomain::new(theta, x_lo, dx, columns)
        }
        Orientation::Rotated { n, e } => {
            let corners = [
                grid.origin,
                [grid.box_max()[0], grid.origin[1]],
                [grid.origin[0], grid.box_max()[1]],
                grid.box_max(),
            ];
            let proj = |p: [f64; 2], d: [f64; 2]| (p[0] - c[0]) * d[0] + (p[1] - c[1]) * d[1];
            let lo = corners.iter().map(|&p| proj(p, n)).fold(f64::INFINITY, f64::min);
            let hi = corners.iter().map(|&p| proj(p, n)).fold(f64::NEG_INFINITY, f64::max);
            let ncols = ((hi - lo) / dx).ceil().max(1.0) as usize;
            // center the column layout on the projected box
            let x_lo = 0.5 * (lo + hi) - 0.5 * ncols as f64 * dx;
            let columns: Vec<IntervalUnion> = (0..ncols)
                .into_par_iter()
                .map(|k| {
                    let xp = x_lo + (k as f64 + 0.5) * dx;
                    let base = [c[0] + xp * n[0], c[1] + xp * n[1]];
                    scanline(domain, base, e)
                })
                .collect();
            SectionedDomain::new(theta, x_lo, dx, columns)
        }
    }
}

/// Maximal runs `[start, end)` of indices where `on` holds.
fn runs(n: usize, on: impl Fn(usize) -> bool) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    for k in 0..n {
        match (on(k), start) {
            (true, None) => start = Some(k),
            (false, Some(s)) => {
                out.push((s, k));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, n));
    }
    out
}

/// Intersection of the line `base + y·e` with the masked cells, in the `y` coordinate.
fn scanline(domain: &RasterDomain, base: [f64; 2], e: [f64; 2]) -> IntervalUnion {
    let g = domain.grid();
    let h = g.h;
    let [xmax, ymax] = g.box_max();
    let mut ts: Vec<f64> = Vec::with_capacity(g.nx + g.ny + 2);
    // crossings with vertical grid lines
    if e[0].abs() > 0.0 {
        for i in 0..=g.nx {
            let x = g.origin[0] + i as f64 * h;
            ts.push((x - base[0]) / e[0]);
        }
    }
    if e[1].abs() > 0.0 {
        for j in 0..=g.ny {
            let y = g.origin[1] + j as f64 * h;
            ts.push((y - base[1]) / e[1]);
        }
    }
    // keep only the parameter range inside the box
    let inside = |t: f64| {
        let x = base[0] + t * e[0];
        let y = base[1] + t * e[1];
        let eps = 1e-9 * h;
        x >= g.origin[0] - eps && x <= xmax + eps && y >= g.origin[1] - eps && y <= ymax + eps
    };
    ts.retain(|&t| inside(t));
    ts.sort_by(f64::total_cmp);
    ts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * h);

    let mut parts: Vec<Interval> = Vec::new();
    let mut open: Option<(f64, f64)> = None;
    for w in ts.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let tm = 0.5 * (t0 + t1);
        let x = base[0] + tm * e[0];
        let y = base[1] + tm * e[1];
        let ci = ((x - g.origin[0]) / h).floor();
        let cj = ((y - g.origin[1]) / h).floor();
        let on = domain.is_masked_signed(ci as isize, cj as isize);
        open = match (on, open) {
            (true, None) => Some((t0, t1)),
            (true, Some((a, _))) => Some((a, t1)),
            (false, Some((a, b))) => {
                if let Ok(iv) = Interval::new(a, b) {
                    parts.push(iv);
                }
                None
            }
            (false, None) => None,
        };
    }
    if let Some((a, b)) = open {
        if let Ok(iv) = Interval::new(a, b) {
            parts.push(iv);
        }
    }
    IntervalUnion::normalized(parts)
}

/// Continuous Steiner symmetrization of every column to `tau ∈ [0,1]`.
///
/// `tau` is the reparametrized time: the contraction factor is `1 - tau`.
pub fn css(domain: &SectionedDomain, tau: f64) -> Result<SectionedDomain> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::InvalidInput(format!("tau must lie in [0,1], got {tau}")));
    }
    let s = 1.0 - tau;
    let columns = domain
        .columns
        .par_iter()
        .map(|col| flow_union_at_factor(col, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(SectionedDomain {
        theta: domain.theta,
        x_lo: domain.x_lo,
        dx: domain.dx,
        columns,
    })
}

/// Rasterization settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RasterizeOptions {
    /// Record touching-but-unmerged section parts as crack edges.
    pub keep_slits: bool,
    /// Total number of cells to place for rotated directions; defaults to
    /// the rounded sectioned measure.
    pub target_cells: Option<usize>,
}

/// Bookkeeping from a rasterization.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RasterizeReport {
    /// `h² · cells - sectioned measure`.
    pub measure_error: f64,
    /// Section parts shorter than `h/2`.
    pub subcell_sections: usize,
    pub cracks_recorded: usize,
}

#[derive(Debug, Clone)]
pub struct Rasterized {
    pub domain: RasterDomain,
    pub report: RasterizeReport,
}

/// Places cells on the template grid to reproduce a sectioned domain.
///
/// For grid-aligned directions each grid column receives
/// `round(section length / h)` cells, chosen as the cells whose centers
/// lie deepest inside the section. Rotated directions rank all cells by
/// the interpolated section depth at their centers and keep the deepest
/// ones.
pub fn rasterize(
    domain: &SectionedDomain,
    template: &RasterDomain,
    opts: RasterizeOptions,
) -> Result<Rasterized> {
    let grid = *template.grid();
    let h = grid.h;
    let subcell_sections = domain
        .columns
        .iter()
        .flat_map(|c| c.parts())
        .filter(|p| p.length() < 0.5 * h)
        .count();

    let mut out = template.blank_like();
    let mut cracks_recorded = 0;
    match orientation(domain.theta) {
        o @ (Orientation::Columns | Orientation::Rows) => {
            let c = grid.box_center();
            let (n_cols, n_along, col_origin, along_origin) = match o {
                Orientation::Columns => (grid.nx, grid.ny, grid.origin[0] - c[0], grid.origin[1] - c[1]),
                _ => (grid.ny, grid.nx, grid.origin[1] - c[1], grid.origin[0] - c[0]),
            };
            let ratio = h / domain.dx;
            let ss = ratio.round();
            let coarse = (domain.dx / h).round();
            if !((ss >= 1.0 && (ratio - ss).abs() < 1e-9 * ss)
                || (coarse >= 1.0 && (domain.dx / h - coarse).abs() < 1e-9 * coarse))
            {
                return Err(Error::Resolution(format!(
                    "column width {} is not commensurate with cell size {h}",
                    domain.dx
                )));
            }
            for gc in 0..n_cols {
                let center = col_origin + (gc as f64 + 0.5) * h;
                // section columns whose centers fall inside this grid column
                let ks: Vec<usize> = section_columns_in(domain, center - 0.5 * h, center + 0.5 * h);
                if ks.is_empty() {
                    continue;
                }
                let mean_len = ks
                    .iter()
                    .map(|&k| domain.columns[k].total_length())
                    .sum::<f64>()
                    / ks.len() as f64;
                let count = (mean_len / h).round() as usize;
                if count == 0 {
                    continue;
                }
                let along = |a: usize| match o {
                    Orientation::Columns => along_origin + (a as f64 + 0.5) * h,
                    // sections run along -x for rows
                    _ => -(along_origin + (a as f64 + 0.5) * h),
                };
                let mut scored: Vec<(f64, usize)> = (0..n_along)
                    .map(|a| {
                        let y = along(a);
                        let d = ks.iter().map(|&k| domain.columns[k].depth(y)).sum::<f64>()
                            / ks.len() as f64;
                        (d, a)
                    })
                    .collect();
                scored.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
                let mut chosen: Vec<usize> = scored.iter().take(count.min(n_along)).map(|&(_, a)| a).collect();
                chosen.sort_unstable();
                let cell = |a: usize| match o {
                    Orientation::Columns => (gc, a),
                    _ => (a, gc),
                };
                for &a in &chosen {
                    let (i, j) = cell(a);
                    out.set(i, j, true);
                }
                if opts.keep_slits {
                    let col = &domain.columns[ks[ks.len() / 2]];
                    if col.len() >= 2 {
                        for w in chosen.windows(2) {
                            if w[1] == w[0] + 1
                                && col.nearest_part(along(w[0])) != col.nearest_part(along(w[1]))
                            {
                                if let Some(e) = Edge::between(cell(w[0]), cell(w[1])) {
                                    out.add_crack(e)?;
                                    cracks_recorded += 1;
                                }
                            }
                        }
                    }
                }
            }
        }
        Orientation::Rotated { n, e } => {
            let measure = domain.measure();
            let target = opts
                .target_cells
                .unwrap_or_else(|| (measure / grid.cell_area()).round() as usize)
                .min(grid.len());
            let c = grid.box_center();
            let ncols = domain.columns.len();
            let mut scored: Vec<(f64, usize)> = (0..grid.len())
                .into_par_iter()
                .map(|idx| {
                    let (i, j) = grid.coords(idx);
                    let p = grid.cell_center(i, j);
                    let (px, py) = (p[0] - c[0], p[1] - c[1]);
                    let xp = px * n[0] + py * n[1];
                    let y = px * e[0] + py * e[1];
                    let q = (xp - domain.x_lo) / domain.dx - 0.5;
                    let k0 = q.floor();
                    let w = q - k0;
                    let depth_at = |k: f64| {
                        if k < 0.0 || k as usize >= ncols {
                            f64::NEG_INFINITY
                        } else {
                            domain.columns[k as usize].depth(y)
                        }
                    };
                    let (d0, d1) = (depth_at(k0), depth_at(k0 + 1.0));
                    let d = if d0.is_finite() && d1.is_finite() {
                        (1.0 - w) * d0 + w * d1
                    } else if w < 0.5 {
                        d0
                    } else {
                        d1
                    };
                    (d, idx)
                })
                .collect();
            scored.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
            for &(d, idx) in scored.iter().take(target) {
                if d == f64::NEG_INFINITY {
                    break;
                }
                let (i, j) = grid.coords(idx);
                out.set(i, j, true);
            }
        }
    }

    if !domain.is_empty() && out.is_empty() {
        return Err(Error::Resolution(format!(
            "no section is long enough to occupy a cell of size {h}"
        )));
    }
    let report = RasterizeReport {
        measure_error: out.measure() - domain.measure(),
        subcell_sections,
        cracks_recorded,
    };
    Ok(Rasterized { domain: out, report })
}

fn section_columns_in(domain: &SectionedDomain, lo: f64, hi: f64) -> Vec<usize> {
    let n = domain.columns.len();
    let k_lo = (((lo - domain.x_lo) / domain.dx) - 0.5).ceil().max(0.0) as usize;
    let mut ks: Vec<usize> = (k_lo..n)
        .take_while(|&k| domain.column_center(k) < hi)
        .filter(|&k| domain.column_center(k) >= lo)
        .collect();
    if ks.is_empty() {
        // columns wider than the cell: take the one covering the cell center
        let mid = 0.5 * (lo + hi);
        let k = ((mid - domain.x_lo) / domain.dx).floor();
        if k >= 0.0 && (k as usize) < n {
            ks.push(k as usize);
        }
    }
    ks
}

/// Steiner symmetrization about the line through the box center in direction `theta`.
pub fn steiner_symmetrize(domain: &RasterDomain, theta: f64) -> Result<RasterDomain> {
    if domain.is_empty() {
        return Err(Error::EmptyDomain);
    }
    let sec = section(domain, theta)?;
    let sym = css(&sec, 1.0)?;
    let opts = RasterizeOptions {
        keep_slits: false,
        target_cells: Some(domain.cell_count()),
    };
    Ok(rasterize(&sym, domain, opts)?.domain)
}

/// `h² · #{cells where the masks differ}`.
pub fn symm_difference_measure(a: &RasterDomain, b: &RasterDomain) -> Result<f64> {
    Ok(a.mask_difference_count(b)? as f64 * a.grid().cell_area())
}

/// Cells of an equal-measure disk centered in the box, rasterized by cell centers.
pub fn equal_measure_disk(domain: &RasterDomain) -> RasterDomain {
    let grid = *domain.grid();
    let r = (domain.measure() / std::f64::consts::PI).sqrt();
    let c = grid.box_center();
    RasterDomain::from_fn(grid, |x, y| {
        let (dx, dy) = (x - c[0], y - c[1]);
        dx * dx + dy * dy < r * r
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sections::Grid;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn grid(nx: usize, ny: usize, h: f64) -> Grid {
        Grid::centered(nx, ny, h).unwrap()
    }

    /// Axis-aligned rectangle `[x0,x1] × [y0,y1]` in cell units on a centered grid.
    fn rect(g: Grid, x0: f64, x1: f64, y0: f64, y1: f64) -> RasterDomain {
        RasterDomain::from_fn(g, |x, y| x > x0 && x < x1 && y > y0 && y < y1)
    }

    #[test]
    fn rectangle_sections_theta_zero() {
        let g = grid(40, 40, 0.1);
        let d = rect(g, -1.0, 1.0, -0.5, 0.5);
        let s = section(&d, 0.0).unwrap();
        let full: Vec<_> = s.columns.iter().filter(|c| !c.is_empty()).collect();
        assert_eq!(full.len(), 20);
        for c in full {
            assert_eq!(c.len(), 1);
            assert!((c.total_length() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rectangle_sections_theta_half_pi() {
        let g = grid(40, 40, 0.1);
        let d = rect(g, -1.0, 1.0, -0.5, 0.5);
        let s = section(&d, FRAC_PI_2).unwrap();
        let full: Vec<_> = s.columns.iter().filter(|c| !c.is_empty()).collect();
        assert_eq!(full.len(), 10);
        for c in full {
            assert!((c.total_length() - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn stacked_squares_give_two_part_sections() {
        let g = grid(20, 40, 0.1);
        // unit squares [−0.5,0.5]×[−1.5,−0.5] and [−0.5,0.5]×[0.5,1.5]
        let d = RasterDomain::from_fn(g, |x, y| x.abs() < 0.5 && y.abs() > 0.5 && y.abs() < 1.5);
        let s = section(&d, 0.0).unwrap();
        for c in s.columns.iter().filter(|c| !c.is_empty()) {
            assert_eq!(c.len(), 2);
            assert!((c.parts()[0].length() - 1.0).abs() < 1e-12);
            assert!((c.parts()[1].length() - 1.0).abs() < 1e-12);
        }
        // gap 2 between centers, lengths 1: merge exactly at tau = 1/2
        let merged = css(&s, 0.5).unwrap();
        for c in merged.columns.iter().filter(|c| !c.is_empty()) {
            assert_eq!(c.len(), 1);
            assert!((c.total_length() - 2.0).abs() < 1e-12);
        }
        let before = css(&s, 0.5 - 1e-9).unwrap();
        assert!(before.columns.iter().filter(|c| !c.is_empty()).all(|c| c.len() == 2));
    }

    #[test]
    fn css_identity_and_full_symmetrization() {
        let g = grid(30, 30, 0.1);
        let d = RasterDomain::from_fn(g, |x, y| (x - 0.3).abs() + (y - 0.4).abs() < 0.8 || (x < -0.8 && y < 0.0 && y > -1.2));
        let s = section(&d, 0.0).unwrap();
        assert_eq!(css(&s, 0.0).unwrap(), s);
        let full = css(&s, 1.0).unwrap();
        for (a, b) in s.columns.iter().zip(&full.columns) {
            assert!(b.len() <= 1);
            if let Some(p) = b.parts().first() {
                assert!(p.center().abs() < 1e-12);
                assert!((p.length() - a.total_length()).abs() < 1e-12);
            }
        }
        assert!(css(&s, 1.5).is_err());
        assert!(css(&s, -0.1).is_err());
    }

    #[test]
    fn rotated_section_measure_close_to_cells() {
        let g = grid(64, 64, 1.0 / 32.0);
        let d = RasterDomain::from_fn(g, |x, y| x * x / 0.64 + y * y / 0.25 < 1.0);
        for theta in [0.3, PI / 4.0, 2.0] {
            let s = section(&d, theta).unwrap();
            let rel = (s.measure() - d.measure()).abs() / d.measure();
            assert!(rel < 0.005, "theta={theta} rel={rel}");
        }
    }

    #[test]
    fn roundtrip_axis_aligned_is_exact() {
        let g = grid(32, 32, 1.0 / 16.0);
        let d = RasterDomain::from_fn(g, |x, y| (x * x + y * y < 0.6) && !(x > 0.0 && y > 0.2));
        for theta in [0.0, FRAC_PI_2] {
            let s = section(&d, theta).unwrap();
            let r = rasterize(&s, &d, RasterizeOptions::default()).unwrap();
            assert_eq!(r.domain.mask(), d.mask(), "theta={theta}");
            assert!(r.report.measure_error.abs() < 1e-12);
        }
    }

    #[test]
    fn supersampled_roundtrip_is_exact() {
        let g = grid(24, 24, 1.0 / 12.0);
        let d = RasterDomain::from_fn(g, |x, y| x.abs() + 0.5 * y.abs() < 0.7);
        let s = section_with(&d, 0.0, SectionOptions { supersample: 3 }).unwrap();
        assert_eq!(s.columns.len(), 72);
        let r = rasterize(&s, &d, RasterizeOptions::default()).unwrap();
        assert_eq!(r.domain.mask(), d.mask());
    }

    #[test]
    fn disk_sections_rasterize_to_area() {
        let r = 1.0;
        let h = r / 64.0;
        let g = grid(160, 160, h);
        let n = 160usize;
        // exact chord lengths of the disk at column centers
        let x_lo = -0.5 * n as f64 * h;
        let columns = (0..n)
            .map(|k| {
                let x = x_lo + (k as f64 + 0.5) * h;
                if x.abs() < r {
                    let half = (r * r - x * x).sqrt();
                    IntervalUnion::single(Interval::new(-half, half).unwrap())
                } else {
                    IntervalUnion::empty()
                }
            })
            .collect();
        let s = SectionedDomain::new(0.0, x_lo, h, columns).unwrap();
        let out = rasterize(&s, &RasterDomain::empty(g), RasterizeOptions::default()).unwrap();
        let cells = out.domain.cell_count() as f64;
        let expect = PI * r * r / (h * h);
        assert!((cells - expect).abs() / expect < 0.01);
    }

    #[test]
    fn incommensurate_columns_are_rejected() {
        let g = grid(10, 10, 0.1);
        let s = SectionedDomain::new(
            0.0,
            -0.5,
            0.07,
            vec![IntervalUnion::single(Interval::new(-0.2, 0.2).unwrap()); 14],
        )
        .unwrap();
        assert!(matches!(
            rasterize(&s, &RasterDomain::empty(g), RasterizeOptions::default()),
            Err(Error::Resolution(_))
        ));
    }

    #[test]
    fn keep_slits_records_cracks_between_touching_parts() {
        // Each column: two parts separated by a gap smaller than h/2.
        let h = 0.1;
        let g = grid(10, 20, h);
        let x_lo = -0.5;
        let columns = (0..10)
            .map(|_| {
                IntervalUnion::new(vec![
                    Interval::new(-0.8, -0.01).unwrap(),
                    Interval::new(0.01, 0.8).unwrap(),
                ])
                .unwrap()
            })
            .collect();
        let s = SectionedDomain::new(0.0, x_lo, h, columns).unwrap();
        let slit = rasterize(
            &s,
            &RasterDomain::empty(g),
            RasterizeOptions { keep_slits: true, target_cells: None },
        )
        .unwrap();
        assert_eq!(slit.report.cracks_recorded, 10);
        assert_eq!(slit.domain.cracks().len(), 10);
        for e in slit.domain.cracks() {
            assert_eq!(e.axis, crate::sections::Axis::Y);
        }
        let plain = rasterize(&s, &RasterDomain::empty(g), RasterizeOptions::default()).unwrap();
        assert!(plain.domain.cracks().is_empty());
        assert_eq!(plain.domain.mask(), slit.domain.mask());
    }

    #[test]
    fn steiner_of_offcenter_rectangle_recenters() {
        let g = grid(40, 40, 0.05);
        let d = rect(g, -0.5, 0.5, 0.2, 0.7);
        let s = steiner_symmetrize(&d, 0.0).unwrap();
        assert_eq!(s, rect(g, -0.5, 0.5, -0.25, 0.25));
    }

    #[test]
    fn steiner_preserves_cell_count_rotated() {
        let g = grid(64, 64, 1.0 / 32.0);
        let d = RasterDomain::from_fn(g, |x, y| (x < 0.2 && x > -0.6 && y.abs() < 0.3) || (x.abs() < 0.2 && y < 0.7 && y > 0.0));
        for theta in [0.4, PI / 4.0, 2.5] {
            let s = steiner_symmetrize(&d, theta).unwrap();
            assert_eq!(s.cell_count(), d.cell_count());
        }
    }

    #[test]
    fn symmetric_difference_examples() {
        let h = 0.125;
        let g = Grid::new(12, 12, h, [0.0, 0.0]).unwrap();
        let a = RasterDomain::from_fn(g, |x, y| x > 0.25 && x < 1.25 && y > 0.25 && y < 1.25);
        assert_eq!(symm_difference_measure(&a, &a).unwrap(), 0.0);
        assert!((symm_difference_measure(&a, &a.blank_like()).unwrap() - 1.0).abs() < 1e-15);
        let shifted = RasterDomain::from_fn(g, |x, y| x > 0.25 + h && x < 1.25 + h && y > 0.25 && y < 1.25);
        assert!((symm_difference_measure(&a, &shifted).unwrap() - 2.0 * h).abs() < 1e-15);
        assert_eq!(
            symm_difference_measure(&a, &shifted).unwrap(),
            symm_difference_measure(&shifted, &a).unwrap()
        );
        let other = RasterDomain::empty(Grid::new(10, 12, h, [0.0, 0.0]).unwrap());
        assert!(matches!(symm_difference_measure(&a, &other), Err(Error::GridMismatch(_))));
    }
}
