//! Dirichlet shape functionals on raster domains.
//!
//! The Laplacian is the cell-centered 5-point stencil. A face between two
//! masked cells couples them unless a crack or pin severs it; every other
//! face of a masked cell (towards an empty cell, the box boundary, or
//! across a severed edge) carries the homogeneous Dirichlet condition on
//! the face itself, through the mirrored ghost value `-u`. In units of
//! `1/h²` a coupled face contributes `+1` to the diagonal and `-1` off the
//! diagonal, a Dirichlet face `+2` to the diagonal. The matrix is a
//! symmetric M-matrix, so the discrete maximum principle holds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sections::{Axis, Edge, Grid, RasterDomain};

/// Iterative solver tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Relative residual tolerance of the conjugate gradient solves.
    pub cg_tol: f64,
    pub cg_max_iter: usize,
    /// Relative change of the Rayleigh quotient that stops inverse iteration.
    pub eig_tol: f64,
    pub eig_max_iter: usize,
    /// Relaxation factor of the SSOR preconditioner, in `(0, 2)`.
    pub ssor_omega: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            cg_tol: 1e-10,
            cg_max_iter: 20_000,
            eig_tol: 1e-9,
            eig_max_iter: 500,
            ssor_omega: 1.5,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| v > 0.0 && v < 1.0;
        if !unit(self.cg_tol) || !unit(self.eig_tol) {
            return Err(Error::Config(format!(
                "tolerances must lie in (0,1): cg_tol={}, eig_tol={}",
                self.cg_tol, self.eig_tol
            )));
        }
        if self.cg_max_iter == 0 || self.eig_max_iter == 0 {
            return Err(Error::Config("iteration caps must be positive".into()));
        }
        if !(self.ssor_omega > 0.0 && self.ssor_omega < 2.0) {
            return Err(Error::Config(format!(
                "ssor_omega must lie in (0,2), got {}",
                self.ssor_omega
            )));
        }
        Ok(())
    }
}

/// Grid function returned by a solve, zero outside the mask.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSolution {
    pub grid: Grid,
    /// Row-major cell values, `values[j * nx + i]`.
    pub values: Vec<f64>,
    /// Relative algebraic residual of the final iterate.
    pub residual_norm: f64,
    /// Conjugate gradient iterations for torsion; inverse iterations for the eigenproblem.
    pub iterations: usize,
    /// Total conjugate gradient iterations spent.
    pub cg_iterations: usize,
    /// `T` for torsion, `λ` for the eigenproblem.
    pub functional_value: f64,
}

const NONE: u32 = u32::MAX;

/// Assembled stencil over the masked cells, in units of `1/h²`.
#[derive(Debug, Clone)]
struct Operator {
    grid: Grid,
    /// Grid index of each unknown.
    cells: Vec<usize>,
    diag: Vec<f64>,
    /// Coupled neighbors with lower unknown index (left, below).
    lower: Vec<[u32; 2]>,
    /// Coupled neighbors with higher unknown index (right, above).
    upper: Vec<[u32; 2]>,
}

impl Operator {
    fn assemble(domain: &RasterDomain) -> Result<Self> {
        let grid = *domain.grid();
        if domain.is_empty() {
            return Err(Error::EmptyDomain);
        }
        let (nx, ny) = (grid.nx, grid.ny);
        let mut index = vec![NONE; grid.len()];
        let mut cells = Vec::new();
        for (idx, &m) in domain.mask().iter().enumerate() {
            if m {
                index[idx] = cells.len() as u32;
                cells.push(idx);
            }
        }
        let mut sev_x = vec![false; grid.len()];
        let mut sev_y = vec![false; grid.len()];
        for e in domain.severed_edges() {
            match e.axis {
                Axis::X => sev_x[grid.index(e.i, e.j)] = true,
                Axis::Y => sev_y[grid.index(e.i, e.j)] = true,
            }
        }
        let n = cells.len();
        let mut diag = vec![0.0; n];
        let mut lower = vec![[NONE; 2]; n];
        let mut upper = vec![[NONE; 2]; n];
        for (k, &idx) in cells.iter().enumerate() {
            let (i, j) = grid.coords(idx);
            let mut d = 0.0;
            // (neighbor unknown, severed?) for left, below, right, above
            let left = (i > 0).then(|| (index[idx - 1], sev_x[grid.index(i - 1, j)]));
            let below = (j > 0).then(|| (index[idx - nx], sev_y[grid.index(i, j - 1)]));
            let right = (i + 1 < nx).then(|| (index[idx + 1], sev_x[idx]));
            let above = (j + 1 < ny).then(|| (index[idx + nx], sev_y[idx]));
            for (slot, nb) in [left, below].into_iter().enumerate() {
                match nb {
                    Some((u, false)) if u != NONE => {
                        d += 1.0;
                        lower[k][slot] = u;
                    }
                    _ => d += 2.0,
                }
            }
            for (slot, nb) in [right, above].into_iter().enumerate() {
                match nb {
                    Some((u, false)) if u != NONE => {
                        d += 1.0;
                        upper[k][slot] = u;
                    }
                    _ => d += 2.0,
                }
            }
            diag[k] = d;
        }
        Ok(Self {
            grid,
            cells,
            diag,
            lower,
            upper,
        })
    }

    /// Unknowns grouped by stencil connectivity, each group in increasing order.
    fn components(&self) -> Vec<Vec<u32>> {
        let n = self.len();
        let mut label = vec![NONE; n];
        let mut out = Vec::new();
        let mut stack = Vec::new();
        for seed in 0..n {
            if label[seed] != NONE {
                continue;
            }
            let id = out.len() as u32;
            let mut comp = Vec::new();
            label[seed] = id;
            stack.push(seed as u32);
            while let Some(k) = stack.pop() {
                comp.push(k);
                for &u in self.lower[k as usize].iter().chain(&self.upper[k as usize]) {
                    if u != NONE && label[u as usize] == NONE {
                        label[u as usize] = id;
                        stack.push(u);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// The operator on a union of components (sorted unknowns, closed under coupling).
    fn restrict(&self, keep: &[u32]) -> Self {
        let mut map = vec![NONE; self.len()];
        for (new, &old) in keep.iter().enumerate() {
            map[old as usize] = new as u32;
        }
        let remap = |links: &[u32; 2]| links.map(|u| if u == NONE { NONE } else { map[u as usize] });
        Self {
            grid: self.grid,
            cells: keep.iter().map(|&k| self.cells[k as usize]).collect(),
            diag: keep.iter().map(|&k| self.diag[k as usize]).collect(),
            lower: keep.iter().map(|&k| remap(&self.lower[k as usize])).collect(),
            upper: keep.iter().map(|&k| remap(&self.upper[k as usize])).collect(),
        }
    }

    fn len(&self) -> usize {
        self.cells.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for k in 0..self.len() {
            let mut acc = self.diag[k] * x[k];
            for &u in self.lower[k].iter().chain(&self.upper[k]) {
                if u != NONE {
                    acc -= x[u as usize];
                }
            }
            y[k] = acc;
        }
    }

    /// `z = M⁻¹ r` for the symmetric SOR preconditioner.
    fn precondition(&self, omega: f64, r: &[f64], z: &mut [f64]) {
        let n = self.len();
        // (D + ωL) y = r, with L holding the -1 couplings to lower unknowns
        for k in 0..n {
            let mut acc = r[k];
            for &u in &self.lower[k] {
                if u != NONE {
                    acc += omega * z[u as usize];
                }
            }
            z[k] = acc / self.diag[k];
        }
        for k in 0..n {
            z[k] *= self.diag[k];
        }
        // (D + ωU) z = D y
        for k in (0..n).rev() {
            let mut acc = z[k];
            for &u in &self.upper[k] {
                if u != NONE {
                    acc += omega * z[u as usize];
                }
            }
            z[k] = acc / self.diag[k];
        }
        let scale = omega * (2.0 - omega);
        for v in z.iter_mut() {
            *v *= scale;
        }
    }

    fn scatter(&self, x: &[f64], scale: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.len()];
        for (k, &idx) in self.cells.iter().enumerate() {
            out[idx] = scale * x[k];
        }
        out
    }

    fn gather(&self, field: &[f64], scale: f64) -> Vec<f64> {
        self.cells.iter().map(|&idx| scale * field[idx]).collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

struct CgOutcome {
    iterations: usize,
    relative_residual: f64,
}

/// Preconditioned conjugate gradients for `K x = b`, starting from `x`.
fn pcg(op: &Operator, b: &[f64], x: &mut [f64], cfg: &SolverConfig) -> Result<CgOutcome> {
    let n = op.len();
    let b_norm = norm(b);
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(CgOutcome {
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let mut r = vec![0.0; n];
    op.apply(x, &mut r);
    for k in 0..n {
        r[k] = b[k] - r[k];
    }
    let mut res = norm(&r) / b_norm;
    if res <= cfg.cg_tol {
        return Ok(CgOutcome {
            iterations: 0,
            relative_residual: res,
        });
    }
    let mut z = vec![0.0; n];
    op.precondition(cfg.ssor_omega, &r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = vec![0.0; n];
    for it in 1..=cfg.cg_max_iter {
        op.apply(&p, &mut q);
        let alpha = rz / dot(&p, &q);
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * q[k];
        }
        res = norm(&r) / b_norm;
        if res <= cfg.cg_tol {
            return Ok(CgOutcome {
                iterations: it,
                relative_residual: res,
            });
        }
        op.precondition(cfg.ssor_omega, &r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    Err(Error::Convergence {
        iterations: cfg.cg_max_iter,
        residual: res,
    })
}

/// Torsion function `-Δu = 1`, `u = 0` off the domain; `T = ∫u`.
pub fn torsion(domain: &RasterDomain, cfg: &SolverConfig) -> Result<FieldSolution> {
    torsion_from(domain, cfg, None)
}

/// Torsion solve warm-started from a grid function on the same grid.
pub fn torsion_from(
    domain: &RasterDomain,
    cfg: &SolverConfig,
    guess: Option<&[f64]>,
) -> Result<FieldSolution> {
    cfg.validate()?;
    let op = Operator::assemble(domain)?;
    let h = op.grid.h;
    let h2 = h * h;
    // K u = h² · 1
    let b = vec![h2; op.len()];
    let mut x = match guess {
        Some(g) if g.len() == op.grid.len() => op.gather(g, 1.0),
        _ => vec![0.0; op.len()],
    };
    let out = pcg(&op, &b, &mut x, cfg)?;
    let t = h2 * x.iter().sum::<f64>();
    Ok(FieldSolution {
        grid: op.grid,
        values: op.scatter(&x, 1.0),
        residual_norm: out.relative_residual,
        iterations: out.iterations,
        cg_iterations: out.iterations,
        functional_value: t,
    })
}

/// First Dirichlet eigenpair by inverse iteration.
///
/// The eigenfunction is positive where it does not vanish and normalized
/// to `h² Σ u² = 1`.
pub fn eigen1(domain: &RasterDomain, cfg: &SolverConfig) -> Result<FieldSolution> {
    eigen1_from(domain, cfg, None)
}

/// Inverse iteration started from a grid function (the torsion function when absent).
pub fn eigen1_from(
    domain: &RasterDomain,
    cfg: &SolverConfig,
    start: Option<&[f64]>,
) -> Result<FieldSolution> {
    cfg.validate()?;
    let op = Operator::assemble(domain)?;
    let h = op.grid.h;
    let start = start.filter(|s| s.len() == op.grid.len());
    let comps = op.components();
    // the spectrum is the union of the component spectra; solving each
    // piece separately avoids the slow convergence of near-equal pieces
    let mut best: Option<(Operator, Eigenpair)> = None;
    let mut cg_total = 0;
    let mut iterations = 0;
    for comp in &comps {
        let sub = if comps.len() == 1 { op.clone() } else { op.restrict(comp) };
        let x0 = start.map(|s| sub.gather(s, 1.0));
        let e = inverse_iteration(&sub, x0, cfg)?;
        cg_total += e.cg_iterations;
        iterations = iterations.max(e.iterations);
        if best.as_ref().is_none_or(|(_, b)| e.mu < b.mu) {
            best = Some((sub, e));
        }
    }
    let (sub, Eigenpair { x, mu, residual, .. }) = best.expect("nonempty domain has a component");
    let sign = if x.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
    Ok(FieldSolution {
        grid: op.grid,
        // unit Euclidean norm -> unit discrete L² norm
        values: sub.scatter(&x, sign / h),
        residual_norm: residual,
        iterations,
        cg_iterations: cg_total,
        functional_value: mu / (h * h),
    })
}

struct Eigenpair {
    x: Vec<f64>,
    mu: f64,
    residual: f64,
    iterations: usize,
    cg_iterations: usize,
}

/// Smallest eigenpair by locally optimal inverse iteration: each step
/// takes the best vector, in the Rayleigh quotient sense, from
/// `span{x, K⁻¹x, p}` with `p` the previous update. Plain inverse iteration
/// crawls when `λ₂/λ₁` is close to one (pieces joined by a thin bridge).
/// `x` has unit Euclidean norm and `mu` is in units of `1/h²`.
fn inverse_iteration(op: &Operator, start: Option<Vec<f64>>, cfg: &SolverConfig) -> Result<Eigenpair> {
    let n = op.len();
    let mut cg_total = 0;
    let mut x = start.unwrap_or_else(|| vec![0.0; n]);
    if norm(&x) == 0.0 {
        let b = vec![1.0; n];
        cg_total += pcg(op, &b, &mut x, cfg)?.iterations;
    }
    let nx = norm(&x);
    x.iter_mut().for_each(|v| *v /= nx);

    let mut kx = vec![0.0; n];
    op.apply(&x, &mut kx);
    let mut mu = dot(&x, &kx);
    let mut p: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut converged = false;
    let mut outer = 0;
    for it in 1..=cfg.eig_max_iter {
        outer = it;
        // warm start: K w = x is approximately solved by x / μ
        let mut w: Vec<f64> = x.iter().map(|v| v / mu).collect();
        cg_total += pcg(op, &x, &mut w, cfg)?.iterations;

        let mut basis = vec![(x.clone(), kx.clone())];
        for v in std::iter::once(w).chain(p.take().map(|(v, _)| v)) {
            if let Some(v) = orthonormal_to(&basis, v) {
                let mut kv = vec![0.0; n];
                op.apply(&v, &mut kv);
                basis.push((v, kv));
            }
        }
        let m = basis.len();
        let g = nalgebra::DMatrix::from_fn(m, m, |i, j| {
            0.5 * (dot(&basis[i].0, &basis[j].1) + dot(&basis[j].0, &basis[i].1))
        });
        let eig = nalgebra::SymmetricEigen::new(g);
        let (imin, &mu_new) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty basis");
        let c = eig.eigenvectors.column(imin);

        // update direction: the part of the new vector outside span{x}
        let mut dx = vec![0.0; n];
        let mut kdx = vec![0.0; n];
        for (q, (v, kv)) in basis.iter().enumerate().skip(1) {
            for k in 0..n {
                dx[k] += c[q] * v[k];
                kdx[k] += c[q] * kv[k];
            }
        }
        for k in 0..n {
            x[k] = c[0] * x[k] + dx[k];
            kx[k] = c[0] * kx[k] + kdx[k];
        }
        let nx = norm(&x);
        x.iter_mut().for_each(|v| *v /= nx);
        kx.iter_mut().for_each(|v| *v /= nx);
        p = Some((dx, kdx));

        let mu_new = mu_new.max(f64::MIN_POSITIVE);
        let change = (mu_new - mu).abs() / mu_new;
        mu = mu_new;
        if change <= cfg.eig_tol {
            converged = true;
            break;
        }
    }
    // recompute from x to shed rounding from the recurrences
    op.apply(&x, &mut kx);
    mu = dot(&x, &kx);
    let residual = {
        let r: Vec<f64> = kx.iter().zip(&x).map(|(a, b)| a - mu * b).collect();
        norm(&r) / mu
    };
    if !converged {
        return Err(Error::Convergence {
            iterations: outer,
            residual,
        });
    }
    Ok(Eigenpair {
        x,
        mu,
        residual,
        iterations: outer,
        cg_iterations: cg_total,
    })
}

/// `v` orthonormalized against an orthonormal basis, or `None` when it lies
/// in its span to rounding.
fn orthonormal_to(basis: &[(Vec<f64>, Vec<f64>)], mut v: Vec<f64>) -> Option<Vec<f64>> {
    let scale = norm(&v);
    if scale == 0.0 {
        return None;
    }
    // twice is enough
    for _ in 0..2 {
        for (b, _) in basis {
            let a = dot(b, &v);
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= a * y);
        }
    }
    let nv = norm(&v);
    if nv <= 1e-10 * scale {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= nv);
    Some(v)
}

/// `h · #{faces between a masked cell and an unmasked cell or the box boundary}`.
pub fn perimeter(domain: &RasterDomain) -> f64 {
    let g = domain.grid();
    let mut faces = 0usize;
    for j in 0..g.ny {
        for i in 0..g.nx {
            if !domain.is_masked(i, j) {
                continue;
            }
            let (i, j) = (i as isize, j as isize);
            for (di, dj) in [(-1, 0), (1, 0), (0, -1), (0, 1)] {
                if !domain.is_masked_signed(i + di, j + dj) {
                    faces += 1;
                }
            }
        }
    }
    faces as f64 * g.h
}

/// `‖u_A − u_B‖_{L²(D)}` for the torsion functions extended by zero.
pub fn gamma_dist(a: &RasterDomain, b: &RasterDomain, cfg: &SolverConfig) -> Result<f64> {
    a.grid().ensure_matches(b.grid())?;
    let ua = torsion(a, cfg)?;
    let ub = torsion(b, cfg)?;
    Ok(field_distance_l2(&ua, &ub))
}

/// `‖u − v‖_{L²(D)}` of two fields on the same grid.
pub fn field_distance_l2(u: &FieldSolution, v: &FieldSolution) -> f64 {
    let h2 = u.grid.cell_area();
    (h2 * u
        .values
        .iter()
        .zip(&v.values)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>())
    .sqrt()
}

/// `‖u − v‖_{L¹(D)}` of two fields on the same grid.
pub fn field_distance_l1(u: &FieldSolution, v: &FieldSolution) -> f64 {
    let h2 = u.grid.cell_area();
    h2 * u
        .values
        .iter()
        .zip(&v.values)
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
}

/// Torsion-function distance in `L¹(D)`.
pub fn gamma_dist_l1(a: &RasterDomain, b: &RasterDomain, cfg: &SolverConfig) -> Result<f64> {
    a.grid().ensure_matches(b.grid())?;
    Ok(field_distance_l1(&torsion(a, cfg)?, &torsion(b, cfg)?))
}

/// Whether the stencil couples the two cells of an edge in this domain.
pub fn couples(domain: &RasterDomain, e: Edge) -> bool {
    let [(ai, aj), (bi, bj)] = e.cells();
    domain.is_masked(ai, aj) && domain.is_masked(bi, bj) && !domain.is_severed(e)
}
