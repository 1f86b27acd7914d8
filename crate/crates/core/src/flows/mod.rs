//! Sampled paths of domains and the functionals along them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pde::{self, FieldSolution, SolverConfig};
use crate::sections::{
    self, css, equal_measure_disk, normalize_angle, rasterize, steiner_symmetrize, Axis, Edge,
    RasterDomain, RasterizeOptions,
};

pub mod hilbert;

/// One evaluated domain along a path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSample {
    pub tau: f64,
    pub measure: f64,
    pub lambda: Option<f64>,
    pub torsion: Option<f64>,
    pub perimeter: f64,
    pub gamma_to_target: Option<f64>,
    /// Solver failure for this sample, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// A torsion increment flagged as a discontinuity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub tau_before: f64,
    pub tau_after: f64,
    pub delta_t: f64,
}

/// Largest relative violations of `λ` nonincreasing and `T` nondecreasing.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Monotonicity {
    pub max_lambda_increase: f64,
    pub max_torsion_decrease: f64,
}

impl Monotonicity {
    pub fn within(&self, slack: f64) -> bool {
        self.max_lambda_increase <= slack && self.max_torsion_decrease <= slack
    }

    fn record(&mut self, prev: &FlowSample, next: &FlowSample) {
        if let (Some(a), Some(b)) = (prev.lambda, next.lambda) {
            self.max_lambda_increase = self.max_lambda_increase.max((b - a) / a);
        }
        if let (Some(a), Some(b)) = (prev.torsion, next.torsion) {
            self.max_torsion_decrease = self.max_torsion_decrease.max((a - b) / a);
        }
    }

    fn over(samples: &[FlowSample]) -> Self {
        let mut m = Self::default();
        for w in samples.windows(2) {
            m.record(&w[0], &w[1]);
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FlowTrace {
    pub samples: Vec<FlowSample>,
    pub jumps: Vec<Jump>,
    pub monotonicity: Monotonicity,
    /// Largest `T(τ_{k+1}) - T(τ_k)`.
    pub max_torsion_increment: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

impl FlowTrace {
    /// Builds a trace, detecting jumps and monotonicity violations.
    pub fn from_samples(samples: Vec<FlowSample>, cfg: &FlowConfig) -> Self {
        let jumps = detect_jumps(&samples, cfg.jump_factor, cfg.jump_floor);
        let monotonicity = Monotonicity::over(&samples);
        let max_torsion_increment = torsion_increments(&samples)
            .map(|(_, d)| d)
            .fold(0.0, f64::max);
        let failed = samples.iter().filter(|s| s.error.is_some()).count();
        let warning = (failed > 0).then(|| format!("{failed} sample(s) failed to solve"));
        Self {
            samples,
            jumps,
            monotonicity,
            max_torsion_increment,
            warning,
        }
    }

    pub fn taus(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.tau).collect()
    }

    pub fn torsions(&self) -> Vec<Option<f64>> {
        self.samples.iter().map(|s| s.torsion).collect()
    }

    pub fn lambdas(&self) -> Vec<Option<f64>> {
        self.samples.iter().map(|s| s.lambda).collect()
    }

    fn push_warning(&mut self, msg: String) {
        self.warning = Some(match self.warning.take() {
            Some(w) => format!("{w}; {msg}"),
            None => msg,
        });
    }
}

/// Path evaluation settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowConfig {
    pub solver: SolverConfig,
    /// A torsion increment is a jump when it exceeds this multiple of the median increment...
    pub jump_factor: f64,
    /// ...and this fraction of the initial torsion.
    pub jump_floor: f64,
    /// Cycle cap for [`round_to_ball`].
    pub max_cycles: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            jump_factor: 10.0,
            jump_floor: 1e-3,
            max_cycles: 12,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        if !(self.jump_factor > 0.0) || !(self.jump_floor >= 0.0) {
            return Err(Error::Config(format!(
                "jump_factor must be positive and jump_floor nonnegative, got {} and {}",
                self.jump_factor, self.jump_floor
            )));
        }
        if self.max_cycles == 0 {
            return Err(Error::Config("max_cycles must be positive".into()));
        }
        Ok(())
    }
}

/// Directions for iterated symmetrization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionSchedule {
    angles: Vec<f64>,
}

impl DirectionSchedule {
    /// Angles are reduced to `[0, π)`.
    pub fn new(angles: Vec<f64>) -> Result<Self> {
        if angles.is_empty() {
            return Err(Error::InvalidInput("direction schedule is empty".into()));
        }
        if let Some(a) = angles.iter().find(|a| !a.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite angle {a}")));
        }
        Ok(Self {
            angles: angles.into_iter().map(normalize_angle).collect(),
        })
    }

    /// `kπ/n` for `k = 0..n`.
    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(
            (0..n)
                .map(|k| k as f64 * std::f64::consts::PI / n as f64)
                .collect(),
        )
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }
}

impl Default for DirectionSchedule {
    fn default() -> Self {
        Self::uniform(8).expect("nonempty")
    }
}

fn torsion_increments(samples: &[FlowSample]) -> impl Iterator<Item = (usize, f64)> + '_ {
    samples
        .windows(2)
        .enumerate()
        .filter_map(|(k, w)| Some((k, w[1].torsion? - w[0].torsion?)))
}

/// Flags increments above `max(factor · median |ΔT|, floor · T₀)`.
pub fn detect_jumps(samples: &[FlowSample], factor: f64, floor: f64) -> Vec<Jump> {
    let incs: Vec<(usize, f64)> = torsion_increments(samples).collect();
    if incs.is_empty() {
        return Vec::new();
    }
    let mut mags: Vec<f64> = incs.iter().map(|(_, d)| d.abs()).collect();
    mags.sort_by(f64::total_cmp);
    let n = mags.len();
    let median = if n % 2 == 1 {
        mags[n / 2]
    } else {
        0.5 * (mags[n / 2 - 1] + mags[n / 2])
    };
    let t0 = samples
        .iter()
        .find_map(|s| s.torsion)
        .unwrap_or(0.0)
        .abs();
    let threshold = (factor * median).max(floor * t0);
    incs.into_iter()
        .filter(|&(_, d)| d > threshold)
        .map(|(k, d)| Jump {
            tau_before: samples[k].tau,
            tau_after: samples[k + 1].tau,
            delta_t: d,
        })
        .collect()
}

/// Evaluates the functionals; solver failures are recorded on the sample.
fn evaluate(domain: &RasterDomain, tau: f64, solver: &SolverConfig) -> (FlowSample, Option<FieldSolution>) {
    let mut sample = FlowSample {
        tau,
        measure: domain.measure(),
        lambda: None,
        torsion: None,
        perimeter: pde::perimeter(domain),
        gamma_to_target: None,
        error: None,
    };
    let u = match pde::torsion(domain, solver) {
        Ok(u) => u,
        Err(e) => {
            sample.error = Some(e.to_string());
            return (sample, None);
        }
    };
    sample.torsion = Some(u.functional_value);
    match pde::eigen1_from(domain, solver, Some(&u.values)) {
        Ok(v) => sample.lambda = Some(v.functional_value),
        Err(e) => sample.error = Some(e.to_string()),
    }
    (sample, Some(u))
}

/// Evaluates every domain in parallel and fills `gamma_to_target` when a
/// target torsion function is known.
fn evaluate_all(
    domains: &[RasterDomain],
    taus: &[f64],
    solver: &SolverConfig,
    target: Option<&FieldSolution>,
) -> Vec<(FlowSample, Option<FieldSolution>)> {
    domains
        .par_iter()
        .zip(taus.par_iter())
        .map(|(d, &tau)| {
            let (mut s, u) = evaluate(d, tau, solver);
            if let (Some(u), Some(t)) = (&u, target) {
                s.gamma_to_target = Some(pde::field_distance_l2(u, t));
            }
            (s, u)
        })
        .collect()
}

fn sample_taus(n_samples: usize) -> Result<Vec<f64>> {
    if n_samples < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 samples, got {n_samples}"
        )));
    }
    Ok((0..n_samples)
        .map(|k| k as f64 / (n_samples - 1) as f64)
        .collect())
}

/// Rasterized domains along continuous symmetrization at `τ_k = k/(n-1)`.
///
/// Section parts that touch without having merged are kept apart by
/// crack edges.
pub fn css_domains(omega0: &RasterDomain, theta: f64, n_samples: usize) -> Result<Vec<RasterDomain>> {
    if omega0.is_empty() {
        return Err(Error::EmptyDomain);
    }
    let taus = sample_taus(n_samples)?;
    let sec = sections::section(omega0, theta)?;
    let opts = RasterizeOptions {
        keep_slits: true,
        target_cells: Some(omega0.cell_count()),
    };
    taus.par_iter()
        .map(|&tau| Ok(rasterize(&css(&sec, tau)?, omega0, opts)?.domain))
        .collect()
}

/// Functionals along continuous symmetrization in direction `theta`.
///
/// `gamma_to_target` is measured against the fully symmetrized sample.
pub fn css_path(
    omega0: &RasterDomain,
    theta: f64,
    n_samples: usize,
    cfg: &FlowConfig,
) -> Result<FlowTrace> {
    cfg.validate()?;
    let domains = css_domains(omega0, theta, n_samples)?;
    trace_of(&domains, &sample_taus(n_samples)?, cfg)
}

/// Evaluates a path whose last domain is the target.
fn trace_of(domains: &[RasterDomain], taus: &[f64], cfg: &FlowConfig) -> Result<FlowTrace> {
    let last = domains.last().ok_or(Error::EmptyDomain)?;
    let target = pde::torsion(last, &cfg.solver).ok();
    let evaluated = evaluate_all(domains, taus, &cfg.solver, target.as_ref());
    Ok(FlowTrace::from_samples(
        evaluated.into_iter().map(|(s, _)| s).collect(),
        cfg,
    ))
}

/// Result of iterated symmetrization.
#[derive(Debug, Clone)]
pub struct RoundToBall {
    /// One sample per completed cycle, the input at `τ = 0` and cycle `n`
    /// at `τ = n / max_cycles`.
    pub trace: FlowTrace,
    pub domain: RasterDomain,
    pub cycles: usize,
    pub converged: bool,
    /// `|Ω_n Δ B| / |Ω|` after each cycle, starting with the input.
    pub disk_distance: Vec<f64>,
    /// Violations over individual symmetrization steps.
    pub step_monotonicity: Monotonicity,
}

/// Symmetrizes cyclically over the schedule until the domain is within
/// `stop_tol` of the equal-measure disk in relative symmetric difference.
pub fn round_to_ball(
    omega0: &RasterDomain,
    schedule: &DirectionSchedule,
    stop_tol: f64,
    cfg: &FlowConfig,
) -> Result<RoundToBall> {
    cfg.validate()?;
    if omega0.is_empty() {
        return Err(Error::EmptyDomain);
    }
    if !(stop_tol > 0.0) {
        return Err(Error::InvalidInput(format!("stop_tol must be positive, got {stop_tol}")));
    }
    let ball = equal_measure_disk(omega0);
    let ball_u = pde::torsion(&ball, &cfg.solver)?;
    let measure = omega0.measure();
    let rel_dist = |d: &RasterDomain| -> Result<f64> {
        Ok(sections::symm_difference_measure(d, &ball)? / measure)
    };
    let tau_of = |n: usize| n as f64 / cfg.max_cycles as f64;

    let (mut first, u0) = evaluate(omega0, 0.0, &cfg.solver);
    if let Some(u) = u0 {
        first.gamma_to_target = Some(pde::field_distance_l2(&u, &ball_u));
    }
    let mut prev = first.clone();
    let mut samples = vec![first];
    let mut step_mono = Monotonicity::default();
    let mut domain = omega0.clone();
    let mut distance = vec![rel_dist(&domain)?];
    let mut cycles = 0;
    let mut converged = distance[0] < stop_tol;
    while !converged && cycles < cfg.max_cycles {
        for &theta in schedule.angles() {
            domain = steiner_symmetrize(&domain, theta)?;
            let (next, _) = evaluate(&domain, tau_of(cycles + 1), &cfg.solver);
            step_mono.record(&prev, &next);
            prev = next;
        }
        cycles += 1;
        let (mut s, u) = evaluate(&domain, tau_of(cycles), &cfg.solver);
        if let Some(u) = u {
            s.gamma_to_target = Some(pde::field_distance_l2(&u, &ball_u));
        }
        samples.push(s);
        distance.push(rel_dist(&domain)?);
        converged = *distance.last().unwrap() < stop_tol;
    }
    let mut trace = FlowTrace::from_samples(samples, cfg);
    if !converged {
        trace.push_warning(format!(
            "no convergence within {} cycles: relative distance to disk {:.4} >= {stop_tol}",
            cfg.max_cycles,
            distance.last().unwrap()
        ));
    }
    Ok(RoundToBall {
        trace,
        domain,
        cycles,
        converged,
        disk_distance: distance,
        step_monotonicity: step_mono,
    })
}

/// Time at which each cell and edge of the bounding square is swallowed by
/// the Hilbert curve, in units of order-`k` subsquares.
///
/// The curve image `Γ([0, s])` is the union of the first `⌈s·4^k⌉` closed
/// subsquares of `C`.
#[derive(Debug, Clone)]
pub struct RepairPath {
    minus: RasterDomain,
    plus: RasterDomain,
    order: u32,
    /// Per grid cell: number of subsquares after which it is covered.
    cell_cover: Vec<u64>,
    /// Per grid cell: cover counts of its right (`X`) and upper (`Y`) face.
    edge_cover: Vec<[u64; 2]>,
}

impl RepairPath {
    pub fn new(minus: &RasterDomain, plus: &RasterDomain, order: u32) -> Result<Self> {
        minus.grid().ensure_matches(plus.grid())?;
        if !plus.cracks().is_empty() || !plus.pins().is_empty() {
            return Err(Error::InvalidInput("the larger domain must be free of cracks and pins".into()));
        }
        if minus.is_empty() {
            return Err(Error::EmptyDomain);
        }
        if !minus.mask_subset_of(plus) {
            return Err(Error::InvalidInput("the smaller domain is not contained in the larger one".into()));
        }
        if order == 0 || order > hilbert::MAX_ORDER {
            return Err(Error::Config(format!(
                "curve order must lie in 1..={}, got {order}",
                hilbert::MAX_ORDER
            )));
        }
        let grid = *plus.grid();
        let (i0, j0, i1, j1) = plus.bounding_cells().ok_or(Error::EmptyDomain)?;
        let side = (i1 - i0 + 1).max(j1 - j0 + 1) as i64;

        // choose the corner of C where the curve starts: it must be a vertex of a cell of Ω⁻
        let corners = [(false, false), (true, false), (false, true), (true, true)];
        let start = corners
            .into_iter()
            .find(|&(fx, fy)| {
                let ci = if fx { i1 } else { i0 };
                let cj = if fy { j1 } else { j0 };
                minus.is_masked(ci, cj)
            })
            .ok_or_else(|| {
                Error::Config(
                    "the curve start (a corner of the bounding square) is not in the smaller domain"
                        .into(),
                )
            })?;
        // C = [ox, ox + side] × [oy, oy + side] in grid units, anchored at the start corner
        let ox = if start.0 { i1 as i64 + 1 - side } else { i0 as i64 };
        let oy = if start.1 { j1 as i64 + 1 - side } else { j0 as i64 };
        let curve = hilbert::Subdivision::new(order, side as u64, start.0, start.1);

        let n = grid.len();
        let mut cell_cover = vec![u64::MAX; n];
        let mut edge_cover = vec![[u64::MAX; 2]; n];
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let (u, v) = (i as i64 - ox, j as i64 - oy);
                let idx = grid.index(i, j);
                cell_cover[idx] = curve.cell_cover(u, v);
                edge_cover[idx] = [curve.face_cover(u + 1, v, Axis::X), curve.face_cover(u, v + 1, Axis::Y)];
            }
        }
        Ok(Self {
            minus: minus.clone(),
            plus: plus.clone(),
            order,
            cell_cover,
            edge_cover,
        })
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    /// Number of subsquares in `Γ([0, s])`.
    pub fn prefix_len(&self, s: f64) -> u64 {
        let total = 4u64.pow(self.order);
        ((s.clamp(0.0, 1.0) * total as f64).ceil() as u64).min(total)
    }

    /// `(Ω⁺ \ Γ([0, 1 - t])) ∪ Ω⁻`.
    pub fn domain_at(&self, t: f64) -> Result<RasterDomain> {
        self.domain_for_prefix(self.prefix_len(1.0 - t))
    }

    pub fn domain_for_prefix(&self, count: u64) -> Result<RasterDomain> {
        let grid = *self.plus.grid();
        let mask: Vec<bool> = (0..grid.len())
            .map(|k| {
                self.minus.mask()[k] || (self.plus.mask()[k] && self.cell_cover[k] > count)
            })
            .collect();
        let mut d = RasterDomain::from_mask(grid, mask)?;
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let covers = self.edge_cover[grid.index(i, j)];
                for (axis, cover) in [(Axis::X, covers[0]), (Axis::Y, covers[1])] {
                    let e = Edge { i, j, axis };
                    if cover > count {
                        continue;
                    }
                    let [(ai, aj), (bi, bj)] = e.cells();
                    if bi >= grid.nx || bj >= grid.ny {
                        continue;
                    }
                    if d.is_masked(ai, aj) && d.is_masked(bi, bj) && !pde::couples(&self.minus, e) {
                        d.add_crack(e)?;
                    }
                }
            }
        }
        Ok(d)
    }
}

/// Increasing path from `omega_minus` (at `t = 0`) to `omega_plus` (at `t = 1`)
/// obtained by carving `omega_plus` along a Hilbert curve.
pub fn repair_path(
    omega_minus: &RasterDomain,
    omega_plus: &RasterDomain,
    curve_order: u32,
    n_samples: usize,
    cfg: &FlowConfig,
) -> Result<FlowTrace> {
    cfg.validate()?;
    let taus = sample_taus(n_samples)?;
    let path = RepairPath::new(omega_minus, omega_plus, curve_order)?;
    let domains = taus
        .iter()
        .map(|&t| path.domain_at(t))
        .collect::<Result<Vec<_>>>()?;
    trace_of(&domains, &taus, cfg)
}

/// Curve order whose subsquares match the grid cells of the bounding square.
pub fn grid_curve_order(domain: &RasterDomain) -> u32 {
    let side = domain
        .bounding_cells()
        .map(|(i0, j0, i1, j1)| (i1 - i0 + 1).max(j1 - j0 + 1))
        .unwrap_or(1);
    (side.max(1) as u64).next_power_of_two().trailing_zeros().max(1)
}

/// The same mask with every crack and pin cleared.
pub fn remove_fractures(omega: &RasterDomain) -> RasterDomain {
    omega.without_fractures()
}
