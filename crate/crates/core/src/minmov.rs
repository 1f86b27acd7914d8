//! Minimizing movements over fixed-volume masks.
//!
//! Each step minimizes `F(Ω) + |Ω Δ Ω_n|² / (2ε)` over masks reachable
//! from `Ω_n` by swaps (remove a boundary cell, add an exterior cell next
//! to the mask). The incumbent is always a candidate, so `F` never
//! increases along a trajectory.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flows::{FlowConfig, FlowSample, FlowTrace};
use crate::pde::{self, SolverConfig};
use crate::sections::{equal_measure_disk, Edge, RasterDomain, Vertex};

/// Shape functional minimized by the scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Functional {
    Lambda,
    NegTorsion,
    Perimeter,
    /// `a·λ + b·(−T) + c·P` with nonnegative weights summing to one.
    Combination { lambda: f64, neg_torsion: f64, perimeter: f64 },
}

impl Functional {
    pub fn validate(&self) -> Result<()> {
        if let Functional::Combination {
            lambda,
            neg_torsion,
            perimeter,
        } = *self
        {
            let w = [lambda, neg_torsion, perimeter];
            if w.iter().any(|&x| !(x >= 0.0)) || ((w.iter().sum::<f64>()) - 1.0).abs() > 1e-12 {
                return Err(Error::Config(format!(
                    "combination weights must be nonnegative and sum to 1, got {w:?}"
                )));
            }
        }
        Ok(())
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "lambda" => Ok(Functional::Lambda),
            "neg_torsion" | "neg-torsion" | "torsion" => Ok(Functional::NegTorsion),
            "perimeter" => Ok(Functional::Perimeter),
            other => Err(Error::InvalidInput(format!(
                "unknown functional '{other}', expected lambda, neg_torsion or perimeter"
            ))),
        }
    }

    fn weights(&self) -> [f64; 3] {
        match *self {
            Functional::Lambda => [1.0, 0.0, 0.0],
            Functional::NegTorsion => [0.0, 1.0, 0.0],
            Functional::Perimeter => [0.0, 0.0, 1.0],
            Functional::Combination {
                lambda,
                neg_torsion,
                perimeter,
            } => [lambda, neg_torsion, perimeter],
        }
    }
}

/// Annealing temperature `t0 · |F(Ω_n)| · cooling^k` at proposal `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealingSchedule {
    pub t0: f64,
    pub cooling: f64,
}

impl Default for AnnealingSchedule {
    fn default() -> Self {
        Self {
            t0: 1e-3,
            cooling: 0.95,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Search {
    /// Repeated best-improvement over ranked swap batches.
    #[default]
    Greedy,
    Annealing(AnnealingSchedule),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MinMovConfig {
    pub epsilon: f64,
    pub n_steps: usize,
    pub search: Search,
    /// Objective evaluations allowed per step.
    pub swap_budget: usize,
    pub seed: u64,
    pub solver: SolverConfig,
}

impl Default for MinMovConfig {
    fn default() -> Self {
        Self {
            epsilon: 1.0,
            n_steps: 30,
            search: Search::Greedy,
            swap_budget: 64,
            seed: 0,
            solver: SolverConfig::default(),
        }
    }
}

impl MinMovConfig {
    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.swap_budget == 0 {
            return Err(Error::Config("swap_budget must be at least 1".into()));
        }
        if let Search::Annealing(s) = self.search {
            if !(s.t0 >= 0.0) || !(s.cooling > 0.0 && s.cooling <= 1.0) {
                return Err(Error::Config(format!("invalid annealing schedule {s:?}")));
            }
        }
        Ok(())
    }
}

/// `F(Ω) + |Ω Δ anchor|² / (2ε)`.
pub fn objective(
    omega: &RasterDomain,
    anchor: &RasterDomain,
    f: Functional,
    epsilon: f64,
    solver: &SolverConfig,
) -> Result<f64> {
    f.validate()?;
    check_volume(omega, anchor)?;
    let value = evaluate(omega, f, solver, None)?.value;
    Ok(value + penalty(omega, anchor, epsilon)?)
}

fn check_volume(omega: &RasterDomain, anchor: &RasterDomain) -> Result<()> {
    omega.grid().ensure_matches(anchor.grid())?;
    if omega.cell_count() != anchor.cell_count() {
        return Err(Error::VolumeMismatch {
            left: omega.cell_count(),
            right: anchor.cell_count(),
        });
    }
    Ok(())
}

fn penalty(omega: &RasterDomain, anchor: &RasterDomain, epsilon: f64) -> Result<f64> {
    let d = omega.mask_difference_count(anchor)? as f64 * omega.grid().cell_area();
    Ok(d * d / (2.0 * epsilon))
}

/// `F` with the fields used to rank swaps.
#[derive(Debug, Clone)]
struct Evaluation {
    value: f64,
    torsion: Option<Vec<f64>>,
    eigen: Option<Vec<f64>>,
}

fn evaluate(
    domain: &RasterDomain,
    f: Functional,
    solver: &SolverConfig,
    warm: Option<&Evaluation>,
) -> Result<Evaluation> {
    let [wl, wt, wp] = f.weights();
    let mut value = 0.0;
    let mut torsion = None;
    let mut eigen = None;
    if wt > 0.0 || wl > 0.0 {
        let guess = warm.and_then(|w| w.torsion.as_deref());
        let u = pde::torsion_from(domain, solver, guess)?;
        if wt > 0.0 {
            value -= wt * u.functional_value;
        }
        if wl > 0.0 {
            let start = warm.and_then(|w| w.eigen.as_deref()).unwrap_or(&u.values);
            let v = pde::eigen1_from(domain, solver, Some(start))?;
            value += wl * v.functional_value;
            eigen = Some(v.values);
        }
        torsion = Some(u.values);
    }
    if wp > 0.0 {
        value += wp * pde::perimeter(domain);
    }
    Ok(Evaluation {
        value,
        torsion,
        eigen,
    })
}

/// Hashable identity of a domain.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Key {
    mask: Vec<u64>,
    cracks: Vec<Edge>,
    pins: Vec<Vertex>,
}

impl Key {
    fn of(d: &RasterDomain) -> Self {
        let mut mask = vec![0u64; d.mask().len().div_ceil(64)];
        for (k, &m) in d.mask().iter().enumerate() {
            if m {
                mask[k / 64] |= 1 << (k % 64);
            }
        }
        Self {
            mask,
            cracks: d.cracks().iter().copied().collect(),
            pins: d.pins().iter().copied().collect(),
        }
    }
}

/// A swap: remove cell `remove`, add cell `add` (grid indices).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct Swap {
    remove: usize,
    add: usize,
}

fn apply(d: &RasterDomain, s: Swap) -> RasterDomain {
    let g = *d.grid();
    let mut out = d.clone();
    let (ri, rj) = g.coords(s.remove);
    let (ai, aj) = g.coords(s.add);
    out.set(ri, rj, false);
    out.set(ai, aj, true);
    out
}

const NEIGHBORS: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];

/// Masked cells with an exposed face, and unmasked cells with a masked neighbor.
fn frontier(d: &RasterDomain) -> (Vec<usize>, Vec<usize>) {
    let g = d.grid();
    let mut boundary = Vec::new();
    let mut exterior = Vec::new();
    for j in 0..g.ny {
        for i in 0..g.nx {
            let masked_nb = NEIGHBORS
                .iter()
                .filter(|(di, dj)| d.is_masked_signed(i as isize + di, j as isize + dj))
                .count();
            if d.is_masked(i, j) {
                if masked_nb < 4 {
                    boundary.push(g.index(i, j));
                }
            } else if masked_nb > 0 {
                exterior.push(g.index(i, j));
            }
        }
    }
    (boundary, exterior)
}

/// Swaps ordered by a first-variation heuristic: remove where the state
/// field is small, add next to where it is large. Perimeter ranks by
/// exposed faces.
fn ranked_swaps(d: &RasterDomain, f: Functional, eval: &Evaluation, limit: usize) -> Vec<Swap> {
    let g = *d.grid();
    let (boundary, exterior) = frontier(d);
    if boundary.is_empty() || exterior.is_empty() {
        return Vec::new();
    }
    let [wl, wt, wp] = f.weights();
    let field = if wl >= wt { eval.eigen.as_ref() } else { eval.torsion.as_ref() };
    let use_field = field.is_some() && wl.max(wt) >= wp;
    let masked_nb = |idx: usize| {
        let (i, j) = g.coords(idx);
        NEIGHBORS
            .iter()
            .filter(|(di, dj)| d.is_masked_signed(i as isize + di, j as isize + dj))
            .count() as f64
    };
    let nb_max = |idx: usize, f: &[f64]| {
        let (i, j) = g.coords(idx);
        NEIGHBORS
            .iter()
            .filter_map(|(di, dj)| {
                let (a, b) = (i as isize + di, j as isize + dj);
                d.is_masked_signed(a, b).then(|| f[g.index(a as usize, b as usize)])
            })
            .fold(0.0, f64::max)
    };
    // lower score = better
    let mut rem: Vec<(f64, usize)> = boundary
        .iter()
        .map(|&k| match (use_field, field) {
            (true, Some(f)) => (f[k], k),
            _ => (masked_nb(k), k),
        })
        .collect();
    let mut add: Vec<(f64, usize)> = exterior
        .iter()
        .map(|&k| match (use_field, field) {
            (true, Some(f)) => (-nb_max(k, f), k),
            _ => (-masked_nb(k), k),
        })
        .collect();
    let by_score = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    rem.sort_by(by_score);
    add.sort_by(by_score);
    let side = ((limit as f64).sqrt().ceil() as usize).max(1);
    let mut pairs: Vec<(usize, Swap)> = Vec::new();
    for (ri, &(_, r)) in rem.iter().take(side.max(limit.div_ceil(add.len().max(1)))).enumerate() {
        for (ai, &(_, a)) in add.iter().take(side.max(limit.div_ceil(rem.len().max(1)))).enumerate() {
            if r != a {
                pairs.push((ri + ai, Swap { remove: r, add: a }));
            }
        }
    }
    pairs.sort();
    pairs.truncate(limit);
    pairs.into_iter().map(|(_, s)| s).collect()
}

/// Outcome of one step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub domain: RasterDomain,
    /// `F` of the returned domain.
    pub value: f64,
    pub objective: f64,
    /// Objective evaluations spent.
    pub evaluations: usize,
    /// Cells that differ from the incumbent.
    pub moved_cells: usize,
}

/// Stateful scheme; memoizes `F` by domain so that every mask is
/// evaluated exactly once and monotonicity checks compare identical numbers.
#[derive(Debug)]
pub struct MinMov {
    f: Functional,
    cfg: MinMovConfig,
    rng: ChaCha8Rng,
    cache: HashMap<Key, f64>,
}

impl MinMov {
    pub fn new(f: Functional, cfg: MinMovConfig) -> Result<Self> {
        f.validate()?;
        cfg.validate()?;
        Ok(Self {
            f,
            cfg,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            cache: HashMap::new(),
        })
    }

    /// `F` through the cache.
    pub fn value(&mut self, d: &RasterDomain) -> Result<f64> {
        let key = Key::of(d);
        if let Some(&v) = self.cache.get(&key) {
            return Ok(v);
        }
        let v = evaluate(d, self.f, &self.cfg.solver, None)?.value;
        self.cache.insert(key, v);
        Ok(v)
    }

    /// Evaluates candidate swaps in parallel, reusing cached values.
    fn evaluate_batch(
        &mut self,
        current: &RasterDomain,
        warm: &Evaluation,
        swaps: &[Swap],
    ) -> Vec<(Swap, RasterDomain, Result<(f64, Option<Evaluation>)>)> {
        let domains: Vec<(Swap, RasterDomain, Key)> = swaps
            .iter()
            .map(|&s| {
                let d = apply(current, s);
                let k = Key::of(&d);
                (s, d, k)
            })
            .collect();
        let (f, solver) = (self.f, self.cfg.solver);
        let cache = &self.cache;
        let results: Vec<_> = domains
            .into_par_iter()
            .map(|(s, d, k)| {
                let r = match cache.get(&k) {
                    Some(&v) => Ok((v, None)),
                    None => evaluate(&d, f, &solver, Some(warm)).map(|e| (e.value, Some(e))),
                };
                (s, d, k, r)
            })
            .collect();
        results
            .into_iter()
            .map(|(s, d, k, r)| {
                if let Ok((v, _)) = &r {
                    // first value wins, so repeated masks stay consistent
                    let v = *self.cache.entry(k).or_insert(*v);
                    return (s, d, r.map(|(_, e)| (v, e)));
                }
                (s, d, r)
            })
            .collect()
    }

    /// One implicit Euler step from `anchor`.
    pub fn step(&mut self, anchor: &RasterDomain) -> Result<StepOutcome> {
        if anchor.is_empty() {
            return Err(Error::EmptyDomain);
        }
        let base = evaluate(anchor, self.f, &self.cfg.solver, None)?;
        let f0 = *self.cache.entry(Key::of(anchor)).or_insert(base.value);
        let mut best = StepOutcome {
            domain: anchor.clone(),
            value: f0,
            objective: f0,
            evaluations: 0,
            moved_cells: 0,
        };
        match self.cfg.search {
            Search::Greedy => self.greedy(anchor, base, &mut best)?,
            Search::Annealing(s) => self.anneal(anchor, base, s, &mut best)?,
        }
        best.moved_cells = best.domain.mask_difference_count(anchor)?;
        Ok(best)
    }

    fn greedy(&mut self, anchor: &RasterDomain, base: Evaluation, best: &mut StepOutcome) -> Result<()> {
        let budget = self.cfg.swap_budget;
        let round = (budget / 4).max(8).min(budget);
        let mut current_eval = base;
        while best.evaluations < budget {
            let limit = round.min(budget - best.evaluations);
            let swaps = ranked_swaps(&best.domain, self.f, &current_eval, limit);
            if swaps.is_empty() {
                break;
            }
            best.evaluations += swaps.len();
            let current = best.domain.clone();
            let mut winner: Option<(f64, f64, Swap, RasterDomain, Option<Evaluation>)> = None;
            for (s, d, r) in self.evaluate_batch(&current, &current_eval, &swaps) {
                // a failed solve disqualifies the candidate
                let Ok((v, e)) = r else { continue };
                let obj = v + penalty(&d, anchor, self.cfg.epsilon)?;
                let better = match &winner {
                    None => true,
                    Some((o, _, ws, _, _)) => obj < *o || (obj == *o && s < *ws),
                };
                if better {
                    winner = Some((obj, v, s, d, e));
                }
            }
            match winner {
                Some((obj, v, _, d, e)) if obj < best.objective => {
                    current_eval = match e {
                        Some(e) => e,
                        None => evaluate(&d, self.f, &self.cfg.solver, Some(&current_eval))?,
                    };
                    best.domain = d;
                    best.value = v;
                    best.objective = obj;
                }
                _ => break,
            }
        }
        Ok(())
    }

    fn anneal(
        &mut self,
        anchor: &RasterDomain,
        base: Evaluation,
        sched: AnnealingSchedule,
        best: &mut StepOutcome,
    ) -> Result<()> {
        let mut current = anchor.clone();
        let mut current_obj = best.objective;
        let mut current_eval = base;
        let scale = best.value.abs().max(f64::MIN_POSITIVE);
        let mut temp = sched.t0 * scale;
        for _ in 0..self.cfg.swap_budget {
            let (boundary, exterior) = frontier(&current);
            if boundary.is_empty() || exterior.is_empty() {
                break;
            }
            let s = Swap {
                remove: boundary[self.rng.gen_range(0..boundary.len())],
                add: exterior[self.rng.gen_range(0..exterior.len())],
            };
            let u: f64 = self.rng.gen();
            best.evaluations += 1;
            let (_, d, r) = self
                .evaluate_batch(&current, &current_eval, &[s])
                .pop()
                .expect("one candidate");
            let Ok((v, e)) = r else { continue };
            let obj = v + penalty(&d, anchor, self.cfg.epsilon)?;
            let accept = obj <= current_obj || (temp > 0.0 && u < (-(obj - current_obj) / temp).exp());
            if accept {
                if obj < best.objective {
                    best.domain = d.clone();
                    best.value = v;
                    best.objective = obj;
                }
                current_eval = match e {
                    Some(e) => e,
                    None => evaluate(&d, self.f, &self.cfg.solver, Some(&current_eval))?,
                };
                current = d;
                current_obj = obj;
            }
            temp *= sched.cooling;
        }
        Ok(())
    }
}

/// One step with a fresh cache.
pub fn step(omega_n: &RasterDomain, f: Functional, cfg: &MinMovConfig) -> Result<RasterDomain> {
    Ok(MinMov::new(f, *cfg)?.step(omega_n)?.domain)
}

/// A minimizing-movement run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Sample `n` at `τ = n / n_steps`; `gamma_to_target` is the torsion
    /// distance to the equal-measure disk.
    pub trace: FlowTrace,
    /// `F(Ω_n)`.
    pub values: Vec<f64>,
    pub domains: Vec<RasterDomain>,
    /// `|Ω_{n+1} Δ Ω_n|` per step.
    pub step_distances: Vec<f64>,
}

/// Iterates [`MinMov::step`] and records the functionals of every iterate.
///
/// Fails with [`Error::PropertyViolation`] if `F` increases or the cell
/// count changes, which the step contract rules out.
pub fn trajectory(omega0: &RasterDomain, f: Functional, cfg: &MinMovConfig) -> Result<Trajectory> {
    if omega0.is_empty() {
        return Err(Error::EmptyDomain);
    }
    let mut mm = MinMov::new(f, *cfg)?;
    let mut domains = vec![omega0.clone()];
    let mut values = vec![mm.value(omega0)?];
    let mut step_distances = Vec::with_capacity(cfg.n_steps);
    for n in 0..cfg.n_steps {
        let out = mm.step(&domains[n])?;
        if out.value > values[n] {
            return Err(Error::PropertyViolation(format!(
                "F increased at step {n}: {} -> {}",
                values[n], out.value
            )));
        }
        if out.domain.cell_count() != omega0.cell_count() {
            return Err(Error::PropertyViolation(format!(
                "cell count changed at step {n}: {} -> {}",
                omega0.cell_count(),
                out.domain.cell_count()
            )));
        }
        step_distances.push(out.moved_cells as f64 * omega0.grid().cell_area());
        values.push(out.value);
        domains.push(out.domain);
    }

    let solver = cfg.solver;
    let disk = equal_measure_disk(omega0);
    let disk_u = pde::torsion(&disk, &solver).ok();
    let steps = cfg.n_steps.max(1) as f64;
    let samples: Vec<FlowSample> = domains
        .par_iter()
        .enumerate()
        .map(|(n, d)| {
            let mut s = FlowSample {
                tau: n as f64 / steps,
                measure: d.measure(),
                lambda: None,
                torsion: None,
                perimeter: pde::perimeter(d),
                gamma_to_target: None,
                error: None,
            };
            match pde::torsion(d, &solver) {
                Ok(u) => {
                    s.torsion = Some(u.functional_value);
                    s.gamma_to_target = disk_u.as_ref().map(|t| pde::field_distance_l2(&u, t));
                    match pde::eigen1_from(d, &solver, Some(&u.values)) {
                        Ok(v) => s.lambda = Some(v.functional_value),
                        Err(e) => s.error = Some(e.to_string()),
                    }
                }
                Err(e) => s.error = Some(e.to_string()),
            }
            s
        })
        .collect();
    let flow_cfg = FlowConfig {
        solver,
        ..FlowConfig::default()
    };
    Ok(Trajectory {
        trace: FlowTrace::from_samples(samples, &flow_cfg),
        values,
        domains,
        step_distances,
    })
}
