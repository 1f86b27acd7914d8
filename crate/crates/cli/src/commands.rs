use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use serde_json::json;

use shapeflow::flows::{self, FlowTrace, Monotonicity, RepairPath};
use shapeflow::minmov;
use shapeflow::sections::steiner_symmetrize;
use shapeflow::{io, pde, RasterDomain};

use crate::config::{OnViolation, RunConfig};
use crate::input::{self, DomainSpec};

/// `π j₀₁²`, the value of `|Ω|·λ(Ω)` for a disk.
pub const DISK_LAMBDA_QUOTIENT: f64 = 18.168_320_834_614_3;
/// `1/(8π)`, the value of `T(Ω)/|Ω|²` for a disk.
pub const DISK_TORSION_QUOTIENT: f64 = 1.0 / (8.0 * std::f64::consts::PI);

/// Failures that carry their own exit code.
#[derive(Debug)]
pub enum Failure {
    Violation(String),
    Solver(String),
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Violation(m) => write!(f, "property violated: {m}"),
            Failure::Solver(m) => write!(f, "solver failure: {m}"),
        }
    }
}

impl std::error::Error for Failure {}

/// Collects property checks for one command.
struct Checks<'a> {
    cfg: &'a RunConfig,
    violations: Vec<String>,
}

impl<'a> Checks<'a> {
    fn new(cfg: &'a RunConfig) -> Self {
        Self {
            cfg,
            violations: Vec::new(),
        }
    }

    fn require(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.violations.push(what());
        }
    }

    fn monotone(&mut self, label: &str, m: &Monotonicity) {
        let slack = self.cfg.slack;
        self.require(m.within(slack), || {
            format!(
                "{label}: lambda rose by {:.3e}, torsion fell by {:.3e} (slack {slack})",
                m.max_lambda_increase, m.max_torsion_decrease
            )
        });
    }

    fn solved(&mut self, label: &str, trace: &FlowTrace) -> anyhow::Result<()> {
        if let Some(s) = trace.samples.iter().find(|s| s.error.is_some()) {
            return Err(Failure::Solver(format!(
                "{label} at tau={}: {}",
                s.tau,
                s.error.as_deref().unwrap_or_default()
            ))
            .into());
        }
        Ok(())
    }

    fn finish(self) -> anyhow::Result<()> {
        if self.violations.is_empty() {
            return Ok(());
        }
        let msg = self.violations.join("; ");
        match self.cfg.on_violation {
            OnViolation::Error => Err(Failure::Violation(msg).into()),
            OnViolation::Warn => {
                eprintln!("warning: {msg}");
                Ok(())
            }
        }
    }
}

struct Output {
    dir: PathBuf,
}

impl Output {
    fn new(cfg: &RunConfig) -> anyhow::Result<Self> {
        fs::create_dir_all(&cfg.out_dir)
            .with_context(|| format!("creating {}", cfg.out_dir.display()))?;
        Ok(Self {
            dir: cfg.out_dir.clone(),
        })
    }

    fn write(&self, name: &str, contents: &str) -> anyhow::Result<PathBuf> {
        let p = self.dir.join(name);
        fs::write(&p, contents).with_context(|| format!("writing {}", p.display()))?;
        Ok(p)
    }

    fn json<T: Serialize>(&self, name: &str, value: &T) -> anyhow::Result<PathBuf> {
        self.write(name, &serde_json::to_string_pretty(value)?)
    }

    fn trace(&self, stem: &str, trace: &FlowTrace) -> anyhow::Result<()> {
        self.write(&format!("{stem}.csv"), &io::trace_csv(trace))?;
        self.write(&format!("{stem}.json"), &io::trace_json(trace)?)?;
        Ok(())
    }

    fn svgs(&self, stem: &str, domains: &[RasterDomain]) -> anyhow::Result<()> {
        for (k, d) in domains.iter().enumerate() {
            self.write(&format!("{stem}_{k:03}.svg"), &io::domain_svg(d))?;
        }
        Ok(())
    }

    fn domain(&self, stem: &str, d: &RasterDomain) -> anyhow::Result<()> {
        io::save_domain(&self.dir.join(format!("{stem}.txt")), d)?;
        self.write(&format!("{stem}.svg"), &io::domain_svg(d))?;
        Ok(())
    }
}

fn print_trace_summary(trace: &FlowTrace) {
    println!("samples    {}", trace.samples.len());
    if let (Some(a), Some(b)) = (trace.samples.first(), trace.samples.last()) {
        let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.6}"));
        println!("lambda     {} -> {}", fmt(a.lambda), fmt(b.lambda));
        println!("torsion    {} -> {}", fmt(a.torsion), fmt(b.torsion));
        println!("perimeter  {:.6} -> {:.6}", a.perimeter, b.perimeter);
    }
    println!("jumps      {}", trace.jumps.len());
    for j in &trace.jumps {
        println!("  tau {:.4} -> {:.4}: dT = {:.6}", j.tau_before, j.tau_after, j.delta_t);
    }
    if let Some(w) = &trace.warning {
        eprintln!("warning: {w}");
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Functionals {
    pub cells: usize,
    pub h: f64,
    pub measure: f64,
    pub lambda: f64,
    pub torsion: f64,
    pub perimeter: f64,
    pub lambda_quotient: f64,
    pub torsion_quotient: f64,
    pub disk_lambda_quotient: f64,
    pub disk_torsion_quotient: f64,
    pub torsion_residual: f64,
    pub eigen_residual: f64,
}

pub fn functionals(
    cfg: &RunConfig,
    spec: &DomainSpec,
    as_json: bool,
    fields: bool,
) -> anyhow::Result<()> {
    let d = input::load_one(spec, &cfg.grid)?;
    let u = pde::torsion(&d, &cfg.solver)?;
    let v = pde::eigen1_from(&d, &cfg.solver, Some(&u.values))?;
    let m = d.measure();
    let r = Functionals {
        cells: d.cell_count(),
        h: d.grid().h,
        measure: m,
        lambda: v.functional_value,
        torsion: u.functional_value,
        perimeter: pde::perimeter(&d),
        lambda_quotient: m * v.functional_value,
        torsion_quotient: u.functional_value / (m * m),
        disk_lambda_quotient: DISK_LAMBDA_QUOTIENT,
        disk_torsion_quotient: DISK_TORSION_QUOTIENT,
        torsion_residual: u.residual_norm,
        eigen_residual: v.residual_norm,
    };
    if fields {
        let out = Output::new(cfg)?;
        out.write("torsion.csv", &io::field_csv(&u))?;
        out.write("torsion.pgm", &io::field_pgm(&u))?;
        out.write("eigen.csv", &io::field_csv(&v))?;
        out.write("eigen.pgm", &io::field_pgm(&v))?;
    }
    if as_json {
        println!("{}", serde_json::to_string_pretty(&r)?);
    } else {
        println!("cells      {}", r.cells);
        println!("h          {}", r.h);
        println!("measure    {:.6}", r.measure);
        println!("lambda     {:.6}", r.lambda);
        println!("torsion    {:.6}", r.torsion);
        println!("perimeter  {:.6}", r.perimeter);
        println!("|O|*lambda {:.6}  (disk {:.6})", r.lambda_quotient, DISK_LAMBDA_QUOTIENT);
        println!("T/|O|^2    {:.6}  (disk {:.6})", r.torsion_quotient, DISK_TORSION_QUOTIENT);
    }
    Ok(())
}

pub fn css(cfg: &RunConfig, spec: &DomainSpec, theta: f64) -> anyhow::Result<()> {
    let d = input::load_one(spec, &cfg.grid)?;
    let trace = flows::css_path(&d, theta, cfg.samples, &cfg.flow())?;
    let out = Output::new(cfg)?;
    out.trace("css", &trace)?;
    out.svgs("css", &flows::css_domains(&d, theta, cfg.samples)?)?;
    print_trace_summary(&trace);
    let mut checks = Checks::new(cfg);
    checks.solved("css", &trace)?;
    checks.monotone("css", &trace.monotonicity);
    checks.finish()
}

pub fn symmetrize(
    cfg: &RunConfig,
    spec: &DomainSpec,
    theta: f64,
    output: Option<&Path>,
) -> anyhow::Result<()> {
    let d = input::load_one(spec, &cfg.grid)?;
    let s = steiner_symmetrize(&d, theta)?;
    let path = match output {
        Some(p) => p.to_path_buf(),
        None => Output::new(cfg)?.dir.join("symmetrized.txt"),
    };
    io::save_domain(&path, &s)?;
    fs::write(path.with_extension("svg"), io::domain_svg(&s))?;
    println!("cells      {} -> {}", d.cell_count(), s.cell_count());
    println!("perimeter  {:.6} -> {:.6}", pde::perimeter(&d), pde::perimeter(&s));
    println!("wrote      {}", path.display());
    Ok(())
}

pub fn roundtrip(cfg: &RunConfig, spec: &DomainSpec) -> anyhow::Result<()> {
    let d = input::load_one(spec, &cfg.grid)?;
    let r = flows::round_to_ball(&d, &cfg.schedule()?, cfg.stop_tol, &cfg.flow())?;
    let out = Output::new(cfg)?;
    out.trace("roundtrip", &r.trace)?;
    out.json(
        "roundtrip_summary.json",
        &json!({
            "cycles": r.cycles,
            "converged": r.converged,
            "stop_tol": cfg.stop_tol,
            "disk_distance": r.disk_distance,
            "step_monotonicity": r.step_monotonicity,
        }),
    )?;
    out.domain("roundtrip_final", &r.domain)?;
    print_trace_summary(&r.trace);
    println!("cycles     {} (converged: {})", r.cycles, r.converged);
    println!("disk dist  {:.6}", r.disk_distance.last().copied().unwrap_or(f64::NAN));
    let mut checks = Checks::new(cfg);
    checks.solved("roundtrip", &r.trace)?;
    checks.monotone("roundtrip cycles", &r.trace.monotonicity);
    checks.monotone("roundtrip steps", &r.step_monotonicity);
    checks.finish()
}

pub fn repair(
    cfg: &RunConfig,
    minus: &DomainSpec,
    plus: Option<&DomainSpec>,
    orders: &[u32],
) -> anyhow::Result<()> {
    let (minus, plus) = match plus {
        Some(p) => {
            let mut v = input::load_all(&[minus.clone(), p.clone()], &cfg.grid)?;
            let p = v.pop().expect("two domains");
            (v.pop().expect("two domains"), p)
        }
        None => {
            let m = input::load_one(minus, &cfg.grid)?;
            let p = flows::remove_fractures(&m);
            (m, p)
        }
    };
    let mut orders = orders.to_vec();
    if orders.is_empty() {
        orders.push(flows::grid_curve_order(&plus));
    }
    orders.sort_unstable();
    orders.dedup();

    let out = Output::new(cfg)?;
    let mut checks = Checks::new(cfg);
    let mut rows = Vec::new();
    for &k in &orders {
        let trace = flows::repair_path(&minus, &plus, k, cfg.samples, &cfg.flow())?;
        out.trace(&format!("repair_k{k}"), &trace)?;
        checks.solved(&format!("repair order {k}"), &trace)?;
        checks.monotone(&format!("repair order {k}"), &trace.monotonicity);
        println!(
            "order {k:>2}  max dT {:.6e}  jumps {}",
            trace.max_torsion_increment,
            trace.jumps.len()
        );
        rows.push(json!({
            "order": k,
            "max_torsion_increment": trace.max_torsion_increment,
            "jumps": trace.jumps.len(),
        }));
    }
    let incs: Vec<f64> = rows
        .iter()
        .map(|r| r["max_torsion_increment"].as_f64().unwrap_or(f64::NAN))
        .collect();
    let nonincreasing = incs.windows(2).all(|w| w[1] <= w[0] * (1.0 + cfg.slack));
    checks.require(nonincreasing, || {
        format!("max torsion increment grew with the curve order: {incs:?}")
    });
    out.json(
        "repair.json",
        &json!({ "orders": rows, "max_increment_nonincreasing": nonincreasing }),
    )?;
    let path = RepairPath::new(&minus, &plus, *orders.last().expect("nonempty"))?;
    let n = cfg.samples;
    let domains = (0..n)
        .map(|i| path.domain_at(i as f64 / (n - 1) as f64))
        .collect::<shapeflow::Result<Vec<_>>>()?;
    out.svgs("repair", &domains)?;
    checks.finish()
}

pub fn minmov(cfg: &RunConfig, spec: &DomainSpec) -> anyhow::Result<()> {
    let d = input::load_one(spec, &cfg.grid)?;
    let f = cfg.functional()?;
    let mm = cfg.minmov_config();
    let t = minmov::trajectory(&d, f, &mm)?;
    let out = Output::new(cfg)?;
    out.trace("minmov", &t.trace)?;
    out.json(
        "minmov_summary.json",
        &json!({
            "functional": f,
            "config": mm,
            "values": t.values,
            "step_distances": t.step_distances,
        }),
    )?;
    out.svgs("minmov", &t.domains)?;
    print_trace_summary(&t.trace);
    println!(
        "F          {:.6} -> {:.6}",
        t.values.first().copied().unwrap_or(f64::NAN),
        t.values.last().copied().unwrap_or(f64::NAN)
    );
    let mut checks = Checks::new(cfg);
    checks.solved("minmov", &t.trace)?;
    checks.finish()
}

pub fn gamma_dist(cfg: &RunConfig, a: &DomainSpec, b: &DomainSpec, as_json: bool) -> anyhow::Result<()> {
    let v = input::load_all(&[a.clone(), b.clone()], &cfg.grid)?;
    let ua = pde::torsion(&v[0], &cfg.solver)?;
    let ub = pde::torsion(&v[1], &cfg.solver)?;
    let l2 = pde::field_distance_l2(&ua, &ub);
    let l1 = pde::field_distance_l1(&ua, &ub);
    if as_json {
        println!("{}", json!({ "l2": l2, "l1": l1 }));
    } else {
        println!("gamma L2   {l2:.6e}");
        println!("gamma L1   {l1:.6e}");
    }
    Ok(())
}

pub fn generate(cfg: &RunConfig, spec: &DomainSpec, output: &Path) -> anyhow::Result<()> {
    let d = input::load_one(spec, &cfg.grid)?;
    io::save_domain(output, &d)?;
    println!(
        "wrote      {} ({}x{}, {} cells)",
        output.display(),
        d.grid().nx,
        d.grid().ny,
        d.cell_count()
    );
    Ok(())
}
