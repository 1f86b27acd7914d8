//! `shapeflow` command-line driver.
//!
//! Exit codes: 0 success, 2 input error, 3 property violation, 4 solver failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod input;

use commands::Failure;
use config::{OnViolation, RunConfig, SearchKind};
use input::DomainSpec;

const LONG_ABOUT: &str = "\
Shape flows on planar raster domains.

A DOMAIN is a mask file (header `nx ny h`, then rows top first, with an
optional `<file>.json` sidecar for origin, cracks and pins) or a built-in
shape `builtin:NAME[:key=value,...]`. Built-in names: rectangle, square,
disk, ellipse, stadium, lshape, notched, slit.";

#[derive(Debug, Parser)]
#[command(name = "shapeflow", version, about = "Shape flows on planar raster domains", long_about = LONG_ABOUT)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// TOML run configuration; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Cell size for built-in shapes.
    #[arg(long, global = true)]
    h: Option<f64>,
    #[arg(long, global = true)]
    nx: Option<usize>,
    #[arg(long, global = true)]
    ny: Option<usize>,
    /// Extra room around built-in shapes.
    #[arg(long, global = true)]
    margin: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    cg_tol: Option<f64>,
    #[arg(long, global = true)]
    eig_tol: Option<f64>,
    #[arg(long, global = true)]
    jump_factor: Option<f64>,
    #[arg(long, global = true)]
    jump_floor: Option<f64>,
    /// Relative tolerance of monotonicity checks.
    #[arg(long, global = true)]
    slack: Option<f64>,
    /// Report property violations on stderr and exit 0.
    #[arg(long, global = true)]
    warn_only: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Measure, first eigenvalue, torsion and perimeter of a domain.
    Functionals {
        domain: String,
        #[arg(long)]
        json: bool,
        /// Also write torsion and eigenfunction fields (CSV, PGM).
        #[arg(long)]
        fields: bool,
    },
    /// Continuous symmetrization path in one direction.
    Css {
        domain: String,
        /// Direction of the symmetrization line, in radians.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        theta: f64,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Full Steiner symmetrization in one direction.
    Symmetrize {
        domain: String,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        theta: f64,
        /// Mask file to write (default `<out>/symmetrized.txt`).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Iterated symmetrization until the domain is close to a disk.
    Roundtrip {
        domain: String,
        #[arg(long)]
        stop_tol: Option<f64>,
        /// Comma-separated directions in radians.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        angles: Option<Vec<f64>>,
        #[arg(long)]
        max_cycles: Option<usize>,
    },
    /// Increasing path that fills cracks and holes along a Hilbert curve.
    Repair {
        /// The smaller domain, possibly cracked.
        minus: String,
        /// The larger domain (default: MINUS without its cracks and pins).
        #[arg(long)]
        plus: Option<String>,
        /// Curve orders, comma-separated (default: one cell per subsquare).
        #[arg(long, value_delimiter = ',')]
        orders: Vec<u32>,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Minimizing movements with a symmetric-difference penalty.
    Minmov {
        domain: String,
        /// lambda, neg_torsion or perimeter.
        #[arg(long)]
        functional: Option<String>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        /// Objective evaluations per step.
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long, value_enum)]
        search: Option<SearchArg>,
    },
    /// Torsion-function distance between two domains on the same grid.
    GammaDist {
        a: String,
        b: String,
        #[arg(long)]
        json: bool,
    },
    /// Write a built-in shape as a mask file.
    Generate {
        domain: String,
        #[arg(long)]
        output: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum SearchArg {
    Greedy,
    Annealing,
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn build_config(cli: &Cli) -> anyhow::Result<RunConfig> {
    let g = &cli.global;
    let mut c = match &g.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    set(&mut c.out_dir, g.out.clone());
    set(&mut c.grid.h, g.h);
    if g.nx.is_some() {
        c.grid.nx = g.nx;
    }
    if g.ny.is_some() {
        c.grid.ny = g.ny;
    }
    set(&mut c.grid.margin, g.margin);
    set(&mut c.seed, g.seed);
    set(&mut c.solver.cg_tol, g.cg_tol);
    set(&mut c.solver.eig_tol, g.eig_tol);
    set(&mut c.jump_factor, g.jump_factor);
    set(&mut c.jump_floor, g.jump_floor);
    set(&mut c.slack, g.slack);
    if g.warn_only {
        c.on_violation = OnViolation::Warn;
    }
    match &cli.command {
        Command::Css { samples, .. } | Command::Repair { samples, .. } => set(&mut c.samples, *samples),
        Command::Roundtrip {
            stop_tol,
            angles,
            max_cycles,
            ..
        } => {
            set(&mut c.stop_tol, *stop_tol);
            set(&mut c.angles, angles.clone());
            set(&mut c.max_cycles, *max_cycles);
        }
        Command::Minmov {
            functional,
            epsilon,
            steps,
            budget,
            search,
            ..
        } => {
            set(&mut c.minmov.functional, functional.clone());
            set(&mut c.minmov.epsilon, *epsilon);
            set(&mut c.minmov.steps, *steps);
            set(&mut c.minmov.swap_budget, *budget);
            set(
                &mut c.minmov.search,
                search.map(|s| match s {
                    SearchArg::Greedy => SearchKind::Greedy,
                    SearchArg::Annealing => SearchKind::Annealing,
                }),
            );
        }
        _ => {}
    }
    c.validate()?;
    Ok(c)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = build_config(&cli)?;
    let spec = |s: &str| DomainSpec::parse(s);
    match &cli.command {
        Command::Functionals { domain, json, fields } => {
            commands::functionals(&cfg, &spec(domain)?, *json, *fields)
        }
        Command::Css { domain, theta, .. } => commands::css(&cfg, &spec(domain)?, *theta),
        Command::Symmetrize {
            domain,
            theta,
            output,
        } => commands::symmetrize(&cfg, &spec(domain)?, *theta, output.as_deref()),
        Command::Roundtrip { domain, .. } => commands::roundtrip(&cfg, &spec(domain)?),
        Command::Repair {
            minus, plus, orders, ..
        } => {
            let plus = plus.as_deref().map(spec).transpose()?;
            commands::repair(&cfg, &spec(minus)?, plus.as_ref(), orders)
        }
        Command::Minmov { domain, .. } => commands::minmov(&cfg, &spec(domain)?),
        Command::GammaDist { a, b, json } => commands::gamma_dist(&cfg, &spec(a)?, &spec(b)?, *json),
        Command::Generate { domain, output } => commands::generate(&cfg, &spec(domain)?, output),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(f) = cause.downcast_ref::<Failure>() {
            return match f {
                Failure::Violation(_) => 3,
                Failure::Solver(_) => 4,
            };
        }
        if let Some(e) = cause.downcast_ref::<shapeflow::Error>() {
            return match e {
                shapeflow::Error::PropertyViolation(_) => 3,
                shapeflow::Error::Convergence { .. } => 4,
                _ => 2,
            };
        }
    }
    2
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.toml");
        std::fs::write(&p, "samples = 5\nseed = 7\n[minmov]\nepsilon = 3.0\n").unwrap();
        let cli = Cli::parse_from([
            "shapeflow",
            "--config",
            p.to_str().unwrap(),
            "--seed",
            "9",
            "minmov",
            "builtin:disk",
            "--steps",
            "2",
        ]);
        let c = build_config(&cli).unwrap();
        assert_eq!(c.samples, 5);
        assert_eq!(c.seed, 9);
        assert_eq!(c.minmov.epsilon, 3.0);
        assert_eq!(c.minmov.steps, 2);
        assert_eq!(c.minmov_config().seed, 9);
    }

    #[test]
    fn error_kinds_map_to_exit_codes() {
        let e = anyhow::Error::new(shapeflow::Error::EmptyDomain);
        assert_eq!(exit_code(&e), 2);
        let e = anyhow::Error::new(shapeflow::Error::Convergence {
            iterations: 1,
            residual: 1.0,
        });
        assert_eq!(exit_code(&e), 4);
        let e = anyhow::Error::new(Failure::Violation("x".into())).context("running css");
        assert_eq!(exit_code(&e), 3);
        assert_eq!(exit_code(&anyhow::anyhow!("bad flag")), 2);
    }
}
