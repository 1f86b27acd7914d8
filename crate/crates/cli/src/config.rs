use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use shapeflow::flows::{DirectionSchedule, FlowConfig};
use shapeflow::minmov::{AnnealingSchedule, Functional, MinMovConfig, Search};
use shapeflow::SolverConfig;

/// Grid used to rasterize built-in shapes. Domain files carry their own grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub h: f64,
    /// Cell counts of a box centered on the origin. When absent the box is
    /// sized to hold every rotation of the shape plus `margin`.
    pub nx: Option<usize>,
    pub ny: Option<usize>,
    pub margin: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            h: 1.0 / 64.0,
            nx: None,
            ny: None,
            margin: 0.125,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchKind {
    #[default]
    Greedy,
    Annealing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MinMovSection {
    pub functional: String,
    pub epsilon: f64,
    pub steps: usize,
    pub swap_budget: usize,
    pub search: SearchKind,
    pub t0: f64,
    pub cooling: f64,
}

impl Default for MinMovSection {
    fn default() -> Self {
        let mm = MinMovConfig::default();
        let an = AnnealingSchedule::default();
        Self {
            functional: "lambda".into(),
            epsilon: mm.epsilon,
            steps: mm.n_steps,
            swap_budget: mm.swap_budget,
            search: SearchKind::Greedy,
            t0: an.t0,
            cooling: an.cooling,
        }
    }
}

/// What to do when a guaranteed monotonicity fails beyond `slack`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OnViolation {
    #[default]
    Error,
    Warn,
}

/// Everything a run depends on. Loaded from an optional TOML file, then
/// overridden by command-line flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub out_dir: PathBuf,
    pub seed: u64,
    pub samples: usize,
    /// Directions in radians for iterated symmetrization.
    pub angles: Vec<f64>,
    pub max_cycles: usize,
    pub stop_tol: f64,
    pub jump_factor: f64,
    pub jump_floor: f64,
    /// Relative tolerance on monotonicity checks.
    pub slack: f64,
    pub on_violation: OnViolation,
    pub grid: GridSection,
    pub solver: SolverConfig,
    pub minmov: MinMovSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        let flow = FlowConfig::default();
        Self {
            out_dir: PathBuf::from("out"),
            seed: 0,
            samples: 17,
            angles: DirectionSchedule::default().angles().to_vec(),
            max_cycles: flow.max_cycles,
            stop_tol: 0.05,
            jump_factor: flow.jump_factor,
            jump_floor: flow.jump_floor,
            slack: 0.01,
            on_violation: OnViolation::Error,
            grid: GridSection::default(),
            solver: SolverConfig::default(),
            minmov: MinMovSection::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if !(self.grid.h > 0.0 && self.grid.h.is_finite()) {
            bail!("grid.h must be positive, got {}", self.grid.h);
        }
        if !(self.grid.margin >= 0.0) {
            bail!("grid.margin must be nonnegative, got {}", self.grid.margin);
        }
        if self.grid.nx == Some(0) || self.grid.ny == Some(0) {
            bail!("grid.nx and grid.ny must be positive");
        }
        if self.samples < 2 {
            bail!("samples must be at least 2, got {}", self.samples);
        }
        if !(self.slack >= 0.0) {
            bail!("slack must be nonnegative, got {}", self.slack);
        }
        if !(self.stop_tol > 0.0) {
            bail!("stop_tol must be positive, got {}", self.stop_tol);
        }
        self.flow().validate()?;
        self.schedule()?;
        self.functional()?.validate()?;
        self.minmov_config().validate()?;
        Ok(())
    }

    pub fn flow(&self) -> FlowConfig {
        FlowConfig {
            solver: self.solver,
            jump_factor: self.jump_factor,
            jump_floor: self.jump_floor,
            max_cycles: self.max_cycles,
        }
    }

    pub fn schedule(&self) -> anyhow::Result<DirectionSchedule> {
        Ok(DirectionSchedule::new(self.angles.clone())?)
    }

    pub fn functional(&self) -> anyhow::Result<Functional> {
        Ok(Functional::parse(&self.minmov.functional)?)
    }

    pub fn minmov_config(&self) -> MinMovConfig {
        let m = &self.minmov;
        MinMovConfig {
            epsilon: m.epsilon,
            n_steps: m.steps,
            search: match m.search {
                SearchKind::Greedy => Search::Greedy,
                SearchKind::Annealing => Search::Annealing(AnnealingSchedule {
                    t0: m.t0,
                    cooling: m.cooling,
                }),
            },
            swap_budget: m.swap_budget,
            seed: self.seed,
            solver: self.solver,
        }
    }
}
