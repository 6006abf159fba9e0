//! Hybrid cooperative co-evolution search.
//!
//! Two subpopulations co-evolve: one holds job entry orders, the other
//! job-to-factory maps. Each entity is paired with a collaborator from the
//! other subpopulation, an elite archive receives local search, and the
//! subpopulations are restarted when the best solution stagnates.

mod baseline;
mod heuristics;
mod local_search;
mod state;

use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::instance::{Coding, Instance};
use crate::schedule::EvalResult;

pub use baseline::{greedy_l1, random_search};
pub use heuristics::{h1_assign, h2_insert, l1_lambda, l2_lambda};
pub use local_search::{critical_min_factory, CriticalInfo};
pub use state::{Elite, Entity, Solver, SolverState};

/// Which parts of the search are enabled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Collaborator co-evolution, information transfer and elite local search.
    Full,
    /// As `Full` without the elite local search.
    NoLocalSearch,
    /// Heuristic initialization plus plain co-evolution: collaborators only
    /// change on self-improvement, no information transfer, no local search.
    NoCooperation,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Full => "hcce",
            Variant::NoLocalSearch => "hcce-nols",
            Variant::NoCooperation => "hcce-noco",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Small,
    Medium,
    Large,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "small" => Ok(Preset::Small),
            "medium" => Ok(Preset::Medium),
            "large" => Ok(Preset::Large),
            other => Err(Error::InvalidParams(format!("unknown preset `{other}`"))),
        }
    }
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Small => "small",
            Preset::Medium => "medium",
            Preset::Large => "large",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverParams {
    /// Subpopulation size.
    pub ps: usize,
    /// Elite archive size as a fraction of `ps`.
    pub ep: f64,
    /// Generations without improvement before the subpopulations restart.
    pub alpha: usize,
    /// Fraction of jobs removed by the destruction move.
    pub cd: f64,
    /// Wall-clock budget; `None` runs until `max_generations`.
    pub budget_ms: Option<u64>,
    pub max_generations: Option<u64>,
    pub seed: u64,
    pub variant: Variant,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self::preset(Preset::Small)
    }
}

impl SolverParams {
    /// Tuned values per instance size.
    pub fn preset(preset: Preset) -> Self {
        let (ps, ep, alpha, cd) = match preset {
            Preset::Small => (50, 0.2, 21, 0.1),
            Preset::Medium => (35, 0.5, 21, 0.1),
            Preset::Large => (25, 0.2, 3, 0.7),
        };
        Self {
            ps,
            ep,
            alpha,
            cd,
            budget_ms: None,
            max_generations: None,
            seed: 0,
            variant: Variant::Full,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ps == 0 {
            return Err(Error::InvalidParams("population size must be at least 1".into()));
        }
        if !(self.ep > 0.0 && self.ep <= 1.0) {
            return Err(Error::InvalidParams(format!("ep must lie in (0, 1], got {}", self.ep)));
        }
        if !(self.cd > 0.0 && self.cd < 1.0) {
            return Err(Error::InvalidParams(format!("cd must lie in (0, 1), got {}", self.cd)));
        }
        if self.alpha == 0 {
            return Err(Error::InvalidParams("alpha must be at least 1".into()));
        }
        if self.budget_ms.is_none() && self.max_generations.is_none() {
            return Err(Error::InvalidParams(
                "either a time budget or a generation limit is required".into(),
            ));
        }
        Ok(())
    }

    /// Elite archive size, at least one.
    pub fn archive_size(&self) -> usize {
        ((self.ep * self.ps as f64).round() as usize).clamp(1, self.ps)
    }

    /// Number of jobs removed by the destruction move for `jobs` jobs.
    pub fn destruction_count(&self, jobs: usize) -> usize {
        // Absorb float noise such as 30 * 0.1 = 3.0000000000000004.
        ((jobs as f64 * self.cd - 1e-9).ceil() as usize).clamp(1, jobs)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveStats {
    pub generations: u64,
    pub evaluations: u64,
    pub restarts: u64,
    pub elapsed_ms: u64,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub coding: Coding,
    pub eval: EvalResult,
    pub stats: SolveStats,
}

/// Runs the search until the time budget or the generation limit is hit.
pub fn solve(inst: &Instance, params: &SolverParams) -> Result<SolveOutcome> {
    params.validate()?;
    let started = Instant::now();
    let deadline = params.budget_ms.map(|ms| started + Duration::from_millis(ms));
    let mut solver = Solver::initialize(inst, params.clone(), deadline)?;
    let mut generations = 0u64;
    let mut restarts = 0u64;
    while params.max_generations.is_none_or(|g| generations < g) && !solver.expired() {
        let before = solver.state().best_ever.ca_max;
        solver.generation()?;
        generations += 1;
        if solver.state().best_ever.ca_max < before {
            solver.state_mut().stagnation = 0;
        } else {
            solver.state_mut().stagnation += 1;
        }
        if solver.state().stagnation >= params.alpha && !solver.expired() {
            solver.restart()?;
            restarts += 1;
        }
    }
    let evaluations = solver.state().eval_count;
    let best = solver.into_state().best_ever;
    Ok(SolveOutcome {
        coding: best.coding(),
        eval: best,
        stats: SolveStats {
            generations,
            evaluations,
            restarts,
            elapsed_ms: started.elapsed().as_millis() as u64,
        },
    })
}
