//! Experiment orchestration: run matrices over (problem, variant, noise,
//! seed), CSV persistence, reliability tables and performance-profile
//! statistics.

mod profile;
mod reference;

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use profile::{
    performance_profile_area, profile_by_noise, reliability, write_profile_csv, GroupKey,
    ProfileRow, ProfileStats, ReliabilityRow, PROFILE_T_MAX,
};
pub use reference::{reference_objective, ReferenceObjective};

use crate::driver::{solve, RunResult, RunStatus, SolverConfig, TraceLevel};
use crate::error::{AdicError, Result};
use crate::model::{catalog, NoisyGradientWrapper};
use crate::steps::Variant;

/// Whether cells are run one after another or spread over a thread pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Uses rayon when the `parallel` feature is on; sequential otherwise.
    #[default]
    Parallel,
}

#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub problems: Vec<String>,
    pub variants: Vec<Variant>,
    pub noise_levels: Vec<f64>,
    /// Seeds per cell; seed indices run `0..seeds`.
    pub seeds: usize,
    /// Configuration shared by every run (its variant is overridden).
    pub base: SolverConfig,
    /// `(tol_dual, tol_primal)` used for runs with positive noise.
    pub noisy_tolerances: Option<(f64, f64)>,
    pub execution: Execution,
    /// Evaluate the reference objective at each final iterate.
    pub report_f: bool,
}

impl ExperimentPlan {
    pub fn new(
        problems: Vec<String>,
        variants: Vec<Variant>,
        noise_levels: Vec<f64>,
        seeds: usize,
    ) -> Self {
        Self {
            problems,
            variants,
            noise_levels,
            seeds,
            base: SolverConfig {
                trace: TraceLevel::Off,
                compute_psi: false,
                ..SolverConfig::default()
            },
            noisy_tolerances: Some((1e-3, 1e-3)),
            execution: Execution::default(),
            report_f: false,
        }
    }

    /// Every cell of the run matrix, in output order.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::with_capacity(self.len());
        for p in &self.problems {
            for &v in &self.variants {
                for &noise in &self.noise_levels {
                    for seed in 0..self.seeds {
                        out.push(Cell {
                            problem: p.clone(),
                            variant: v,
                            noise,
                            seed,
                        });
                    }
                }
            }
        }
        out.sort_by(|a, b| {
            a.order_key()
                .partial_cmp(&b.order_key())
                .expect("finite noise")
        });
        out
    }

    pub fn len(&self) -> usize {
        self.problems.len() * self.variants.len() * self.noise_levels.len() * self.seeds
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Solver configuration of one cell.
    pub fn config_for(&self, cell: &Cell) -> SolverConfig {
        let mut cfg = SolverConfig {
            variant: cell.variant,
            ..self.base.clone()
        };
        if cell.noise > 0.0 {
            if let Some((d, p)) = self.noisy_tolerances {
                cfg.tol_dual = d;
                cfg.tol_primal = p;
            }
        }
        cfg
    }

    fn validate(&self) -> Result<()> {
        for p in &self.problems {
            catalog::build(p)?;
        }
        if self
            .noise_levels
            .iter()
            .any(|s| !(s.is_finite() && *s >= 0.0))
        {
            return Err(AdicError::InvalidConfig(
                "noise levels must be finite and nonnegative".into(),
            ));
        }
        self.base.validate()
    }
}

/// Identity of one run in the matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub problem: String,
    pub variant: Variant,
    pub noise: f64,
    pub seed: usize,
}

impl Cell {
    fn order_key(&self) -> (&str, Variant, f64, usize) {
        (&self.problem, self.variant, self.noise, self.seed)
    }

    /// RNG seed of the cell: the first 8 bytes of a SHA-256 digest of its
    /// identity.
    pub fn rng_seed(&self) -> u64 {
        cell_seed(&self.problem, self.variant, self.noise, self.seed)
    }
}

pub fn cell_seed(problem: &str, variant: Variant, noise: f64, seed_index: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(problem.as_bytes());
    h.update([0u8]);
    h.update(variant.as_str().as_bytes());
    h.update([0u8]);
    h.update(noise.to_bits().to_le_bytes());
    h.update((seed_index as u64).to_le_bytes());
    let digest = h.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

/// One completed run.
#[derive(Debug, Clone)]
pub struct PlanRun {
    pub cell: Cell,
    pub result: RunResult,
    /// Reference objective at the final iterate, when requested.
    pub final_f: Option<f64>,
}

/// Runs one cell. Errors only on invalid input, never on solver outcome.
pub fn run_cell(plan: &ExperimentPlan, cell: &Cell) -> Result<PlanRun> {
    let problem = catalog::build(&cell.problem)?;
    let cfg = plan.config_for(cell);
    let mut source = NoisyGradientWrapper::new(problem, cell.noise, cell.rng_seed());
    let result = solve(&mut source, &cfg)?;
    let final_f = if plan.report_f {
        reference_objective(&cell.problem).map(|f| f(&result.x))
    } else {
        None
    };
    Ok(PlanRun {
        cell: cell.clone(),
        result,
        final_f,
    })
}

/// Executes the full matrix. Output is sorted by (problem, variant, noise,
/// seed) and independent of the execution mode.
pub fn run_plan(plan: &ExperimentPlan) -> Result<Vec<PlanRun>> {
    plan.validate()?;
    let cells = plan.cells();
    let runs: Result<Vec<PlanRun>> = match plan.execution {
        Execution::Sequential => cells.iter().map(|c| run_cell(plan, c)).collect(),
        Execution::Parallel => run_parallel(plan, &cells),
    };
    runs
}

#[cfg(feature = "parallel")]
fn run_parallel(plan: &ExperimentPlan, cells: &[Cell]) -> Result<Vec<PlanRun>> {
    use rayon::prelude::*;
    cells.par_iter().map(|c| run_cell(plan, c)).collect()
}

#[cfg(not(feature = "parallel"))]
fn run_parallel(plan: &ExperimentPlan, cells: &[Cell]) -> Result<Vec<PlanRun>> {
    cells.iter().map(|c| run_cell(plan, c)).collect()
}

/// One line of the results CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub problem: String,
    pub variant: Variant,
    pub noise: f64,
    pub seed: usize,
    pub status: RunStatus,
    pub iters: usize,
    pub tangential_iters: usize,
    pub normal_iters: usize,
    pub final_chi_t: f64,
    pub final_chi_n: f64,
    pub final_norm_c_inf: f64,
    pub wall_s: f64,
}

impl RunRow {
    /// Equality on everything except timing.
    pub fn same_outcome(&self, other: &RunRow) -> bool {
        RunRow {
            wall_s: 0.0,
            ..self.clone()
        } == RunRow {
            wall_s: 0.0,
            ..other.clone()
        }
    }
}

impl From<&PlanRun> for RunRow {
    fn from(r: &PlanRun) -> Self {
        RunRow {
            problem: r.cell.problem.clone(),
            variant: r.cell.variant,
            noise: r.cell.noise,
            seed: r.cell.seed,
            status: r.result.status,
            iters: r.result.iters,
            tangential_iters: r.result.tangential_count,
            normal_iters: r.result.normal_count,
            final_chi_t: r.result.chi_t,
            final_chi_n: r.result.chi_n,
            final_norm_c_inf: r.result.norm_c_inf,
            wall_s: r.result.wall_time_s,
        }
    }
}

pub const CSV_COLUMNS: [&str; 12] = [
    "problem",
    "variant",
    "noise",
    "seed",
    "status",
    "iters",
    "tangential_iters",
    "normal_iters",
    "final_chi_t",
    "final_chi_n",
    "final_norm_c_inf",
    "wall_s",
];

pub fn write_results_csv<W: Write>(rows: &[RunRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(CSV_COLUMNS)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_results_csv<R: Read>(input: R) -> Result<Vec<RunRow>> {
    let mut rd = csv::Reader::from_reader(input);
    let headers = rd.headers()?.clone();
    if headers.iter().ne(CSV_COLUMNS) {
        return Err(AdicError::ResultsParse {
            line: 1,
            message: format!("unexpected header {headers:?}"),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in rd.deserialize().enumerate() {
        rows.push(rec.map_err(|e: csv::Error| AdicError::ResultsParse {
            line: i + 2,
            message: e.to_string(),
        })?);
    }
    Ok(rows)
}
