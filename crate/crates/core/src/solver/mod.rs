//! LP and MILP solving: a bounded-variable revised simplex, best-first
//! branch-and-bound on top of it, and an exhaustive oracle that bypasses the
//! model entirely.

mod bnb;
mod brute;
#[allow(clippy::needless_range_loop)]
pub(crate) mod lu;
#[allow(clippy::needless_range_loop)]
pub(crate) mod simplex;

use std::time::Duration;

use crate::error::SolverError;
use crate::model::{MilpModel, Relation};

pub use brute::{brute_force, brute_force_with, DEFAULT_SEARCH_CAP};

use simplex::{LpStatus, Simplex, Tolerances};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Branching {
    #[default]
    MostFractional,
    PseudoCost,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub feasibility_tol: f64,
    pub integrality_tol: f64,
    /// Relative optimality gap at which the search stops.
    pub gap: f64,
    pub node_limit: Option<u64>,
    pub time_limit: Option<Duration>,
    pub branching: Branching,
    /// Breaks ties between equally scored branching candidates.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            feasibility_tol: 1e-7,
            integrality_tol: 1e-6,
            gap: 1e-6,
            node_limit: None,
            time_limit: None,
            branching: Branching::MostFractional,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.feasibility_tol > 0.0 && self.integrality_tol > 0.0) {
            return Err(SolverError::Model("tolerances must be positive".into()));
        }
        if self.gap.is_nan() || self.gap < 0.0 {
            return Err(SolverError::Model("gap must be nonnegative".into()));
        }
        Ok(())
    }

    fn tolerances(&self) -> Tolerances {
        Tolerances { primal: self.feasibility_tol, ..Tolerances::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// A node or time limit stopped the search; the incumbent (if any) and
    /// the global bound are reported.
    TimeLimit,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::TimeLimit => "time-limit",
        }
    }
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SolveStats {
    pub nodes: u64,
    pub lp_iterations: u64,
    pub wall_time: Duration,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub objective: Option<f64>,
    pub values: Option<Vec<f64>>,
    /// Proven lower bound on the optimum.
    pub bound: f64,
    pub stats: SolveStats,
}

impl SolveResult {
    fn without_solution(status: SolveStatus, bound: f64, stats: SolveStats) -> Self {
        Self { status, objective: None, values: None, bound, stats }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

/// Solves the continuous relaxation of `model`.
pub fn solve_lp(model: &MilpModel, config: &SolverConfig) -> Result<SolveResult, SolverError> {
    config.validate()?;
    let start = std::time::Instant::now();
    let mut lp = Simplex::new(model, config.tolerances())?;
    let status = lp.solve()?;
    let stats = SolveStats { nodes: 0, lp_iterations: lp.iterations, wall_time: start.elapsed() };
    Ok(match status {
        LpStatus::Optimal => {
            let obj = lp.objective();
            SolveResult { status: SolveStatus::Optimal, objective: Some(obj), values: Some(lp.values().to_vec()), bound: obj, stats }
        }
        LpStatus::Infeasible => SolveResult::without_solution(SolveStatus::Infeasible, f64::INFINITY, stats),
        LpStatus::Unbounded => SolveResult::without_solution(SolveStatus::Unbounded, f64::NEG_INFINITY, stats),
    })
}

/// Branch-and-bound over the integer columns of `model`.
pub fn solve_milp(model: &MilpModel, config: &SolverConfig) -> Result<SolveResult, SolverError> {
    config.validate()?;
    bnb::BranchAndBound::new(model, config)?.run()
}

/// Inequality rows that an infeasible model cannot satisfy together.
///
/// Every inequality row gets a nonnegative slack priced at one; the rows
/// whose slack stays positive in the cheapest repair are returned with that
/// slack, largest first. The relaxation is tried first and the integer model
/// is searched only when the relaxation repairs for free. An empty list means
/// the equality rows alone conflict or no repair was found within limits.
pub fn elastic_rows(model: &MilpModel, config: &SolverConfig) -> Result<Vec<(String, f64)>, SolverError> {
    let mut elastic = model.clone();
    elastic.objective.iter_mut().for_each(|c| *c = 0.0);
    let mut slacks = Vec::new();
    for i in 0..model.num_rows() {
        let sign = match model.constraints[i].relation {
            Relation::Le => -1.0,
            Relation::Ge => 1.0,
            Relation::Eq => continue,
        };
        let s = elastic.add_continuous(format!("slack_{i}"), 0.0, f64::INFINITY, 1.0);
        elastic.constraints[i].coeffs.push((s, sign));
        slacks.push((i, s));
    }
    let tol = config.feasibility_tol;
    let mut res = solve_lp(&elastic, config)?;
    if res.objective.is_some_and(|obj| obj <= tol) {
        res = solve_milp(&elastic, config)?;
    }
    let Some(values) = res.values else { return Ok(Vec::new()) };
    let mut rows: Vec<(String, f64)> =
        slacks.into_iter().filter(|&(_, s)| values[s] > tol).map(|(i, s)| (model.constraints[i].name.clone(), values[s])).collect();
    rows.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(rows)
}
