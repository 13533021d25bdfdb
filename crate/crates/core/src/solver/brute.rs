//! Exhaustive search over placements, evaluated with the charge-flow
//! semantics rather than the linear model.
//!
//! Given `x`, periods are independent: each period picks the cheapest
//! feasible on/off vector over `2^|N|` candidates. The placements themselves
//! are enumerated as base-`(L+1)` numbers (digit 0 means "not built").

use std::time::Instant;

use crate::charge_flow::{evaluate_cost, FlowEvaluator, PadAssignment, FEASIBILITY_TOL};
use crate::error::SolverError;
use crate::exec::{self, Execution};
use crate::formulation::{FormulationOptions, VariableMap};
use crate::network::NetworkInstance;

use super::{SolveResult, SolveStats, SolveStatus};

/// Largest search space (`(L+1)^(|N|M) · 2^(|N|T)`) enumerated by default.
pub const DEFAULT_SEARCH_CAP: u64 = 1 << 22;

const CHUNKS: usize = 64;

pub fn brute_force(instance: &NetworkInstance, options: &FormulationOptions, cap: u64) -> Result<SolveResult, SolverError> {
    brute_force_with(instance, options, cap, Execution::default())
}

/// Returns the cheapest feasible assignment; ties go to the placement with
/// the lowest enumeration index and, per period, the lowest on/off mask.
pub fn brute_force_with(instance: &NetworkInstance, options: &FormulationOptions, cap: u64, execution: Execution) -> Result<SolveResult, SolverError> {
    let start = Instant::now();
    instance.validate().map_err(|e| SolverError::Model(e.to_string()))?;
    let d = instance.dims();
    let sites = d.site_count();
    let size = ((d.lengths + 1) as f64).powi(sites as i32) * 2f64.powi((d.routes * d.horizon) as i32);
    if size > cap as f64 || d.routes >= 63 {
        return Err(SolverError::SearchSpace { size, cap });
    }
    let eval = FlowEvaluator::new(instance)?;
    let budget = if options.use_budget {
        Some(instance.params.budget.ok_or_else(|| SolverError::Model("budget requested but the instance has no budget".into()))?)
    } else {
        None
    };
    let placements = (d.lengths as u64 + 1).pow(sites as u32);
    let chunk = placements.div_ceil(CHUNKS as u64).max(1);
    let chunks = placements.div_ceil(chunk) as usize;

    let results = exec::map_indexed(execution, chunks, |c| -> Result<Option<(f64, u64, PadAssignment)>, SolverError> {
        let mut best: Option<(f64, u64, PadAssignment)> = None;
        let lo = c as u64 * chunk;
        let hi = (lo + chunk).min(placements);
        for k in lo..hi {
            let mut assign = decode(d, k);
            if let Some(b) = budget {
                let spent: f64 = assign.x.iter().enumerate().filter(|(_, &x)| x).map(|(i, _)| instance.params.ccc[i]).sum();
                if spent > b + FEASIBILITY_TOL * b.abs().max(1.0) {
                    continue;
                }
            }
            if !choose_states(&eval, &mut assign)? {
                continue;
            }
            let cost = evaluate_cost(instance, &assign);
            if best.as_ref().is_none_or(|(bc, _, _)| cost < *bc) {
                best = Some((cost, k, assign));
            }
        }
        Ok(best)
    });

    let mut best: Option<(f64, u64, PadAssignment)> = None;
    for r in results {
        if let Some(cand) = r? {
            if best.as_ref().is_none_or(|b| cand.0 < b.0 || (cand.0 == b.0 && cand.1 < b.1)) {
                best = Some(cand);
            }
        }
    }
    let stats = SolveStats { nodes: placements, lp_iterations: 0, wall_time: start.elapsed() };
    Ok(match best {
        Some((cost, _, assign)) => {
            let values = VariableMap::new(d).column_values(instance, &assign)?;
            SolveResult { status: SolveStatus::Optimal, objective: Some(cost), values: Some(values), bound: cost, stats }
        }
        None => SolveResult::without_solution(SolveStatus::Infeasible, f64::INFINITY, stats),
    })
}

fn decode(d: crate::network::Dims, mut k: u64) -> PadAssignment {
    let mut a = PadAssignment::empty(d);
    let base = d.lengths as u64 + 1;
    for r in 0..d.routes {
        for m in 0..d.sites {
            let digit = (k % base) as usize;
            k /= base;
            if digit > 0 {
                a.x[d.rml(r, m, digit - 1)] = true;
            }
        }
    }
    a
}

/// Sets the cheapest feasible on/off states per period; `false` when some
/// period has none.
fn choose_states(eval: &FlowEvaluator<'_>, assign: &mut PadAssignment) -> Result<bool, SolverError> {
    let instance = eval.instance();
    let d = assign.dims;
    let p = &instance.params;
    for t in 0..d.horizon {
        let full: Vec<f64> = (0..d.routes).map(|r| assign.pad_gain(instance, r, t)).collect();
        // variable cost of switching route r on in period t
        let var_cost: Vec<f64> = (0..d.routes)
            .map(|r| {
                (0..d.sites)
                    .filter_map(|m| assign.selected_length(r, m).map(|l| p.ccv[d.rmt(r, m, t)] * instance.delivered(r, m, l, t)))
                    .sum()
            })
            .collect();
        let mut best: Option<(f64, u64)> = None;
        let mut gain = vec![0.0; d.routes];
        for mask in 0u64..(1u64 << d.routes) {
            // switching on a route without pads changes nothing; keep it off
            if (0..d.routes).any(|r| mask >> r & 1 == 1 && full[r] == 0.0) {
                continue;
            }
            for r in 0..d.routes {
                gain[r] = if mask >> r & 1 == 1 { full[r] } else { 0.0 };
            }
            let cost: f64 = (0..d.routes).filter(|r| mask >> r & 1 == 1).map(|r| var_cost[r]).sum();
            if best.is_some_and(|(bc, _)| cost >= bc) {
                continue;
            }
            let u = eval.period(t, &gain)?;
            let ok = (0..d.routes).all(|r| {
                u[r] >= p.ma - FEASIBILITY_TOL && eval.inflow(eval.origin(r), t, &u) + gain[r] <= 1.0 + FEASIBILITY_TOL
            });
            if ok {
                best = Some((cost, mask));
            }
        }
        let Some((_, mask)) = best else { return Ok(false) };
        for r in 0..d.routes {
            assign.p[d.rt(r, t)] = mask >> r & 1 == 1;
        }
    }
    Ok(true)
}
