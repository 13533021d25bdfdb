//! Acceptance checks, one PASS/FAIL line each. Tolerances are fixed here.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::textbook::{suite, Expected};
use padplan::charge_flow::{check_feasibility, evaluate_charge_flow, evaluate_cost, PadAssignment};
use padplan::exec::Execution;
use padplan::formulation::{build_model, FormulationOptions};
use padplan::mps::{read_mps, write_mps};
use padplan::network::NetworkInstance;
use padplan::scenario::{self, SweepReport};
use padplan::solver::{brute_force, solve_lp, solve_milp, SolveStatus, SolverConfig, DEFAULT_SEARCH_CAP};

const ORACLE_INSTANCES: u64 = 240;
const ORACLE_REL_TOL: f64 = 1e-6;
const LINEARIZATION_TOL: f64 = 1e-9;
const LP_ABS_TOL: f64 = 1e-9;
const MPS_TOL: f64 = 1e-9;
const COST_REL_TOL: f64 = 1e-6;
const MPS_MODELS: usize = 10;

/// An optimal placement kept for the objective-consistency check.
struct Returned {
    source: String,
    instance: NetworkInstance,
    assign: PadAssignment,
    objective: f64,
}

struct Report {
    failures: usize,
}

impl Report {
    fn line(&mut self, id: usize, title: &str, ok: bool, detail: String, start: Instant) {
        if !ok {
            self.failures += 1;
        }
        println!("{} {id}. {title}: {detail} [{:.1?}]", if ok { "PASS" } else { "FAIL" }, start.elapsed());
    }
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn oracle(returned: &mut Vec<Returned>) -> (bool, String) {
    let opts = FormulationOptions::default();
    let config = SolverConfig::default();
    let (mut agree, mut feasible) = (0, 0);
    let mut first_bad = None;
    for seed in 0..ORACLE_INSTANCES {
        let inst = common::instances::random_small(seed);
        let (model, map) = build_model(&inst, &opts).expect("formulation");
        let milp = solve_milp(&model, &config).expect("milp");
        let brute = brute_force(&inst, &opts, DEFAULT_SEARCH_CAP).expect("oracle");
        let same = milp.status == brute.status
            && match (milp.objective, brute.objective) {
                (Some(a), Some(b)) => rel_close(a, b, ORACLE_REL_TOL),
                (None, None) => true,
                _ => false,
            };
        if same {
            agree += 1;
        } else if first_bad.is_none() {
            first_bad = Some(seed);
        }
        if let (SolveStatus::Optimal, Some(obj), Some(values)) = (milp.status, milp.objective, milp.values.as_ref()) {
            feasible += 1;
            returned.push(Returned { source: format!("oracle seed {seed}"), assign: map.assignment(values), instance: inst, objective: obj });
        }
    }
    let ok = agree == ORACLE_INSTANCES as usize;
    let mut detail = format!("{agree}/{ORACLE_INSTANCES} instances agree on status and objective (rel {ORACLE_REL_TOL:e}); {feasible} feasible");
    if let Some(seed) = first_bad {
        detail.push_str(&format!("; first disagreement at seed {seed}"));
    }
    (ok, detail)
}

fn linearization() -> (bool, String) {
    let (mut bad, mut checked, mut toys) = (0, 0, 0);
    for k in 1..=7 {
        for seed in 0..6 {
            let slack = 1.0 + seed as f64 * 0.75;
            let toy = common::linearization::toy(1000 * k as u64 + seed, k, slack);
            let (b, n) = common::linearization::counterexamples(&toy, LINEARIZATION_TOL);
            bad += b;
            checked += n;
            toys += 1;
        }
    }
    (bad == 0, format!("{toys} toys with 2..=8 binaries, {checked} assignments enumerated, {bad} counterexamples (tol {LINEARIZATION_TOL:e})"))
}

fn keep_optimal(report: &SweepReport, instances: impl Fn(f64) -> NetworkInstance, returned: &mut Vec<Returned>) {
    for row in &report.rows {
        if let (Some(SolveStatus::Optimal), Some(cost), Some(assign)) = (row.status, row.cost, row.assignment.clone()) {
            returned.push(Returned { source: row.label.clone(), instance: instances(row.value), assign, objective: cost });
        }
    }
}

fn costs_line(report: &SweepReport) -> String {
    report.rows.iter().map(|r| r.cost.map_or_else(|| r.status_str().to_string(), |c| format!("{c:.0}"))).collect::<Vec<_>>().join(" ")
}

fn ma_sweep(base: &NetworkInstance, returned: &mut Vec<Returned>) -> (bool, String, String) {
    let config = scenario::sweep_config();
    let report = scenario::sweep_ma(base, &scenario::DEFAULT_MA_VALUES, &config).expect("sweep");
    keep_optimal(&report, |ma| base.with_ma(ma), returned);
    let rows = &report.rows;
    let solved: Vec<_> = rows.iter().filter(|r| r.value < 0.8).collect();
    let all_optimal = solved.iter().all(|r| r.status == Some(SolveStatus::Optimal));
    let costs: Vec<f64> = solved.iter().filter_map(|r| r.cost).collect();
    let nondecreasing = costs.len() == solved.len() && costs.windows(2).all(|w| w[0] <= w[1]);
    let zero_at_02 = rows.iter().find(|r| r.value == 0.2).is_some_and(|r| r.pads_by_length.iter().sum::<usize>() == 0 && r.cost.is_some());
    let infeasible_08 = rows.iter().find(|r| r.value == 0.8).is_some_and(|r| r.status == Some(SolveStatus::Infeasible));
    let ok = all_optimal && nondecreasing && zero_at_02 && infeasible_08;
    let detail = format!(
        "costs {} (gap {:e}); non-decreasing {nondecreasing}, MA=0.2 builds none {zero_at_02}, MA=0.8 infeasible {infeasible_08}",
        costs_line(&report),
        config.gap
    );
    (ok, detail, report.to_csv())
}

fn solar_sweep(base: &NetworkInstance, returned: &mut Vec<Returned>) -> (bool, String) {
    let config = scenario::sweep_config();
    let inst = base.with_ma(scenario::SOLAR_MA);
    let (grid, solar) = scenario::default_caps(&inst);
    let report = scenario::sweep_solar(&inst, &scenario::DEFAULT_SOLAR_FRACTIONS, grid, solar, &config).expect("sweep");
    keep_optimal(&report, |f| padplan::formulation::apply_capacity(&inst, grid, solar, f), returned);
    let rows = &report.rows;
    let all_optimal = rows.iter().all(|r| r.status == Some(SolveStatus::Optimal));
    let costs: Vec<f64> = rows.iter().filter_map(|r| r.cost).collect();
    let nonincreasing = costs.len() == rows.len() && costs.windows(2).all(|w| w[0] >= w[1]);
    let large = |r: &scenario::SweepRow| r.pads_by_length.last().copied().unwrap_or(0);
    let (l0, l1) = (large(&rows[0]), large(rows.last().expect("rows")));
    let ok = all_optimal && nonincreasing && l1 < l0;
    let detail = format!(
        "costs {} at MA={} (grid {grid}, solar {solar}, gap {:e}); non-increasing {nonincreasing}, large sites {l0} -> {l1}",
        costs_line(&report),
        scenario::SOLAR_MA,
        config.gap
    );
    (ok, detail)
}

fn consistency(returned: &[Returned]) -> (bool, String) {
    let mut bad = Vec::new();
    for r in returned {
        let cost = evaluate_cost(&r.instance, &r.assign);
        let feasible = evaluate_charge_flow(&r.instance, &r.assign)
            .and_then(|profile| check_feasibility(&r.instance, &r.assign, &profile))
            .is_ok_and(|v| v.is_feasible());
        if !rel_close(cost, r.objective, COST_REL_TOL) || !feasible {
            bad.push(format!("{} (cost {cost} vs {}, feasible {feasible})", r.source, r.objective));
        }
    }
    let mut detail = format!("{} optimal solutions re-evaluated, {} mismatches (rel {COST_REL_TOL:e})", returned.len(), bad.len());
    if let Some(first) = bad.first() {
        detail.push_str(&format!("; first: {first}"));
    }
    (bad.is_empty() && !returned.is_empty(), detail)
}

fn textbook() -> (bool, String) {
    let config = SolverConfig::default();
    let cases = suite();
    let mut bad = Vec::new();
    for (name, model, expected) in &cases {
        let ok = match solve_lp(model, &config) {
            Err(_) => false,
            Ok(res) => match *expected {
                Expected::Optimal(v) => res.status == SolveStatus::Optimal && res.objective.is_some_and(|o| (o - v).abs() <= LP_ABS_TOL),
                Expected::Infeasible => res.status == SolveStatus::Infeasible,
                Expected::Unbounded => res.status == SolveStatus::Unbounded,
            },
        };
        if !ok {
            bad.push(*name);
        }
    }
    let n = cases.len();
    let infeasible = cases.iter().filter(|c| c.2 == Expected::Infeasible).count();
    (n >= 20 && bad.is_empty(), format!("{}/{n} LPs ({infeasible} infeasible) within {LP_ABS_TOL:e} absolute; failing {bad:?}", n - bad.len()))
}

fn mps_round_trip() -> (bool, String) {
    let config = SolverConfig::default();
    let mut checked = 0;
    let mut bad = Vec::new();
    let mut seed = 0u64;
    while checked < MPS_MODELS {
        let inst = common::instances::random_small(10_000 + seed);
        seed += 1;
        let opts = FormulationOptions { count_columns: seed.is_multiple_of(2), ..Default::default() };
        let (model, _) = build_model(&inst, &opts).expect("formulation");
        let before = solve_milp(&model, &config).expect("milp");
        if before.status != SolveStatus::Optimal {
            continue;
        }
        checked += 1;
        let after = read_mps(&write_mps(&model)).ok().and_then(|m| solve_milp(&m, &config).ok());
        let same = after.as_ref().is_some_and(|a| {
            a.status == before.status && matches!((a.objective, before.objective), (Some(x), Some(y)) if rel_close(x, y, MPS_TOL))
        });
        if !same {
            bad.push(model.name.clone());
        }
    }
    (bad.is_empty(), format!("{checked} feasible random models exported, re-read and re-solved; objectives within {MPS_TOL:e}; failing {bad:?}"))
}

fn main() -> ExitCode {
    let mut report = Report { failures: 0 };
    let mut returned = Vec::new();
    let base = scenario::bundled_instance();

    let t = Instant::now();
    let (ok, d) = oracle(&mut returned);
    report.line(1, "oracle equivalence", ok, d, t);

    let t = Instant::now();
    let (ok, d) = linearization();
    report.line(2, "linearization exactness", ok, d, t);

    let t = Instant::now();
    let (ok, d, csv) = ma_sweep(&base, &mut returned);
    report.line(3, "MA-sweep trend", ok, d, t);

    let t = Instant::now();
    let (ok, d) = solar_sweep(&base, &mut returned);
    report.line(4, "solar-sweep trend", ok, d, t);

    let t = Instant::now();
    let (ok, d) = consistency(&returned);
    report.line(5, "objective consistency", ok, d, t);

    let t = Instant::now();
    let (ok, d) = textbook();
    report.line(6, "LP core correctness", ok, d, t);

    let t = Instant::now();
    let (ok, d) = mps_round_trip();
    report.line(7, "MPS round trip", ok, d, t);

    // the repeat runs sequentially, so it also covers the parallel/sequential split
    let t = Instant::now();
    let repeat = scenario::sweep_ma_with(&base, &scenario::DEFAULT_MA_VALUES, &scenario::sweep_config(), &scenario::sweep_options(), Execution::Sequential)
        .expect("sweep")
        .to_csv();
    let ok = repeat == csv;
    report.line(8, "determinism", ok, format!("repeated MA sweep CSV byte-identical: {ok} ({} bytes)", csv.len()), t);

    if report.failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
