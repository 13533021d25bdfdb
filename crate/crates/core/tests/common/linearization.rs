//! Exhaustive check of the product linearization on random toys.

use padplan::formulation::linearize_product;
use padplan::model::MilpModel;
use padplan::solver::{solve_lp, SolveStatus, SolverConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Toy {
    pub model: MilpModel,
    pub expr: Vec<(usize, f64)>,
    pub gate: usize,
    pub z: usize,
}

/// `expr_vars` binaries in the expression plus one gate; big-M is the
/// expression's upper bound times `slack ≥ 1`.
pub fn toy(seed: u64, expr_vars: usize, slack: f64) -> Toy {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = MilpModel::new(format!("toy-{seed}"));
    let expr: Vec<(usize, f64)> = (0..expr_vars).map(|i| (model.add_binary(format!("x{i}"), 0.0), rng.random_range(0.0..0.3))).collect();
    let gate = model.add_binary("g", 0.0);
    let upper: f64 = expr.iter().map(|&(_, a)| a).sum();
    let rows = linearize_product(&mut model, "z", &expr, upper, gate, upper * slack, 0.0).expect("sound big-M");
    Toy { model, expr, gate, z: rows.z }
}

/// Number of binary assignments whose feasible `z` range is not exactly
/// `{expr · gate}` (or empty), and the number of assignments checked.
pub fn counterexamples(t: &Toy, tol: f64) -> (usize, usize) {
    let binaries: Vec<usize> = t.expr.iter().map(|&(j, _)| j).chain([t.gate]).collect();
    let config = SolverConfig::default();
    let mut bad = 0;
    let total = 1usize << binaries.len();
    for mask in 0..total {
        let mut m = t.model.clone();
        for (bit, &j) in binaries.iter().enumerate() {
            let v = ((mask >> bit) & 1) as f64;
            m.variables[j].lower = v;
            m.variables[j].upper = v;
        }
        let on = |j: usize| (mask >> binaries.iter().position(|&b| b == j).expect("binary")) & 1 == 1;
        let target = if on(t.gate) { t.expr.iter().filter(|&&(j, _)| on(j)).map(|&(_, a)| a).sum() } else { 0.0 };
        let mut range = [f64::NAN; 2];
        for (k, sign) in [1.0, -1.0].into_iter().enumerate() {
            m.objective.iter_mut().for_each(|c| *c = 0.0);
            m.objective[t.z] = sign;
            let res = solve_lp(&m, &config).expect("lp solves");
            if res.status == SolveStatus::Optimal {
                range[k] = sign * res.objective.expect("optimal");
            }
        }
        // NaN (an infeasible fixing) fails both comparisons
        if !((range[0] - target).abs() <= tol && (range[1] - target).abs() <= tol) {
            bad += 1;
        }
    }
    (bad, total)
}
