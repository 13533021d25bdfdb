mod common;

use common::textbook::{suite, Expected};
use padplan::model::{MilpModel, Relation};
use padplan::solver::{solve_lp, solve_milp, SolveStatus, SolverConfig};

#[test]
fn textbook_lps_match_known_optima() {
    let config = SolverConfig::default();
    for (name, model, expected) in suite() {
        let res = solve_lp(&model, &config).unwrap_or_else(|e| panic!("{name}: {e}"));
        match expected {
            Expected::Optimal(v) => {
                assert_eq!(res.status, SolveStatus::Optimal, "{name}");
                let obj = res.objective.unwrap();
                assert!((obj - v).abs() <= 1e-9, "{name}: {obj} vs {v}");
                let x = res.values.as_ref().unwrap();
                assert!(model.max_violation(x) <= 1e-9, "{name}: violation {}", model.max_violation(x));
            }
            Expected::Infeasible => {
                assert_eq!(res.status, SolveStatus::Infeasible, "{name}");
                assert!(res.values.is_none());
            }
            Expected::Unbounded => assert_eq!(res.status, SolveStatus::Unbounded, "{name}"),
        }
    }
}

#[test]
fn milp_without_integers_equals_lp() {
    let config = SolverConfig::default();
    for (name, model, _) in suite() {
        let a = solve_lp(&model, &config).unwrap();
        let b = solve_milp(&model, &config).unwrap();
        assert_eq!(a.status, b.status, "{name}");
        assert_eq!(a.objective, b.objective, "{name}");
    }
}

#[test]
fn small_knapsack_milp() {
    // max 10a + 13b + 7c, 4a + 6b + 3c <= 10, binary: best is b + a (23) vs a + c (17) vs b + c (20)
    let mut m = MilpModel::new("knapsack");
    let v: Vec<usize> = [-10.0, -13.0, -7.0].iter().enumerate().map(|(i, &c)| m.add_binary(format!("b{i}"), c)).collect();
    m.add_constraint("cap", vec![(v[0], 4.0), (v[1], 6.0), (v[2], 3.0)], Relation::Le, 10.0);
    let res = solve_milp(&m, &SolverConfig::default()).unwrap();
    assert_eq!(res.status, SolveStatus::Optimal);
    assert!((res.objective.unwrap() + 23.0).abs() < 1e-9);
    let lp = solve_lp(&m, &SolverConfig::default()).unwrap();
    assert!(lp.objective.unwrap() <= res.objective.unwrap() + 1e-9);
}
