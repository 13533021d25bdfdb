mod common;

use padplan::charge_flow::{check_feasibility, evaluate_charge_flow, evaluate_cost, PadAssignment};
use padplan::formulation::{build_model, FormulationOptions, VariableMap};
use padplan::instance_file::{instance_to_string, parse_instance};
use padplan::solver::{solve_milp, SolverConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_assignment(map: &VariableMap, seed: u64) -> PadAssignment {
    let d = map.dims;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = PadAssignment::empty(d);
    for r in 0..d.routes {
        for m in 0..d.sites {
            let pick = rng.random_range(0..=d.lengths);
            if pick < d.lengths {
                a = a.with_pad(r, m, pick);
            }
        }
        for t in 0..d.horizon {
            a.p[d.rt(r, t)] = rng.random_bool(0.6);
        }
    }
    a
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn instance_text_round_trips(seed in any::<u64>()) {
        let inst = common::instances::random_small(seed);
        let back = parse_instance(&instance_to_string(&inst)).unwrap();
        prop_assert_eq!(back, inst);
    }

    #[test]
    fn linearization_is_exact(seed in any::<u64>(), k in 1usize..=7, slack in 1.0f64..4.0) {
        let toy = common::linearization::toy(seed, k, slack);
        let (bad, total) = common::linearization::counterexamples(&toy, 1e-9);
        prop_assert_eq!(total, 1 << (k + 1));
        prop_assert_eq!(bad, 0);
    }

    #[test]
    fn objective_matches_cost_of_any_placement(seed in any::<u64>(), counts in any::<bool>()) {
        let inst = common::instances::random_small(seed);
        let opts = FormulationOptions { count_columns: counts, ..Default::default() };
        let (model, map) = build_model(&inst, &opts).unwrap();
        let assign = random_assignment(&map, seed ^ 0x5eed);
        let values = map.column_values(&inst, &assign).unwrap();
        let cost = evaluate_cost(&inst, &assign);
        let obj = model.objective_value(&values);
        prop_assert!((obj - cost).abs() <= 1e-9 * (1.0 + cost.abs()), "objective {} cost {}", obj, cost);
        let profile = evaluate_charge_flow(&inst, &assign).unwrap();
        if check_feasibility(&inst, &assign, &profile).unwrap().is_feasible() {
            prop_assert!(model.max_violation(&values) <= 1e-8);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn looser_big_m_keeps_the_optimum(seed in any::<u64>(), big_m in prop::sample::select(vec![0.25, 0.5, 1.0, 5.0])) {
        let inst = common::instances::random_small(seed);
        let config = SolverConfig::default();
        let (tight, _) = build_model(&inst, &FormulationOptions::default()).unwrap();
        let (loose, _) = build_model(&inst, &FormulationOptions { big_m: Some(big_m), ..Default::default() }).unwrap();
        let a = solve_milp(&tight, &config).unwrap();
        let b = solve_milp(&loose, &config).unwrap();
        prop_assert_eq!(a.status, b.status);
        if let (Some(x), Some(y)) = (a.objective, b.objective) {
            prop_assert!((x - y).abs() <= 1e-6 * (1.0 + x.abs()), "tight {} loose {}", x, y);
        }
    }
}
