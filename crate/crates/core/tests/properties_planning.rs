mod common;

use common::graphs::has_cycle;
use common::tasks::{random_task, TaskShape};
use flowplan::branch_and_cut::{solve_ip, NoCuts, SearchConfig, SearchMode};
use flowplan::driver::{solve_task, RunConfig};
use flowplan::formulations::{encode, Formulation};
use flowplan::model::{MipModel, FEASIBILITY_TOL};
use flowplan::plan::extract_plan;
use flowplan::separation::{
    build_precedence_graph, separate, CutStrategy, CycleSeparator, GraphVariant, PrecedenceGraph, SeparationConfig,
    SeparationMode,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn task(seed: u64) -> flowplan::sas::SasTask {
    random_task(&mut ChaCha8Rng::seed_from_u64(seed), TaskShape::default())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn simple_points_stay_feasible_when_generalized(seed in any::<u64>(), horizon in 1usize..4) {
        let t = task(seed);
        let weak = encode(&t, Formulation::OneSc, horizon).unwrap();
        let strong = encode(&t, Formulation::G1sc, horizon).unwrap();
        prop_assert_eq!(weak.model.variables(), strong.model.variables());
        // a random objective picks out varied integer points of the simple model
        let mut rng = ChaCha8Rng::seed_from_u64(seed.rotate_left(7));
        let obj = (0..weak.model.num_vars()).map(|j| (j, rng.gen_range(-3..=3) as f64)).collect();
        let probe = MipModel::new(weak.model.variables().to_vec(), weak.model.constraints().to_vec(), obj).unwrap();
        let r = solve_ip(&probe, NoCuts, &SearchConfig { mode: SearchMode::Optimize, ..SearchConfig::default() }).unwrap();
        if let Some(p) = r.state.incumbent {
            prop_assert!(strong.model.check_point(&p.values, FEASIBILITY_TOL).unwrap().is_feasible());
            let graph = build_precedence_graph(&strong.task, GraphVariant::Base);
            let sep = CycleSeparator::new(graph, horizon, SeparationConfig::default());
            prop_assert!(sep.is_acyclic(&p.values));
        }
    }

    #[test]
    fn encodings_have_unit_coefficients_and_shape_determined_size(seed in any::<u64>(), horizon in 1usize..4) {
        let t = task(seed);
        let mut renamed = t.clone();
        for (i, v) in renamed.variables.iter_mut().enumerate() {
            v.name = format!("other{i}");
            for (k, val) in v.values.iter_mut().enumerate() {
                *val = format!("w{k}");
            }
        }
        for (i, a) in renamed.actions.iter_mut().enumerate() {
            a.name = format!("op{i}");
        }
        for f in Formulation::ALL {
            let e = encode(&t, f, horizon).unwrap();
            let r = encode(&renamed, f, horizon).unwrap();
            prop_assert_eq!(e.model.num_vars(), r.model.num_vars());
            prop_assert_eq!(e.model.num_rows(), r.model.num_rows());
            for row in e.model.constraints() {
                prop_assert!(row.terms.iter().all(|&(_, c)| c == 1.0 || c == -1.0), "{}", row.name);
            }
            prop_assert!(e.model.objective().iter().all(|&(j, c)| c == 1.0 && e.map.is_action(j)));
            prop_assert!(e.model.variables().iter().all(|v| v.integral && v.lower == 0.0 && v.upper == 1.0));
        }
    }

    #[test]
    fn cuts_are_violated_and_valid(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..=8);
        let density = rng.gen_range(0.1..0.6);
        let arcs: Vec<(usize, usize)> =
            (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).filter(|&(a, b)| a != b).filter(|_| rng.gen_bool(density)).collect();
        let graph = PrecedenceGraph::from_arcs(n, arcs.iter().copied());
        let x: Vec<f64> = (0..n).map(|_| if rng.gen_bool(0.3) { 1.0 } else { rng.gen_range(0.0..1.0) }).collect();
        for mode in [SeparationMode::Paper, SeparationMode::Exact] {
            for cut in separate(&x, n, &graph, 1, mode, CutStrategy::All) {
                let lhs: f64 = cut.actions.iter().map(|&a| x[a]).sum();
                prop_assert!(lhs - cut.rhs() > 1e-9);
                // no acyclic 0/1 selection violates the cut
                for mask in 0u32..1 << n {
                    let sel: Vec<bool> = (0..n).map(|v| mask >> v & 1 == 1).collect();
                    if !has_cycle(n, &arcs, &sel) {
                        let chosen = cut.actions.iter().filter(|&&a| sel[a]).count() as f64;
                        prop_assert!(chosen <= cut.rhs());
                    }
                }
            }
        }
    }

    #[test]
    fn plan_size_equals_action_sum(seed in any::<u64>(), horizon in 1usize..4, f in 0usize..4) {
        let t = task(seed);
        let f = Formulation::ALL[f];
        let enc = encode(&t, f, horizon).unwrap();
        let r = match f.precedence_variant() {
            Some(v) => {
                let sep = CycleSeparator::new(build_precedence_graph(&enc.task, v), horizon, SeparationConfig::default());
                solve_ip(&enc.model, sep, &SearchConfig::default()).unwrap()
            }
            None => solve_ip(&enc.model, NoCuts, &SearchConfig::default()).unwrap(),
        };
        if let Some(p) = r.state.incumbent {
            let plan = extract_plan(&p.values, &enc.map, f).unwrap();
            prop_assert_eq!(plan.num_actions() as f64, p.objective.round());
        }
    }

    #[test]
    fn records_are_reproducible(seed in any::<u64>(), f in 0usize..4) {
        let t = task(seed);
        let cfg = RunConfig { formulation: Formulation::ALL[f], max_periods: 4, ..Default::default() };
        let a = solve_task(&t, &cfg).unwrap().records_text();
        let b = solve_task(&t, &cfg).unwrap().records_text();
        prop_assert_eq!(a, b);
    }
}
