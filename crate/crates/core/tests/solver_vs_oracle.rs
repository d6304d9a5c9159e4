use proptest::prelude::*;

use rsscflp::bnp::{root_column_generation, solve, ChildOrder, SolveStatus, SolverConfig};
use rsscflp::instgen::{generate, GenSpec, Scheme};
use rsscflp::master::InitialPool;
use rsscflp::{oracle, Evaluation};

fn config(fixing: bool, early_termination: bool, child_order: ChildOrder, initial_pool: InitialPool) -> SolverConfig {
    SolverConfig {
        fixing,
        early_termination,
        child_order,
        initial_pool,
        ..SolverConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    // Every solver setting reaches the exhaustive optimum.
    #[test]
    fn all_settings_match_brute_force(
        t4 in any::<bool>(),
        m in 2usize..=4,
        n in 3usize..=8,
        ratio in 1.2f64..4.0,
        gamma in 0usize..=3,
        seed in any::<u64>(),
        fixing in any::<bool>(),
        early in any::<bool>(),
        close_first in any::<bool>(),
        dummy_only in any::<bool>(),
    ) {
        let spec = GenSpec {
            target_ratio: ratio,
            gamma,
            ..GenSpec::new(if t4 { Scheme::T4 } else { Scheme::T3 }, m, n, seed)
        };
        let inst = generate(&spec).unwrap();
        let expected = oracle::brute_force_optimal(&inst).unwrap().objective;
        let order = if close_first { ChildOrder::CloseFirst } else { ChildOrder::OpenFirst };
        let pool = if dummy_only { InitialPool::DummyOnly } else { InitialPool::Singletons };
        let report = solve(&inst, &config(fixing, early, order, pool)).unwrap();
        prop_assert_eq!(report.objective, expected);
        match expected {
            Some(_) => {
                prop_assert_eq!(report.status, SolveStatus::Optimal);
                let a = report.incumbent.unwrap();
                prop_assert_eq!(inst.evaluate(&a).unwrap(), Evaluation::Feasible(expected.unwrap()));
            }
            None => prop_assert_eq!(report.status, SolveStatus::Infeasible),
        }
    }

    // The converged root equals the LP over every feasible allocation.
    #[test]
    fn root_bound_is_the_full_master(
        m in 2usize..=3,
        n in 3usize..=7,
        gamma in 0usize..=2,
        seed in any::<u64>(),
    ) {
        let spec = GenSpec { target_ratio: 2.5, gamma, ..GenSpec::new(Scheme::T4, m, n, seed) };
        let inst = generate(&spec).unwrap();
        let root = root_column_generation(&inst, InitialPool::Singletons).unwrap();
        match oracle::full_master_lp(&inst).unwrap() {
            Some(full) => {
                prop_assert!(!root.infeasible);
                prop_assert!((root.bound - full).abs() <= 1e-6 * (1.0 + full.abs()), "{} vs {}", root.bound, full);
            }
            None => prop_assert!(root.infeasible),
        }
    }
}
