mod common;

use common::{exhaustive_utility, random_instance};
use ofdma_greedy::gsra::{
    brute_force_allocate, greedy_allocate, mu_bounds, projected_power, Kappa, SolverConfig,
};
use ofdma_greedy::mcs::Utility;
use proptest::prelude::*;

fn config(budget: f64) -> SolverConfig {
    SolverConfig::new(budget).with_kappa(Kappa::RelativeToMuMax(1e-6))
}

#[test]
fn greedy_within_certificate_of_exhaustive_optimum() {
    for seed in 0..25 {
        let inst = random_instance(seed, 3, 2, 2);
        let best = exhaustive_utility(&inst);
        let g = greedy_allocate(
            &inst.posteriors,
            &inst.table,
            &Utility::Identity,
            &config(inst.budget),
        )
        .unwrap();
        let gap = best - g.utility;
        assert!(
            gap >= -1e-9 && gap <= g.certificate.bound + 1e-9,
            "seed {seed}: gap {gap}, bound {}",
            g.certificate.bound
        );
        if g.certificate.degenerate {
            assert_eq!(g.certificate.bound, 0.0);
        }
    }
}

#[test]
fn library_exhaustive_search_matches_oracle() {
    for seed in 100..115 {
        let inst = random_instance(seed, 2, 2, 2);
        let best = exhaustive_utility(&inst);
        let b = brute_force_allocate(
            &inst.posteriors,
            &inst.table,
            &Utility::Identity,
            &config(inst.budget),
            5000,
        )
        .unwrap();
        assert!(
            (b.utility - best).abs() <= 1e-9 * best.max(1.0),
            "seed {seed}: {} vs {best}",
            b.utility
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn greedy_schedules_are_feasible(seed in 0u64..10_000) {
        let inst = random_instance(seed, 4, 3, 4);
        let g = greedy_allocate(&inst.posteriors, &inst.table, &Utility::Identity, &SolverConfig::new(inst.budget)).unwrap();
        let users = inst.posteriors.len();
        g.schedule.validate(users, &inst.table, inst.budget, 1e-6).unwrap();
        prop_assert!(g.schedule.total_power() <= inst.budget * (1.0 + 1e-9));
        prop_assert!(g.certificate.bound >= 0.0);
        prop_assert!(g.certificate.bound <= g.certificate.projection_bound + 1e-12);
        prop_assert!(g.certificate.mu_low <= g.certificate.mu_high);
    }

    #[test]
    fn bisection_trace_is_monotone(seed in 0u64..10_000) {
        let inst = random_instance(seed, 4, 3, 3);
        let g = greedy_allocate(&inst.posteriors, &inst.table, &Utility::Identity, &SolverConfig::new(inst.budget)).unwrap();
        let mut trace = g.stats.trace.clone();
        trace.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in trace.windows(2) {
            prop_assert!(w[1].1 <= w[0].1 + 1e-9);
        }
    }

    #[test]
    fn projected_power_non_increasing(seed in 0u64..10_000, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let inst = random_instance(seed, 3, 2, 3);
        let (lo, hi) = mu_bounds(&inst.posteriors, &inst.table, &Utility::Identity, inst.budget).unwrap();
        let (x, y) = (lo + a.min(b) * (hi - lo), lo + a.max(b) * (hi - lo));
        let px = projected_power(x, &inst.posteriors, &inst.table, &Utility::Identity, 1e-12).unwrap();
        let py = projected_power(y, &inst.posteriors, &inst.table, &Utility::Identity, 1e-12).unwrap();
        prop_assert!(py <= px + 1e-9);
    }
}
