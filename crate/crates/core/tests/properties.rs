//! Cross-module property tests that don't belong to any single module's unit
//! suite: value orderings between solver families and a couple of randomized
//! invariants.

mod common;

use proptest::prelude::{prop_assert, proptest, ProptestConfig};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rmdp_core::budget::{budget_bound, DeviationRates};
use rmdp_core::dp::{initial_value, solve_nominal_infinite, solve_robust_uncoupled_finite};
use rmdp_core::horizon::{solve_setup_a, solve_setup_b, BudgetSpec};
use rmdp_core::model::validate_model;
use rmdp_core::nonadaptive::solve_nonadaptive_reward_only;
use rmdp_core::testing::{random_model, random_reward_only_uncertainty, random_uncertainty};
use rmdp_core::{Horizon, MarkovPolicy, MdpModel, ScenarioVertex, UncertaintySet};

/// The budgeted infinite-horizon value sits between the rectangular robust
/// value and the nominal value, at every state and budget.
#[test]
fn budgeted_values_sandwiched_between_robust_and_nominal() {
    let mut rng = ChaCha8Rng::seed_from_u64(71);
    for _ in 0..8 {
        let n = rng.gen_range(2..=5);
        let m = rng.gen_range(1..=3);
        let gamma = rng.gen_range(0.5..0.9);
        let model = random_model(&mut rng, n, m, Horizon::Infinite, gamma);
        let usets = random_uncertainty(&mut rng, &model, 2);
        let (v_nom, _) = solve_nominal_infinite(&model, 1e-10).unwrap();
        let v_rob = common::robust_uncoupled_infinite(&model, &usets, 1e-10);

        let a = solve_setup_a(&model, &usets, 3, 1e-10).unwrap();
        for s in 0..n {
            for d in 0..=3 {
                let v = a.values.values[s][d];
                assert!(v <= v_nom[s] + 1e-7, "above nominal at (s={s}, d={d})");
                assert!(v >= v_rob[s] - 1e-7, "below rectangular robust at (s={s}, d={d})");
            }
        }

        let spec = BudgetSpec::discounted(2.5, (gamma + 1.0) / 2.0, 31);
        let b = solve_setup_b(&model, &usets, &spec, 1e-10).unwrap();
        for s in 0..n {
            for (i, _) in b.values.grid.iter().enumerate() {
                let v = b.values.values[s][i];
                assert!(v <= v_nom[s] + 1e-7 && v >= v_rob[s] - 1e-7);
            }
        }
    }
}

/// Setup B saturates at the rectangular robust value once the budget covers a
/// deviation at every remaining stage.
#[test]
fn discounted_budget_saturates_at_rectangular_robust() {
    let mut rng = ChaCha8Rng::seed_from_u64(73);
    let model = random_model(&mut rng, 3, 2, Horizon::Infinite, 0.6);
    let usets = random_uncertainty(&mut rng, &model, 2);
    let beta = 0.8;
    let spec = BudgetSpec::discounted(50.0, beta, 101); // cap = 1/(1-beta) = 5
    let sol = solve_setup_b(&model, &usets, &spec, 1e-11).unwrap();
    let v_rob = common::robust_uncoupled_infinite(&model, &usets, 1e-11);
    for s in 0..3 {
        let top = *sol.values.values[s].last().unwrap();
        assert!((top - v_rob[s]).abs() <= 1e-7, "state {s}: {top} vs {}", v_rob[s]);
    }
}

/// A per-stage adversary is at least as strong as one that must fix its
/// deviations for the whole run, so the rectangular robust value never
/// exceeds the non-adaptive optimum (reward-only, full budget).
#[test]
fn nonadaptive_value_dominates_rectangular_robust() {
    let mut rng = ChaCha8Rng::seed_from_u64(75);
    for _ in 0..10 {
        let n = rng.gen_range(1..=3);
        let t = rng.gen_range(1..=3);
        let model = random_model(&mut rng, n, 2, Horizon::Finite(t), 1.0);
        let usets = random_reward_only_uncertainty(&mut rng, &model, 1);
        let sol = solve_nonadaptive_reward_only(&model, &usets, n, 1e-8).unwrap();
        let (v_rob, _) = solve_robust_uncoupled_finite(&model, &usets).unwrap();
        let robust = initial_value(&model, &v_rob[0]);
        assert!(sol.value >= robust - 1e-6, "{} vs robust {robust}", sol.value);
    }
}

/// The dominance can be strict: a stage-varying adversary ruins every
/// deterministic policy of this one-state model for -2, while against a fixed
/// realization the alternating policy only concedes -1.
#[test]
fn stage_varying_adversary_beats_fixed_assignments() {
    let model = MdpModel {
        num_states: 1,
        num_actions: 2,
        horizon: Horizon::Finite(2),
        discount: 1.0,
        initial_dist: vec![1.0],
        nominal_p: vec![vec![vec![1.0], vec![1.0]]],
        nominal_r: vec![vec![0.0, 0.0]],
    };
    let usets = UncertaintySet::from_deviations(
        &model,
        vec![vec![
            ScenarioVertex { p: vec![vec![1.0], vec![1.0]], r: vec![0.0, -1.0] },
            ScenarioVertex { p: vec![vec![1.0], vec![1.0]], r: vec![-1.0, 0.0] },
        ]],
    );
    let (v_rob, _) = solve_robust_uncoupled_finite(&model, &usets).unwrap();
    assert_eq!(v_rob[0][0], -2.0);
    let sol = solve_nonadaptive_reward_only(&model, &usets, 1, 1e-9).unwrap();
    assert!((sol.value - (-1.0)).abs() <= 1e-7, "{}", sol.value);
}

/// Refining the budget grid shrinks the change between successive solutions:
/// the gap between the 101- and 1001-point grids is no larger than the gap
/// between the 11- and 101-point grids, compared at shared budget points.
#[test]
fn discounted_budget_grid_refinement_converges() {
    let mut rng = ChaCha8Rng::seed_from_u64(79);
    let model = random_model(&mut rng, 3, 2, Horizon::Infinite, 0.7);
    let usets = random_uncertainty(&mut rng, &model, 2);
    let solve = |points: usize| {
        let spec = BudgetSpec::discounted(3.0, 0.85, points);
        solve_setup_b(&model, &usets, &spec, 1e-11).unwrap()
    };
    let coarse = solve(11);
    let mid = solve(101);
    let fine = solve(1001);
    // shared points: the 11-grid sits at indices 10k of the 101-grid and
    // 100k of the 1001-grid
    let mut gap_coarse = 0.0_f64;
    let mut gap_fine = 0.0_f64;
    for s in 0..3 {
        for j in 0..11 {
            gap_coarse =
                gap_coarse.max((coarse.values.values[s][j] - mid.values.values[s][10 * j]).abs());
            gap_fine =
                gap_fine.max((mid.values.values[s][10 * j] - fine.values.values[s][100 * j]).abs());
        }
    }
    assert!(
        gap_fine <= gap_coarse + 1e-10,
        "refinement gap grew: {gap_fine} after {gap_coarse}"
    );
    println!("grid refinement gaps: 11->101 {gap_coarse:.3e}, 101->1001 {gap_fine:.3e}");
}

/// A deterministic Markov policy maximizing against fixed assignments never
/// beats the cutting-plane optimum over randomized policies.
#[test]
fn deterministic_lower_bound_respects_the_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..8 {
        let n = rng.gen_range(1..=2);
        let t = rng.gen_range(1..=3);
        let d = rng.gen_range(0..=2);
        let model = random_model(&mut rng, n, 2, Horizon::Finite(t), 1.0);
        let usets = random_reward_only_uncertainty(&mut rng, &model, 1);
        let (lower, policy) =
            rmdp_core::nonadaptive::brute_force_nonadaptive_lower_bound(&model, &usets, d)
                .unwrap();
        let sol = solve_nonadaptive_reward_only(&model, &usets, d, 1e-8).unwrap();
        assert!(lower <= sol.value + 1e-6);
        assert!(matches!(policy, MarkovPolicy::Deterministic(_)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The budget bound is monotone: more expected deviations or more
    /// confidence always demand a larger budget, and never less than the mean.
    #[test]
    fn budget_bound_monotone(sum in 0.0_f64..40.0, delta in 0.001_f64..0.999, bump in 0.01_f64..5.0) {
        let base = budget_bound(&DeviationRates::new(vec![sum], delta).unwrap()).unwrap();
        let more = budget_bound(&DeviationRates::new(vec![sum + bump], delta).unwrap()).unwrap();
        prop_assert!(more > base);
        prop_assert!(base >= sum);
        let tighter = budget_bound(&DeviationRates::new(vec![sum], delta * 0.5).unwrap()).unwrap();
        prop_assert!(tighter > base);
    }

    /// Perturbing any transition-row entry beyond the tolerance is caught by
    /// validation.
    #[test]
    fn validation_catches_row_perturbations(seed in 0u64..1000, bump in 1e-6_f64..0.5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = random_model(&mut rng, 3, 2, Horizon::Finite(2), 1.0);
        let mut broken = model.clone();
        let (s, a, sp) = (
            rng.gen_range(0..3usize),
            rng.gen_range(0..2usize),
            rng.gen_range(0..3usize),
        );
        broken.nominal_p[s][a][sp] += bump;
        let usets = UncertaintySet::singleton_nominal(&broken);
        prop_assert!(!validate_model(&broken, &usets).is_empty());
    }
}
