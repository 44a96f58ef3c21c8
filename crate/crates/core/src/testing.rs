//! Seeded random instance generators shared by unit tests, integration tests
//! and benchmarks. Not intended for production use.

use crate::model::{Horizon, MarkovPolicy, MdpModel, ScenarioVertex, UncertaintySet};
use rand::Rng;

/// Random dense model: uniform-normalized transition rows, rewards in [-1, 1],
/// random initial distribution.
pub fn random_model<R: Rng>(
    rng: &mut R,
    num_states: usize,
    num_actions: usize,
    horizon: Horizon,
    discount: f64,
) -> MdpModel {
    let mut nominal_p = Vec::with_capacity(num_states);
    let mut nominal_r = Vec::with_capacity(num_states);
    for _ in 0..num_states {
        let mut p_s = Vec::with_capacity(num_actions);
        let mut r_s = Vec::with_capacity(num_actions);
        for _ in 0..num_actions {
            p_s.push(random_distribution(rng, num_states));
            r_s.push(rng.gen_range(-1.0..1.0));
        }
        nominal_p.push(p_s);
        nominal_r.push(r_s);
    }
    MdpModel {
        num_states,
        num_actions,
        horizon,
        discount,
        initial_dist: random_distribution(rng, num_states),
        nominal_p,
        nominal_r,
    }
}

/// Uniform-normalized random probability vector.
pub fn random_distribution<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..len).map(|_| rng.gen_range(0.05..1.0)).collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / sum).collect()
}

/// Uncertainty set with up to `max_extra` additional random vertices per state
/// (both transitions and rewards deviate).
pub fn random_uncertainty<R: Rng>(
    rng: &mut R,
    model: &MdpModel,
    max_extra: usize,
) -> UncertaintySet {
    let extra = (0..model.num_states)
        .map(|_| {
            let k = rng.gen_range(0..=max_extra);
            (0..k)
                .map(|_| ScenarioVertex {
                    p: (0..model.num_actions)
                        .map(|_| random_distribution(rng, model.num_states))
                        .collect(),
                    r: (0..model.num_actions).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                })
                .collect()
        })
        .collect();
    UncertaintySet::from_deviations(model, extra)
}

/// Uncertainty set whose vertices keep the nominal transition kernel and
/// deviate only in rewards.
pub fn random_reward_only_uncertainty<R: Rng>(
    rng: &mut R,
    model: &MdpModel,
    max_extra: usize,
) -> UncertaintySet {
    let extra = (0..model.num_states)
        .map(|s| {
            let k = rng.gen_range(0..=max_extra);
            (0..k)
                .map(|_| ScenarioVertex {
                    p: model.nominal_p[s].clone(),
                    r: (0..model.num_actions).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                })
                .collect()
        })
        .collect();
    UncertaintySet::from_deviations(model, extra)
}

/// Random stage-by-stage randomized Markov policy for a finite-horizon model.
pub fn random_randomized_policy<R: Rng>(rng: &mut R, model: &MdpModel) -> MarkovPolicy {
    let t_len = match model.horizon {
        Horizon::Finite(t) => t,
        Horizon::Infinite => panic!("random policy needs a finite horizon"),
    };
    MarkovPolicy::Randomized(
        (0..t_len)
            .map(|_| {
                (0..model.num_states)
                    .map(|_| random_distribution(rng, model.num_actions))
                    .collect()
            })
            .collect(),
    )
}

/// One state, one action, constant reward 1; the simplest closed-form model.
pub fn single_state_model(horizon: usize, discount: f64, reward: f64) -> MdpModel {
    MdpModel {
        num_states: 1,
        num_actions: 1,
        horizon: Horizon::Finite(horizon),
        discount,
        initial_dist: vec![1.0],
        nominal_p: vec![vec![vec![1.0]]],
        nominal_r: vec![vec![reward]],
    }
}
