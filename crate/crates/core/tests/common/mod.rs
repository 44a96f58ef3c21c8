//! Independent oracles shared by the integration and acceptance suites.
//! These deliberately re-derive their answers through different formulations
//! than the solvers they check.
#![allow(dead_code)] // each test binary uses its own subset

use rmdp_core::lp::{self, LpOutcome, StandardLp};
use rmdp_core::{MdpModel, UncertaintySet};

/// All scenario assignments with at most `budget` deviating states, each
/// state realizing one of its non-nominal vertices.
pub fn all_assignments(
    model: &MdpModel,
    usets: &UncertaintySet,
    budget: usize,
) -> Vec<Vec<(usize, usize)>> {
    let mut out = vec![Vec::new()];
    for s in 0..model.num_states {
        let grown: Vec<Vec<(usize, usize)>> = out
            .iter()
            .flat_map(|assignment| {
                let mut variants = vec![assignment.clone()];
                if assignment.len() < budget {
                    for k in 1..usets.per_state[s].len() {
                        let mut with = assignment.clone();
                        with.push((s, k));
                        variants.push(with);
                    }
                }
                variants
            })
            .collect();
        out = grown;
    }
    out
}

/// Reward-only non-adaptive optimum by the explicit max-min linear program:
/// every admissible assignment becomes one epigraph constraint over the
/// occupancy polytope. Independent of the cutting-plane loop.
pub fn enumeration_lp_value(model: &MdpModel, usets: &UncertaintySet, budget: usize) -> f64 {
    let t_len = match model.horizon {
        rmdp_core::Horizon::Finite(t) => t,
        _ => panic!("finite horizon required"),
    };
    let (n, m) = (model.num_states, model.num_actions);
    let num_rho = t_len * n * m;
    let assignments = all_assignments(model, usets, budget);
    let num_vars = num_rho + 2 + assignments.len(); // rho, t+, t-, slack per cut
    let idx = |t: usize, s: usize, a: usize| (t * n + s) * m + a;

    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for s in 0..n {
        let mut row = vec![0.0; num_vars];
        for a in 0..m {
            row[idx(0, s, a)] = 1.0;
        }
        rows.push(row);
        rhs.push(model.initial_dist[s]);
    }
    for t in 1..t_len {
        for sp in 0..n {
            let mut row = vec![0.0; num_vars];
            for a in 0..m {
                row[idx(t, sp, a)] = 1.0;
            }
            for s in 0..n {
                for a in 0..m {
                    row[idx(t - 1, s, a)] -= model.discount * model.nominal_p[s][a][sp];
                }
            }
            rows.push(row);
            rhs.push(0.0);
        }
    }
    for (j, assignment) in assignments.iter().enumerate() {
        let mut rewards = model.nominal_r.clone();
        for &(s, k) in assignment {
            rewards[s] = usets.per_state[s][k].r.clone();
        }
        let mut row = vec![0.0; num_vars];
        for t in 0..t_len {
            for s in 0..n {
                for a in 0..m {
                    row[idx(t, s, a)] = rewards[s][a];
                }
            }
        }
        row[num_rho] = -1.0;
        row[num_rho + 1] = 1.0;
        row[num_rho + 2 + j] = -1.0;
        rows.push(row);
        rhs.push(0.0);
    }
    let mut c = vec![0.0; num_vars];
    c[num_rho] = -1.0;
    c[num_rho + 1] = 1.0;
    match lp::solve(&StandardLp { num_vars, a: rows, b: rhs, c }).unwrap() {
        LpOutcome::Optimal { x, .. } => x[num_rho] - x[num_rho + 1],
        other => panic!("enumeration LP unsolvable: {other:?}"),
    }
}

/// Rectangular (uncoupled) robust value iteration, infinite horizon: every
/// state may realize its worst vertex at every stage.
pub fn robust_uncoupled_infinite(model: &MdpModel, usets: &UncertaintySet, tol: f64) -> Vec<f64> {
    let (n, m) = (model.num_states, model.num_actions);
    let gamma = model.discount;
    assert!(gamma < 1.0);
    let mut v = vec![0.0; n];
    for _ in 0..5_000_000 {
        let mut v_new = vec![0.0; n];
        let mut residual = 0.0_f64;
        for s in 0..n {
            let mut best = f64::NEG_INFINITY;
            for a in 0..m {
                let mut worst = f64::INFINITY;
                for vertex in &usets.per_state[s] {
                    let mut q = vertex.r[a];
                    for (sp, p) in vertex.p[a].iter().enumerate() {
                        q += gamma * p * v[sp];
                    }
                    worst = worst.min(q);
                }
                best = best.max(worst);
            }
            v_new[s] = best;
            residual = residual.max((best - v[s]).abs());
        }
        v = v_new;
        if residual <= tol {
            return v;
        }
    }
    panic!("robust value iteration did not converge");
}
