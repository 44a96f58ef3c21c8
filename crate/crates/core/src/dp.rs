//! Classical dynamic-programming baselines: nominal backward induction,
//! discounted value iteration, the uncoupled (rectangular) robust recursion,
//! exact policy evaluation and occupancy measures.
//!
//! These anchor every equivalence test in the crate: the budgeted solvers must
//! collapse to `solve_nominal_finite` when the deviation budget is zero and to
//! `solve_robust_uncoupled_finite` when it saturates.

use crate::error::{Result, SolverError};
use crate::model::{validated, MarkovPolicy, MdpModel, UncertaintySet};

/// Fixed-order dot product; all solvers share it so that identical cell
/// expressions produce bitwise-identical values.
#[inline]
pub(crate) fn dot(p: &[f64], v: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (pi, vi) in p.iter().zip(v) {
        acc += pi * vi;
    }
    acc
}

/// One Bellman cell: `r + gamma * sum_s' p(s') v(s')`.
#[inline]
pub(crate) fn q_cell(discount: f64, p_row: &[f64], r_sa: f64, next_values: &[f64]) -> f64 {
    r_sa + discount * dot(p_row, next_values)
}

/// Expected value of stage-1 values under the initial distribution.
pub fn initial_value(model: &MdpModel, stage1_values: &[f64]) -> f64 {
    dot(&model.initial_dist, stage1_values)
}

/// Finite-horizon backward induction on the nominal parameters.
///
/// Returns per-stage value tables `v[t][s]` for `t = 0..=T` (row `T` is the
/// terminal zero vector) and the deterministic argmax policy, ties broken
/// toward the lowest action index.
pub fn solve_nominal_finite(model: &MdpModel) -> Result<(Vec<Vec<f64>>, MarkovPolicy)> {
    let t_len = model.horizon.finite_or_err("solve_nominal_finite")?;
    let (n, m) = (model.num_states, model.num_actions);
    let mut values = vec![vec![0.0; n]; t_len + 1];
    let mut actions = vec![vec![0usize; n]; t_len];
    for t in (0..t_len).rev() {
        let (head, tail) = values.split_at_mut(t + 1);
        let v_next = &tail[0];
        let v_t = &mut head[t];
        for s in 0..n {
            let mut best = f64::NEG_INFINITY;
            let mut best_a = 0;
            for a in 0..m {
                let q = q_cell(model.discount, &model.nominal_p[s][a], model.nominal_r[s][a], v_next);
                if q > best {
                    best = q;
                    best_a = a;
                }
            }
            v_t[s] = best;
            actions[t][s] = best_a;
        }
    }
    Ok((values, MarkovPolicy::Deterministic(actions)))
}

/// Discounted value iteration on the nominal parameters.
///
/// Stops once the sup-norm residual is at most `tol`, which leaves the
/// returned values within `tol * gamma / (1 - gamma)` of the fixed point.
pub fn solve_nominal_infinite(model: &MdpModel, tol: f64) -> Result<(Vec<f64>, Vec<usize>)> {
    if model.discount >= 1.0 {
        return Err(SolverError::Unsupported(
            "value iteration requires discount < 1".to_string(),
        ));
    }
    let (n, m) = (model.num_states, model.num_actions);
    let gamma = model.discount;
    let mut v = vec![0.0; n];
    let mut v_new = vec![0.0; n];
    let max_sweeps = sweep_cap(model.max_abs_reward(), gamma, tol);
    for _ in 0..max_sweeps {
        let mut residual = 0.0_f64;
        for s in 0..n {
            let mut best = f64::NEG_INFINITY;
            for a in 0..m {
                let q = q_cell(gamma, &model.nominal_p[s][a], model.nominal_r[s][a], &v);
                if q > best {
                    best = q;
                }
            }
            v_new[s] = best;
            residual = residual.max((best - v[s]).abs());
        }
        std::mem::swap(&mut v, &mut v_new);
        if residual <= tol {
            let mut policy = vec![0usize; n];
            for s in 0..n {
                let mut best = f64::NEG_INFINITY;
                let mut best_a = 0;
                for a in 0..m {
                    let q = q_cell(gamma, &model.nominal_p[s][a], model.nominal_r[s][a], &v);
                    if q > best {
                        best = q;
                        best_a = a;
                    }
                }
                policy[s] = best_a;
            }
            return Ok((v, policy));
        }
    }
    Err(SolverError::Convergence(format!(
        "value iteration did not reach tolerance {tol} within {max_sweeps} sweeps"
    )))
}

/// Sweep budget for a gamma-contraction starting from the zero vector.
pub(crate) fn sweep_cap(max_abs_reward: f64, gamma: f64, tol: f64) -> usize {
    let scale = (max_abs_reward.max(1.0)) / (1.0 - gamma);
    let needed = ((scale / tol.max(1e-300)).ln() / -(gamma.ln())).ceil();
    if needed.is_finite() && needed > 0.0 {
        needed as usize + 64
    } else {
        64
    }
}

/// Uncoupled (rectangular) robust backward induction: every state may sit at
/// its worst vertex at every stage. This is the budget-saturated baseline.
pub fn solve_robust_uncoupled_finite(
    model: &MdpModel,
    usets: &UncertaintySet,
) -> Result<(Vec<Vec<f64>>, MarkovPolicy)> {
    validated(model, usets)?;
    let t_len = model.horizon.finite_or_err("solve_robust_uncoupled_finite")?;
    let (n, m) = (model.num_states, model.num_actions);
    let mut values = vec![vec![0.0; n]; t_len + 1];
    let mut actions = vec![vec![0usize; n]; t_len];
    for t in (0..t_len).rev() {
        let (head, tail) = values.split_at_mut(t + 1);
        let v_next = &tail[0];
        let v_t = &mut head[t];
        for s in 0..n {
            let mut best = f64::NEG_INFINITY;
            let mut best_a = 0;
            for a in 0..m {
                let mut worst = f64::INFINITY;
                for vertex in &usets.per_state[s] {
                    let q = q_cell(model.discount, &vertex.p[a], vertex.r[a], v_next);
                    if q < worst {
                        worst = q;
                    }
                }
                if worst > best {
                    best = worst;
                    best_a = a;
                }
            }
            v_t[s] = best;
            actions[t][s] = best_a;
        }
    }
    Ok((values, MarkovPolicy::Deterministic(actions)))
}

fn check_params(model: &MdpModel, p: &[Vec<Vec<f64>>], r: &[Vec<f64>]) -> Result<()> {
    let (n, m) = (model.num_states, model.num_actions);
    if p.len() != n || r.len() != n {
        return Err(SolverError::DimensionMismatch(format!(
            "parameter tables cover {} states, model has {n}",
            p.len()
        )));
    }
    for s in 0..n {
        if p[s].len() != m || r[s].len() != m {
            return Err(SolverError::DimensionMismatch(format!(
                "parameter tables for state {s} cover {} actions, model has {m}",
                p[s].len()
            )));
        }
        for a in 0..m {
            if p[s][a].len() != n {
                return Err(SolverError::DimensionMismatch(format!(
                    "transition row (s={s}, a={a}) has length {}",
                    p[s][a].len()
                )));
            }
        }
    }
    Ok(())
}

/// Exact expected discounted reward of a Markov policy under the given
/// parameters, by forward propagation of the state distribution. No sampling.
pub fn evaluate_policy_exact(
    model: &MdpModel,
    policy: &MarkovPolicy,
    p: &[Vec<Vec<f64>>],
    r: &[Vec<f64>],
) -> Result<f64> {
    let t_len = model.horizon.finite_or_err("evaluate_policy_exact")?;
    check_params(model, p, r)?;
    if policy.num_stages() != t_len {
        return Err(SolverError::DimensionMismatch(format!(
            "policy covers {} stages, model horizon is {t_len}",
            policy.num_stages()
        )));
    }
    let (n, m) = (model.num_states, model.num_actions);
    let mut dist = model.initial_dist.clone();
    let mut total = 0.0;
    let mut weight = 1.0; // gamma^(t-1)
    for t in 0..t_len {
        let mut next = vec![0.0; n];
        for s in 0..n {
            if dist[s] == 0.0 {
                continue;
            }
            for a in 0..m {
                let pa = policy.action_prob(t, s, a);
                if pa == 0.0 {
                    continue;
                }
                let w = dist[s] * pa;
                total += weight * w * r[s][a];
                for (sp, prob) in p[s][a].iter().enumerate() {
                    next[sp] += w * prob;
                }
            }
        }
        dist = next;
        weight *= model.discount;
    }
    Ok(total)
}

/// Per-stage state-action visitation frequencies of a policy under the
/// nominal kernel. The discount is folded into the measure:
/// `rho_t` carries the weight `gamma^(t-1)`.
#[derive(Debug, Clone)]
pub struct OccupancyMeasure {
    /// `rho[t][s][a]`.
    pub rho: Vec<Vec<Vec<f64>>>,
}

impl OccupancyMeasure {
    pub fn num_stages(&self) -> usize {
        self.rho.len()
    }

    /// `sum_{t,s,a} rho_t(s,a) * r(s,a)` for a stage-constant reward table.
    pub fn weighted_reward(&self, r: &[Vec<f64>]) -> f64 {
        let mut total = 0.0;
        for stage in &self.rho {
            for (s, row) in stage.iter().enumerate() {
                for (a, rho) in row.iter().enumerate() {
                    total += rho * r[s][a];
                }
            }
        }
        total
    }

    /// Total visitation weight of stage `t` (should equal `gamma^t` with the
    /// 0-based stage convention).
    pub fn stage_total(&self, t: usize) -> f64 {
        self.rho[t].iter().flatten().sum()
    }

    /// Checks nonnegativity, the initial-distribution marginal and flow
    /// conservation against the model's nominal kernel.
    pub fn violations(&self, model: &MdpModel, tol: f64) -> Vec<String> {
        let mut out = Vec::new();
        let (n, m) = (model.num_states, model.num_actions);
        for (t, stage) in self.rho.iter().enumerate() {
            for s in 0..n {
                for a in 0..m {
                    let v = stage[s][a];
                    if v < -tol || !v.is_finite() {
                        out.push(format!("rho({t},{s},{a}) = {v} is negative"));
                    }
                }
            }
        }
        for s in 0..n {
            let sum: f64 = self.rho[0][s].iter().sum();
            if (sum - model.initial_dist[s]).abs() > tol {
                out.push(format!(
                    "stage-1 marginal of state {s} is {sum}, initial mass is {}",
                    model.initial_dist[s]
                ));
            }
        }
        for t in 0..self.rho.len().saturating_sub(1) {
            for sp in 0..n {
                let lhs: f64 = self.rho[t + 1][sp].iter().sum();
                let mut rhs = 0.0;
                for s in 0..n {
                    for a in 0..m {
                        rhs += model.nominal_p[s][a][sp] * self.rho[t][s][a];
                    }
                }
                rhs *= model.discount;
                if (lhs - rhs).abs() > tol {
                    out.push(format!(
                        "flow conservation at stage {} state {sp}: {lhs} vs {rhs}",
                        t + 1
                    ));
                }
            }
        }
        out
    }
}

/// Occupancy measure induced by a Markov policy under the nominal kernel.
pub fn occupancy_measure(model: &MdpModel, policy: &MarkovPolicy) -> Result<OccupancyMeasure> {
    let t_len = model.horizon.finite_or_err("occupancy_measure")?;
    if policy.num_stages() != t_len {
        return Err(SolverError::DimensionMismatch(format!(
            "policy covers {} stages, model horizon is {t_len}",
            policy.num_stages()
        )));
    }
    let (n, m) = (model.num_states, model.num_actions);
    let mut rho = vec![vec![vec![0.0; m]; n]; t_len];
    let mut dist = model.initial_dist.clone();
    let mut weight = 1.0;
    for t in 0..t_len {
        for s in 0..n {
            for a in 0..m {
                rho[t][s][a] = weight * dist[s] * policy.action_prob(t, s, a);
            }
        }
        if t + 1 < t_len {
            let mut next = vec![0.0; n];
            for s in 0..n {
                if dist[s] == 0.0 {
                    continue;
                }
                for a in 0..m {
                    let w = dist[s] * policy.action_prob(t, s, a);
                    if w == 0.0 {
                        continue;
                    }
                    for (sp, prob) in model.nominal_p[s][a].iter().enumerate() {
                        next[sp] += w * prob;
                    }
                }
            }
            dist = next;
            weight *= model.discount;
        }
    }
    Ok(OccupancyMeasure { rho })
}
