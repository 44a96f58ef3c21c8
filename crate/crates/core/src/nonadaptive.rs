//! The non-adaptive model: Nature fixes one admissible parameter realization
//! (at most `D` states away from nominal) before the process runs, and the
//! decision maker never observes which.
//!
//! The general problem is NP-hard even for segment uncertainty sets, so this
//! module solves it exactly only at desk scale, by exhaustive enumeration.
//! The reward-only case is tractable and solved in polynomial time: for fixed
//! transitions any policy is summarized by its occupancy measure, the
//! adversary's inner minimization separates across states (pick the `D` most
//! damaging reward deviations), and the resulting objective
//!
//! ```text
//! f(rho) = nominal(rho) + sum of the D smallest negative per-state gains
//! ```
//!
//! is a concave piecewise-linear function of `rho` maximized over the
//! occupancy polytope by cutting planes: a master linear program over
//! `(rho, epigraph)` is tightened with the linearization at the separation
//! oracle's worst assignment until the certified gap closes.

use crate::dp::OccupancyMeasure;
use crate::error::{Result, SolverError};
use crate::lp::{self, LpOutcome, StandardLp};
use crate::model::{validated, MarkovPolicy, MdpModel, UncertaintySet};

/// Default cutting-plane iteration cap.
pub const DEFAULT_MAX_CUTS: usize = 10_000;
/// Default cap on the number of enumerated scenarios or policies.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1_000_000;

/// One admissible realization of the non-adaptive uncertainty: the deviating
/// states (at most `D` of them) and the vertex each realizes; all other
/// states stay nominal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioAssignment {
    /// `(state, vertex index)` pairs, states strictly increasing.
    pub deviated: Vec<(usize, usize)>,
}

impl ScenarioAssignment {
    pub fn nominal() -> ScenarioAssignment {
        ScenarioAssignment { deviated: Vec::new() }
    }

    pub fn violations(
        &self,
        model: &MdpModel,
        usets: &UncertaintySet,
        budget: usize,
    ) -> Vec<String> {
        let mut out = Vec::new();
        if self.deviated.len() > budget {
            out.push(format!(
                "{} deviated states exceed the budget {budget}",
                self.deviated.len()
            ));
        }
        for &(s, k) in &self.deviated {
            if s >= model.num_states || k >= usets.per_state[s].len() {
                out.push(format!("assignment ({s}, {k}) out of range"));
                continue;
            }
            let vertex = &usets.per_state[s][k];
            if vertex.p == model.nominal_p[s] && vertex.r == model.nominal_r[s] {
                out.push(format!("assigned vertex {k} of state {s} equals the nominal point"));
            }
        }
        out
    }

    /// Kernel and rewards with the assigned vertices substituted in.
    pub fn realized_parameters(
        &self,
        model: &MdpModel,
        usets: &UncertaintySet,
    ) -> (Vec<Vec<Vec<f64>>>, Vec<Vec<f64>>) {
        let mut p = model.nominal_p.clone();
        let mut r = model.nominal_r.clone();
        for &(s, k) in &self.deviated {
            p[s] = usets.per_state[s][k].p.clone();
            r[s] = usets.per_state[s][k].r.clone();
        }
        (p, r)
    }
}

fn require_reward_only(model: &MdpModel, usets: &UncertaintySet) -> Result<()> {
    for (s, vs) in usets.per_state.iter().enumerate() {
        for (k, v) in vs.iter().enumerate() {
            if !v.has_nominal_transitions(model, s) {
                return Err(SolverError::Unsupported(format!(
                    "vertex {k} of state {s} deviates transitions; this operation is reward-only"
                )));
            }
        }
    }
    Ok(())
}

/// Exact worst case of a fixed occupancy measure under reward-only
/// deviations: the adversary deviates the `D` states with the most negative
/// visitation-weighted reward gains.
pub fn worst_case_value_reward_only(
    model: &MdpModel,
    rho: &OccupancyMeasure,
    usets: &UncertaintySet,
    budget: usize,
) -> Result<(f64, ScenarioAssignment)> {
    require_reward_only(model, usets)?;
    let (n, m) = (model.num_states, model.num_actions);
    // per-state visitation weights, discount already inside rho
    let mut weights = vec![vec![0.0; m]; n];
    for stage in &rho.rho {
        for s in 0..n {
            for a in 0..m {
                weights[s][a] += stage[s][a];
            }
        }
    }
    let mut nominal_value = 0.0;
    for s in 0..n {
        for a in 0..m {
            nominal_value += weights[s][a] * model.nominal_r[s][a];
        }
    }
    // gain of deviating each state to its best (most damaging) vertex
    let mut gains: Vec<(f64, usize, usize)> = Vec::new(); // (gain, state, vertex)
    for s in 0..n {
        let base: f64 = (0..m).map(|a| weights[s][a] * model.nominal_r[s][a]).sum();
        let mut best: Option<(f64, usize)> = None;
        for (k, vertex) in usets.per_state[s].iter().enumerate().skip(1) {
            let val: f64 = (0..m).map(|a| weights[s][a] * vertex.r[a]).sum();
            let gain = val - base;
            if best.is_none_or(|(g, _)| gain < g) {
                best = Some((gain, k));
            }
        }
        if let Some((gain, k)) = best {
            gains.push((gain, s, k));
        }
    }
    gains.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut value = nominal_value;
    let mut deviated = Vec::new();
    for &(gain, s, k) in gains.iter().take(budget) {
        if gain < 0.0 {
            value += gain;
            deviated.push((s, k));
        }
    }
    deviated.sort_unstable();
    Ok((value, ScenarioAssignment { deviated }))
}

/// Flat variable index of `rho_t(s, a)` in the occupancy polytope LP.
fn rho_index(model: &MdpModel, t: usize, s: usize, a: usize) -> usize {
    (t * model.num_states + s) * model.num_actions + a
}

/// Equality rows of the occupancy polytope: stage-1 marginals equal the
/// initial distribution, later stages obey discounted flow conservation.
fn occupancy_polytope_rows(model: &MdpModel, t_len: usize, num_vars: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let (n, m) = (model.num_states, model.num_actions);
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for s in 0..n {
        let mut row = vec![0.0; num_vars];
        for a in 0..m {
            row[rho_index(model, 0, s, a)] = 1.0;
        }
        rows.push(row);
        rhs.push(model.initial_dist[s]);
    }
    for t in 1..t_len {
        for sp in 0..n {
            let mut row = vec![0.0; num_vars];
            for a in 0..m {
                row[rho_index(model, t, sp, a)] = 1.0;
            }
            for s in 0..n {
                for a in 0..m {
                    row[rho_index(model, t - 1, s, a)] -=
                        model.discount * model.nominal_p[s][a][sp];
                }
            }
            rows.push(row);
            rhs.push(0.0);
        }
    }
    (rows, rhs)
}

/// One cutting-plane iteration: the master's certified upper bound and the
/// separation oracle's exact value at the master's maximizer.
#[derive(Debug, Clone, Copy)]
pub struct CutIteration {
    pub master_value: f64,
    pub candidate_value: f64,
}

/// Output of the reward-only non-adaptive solver.
#[derive(Debug, Clone)]
pub struct NonadaptiveSolution {
    pub occupancy: OccupancyMeasure,
    /// Exact worst-case value of `occupancy` (a certified lower bound that is
    /// within `gap` of the optimum).
    pub value: f64,
    /// Final certified optimality gap.
    pub gap: f64,
    /// Number of cutting-plane iterations performed.
    pub cuts: usize,
    /// Per-iteration upper/lower bound log.
    pub log: Vec<CutIteration>,
    /// Policy extracted from the occupancy (uniform where unvisited).
    pub policy: MarkovPolicy,
}

/// Maximizes the reward-only worst case over all policies via their occupancy
/// measures, by cutting planes on the epigraph formulation.
pub fn solve_nonadaptive_reward_only(
    model: &MdpModel,
    usets: &UncertaintySet,
    budget: usize,
    tol: f64,
) -> Result<NonadaptiveSolution> {
    solve_nonadaptive_reward_only_capped(model, usets, budget, tol, DEFAULT_MAX_CUTS)
}

/// As [`solve_nonadaptive_reward_only`] with an explicit iteration cap.
pub fn solve_nonadaptive_reward_only_capped(
    model: &MdpModel,
    usets: &UncertaintySet,
    budget: usize,
    tol: f64,
    max_cuts: usize,
) -> Result<NonadaptiveSolution> {
    validated(model, usets)?;
    require_reward_only(model, usets)?;
    let t_len = model.horizon.finite_or_err("solve_nonadaptive_reward_only")?;
    let (n, m) = (model.num_states, model.num_actions);
    let num_rho = t_len * n * m;

    // variables: rho, then the split epigraph t = t_plus - t_minus, then one
    // slack per cut
    let mut cuts: Vec<ScenarioAssignment> = vec![ScenarioAssignment::nominal()];
    let mut best: Option<(f64, OccupancyMeasure)> = None;
    let mut log = Vec::new();

    for iteration in 0..max_cuts {
        let num_vars = num_rho + 2 + cuts.len();
        let (mut rows, mut rhs) = occupancy_polytope_rows(model, t_len, num_vars);
        for (j, cut) in cuts.iter().enumerate() {
            let (_, r_cut) = cut.realized_parameters(model, usets);
            let mut row = vec![0.0; num_vars];
            for t in 0..t_len {
                for s in 0..n {
                    for a in 0..m {
                        row[rho_index(model, t, s, a)] = r_cut[s][a];
                    }
                }
            }
            row[num_rho] = -1.0; // t_plus
            row[num_rho + 1] = 1.0; // t_minus
            row[num_rho + 2 + j] = -1.0; // slack
            rows.push(row);
            rhs.push(0.0);
        }
        let mut c = vec![0.0; num_vars];
        c[num_rho] = -1.0;
        c[num_rho + 1] = 1.0;
        let outcome = lp::solve(&StandardLp { num_vars, a: rows, b: rhs, c })?;
        let x = match outcome {
            LpOutcome::Optimal { x, .. } => x,
            other => {
                return Err(SolverError::Convergence(format!(
                    "cutting-plane master LP unsolvable: {other:?}"
                )))
            }
        };
        let master_value = x[num_rho] - x[num_rho + 1];
        let mut rho = vec![vec![vec![0.0; m]; n]; t_len];
        for t in 0..t_len {
            for s in 0..n {
                for a in 0..m {
                    rho[t][s][a] = x[rho_index(model, t, s, a)];
                }
            }
        }
        let candidate = OccupancyMeasure { rho };
        let (f_val, assignment) =
            worst_case_value_reward_only(model, &candidate, usets, budget)?;
        log.push(CutIteration { master_value, candidate_value: f_val });
        if best.as_ref().is_none_or(|(b, _)| f_val > *b) {
            best = Some((f_val, candidate));
        }
        let (best_value, _) = best.as_ref().unwrap();
        let gap = master_value - best_value;
        if gap <= tol || cuts.contains(&assignment) {
            if gap > tol {
                return Err(SolverError::Convergence(format!(
                    "cutting planes stalled with residual gap {gap} > {tol} after {} cuts",
                    iteration + 1
                )));
            }
            let (value, occupancy) = best.unwrap();
            let policy = policy_from_occupancy(model, &occupancy);
            return Ok(NonadaptiveSolution {
                occupancy,
                value,
                gap,
                cuts: iteration + 1,
                log,
                policy,
            });
        }
        cuts.push(assignment);
    }
    let gap = log
        .last()
        .map(|e| e.master_value - best.as_ref().map(|(b, _)| *b).unwrap_or(f64::NEG_INFINITY))
        .unwrap_or(f64::INFINITY);
    Err(SolverError::Convergence(format!(
        "cutting planes exceeded {max_cuts} iterations with residual gap {gap}"
    )))
}

/// Markov policy proportional to the occupancy; uniform where a state has no
/// visitation mass.
fn policy_from_occupancy(model: &MdpModel, occupancy: &OccupancyMeasure) -> MarkovPolicy {
    let (n, m) = (model.num_states, model.num_actions);
    let dist = occupancy
        .rho
        .iter()
        .map(|stage| {
            (0..n)
                .map(|s| {
                    let mass: f64 = stage[s].iter().sum();
                    if mass > 0.0 {
                        (0..m).map(|a| stage[s][a] / mass).collect()
                    } else {
                        vec![1.0 / m as f64; m]
                    }
                })
                .collect()
        })
        .collect();
    MarkovPolicy::Randomized(dist)
}

/// Exact minimum of a fixed policy's value over all vertex-restricted
/// scenario assignments, by full enumeration.
///
/// For transition-deviating vertices this is the worst case over the
/// *vertices* of the admissible set; the hull minimum may in principle lie
/// lower because the value is not concave in transition parameters.
pub fn worst_case_fixed_policy(
    model: &MdpModel,
    usets: &UncertaintySet,
    budget: usize,
    policy: &MarkovPolicy,
) -> Result<(f64, ScenarioAssignment)> {
    worst_case_fixed_policy_capped(model, usets, budget, policy, DEFAULT_ENUMERATION_CAP)
}

/// As [`worst_case_fixed_policy`] with an explicit scenario cap.
pub fn worst_case_fixed_policy_capped(
    model: &MdpModel,
    usets: &UncertaintySet,
    budget: usize,
    policy: &MarkovPolicy,
    cap: u64,
) -> Result<(f64, ScenarioAssignment)> {
    validated(model, usets)?;
    let count = count_assignments(model, usets, budget);
    if count > cap as f64 {
        return Err(SolverError::SizeCap(format!(
            "{count:.3e} scenario assignments exceed the cap {cap}"
        )));
    }
    let mut best: Option<(f64, ScenarioAssignment)> = None;
    let mut current = Vec::new();
    enumerate_assignments(model, usets, budget, 0, &mut current, &mut |assignment| {
        let (p, r) = assignment.realized_parameters(model, usets);
        let value = crate::dp::evaluate_policy_exact(model, policy, &p, &r)?;
        if best.as_ref().is_none_or(|(b, _)| value < *b) {
            best = Some((value, assignment.clone()));
        }
        Ok(())
    })?;
    Ok(best.expect("the nominal assignment is always enumerated"))
}

fn count_assignments(model: &MdpModel, usets: &UncertaintySet, budget: usize) -> f64 {
    // sum over subsets of size <= budget of the product of per-state
    // deviating-vertex counts, via the layered DP on (state, chosen so far)
    let n = model.num_states;
    let mut counts = vec![0.0_f64; budget + 1];
    counts[0] = 1.0;
    for s in 0..n {
        let options = (usets.per_state[s].len() - 1) as f64;
        for k in (1..=budget.min(s + 1)).rev() {
            counts[k] += counts[k - 1] * options;
        }
    }
    counts.iter().sum()
}

fn enumerate_assignments(
    model: &MdpModel,
    usets: &UncertaintySet,
    budget_left: usize,
    next_state: usize,
    current: &mut Vec<(usize, usize)>,
    visit: &mut impl FnMut(&ScenarioAssignment) -> Result<()>,
) -> Result<()> {
    if next_state == model.num_states {
        return visit(&ScenarioAssignment { deviated: current.clone() });
    }
    enumerate_assignments(model, usets, budget_left, next_state + 1, current, visit)?;
    if budget_left > 0 {
        for k in 1..usets.per_state[next_state].len() {
            current.push((next_state, k));
            enumerate_assignments(model, usets, budget_left - 1, next_state + 1, current, visit)?;
            current.pop();
        }
    }
    Ok(())
}

/// Exhaustive lower bound for the general non-adaptive problem: the best
/// deterministic Markov policy against its vertex-restricted worst case.
/// Randomized or history-dependent policies may do strictly better, so this
/// is a lower bound on the true max-min, not the optimum.
pub fn brute_force_nonadaptive_lower_bound(
    model: &MdpModel,
    usets: &UncertaintySet,
    budget: usize,
) -> Result<(f64, MarkovPolicy)> {
    brute_force_nonadaptive_lower_bound_capped(
        model,
        usets,
        budget,
        DEFAULT_ENUMERATION_CAP,
        DEFAULT_ENUMERATION_CAP,
    )
}

/// As [`brute_force_nonadaptive_lower_bound`] with explicit caps on the
/// policy and scenario enumerations.
pub fn brute_force_nonadaptive_lower_bound_capped(
    model: &MdpModel,
    usets: &UncertaintySet,
    budget: usize,
    policy_cap: u64,
    scenario_cap: u64,
) -> Result<(f64, MarkovPolicy)> {
    validated(model, usets)?;
    let t_len = model.horizon.finite_or_err("brute_force_nonadaptive_lower_bound")?;
    let (n, m) = (model.num_states, model.num_actions);
    let cells = t_len * n;
    let num_policies = (m as f64).powi(cells as i32);
    if num_policies > policy_cap as f64 {
        return Err(SolverError::SizeCap(format!(
            "{num_policies:.3e} deterministic policies exceed the cap {policy_cap}"
        )));
    }
    let mut best: Option<(f64, MarkovPolicy)> = None;
    let mut actions = vec![vec![0usize; n]; t_len];
    loop {
        let policy = MarkovPolicy::Deterministic(actions.clone());
        let (value, _) =
            worst_case_fixed_policy_capped(model, usets, budget, &policy, scenario_cap)?;
        if best.as_ref().is_none_or(|(b, _)| value > *b) {
            best = Some((value, policy));
        }
        // odometer increment over the policy table
        let mut carry = true;
        'outer: for t in 0..t_len {
            for s in 0..n {
                actions[t][s] += 1;
                if actions[t][s] < m {
                    carry = false;
                    break 'outer;
                }
                actions[t][s] = 0;
            }
        }
        if carry {
            break;
        }
    }
    Ok(best.expect("at least one policy is enumerated"))
}
