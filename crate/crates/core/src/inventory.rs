//! Single-product stochastic inventory control with a demand-rush deviation.
//!
//! States are stock levels at the start of the day, before ordering. Each day
//! the store orders `u` items (paid immediately, delivered immediately,
//! subject to `s + u <= max_stock`), pays a quadratic holding cost on the
//! post-order stock, serves a Poisson number of customers, and pays a
//! quadratic penalty on unmet demand. Unused stock at the end of the run is
//! wasted.
//!
//! The deviation is a *rush*: the maximal number of customers, `max_stock`,
//! arrives on the same day. Each state's uncertainty set is the segment
//! between the nominal (Poisson) day and the rush day, so a rush deviates
//! both the transition probabilities and the reward.
//!
//! The solvers consume the expected-reward MDP built by
//! [`build_inventory_mdp`]; the simulator draws realized demand and accrues
//! realized rewards from the same truncated demand distribution, so the two
//! agree in expectation (a tested property, not an assumption).
//!
//! Order quantities that overflow the stock cap are encoded as self-loops
//! with reward [`INFEASIBLE_ORDER_PENALTY`]; any feasible action dominates
//! them, so optimal policies never select one.

use crate::adaptive::AdaptivePolicy;
use crate::dp::solve_nominal_finite;
use crate::error::{Result, SolverError};
use crate::model::{Horizon, MarkovPolicy, MdpModel, ScenarioVertex, UncertaintySet};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Reward assigned to order quantities that would overflow the stock cap.
pub const INFEASIBLE_ORDER_PENALTY: f64 = -1e9;

/// Benchmark parameters. Defaults follow the standard desk setup: a 100-day
/// run with a 20-item store, unit order cost 5, sale price 50, Poisson(10)
/// demand, holding cost `2 n^2`, shortage penalty `7 n^2`, empty initial
/// stock.
#[derive(Debug, Clone)]
pub struct InventoryParams {
    pub days: usize,
    pub max_stock: usize,
    pub store_price: f64,
    pub customer_price: f64,
    /// Expected Poisson demand per day.
    pub num_customers: f64,
    /// Holding cost is `holding_cost_coeff * (post-order stock)^2`.
    pub holding_cost_coeff: f64,
    /// Penalty is `penalty_coeff * (unmet demand)^2`.
    pub penalty_coeff: f64,
    pub initial_stock: usize,
    /// Poisson tail mass beyond the truncation point, lumped onto the largest
    /// retained demand value.
    pub demand_cutoff_mass: f64,
}

impl Default for InventoryParams {
    fn default() -> Self {
        InventoryParams {
            days: 100,
            max_stock: 20,
            store_price: 5.0,
            customer_price: 50.0,
            num_customers: 10.0,
            holding_cost_coeff: 2.0,
            penalty_coeff: 7.0,
            initial_stock: 0,
            demand_cutoff_mass: 1e-12,
        }
    }
}

impl InventoryParams {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.days == 0 {
            out.push("days must be positive".to_string());
        }
        if self.max_stock == 0 {
            out.push("max_stock must be positive".to_string());
        }
        if self.initial_stock > self.max_stock {
            out.push(format!(
                "initial stock {} exceeds max stock {}",
                self.initial_stock, self.max_stock
            ));
        }
        for (name, v) in [
            ("store_price", self.store_price),
            ("customer_price", self.customer_price),
            ("num_customers", self.num_customers),
            ("holding_cost_coeff", self.holding_cost_coeff),
            ("penalty_coeff", self.penalty_coeff),
        ] {
            if v < 0.0 || !v.is_finite() {
                out.push(format!("{name} must be nonnegative, got {v}"));
            }
        }
        if !(self.demand_cutoff_mass > 0.0 && self.demand_cutoff_mass < 1.0) {
            out.push(format!(
                "demand_cutoff_mass {} outside (0, 1)",
                self.demand_cutoff_mass
            ));
        }
        // the pmf recursion starts from exp(-mean); keep it well above underflow
        if self.num_customers > 500.0 {
            out.push("num_customers above 500 is not supported".to_string());
        }
        out
    }

    fn validated(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(SolverError::Validation(v))
        }
    }
}

/// Poisson pmf truncated where the remaining tail falls below `cutoff_mass`,
/// with the tail lumped onto the largest retained value so the vector sums to
/// one exactly.
pub fn truncated_poisson_pmf(mean: f64, cutoff_mass: f64) -> Vec<f64> {
    let mut pmf = Vec::new();
    let mut p = (-mean).exp();
    let mut cdf = 0.0;
    let mut k = 0usize;
    let guard = (mean * 20.0) as usize + 200;
    loop {
        pmf.push(p);
        cdf += p;
        if 1.0 - cdf < cutoff_mass || k >= guard {
            break;
        }
        k += 1;
        p *= mean / k as f64;
    }
    let tail = (1.0 - cdf).max(0.0);
    *pmf.last_mut().unwrap() += tail;
    pmf
}

fn day_reward(params: &InventoryParams, order: usize, post_order: usize, demand: usize) -> f64 {
    let served = demand.min(post_order) as f64;
    let unmet = demand.saturating_sub(post_order) as f64;
    params.customer_price * served
        - params.store_price * order as f64
        - params.holding_cost_coeff * (post_order * post_order) as f64
        - params.penalty_coeff * unmet * unmet
}

/// Builds the benchmark uMDP: states are stock levels `0..=max_stock`,
/// actions are order quantities, and every state's uncertainty set is
/// `{nominal Poisson day, rush day}`.
pub fn build_inventory_mdp(params: &InventoryParams) -> Result<(MdpModel, UncertaintySet)> {
    params.validated()?;
    let n = params.max_stock + 1;
    let m = params.max_stock + 1;
    let pmf = truncated_poisson_pmf(params.num_customers, params.demand_cutoff_mass);

    let mut nominal_p = vec![vec![vec![0.0; n]; m]; n];
    let mut nominal_r = vec![vec![0.0; m]; n];
    let mut rush_p = vec![vec![vec![0.0; n]; m]; n];
    let mut rush_r = vec![vec![0.0; m]; n];

    for s in 0..n {
        for u in 0..m {
            let y = s + u;
            if y > params.max_stock {
                nominal_p[s][u][s] = 1.0;
                nominal_r[s][u] = INFEASIBLE_ORDER_PENALTY;
                rush_p[s][u][s] = 1.0;
                rush_r[s][u] = INFEASIBLE_ORDER_PENALTY;
                continue;
            }
            for (d, pd) in pmf.iter().enumerate() {
                nominal_p[s][u][y.saturating_sub(d)] += pd;
            }
            nominal_r[s][u] = pmf
                .iter()
                .enumerate()
                .map(|(d, pd)| pd * day_reward(params, u, y, d))
                .sum();
            rush_p[s][u][y.saturating_sub(params.max_stock)] = 1.0;
            rush_r[s][u] = day_reward(params, u, y, params.max_stock);
        }
    }

    let mut initial_dist = vec![0.0; n];
    initial_dist[params.initial_stock] = 1.0;
    let model = MdpModel {
        num_states: n,
        num_actions: m,
        horizon: Horizon::Finite(params.days),
        discount: 1.0,
        initial_dist,
        nominal_p,
        nominal_r,
    };
    let usets = UncertaintySet::from_deviations(
        &model,
        (0..n)
            .map(|s| vec![ScenarioVertex { p: rush_p[s].clone(), r: rush_r[s].clone() }])
            .collect(),
    );
    Ok((model, usets))
}

/// The optimal policy of the day-mixture MDP in which each day is a rush with
/// probability `p_rush`: the classical benchmark that knows the rush rate.
pub fn rush_aware_policy(params: &InventoryParams, p_rush: f64) -> Result<MarkovPolicy> {
    if !(0.0..=1.0).contains(&p_rush) {
        return Err(SolverError::Unsupported(format!(
            "p_rush {p_rush} outside [0, 1]"
        )));
    }
    let (model, usets) = build_inventory_mdp(params)?;
    let mut mixed = model.clone();
    for s in 0..model.num_states {
        let rush = &usets.per_state[s][1];
        for a in 0..model.num_actions {
            for sp in 0..model.num_states {
                mixed.nominal_p[s][a][sp] =
                    (1.0 - p_rush) * model.nominal_p[s][a][sp] + p_rush * rush.p[a][sp];
            }
            mixed.nominal_r[s][a] =
                (1.0 - p_rush) * model.nominal_r[s][a] + p_rush * rush.r[a];
        }
    }
    let (_, policy) = solve_nominal_finite(&mixed)?;
    Ok(policy)
}

/// A policy to simulate: either budget-aware or a plain Markov policy.
#[derive(Clone, Copy)]
pub enum PolicyRef<'a> {
    Adaptive(&'a AdaptivePolicy),
    Markov(&'a MarkovPolicy),
}

/// Monte Carlo summary of one simulated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationReport {
    pub mean: f64,
    /// Sample standard deviation divided by sqrt(trajectories).
    pub std_error: f64,
    pub trajectories: usize,
    pub seed: u64,
}

/// Simulates the benchmark for `trajectories` independent runs.
///
/// Each day a rush occurs with probability `p_rush`; demand is `max_stock` on
/// rush days and a truncated-Poisson draw otherwise. Realized (not expected)
/// rewards are accrued. A budget-aware policy reads its `(day, stock,
/// remaining-budget-belief)` cell, and the belief decrements after each
/// observed rush, floored at zero. Trajectory `i` runs on stream `i` of a
/// counter-mode generator, so reports are bitwise reproducible for a fixed
/// seed regardless of scheduling.
pub fn simulate(
    params: &InventoryParams,
    policy: PolicyRef<'_>,
    d0: usize,
    p_rush: f64,
    trajectories: usize,
    seed: u64,
) -> Result<SimulationReport> {
    params.validated()?;
    if !(0.0..=1.0).contains(&p_rush) {
        return Err(SolverError::Unsupported(format!(
            "p_rush {p_rush} outside [0, 1]"
        )));
    }
    if trajectories == 0 {
        return Err(SolverError::Unsupported("need at least one trajectory".to_string()));
    }
    let n = params.max_stock + 1;
    match policy {
        PolicyRef::Adaptive(p) => {
            if p.num_stages != params.days || p.num_states != n {
                return Err(SolverError::DimensionMismatch(format!(
                    "policy is {} stages x {} states, benchmark needs {} x {n}",
                    p.num_stages, p.num_states, params.days
                )));
            }
        }
        PolicyRef::Markov(p) => {
            if p.num_stages() != params.days {
                return Err(SolverError::DimensionMismatch(format!(
                    "policy covers {} stages, benchmark needs {}",
                    p.num_stages(),
                    params.days
                )));
            }
        }
    }

    let pmf = truncated_poisson_pmf(params.num_customers, params.demand_cutoff_mass);
    let mut demand_cdf = Vec::with_capacity(pmf.len());
    let mut acc = 0.0;
    for p in &pmf {
        acc += p;
        demand_cdf.push(acc);
    }

    let mut totals = Vec::with_capacity(trajectories);
    for traj in 0..trajectories {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(traj as u64);
        let mut stock = params.initial_stock;
        let mut belief = d0;
        let mut total = 0.0;
        for day in 0..params.days {
            let order = match policy {
                PolicyRef::Adaptive(p) => p.action(day, stock, belief),
                PolicyRef::Markov(MarkovPolicy::Deterministic(acts)) => acts[day][stock],
                PolicyRef::Markov(MarkovPolicy::Randomized(dist)) => {
                    sample_index(&dist[day][stock], rng.gen::<f64>())
                }
            };
            let post_order = stock + order;
            if post_order > params.max_stock {
                // infeasible order: the model's self-loop semantics
                total += INFEASIBLE_ORDER_PENALTY;
                continue;
            }
            let rush = rng.gen::<f64>() < p_rush;
            let demand = if rush {
                params.max_stock
            } else {
                cdf_sample(&demand_cdf, rng.gen::<f64>())
            };
            total += day_reward(params, order, post_order, demand);
            stock = post_order.saturating_sub(demand);
            if rush {
                belief = belief.saturating_sub(1);
            }
        }
        totals.push(total);
    }

    let mean = compensated_sum(&totals) / trajectories as f64;
    let std_error = if trajectories > 1 {
        let ss = compensated_sum(
            &totals.iter().map(|x| (x - mean) * (x - mean)).collect::<Vec<_>>(),
        );
        (ss / (trajectories - 1) as f64).sqrt() / (trajectories as f64).sqrt()
    } else {
        0.0
    };
    Ok(SimulationReport { mean, std_error, trajectories, seed })
}

fn cdf_sample(cdf: &[f64], u: f64) -> usize {
    cdf.iter().position(|&c| u < c).unwrap_or(cdf.len() - 1)
}

fn sample_index(weights: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

/// Neumaier compensated summation; the aggregate is independent of chunking.
fn compensated_sum(xs: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for &x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// One cell of the benchmark sweep: a budget-aware policy solved at `d0` and
/// simulated at `p_rush`.
#[derive(Debug, Clone)]
pub struct Figure3Cell {
    pub d0: usize,
    pub p_rush: f64,
    pub report: SimulationReport,
}

/// Comparison row: the rush-aware mixture-optimal policy at `p_rush`.
#[derive(Debug, Clone)]
pub struct RushAwareCell {
    pub p_rush: f64,
    pub report: SimulationReport,
}

/// Full sweep output.
#[derive(Debug, Clone)]
pub struct Figure3Table {
    pub budget_aware: Vec<Figure3Cell>,
    pub rush_aware: Vec<RushAwareCell>,
}

/// Runs the benchmark sweep: for each `d0` the budget-aware policy is solved
/// once and simulated across every `p_rush`; the rush-aware mixture policy is
/// added per `p_rush` for comparison. All cells share the seed, so the sweep
/// is reproducible and comparisons ride on common random numbers.
pub fn figure3_experiment(
    params: &InventoryParams,
    p_rush_list: &[f64],
    d0_list: &[usize],
    trajectories: usize,
    seed: u64,
) -> Result<Figure3Table> {
    if p_rush_list.is_empty() || d0_list.is_empty() {
        return Err(SolverError::Unsupported(
            "p_rush and d0 lists must be nonempty".to_string(),
        ));
    }
    let (model, usets) = build_inventory_mdp(params)?;
    let mut budget_aware = Vec::new();
    for &d0 in d0_list {
        let solution = crate::adaptive::solve_adaptive_finite(&model, &usets, d0)?;
        for &p_rush in p_rush_list {
            let report = simulate(
                params,
                PolicyRef::Adaptive(&solution.policy),
                d0,
                p_rush,
                trajectories,
                seed,
            )?;
            budget_aware.push(Figure3Cell { d0, p_rush, report });
        }
    }
    let mut rush_aware = Vec::new();
    for &p_rush in p_rush_list {
        let policy = rush_aware_policy(params, p_rush)?;
        let report = simulate(params, PolicyRef::Markov(&policy), 0, p_rush, trajectories, seed)?;
        rush_aware.push(RushAwareCell { p_rush, report });
    }
    Ok(Figure3Table { budget_aware, rush_aware })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adaptive::solve_adaptive_finite;
    use crate::dp::{evaluate_policy_exact, initial_value};
    use crate::model::validate_model;

    fn small_params() -> InventoryParams {
        InventoryParams {
            days: 12,
            max_stock: 6,
            num_customers: 3.0,
            ..InventoryParams::default()
        }
    }

    #[test]
    fn pmf_sums_to_one_and_lumps_tail() {
        let pmf = truncated_poisson_pmf(10.0, 1e-12);
        let sum: f64 = pmf.iter().sum();
        assert!((sum - 1.0).abs() <= 1e-15, "{sum}");
        assert!(pmf.len() > 20 && pmf.len() < 80, "{}", pmf.len());
        let zero = truncated_poisson_pmf(0.0, 1e-12);
        assert_eq!(zero, vec![1.0]);
    }

    #[test]
    fn model_validates_and_rows_sum() {
        let (model, usets) = build_inventory_mdp(&small_params()).unwrap();
        assert!(validate_model(&model, &usets).is_empty());
    }

    #[test]
    fn expected_served_matches_independent_poisson_sum() {
        // independent oracle: pmf from the log-space closed form
        let params = InventoryParams::default();
        let (model, _) = build_inventory_mdp(&params).unwrap();
        let y = params.max_stock; // full stock, order 0 from state 20
        let mut served = 0.0;
        let lambda: f64 = params.num_customers;
        let mut log_fact = 0.0;
        for d in 0..200usize {
            if d > 0 {
                log_fact += (d as f64).ln();
            }
            let p = (d as f64 * lambda.ln() - lambda - log_fact).exp();
            served += p * d.min(y) as f64;
        }
        let r = model.nominal_r[y][0];
        let served_from_model = (r
            + params.holding_cost_coeff * (y * y) as f64
            + params.penalty_coeff
                * truncated_poisson_pmf(lambda, params.demand_cutoff_mass)
                    .iter()
                    .enumerate()
                    .map(|(d, pd)| {
                        let u = d.saturating_sub(y) as f64;
                        pd * u * u
                    })
                    .sum::<f64>())
            / params.customer_price;
        assert!(
            (served_from_model - served).abs() <= 1e-6,
            "{served_from_model} vs {served}"
        );
    }

    #[test]
    fn rush_vertex_meets_demand_exactly_at_full_stock() {
        let params = small_params();
        let (model, usets) = build_inventory_mdp(&params).unwrap();
        let max = params.max_stock;
        // order up to exactly max_stock from state 0
        let rush = &usets.per_state[0][1];
        let expected = params.customer_price * max as f64
            - params.store_price * max as f64
            - params.holding_cost_coeff * (max * max) as f64;
        assert_eq!(rush.r[max], expected);
        assert_eq!(rush.p[max][0], 1.0);
        // keeping nothing on a rush day costs the full penalty
        let empty = params.penalty_coeff * (max * max) as f64;
        assert_eq!(rush.r[0], -empty);
        let _ = model;
    }

    #[test]
    fn infeasible_orders_are_never_selected() {
        let params = small_params();
        let (model, usets) = build_inventory_mdp(&params).unwrap();
        let sol = solve_adaptive_finite(&model, &usets, 2).unwrap();
        for t in 0..params.days {
            for s in 0..=params.max_stock {
                for d in 0..=2 {
                    let a = sol.policy.action(t, s, d);
                    assert!(s + a <= params.max_stock, "picked an overflow order");
                }
            }
        }
    }

    #[test]
    fn rush_strictly_hurts_the_robust_value() {
        // needs the default cost shape: with a small store and cheap demand a
        // rush can help (it sells the shelf out), and Nature would sit still
        let params = InventoryParams { days: 20, ..InventoryParams::default() };
        let (model, usets) = build_inventory_mdp(&params).unwrap();
        let d0 = solve_adaptive_finite(&model, &usets, 0).unwrap();
        let d1 = solve_adaptive_finite(&model, &usets, 1).unwrap();
        assert!(
            d1.game_value(&model) < d0.game_value(&model),
            "one budgeted rush should strictly lower the value"
        );
    }

    #[test]
    fn simulation_matches_dp_expectation_without_rushes() {
        let params = small_params();
        let (model, _) = build_inventory_mdp(&params).unwrap();
        let (v, policy) = solve_nominal_finite(&model).unwrap();
        let exact = initial_value(&model, &v[0]);
        let report =
            simulate(&params, PolicyRef::Markov(&policy), 0, 0.0, 4000, 99).unwrap();
        assert!(
            (report.mean - exact).abs() <= 3.0 * report.std_error,
            "mean {} vs exact {exact} (se {})",
            report.mean,
            report.std_error
        );
    }

    #[test]
    fn all_rush_simulation_matches_rush_kernel_dp() {
        let params = small_params();
        let (model, usets) = build_inventory_mdp(&params).unwrap();
        let (_, policy) = solve_nominal_finite(&model).unwrap();
        let p_rush: Vec<Vec<Vec<f64>>> =
            (0..model.num_states).map(|s| usets.per_state[s][1].p.clone()).collect();
        let r_rush: Vec<Vec<f64>> =
            (0..model.num_states).map(|s| usets.per_state[s][1].r.clone()).collect();
        let exact = evaluate_policy_exact(&model, &policy, &p_rush, &r_rush).unwrap();
        let report = simulate(&params, PolicyRef::Markov(&policy), 0, 1.0, 2000, 7).unwrap();
        // the all-rush process is deterministic given the policy, so the
        // standard error is 0; allow a tiny absolute slack instead
        assert!(
            (report.mean - exact).abs() <= 3.0 * report.std_error + 1e-9,
            "mean {} vs exact {exact}",
            report.mean
        );
    }

    #[test]
    fn simulation_is_bitwise_reproducible() {
        let params = small_params();
        let (model, usets) = build_inventory_mdp(&params).unwrap();
        let sol = solve_adaptive_finite(&model, &usets, 1).unwrap();
        let a = simulate(&params, PolicyRef::Adaptive(&sol.policy), 1, 0.3, 1, 1234).unwrap();
        let b = simulate(&params, PolicyRef::Adaptive(&sol.policy), 1, 0.3, 1, 1234).unwrap();
        assert_eq!(a, b);
        let c = simulate(&params, PolicyRef::Adaptive(&sol.policy), 1, 0.3, 50, 1234).unwrap();
        let d = simulate(&params, PolicyRef::Adaptive(&sol.policy), 1, 0.3, 50, 1234).unwrap();
        assert_eq!(c, d);
    }

    #[test]
    fn rush_aware_extremes() {
        let params = small_params();
        let (model, usets) = build_inventory_mdp(&params).unwrap();
        let aware0 = rush_aware_policy(&params, 0.0).unwrap();
        let (_, nominal) = solve_nominal_finite(&model).unwrap();
        assert_eq!(aware0, nominal);
        let aware1 = rush_aware_policy(&params, 1.0).unwrap();
        let mut all_rush = model.clone();
        for s in 0..model.num_states {
            all_rush.nominal_p[s] = usets.per_state[s][1].p.clone();
            all_rush.nominal_r[s] = usets.per_state[s][1].r.clone();
        }
        let (_, rush_opt) = solve_nominal_finite(&all_rush).unwrap();
        assert_eq!(aware1, rush_opt);
    }

    #[test]
    fn rush_aware_mixture_optimality() {
        let params = small_params();
        let p = 0.05;
        let (model, usets) = build_inventory_mdp(&params).unwrap();
        let mut mixture = model.clone();
        for s in 0..model.num_states {
            let rush = &usets.per_state[s][1];
            for a in 0..model.num_actions {
                for sp in 0..model.num_states {
                    mixture.nominal_p[s][a][sp] =
                        (1.0 - p) * model.nominal_p[s][a][sp] + p * rush.p[a][sp];
                }
                mixture.nominal_r[s][a] = (1.0 - p) * model.nominal_r[s][a] + p * rush.r[a];
            }
        }
        let aware = rush_aware_policy(&params, p).unwrap();
        let (_, nominal) = solve_nominal_finite(&model).unwrap();
        let v_aware =
            evaluate_policy_exact(&mixture, &aware, &mixture.nominal_p, &mixture.nominal_r)
                .unwrap();
        let v_nominal =
            evaluate_policy_exact(&mixture, &nominal, &mixture.nominal_p, &mixture.nominal_r)
                .unwrap();
        assert!(v_aware >= v_nominal - 1e-9);
    }

    #[test]
    fn nominal_policy_degrades_monotonically_in_rush_rate() {
        let params = InventoryParams { days: 40, ..InventoryParams::default() };
        let (model, _) = build_inventory_mdp(&params).unwrap();
        let (_, nominal) = solve_nominal_finite(&model).unwrap();
        let mut prev: Option<SimulationReport> = None;
        for p in [0.0, 0.02, 0.05, 0.1] {
            let r = simulate(&params, PolicyRef::Markov(&nominal), 0, p, 2000, 17).unwrap();
            if let Some(prev) = &prev {
                let band = 2.0 * (r.std_error.powi(2) + prev.std_error.powi(2)).sqrt();
                assert!(
                    r.mean <= prev.mean + band,
                    "mean rose with the rush rate: {} after {}",
                    r.mean,
                    prev.mean
                );
            }
            prev = Some(r);
        }
    }

    #[test]
    fn experiment_boundary_rows_match_plain_policies() {
        // d0 = 0 is the nominal policy; d0 = days stays budget-saturated all
        // run (the belief drops at most one per day), so it is the
        // rectangular robust policy
        let params = small_params();
        let (model, usets) = build_inventory_mdp(&params).unwrap();
        let table = figure3_experiment(&params, &[0.15], &[0, params.days], 200, 21).unwrap();
        let (_, nominal) = solve_nominal_finite(&model).unwrap();
        let expect_nominal =
            simulate(&params, PolicyRef::Markov(&nominal), 0, 0.15, 200, 21).unwrap();
        assert_eq!(table.budget_aware[0].report, expect_nominal);
        let (_, robust) =
            crate::dp::solve_robust_uncoupled_finite(&model, &usets).unwrap();
        let expect_robust =
            simulate(&params, PolicyRef::Markov(&robust), 0, 0.15, 200, 21).unwrap();
        assert_eq!(table.budget_aware[1].report, expect_robust);
    }

    #[test]
    fn experiment_table_shape() {
        let params = InventoryParams {
            days: 8,
            max_stock: 4,
            num_customers: 2.0,
            ..InventoryParams::default()
        };
        let table =
            figure3_experiment(&params, &[0.0, 0.2], &[0, 2], 50, 5).unwrap();
        assert_eq!(table.budget_aware.len(), 4);
        assert_eq!(table.rush_aware.len(), 2);
        assert!(figure3_experiment(&params, &[], &[0], 10, 5).is_err());
    }

    #[test]
    fn invalid_params_rejected() {
        let mut p = small_params();
        p.initial_stock = p.max_stock + 1;
        assert!(matches!(build_inventory_mdp(&p), Err(SolverError::Validation(_))));
    }
}
