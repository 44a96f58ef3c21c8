//! Exact finite-horizon solver for the adaptive deviation-budget game.
//!
//! The decision maker and an adversarial Nature alternate moves: at each
//! stage the decision maker picks an action, then Nature either keeps the
//! nominal parameters for free or, while budget remains, spends one unit to
//! realize any vertex of the state's uncertainty set. Both players observe
//! deviations retrospectively, so the game state is the pair
//! `(state, remaining budget)` and backward induction over that augmented
//! space is exact:
//!
//! ```text
//! v_t(s, d) = max_a min{ q_t(s, d, a, nominal),
//!                        min_vertex q_t(s, d-1, a, vertex) }   for d >= 1
//! v_t(s, 0) = max_a q_t(s, 0, a, nominal)
//! q_t(s, d, a, p, r) = r(s, a) + gamma * sum_s' p(s'|s, a) v_{t+1}(s', d)
//! ```
//!
//! Budget beyond the number of remaining stages is worthless, so the budget
//! axis is capped at the horizon internally; accessors clamp transparently.
//!
//! [`brute_force_game_value`] expands the full game tree without memoization
//! and serves as an independent oracle for the backward induction.

use crate::dp::q_cell;
use crate::error::{Result, SolverError};
use crate::model::{validated, MdpModel, ScenarioVertex, UncertaintySet};

/// Node budget above which the game-tree oracle refuses to run.
pub const DEFAULT_GAME_TREE_NODE_CAP: f64 = 1e8;

/// Value table over stages, states and remaining budget.
///
/// Stage index runs over `0..=num_stages` (row `num_stages` is the terminal
/// zero layer); the budget axis is stored up to `budget_cap` and reads beyond
/// it are clamped, which is exact because the table saturates there.
#[derive(Debug, Clone)]
pub struct ValueTable {
    pub num_stages: usize,
    pub num_states: usize,
    budget_cap: usize,
    requested_budget: usize,
    v: Vec<f64>,
}

impl ValueTable {
    fn new(num_stages: usize, num_states: usize, budget_cap: usize, requested: usize) -> Self {
        ValueTable {
            num_stages,
            num_states,
            budget_cap,
            requested_budget: requested,
            v: vec![0.0; (num_stages + 1) * (budget_cap + 1) * num_states],
        }
    }

    /// Builds a table from an explicit `(t, s, d)` closure; mainly for tests.
    pub fn from_fn(
        num_stages: usize,
        num_states: usize,
        budget_cap: usize,
        f: impl Fn(usize, usize, usize) -> f64,
    ) -> Self {
        let mut table = ValueTable::new(num_stages, num_states, budget_cap, budget_cap);
        for t in 0..=num_stages {
            for d in 0..=budget_cap {
                for s in 0..num_states {
                    let idx = table.index(t, d, s);
                    table.v[idx] = f(t, s, d);
                }
            }
        }
        table
    }

    #[inline]
    fn index(&self, t: usize, d: usize, s: usize) -> usize {
        (t * (self.budget_cap + 1) + d) * self.num_states + s
    }

    /// Contiguous per-state values of stage `t` at budget `d` (clamped).
    #[inline]
    fn layer(&self, t: usize, d: usize) -> &[f64] {
        let d = d.min(self.budget_cap);
        let start = self.index(t, d, 0);
        &self.v[start..start + self.num_states]
    }

    pub fn budget_cap(&self) -> usize {
        self.budget_cap
    }

    pub fn requested_budget(&self) -> usize {
        self.requested_budget
    }

    /// `v_t(s, d)` with 0-based stage index; budgets beyond the cap clamp.
    pub fn value(&self, t: usize, s: usize, d: usize) -> f64 {
        self.layer(t, d)[s]
    }

    /// Read-only view of stage `t`, the continuation table for stage `t - 1`.
    pub fn stage(&self, t: usize) -> Result<StageView<'_>> {
        if t > self.num_stages {
            return Err(SolverError::DimensionMismatch(format!(
                "stage {t} out of range 0..={}",
                self.num_stages
            )));
        }
        Ok(StageView { table: self, t })
    }

    /// Budget monotonicity, terminal zeros and budget saturation. These hold
    /// exactly (not merely within a tolerance) for solver-produced tables.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for s in 0..self.num_states {
            for d in 0..=self.budget_cap {
                if self.value(self.num_stages, s, d) != 0.0 {
                    out.push(format!("terminal value at (s={s}, d={d}) is nonzero"));
                }
            }
        }
        for t in 0..=self.num_stages {
            for s in 0..self.num_states {
                for d in 0..self.budget_cap {
                    let lo = self.value(t, s, d + 1);
                    let hi = self.value(t, s, d);
                    if lo > hi {
                        out.push(format!(
                            "budget monotonicity broken at (t={t}, s={s}): v(d={})={lo} > v(d={d})={hi}",
                            d + 1
                        ));
                    }
                }
                let sat = (self.num_stages - t).min(self.budget_cap);
                for d in sat..=self.budget_cap {
                    if self.value(t, s, d) != self.value(t, s, sat) {
                        out.push(format!("saturation broken at (t={t}, s={s}, d={d})"));
                    }
                }
            }
        }
        out
    }
}

/// Borrowed view of one completed stage of a [`ValueTable`].
#[derive(Clone, Copy)]
pub struct StageView<'a> {
    table: &'a ValueTable,
    t: usize,
}

impl<'a> StageView<'a> {
    /// Per-state continuation values at remaining budget `d`.
    pub fn values_at(&self, d: usize) -> Result<&'a [f64]> {
        if d > self.table.budget_cap {
            return Err(SolverError::DimensionMismatch(format!(
                "budget {d} out of range 0..={}",
                self.table.budget_cap
            )));
        }
        Ok(self.table.layer(self.t, d))
    }
}

/// `q = r(s,a) + gamma * sum_s' p(s'|s,a) v_next(s', d)` for one state's
/// parameter vertex. `budget` addresses the continuation layer and must lie
/// within the table's budget range.
pub fn q_value(
    discount: f64,
    params: &ScenarioVertex,
    action: usize,
    budget: usize,
    next_stage: StageView<'_>,
) -> Result<f64> {
    let next = next_stage.values_at(budget)?;
    if action >= params.r.len() {
        return Err(SolverError::DimensionMismatch(format!(
            "action {action} out of range"
        )));
    }
    Ok(q_cell(discount, &params.p[action], params.r[action], next))
}

/// Optimal action per `(stage, state, remaining budget)` cell.
#[derive(Debug, Clone)]
pub struct AdaptivePolicy {
    pub num_stages: usize,
    pub num_states: usize,
    budget_cap: usize,
    actions: Vec<usize>,
}

impl AdaptivePolicy {
    /// Builds a policy table from an explicit `(t, s, d)` closure.
    pub fn from_fn(
        num_stages: usize,
        num_states: usize,
        budget_cap: usize,
        f: impl Fn(usize, usize, usize) -> usize,
    ) -> Self {
        let mut policy = AdaptivePolicy {
            num_stages,
            num_states,
            budget_cap,
            actions: vec![0; num_stages * (budget_cap + 1) * num_states],
        };
        for t in 0..num_stages {
            for d in 0..=budget_cap {
                for s in 0..num_states {
                    let idx = policy.index(t, d, s);
                    policy.actions[idx] = f(t, s, d);
                }
            }
        }
        policy
    }

    #[inline]
    fn index(&self, t: usize, d: usize, s: usize) -> usize {
        (t * (self.budget_cap + 1) + d) * self.num_states + s
    }

    pub fn budget_cap(&self) -> usize {
        self.budget_cap
    }

    /// Action at `(t, s, d)`; budgets beyond the cap clamp (saturation).
    pub fn action(&self, t: usize, s: usize, d: usize) -> usize {
        self.actions[self.index(t, d.min(self.budget_cap), s)]
    }
}

/// Nature's move at a game node: keep the nominal parameters, or spend one
/// budget unit to realize the given vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NatureMove {
    Nominal,
    Deviate { vertex: usize },
}

/// Nature's equilibrium move for every `(stage, state, budget, action)` cell.
#[derive(Debug, Clone)]
pub struct NatureResponse {
    pub num_stages: usize,
    pub num_states: usize,
    pub num_actions: usize,
    budget_cap: usize,
    moves: Vec<NatureMove>,
}

impl NatureResponse {
    #[inline]
    fn index(&self, t: usize, d: usize, s: usize, a: usize) -> usize {
        ((t * (self.budget_cap + 1) + d) * self.num_states + s) * self.num_actions + a
    }

    pub fn budget_cap(&self) -> usize {
        self.budget_cap
    }

    pub fn response(&self, t: usize, s: usize, d: usize, a: usize) -> NatureMove {
        self.moves[self.index(t, d.min(self.budget_cap), s, a)]
    }

    /// The single structural invariant: Nature never deviates at budget zero.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for t in 0..self.num_stages {
            for s in 0..self.num_states {
                for a in 0..self.num_actions {
                    if self.response(t, s, 0, a) != NatureMove::Nominal {
                        out.push(format!("deviation at zero budget (t={t}, s={s}, a={a})"));
                    }
                }
            }
        }
        out
    }
}

/// Full output of the adaptive solve.
#[derive(Debug, Clone)]
pub struct AdaptiveSolution {
    pub values: ValueTable,
    pub policy: AdaptivePolicy,
    pub nature: NatureResponse,
}

impl AdaptiveSolution {
    /// Game value `sum_s alpha(s) v_1(s, D)` at the requested budget.
    pub fn game_value(&self, model: &MdpModel) -> f64 {
        let d = self.values.requested_budget().min(self.values.budget_cap());
        let mut total = 0.0;
        for s in 0..self.values.num_states {
            total += model.initial_dist[s] * self.values.value(0, s, d);
        }
        total
    }
}

/// Backward induction over the `(state, remaining budget)` space.
///
/// Runs in `O(T * D * |S| * |A| * (|S| + M))` where `M` is the cost of one
/// vertex-list minimization. Ties in the action argmax break toward the
/// lowest index; Nature keeps the nominal parameters on ties.
pub fn solve_adaptive_finite(
    model: &MdpModel,
    usets: &UncertaintySet,
    deviation_budget: usize,
) -> Result<AdaptiveSolution> {
    validated(model, usets)?;
    let t_len = model.horizon.finite_or_err("solve_adaptive_finite")?;
    let (n, m) = (model.num_states, model.num_actions);
    let cap = deviation_budget.min(t_len);
    let mut table = ValueTable::new(t_len, n, cap, deviation_budget);
    let mut policy = AdaptivePolicy {
        num_stages: t_len,
        num_states: n,
        budget_cap: cap,
        actions: vec![0; t_len * (cap + 1) * n],
    };

    let stage_size = (cap + 1) * n;
    for t in (0..t_len).rev() {
        let (head, tail) = table.v.split_at_mut((t + 1) * stage_size);
        let cur = &mut head[t * stage_size..];
        let next_stage = &tail[..stage_size];
        for d in 0..=cap {
            let next_nominal = &next_stage[d * n..(d + 1) * n];
            let next_deviated = if d >= 1 { Some(&next_stage[(d - 1) * n..d * n]) } else { None };
            for s in 0..n {
                let mut best = f64::NEG_INFINITY;
                let mut best_a = 0;
                for a in 0..m {
                    let mut val = q_cell(
                        model.discount,
                        &model.nominal_p[s][a],
                        model.nominal_r[s][a],
                        next_nominal,
                    );
                    if let Some(next_dev) = next_deviated {
                        let mut dev_min = f64::INFINITY;
                        for vertex in &usets.per_state[s] {
                            let q = q_cell(model.discount, &vertex.p[a], vertex.r[a], next_dev);
                            if q < dev_min {
                                dev_min = q;
                            }
                        }
                        if dev_min < val {
                            val = dev_min;
                        }
                    }
                    if val > best {
                        best = val;
                        best_a = a;
                    }
                }
                cur[d * n + s] = best;
                let idx = policy.index(t, d, s);
                policy.actions[idx] = best_a;
            }
        }
    }

    let violations = table.violations();
    assert!(
        violations.is_empty(),
        "adaptive value table violates its invariants: {}",
        violations.join("; ")
    );

    let mut nature = NatureResponse {
        num_stages: t_len,
        num_states: n,
        num_actions: m,
        budget_cap: cap,
        moves: vec![NatureMove::Nominal; t_len * (cap + 1) * n * m],
    };
    for t in 0..t_len {
        for d in 0..=cap {
            for s in 0..n {
                for a in 0..m {
                    let mv = nature_best_response(model, usets, &table, t, s, d, a)?;
                    let idx = nature.index(t, d, s, a);
                    nature.moves[idx] = mv;
                }
            }
        }
    }

    Ok(AdaptiveSolution { values: table, policy, nature })
}

/// Nature's equilibrium move at one cell of a completed value table: keep the
/// nominal parameters if the budget is exhausted or deviating does not
/// strictly lower the continuation, otherwise realize the minimizing vertex
/// (lowest index on ties).
pub fn nature_best_response(
    model: &MdpModel,
    usets: &UncertaintySet,
    table: &ValueTable,
    t: usize,
    s: usize,
    d: usize,
    a: usize,
) -> Result<NatureMove> {
    if d == 0 {
        return Ok(NatureMove::Nominal);
    }
    let d = d.min(table.budget_cap());
    let next = table.stage(t + 1)?;
    let q_nominal = q_value(
        model.discount,
        &usets.per_state[s][0],
        a,
        d,
        next,
    )?;
    let mut dev_min = f64::INFINITY;
    let mut dev_vertex = 0;
    for (k, vertex) in usets.per_state[s].iter().enumerate() {
        let q = q_value(model.discount, vertex, a, d - 1, next)?;
        if q < dev_min {
            dev_min = q;
            dev_vertex = k;
        }
    }
    if q_nominal <= dev_min {
        Ok(NatureMove::Nominal)
    } else {
        Ok(NatureMove::Deviate { vertex: dev_vertex })
    }
}

/// Exact game value by explicit expectimax expansion of the alternating
/// max/min/chance tree, without memoization. Independent of the backward
/// induction; feasible only at desk scale, guarded by a node cap.
pub fn brute_force_game_value(
    model: &MdpModel,
    usets: &UncertaintySet,
    deviation_budget: usize,
) -> Result<f64> {
    brute_force_game_value_capped(model, usets, deviation_budget, DEFAULT_GAME_TREE_NODE_CAP)
}

/// As [`brute_force_game_value`] with an explicit node cap.
pub fn brute_force_game_value_capped(
    model: &MdpModel,
    usets: &UncertaintySet,
    deviation_budget: usize,
    node_cap: f64,
) -> Result<f64> {
    validated(model, usets)?;
    let t_len = model.horizon.finite_or_err("brute_force_game_value")?;
    let branching =
        (model.num_actions * (usets.max_vertices() + 1) * model.num_states) as f64;
    let estimated = branching.powi(t_len as i32);
    if !estimated.is_finite() || estimated > node_cap {
        return Err(SolverError::SizeCap(format!(
            "game tree needs about {estimated:.3e} nodes, cap is {node_cap:.3e}"
        )));
    }

    fn dm_node(
        model: &MdpModel,
        usets: &UncertaintySet,
        t_len: usize,
        t: usize,
        s: usize,
        d: usize,
    ) -> f64 {
        if t == t_len {
            return 0.0;
        }
        let mut best = f64::NEG_INFINITY;
        for a in 0..model.num_actions {
            let v = nature_node(model, usets, t_len, t, s, d, a);
            if v > best {
                best = v;
            }
        }
        best
    }

    fn chance(
        model: &MdpModel,
        usets: &UncertaintySet,
        t_len: usize,
        t: usize,
        d: usize,
        p_row: &[f64],
        r_sa: f64,
    ) -> f64 {
        let mut exp = 0.0;
        for (sp, prob) in p_row.iter().enumerate() {
            if *prob > 0.0 {
                exp += prob * dm_node(model, usets, t_len, t + 1, sp, d);
            }
        }
        r_sa + model.discount * exp
    }

    fn nature_node(
        model: &MdpModel,
        usets: &UncertaintySet,
        t_len: usize,
        t: usize,
        s: usize,
        d: usize,
        a: usize,
    ) -> f64 {
        let mut worst = chance(
            model,
            usets,
            t_len,
            t,
            d,
            &model.nominal_p[s][a],
            model.nominal_r[s][a],
        );
        if d >= 1 {
            for vertex in &usets.per_state[s] {
                // realizing a vertex that coincides with the nominal point
                // costs nothing and is already covered by the nominal move
                if vertex.p == model.nominal_p[s] && vertex.r == model.nominal_r[s] {
                    continue;
                }
                let v = chance(model, usets, t_len, t, d - 1, &vertex.p[a], vertex.r[a]);
                if v < worst {
                    worst = v;
                }
            }
        }
        worst
    }

    let mut total = 0.0;
    for s in 0..model.num_states {
        if model.initial_dist[s] > 0.0 {
            total += model.initial_dist[s]
                * dm_node(model, usets, t_len, 0, s, deviation_budget.min(t_len));
        }
    }
    Ok(total)
}

/// Value of a fixed (decision-maker, Nature) strategy pair, by backward
/// evaluation over the augmented space.
pub fn evaluate_strategy_pair(
    model: &MdpModel,
    usets: &UncertaintySet,
    policy: &AdaptivePolicy,
    nature: &NatureResponse,
    deviation_budget: usize,
) -> Result<f64> {
    backward_eval(model, usets, deviation_budget, |t, s, d, w| {
        let a = policy.action(t, s, d);
        move_value(model, usets, s, a, d, nature.response(t, s, d, a), w)
    })
}

/// Best value the decision maker can reach when Nature's strategy is fixed.
/// The maximization searches all deterministic budget-aware policies exactly.
pub fn decision_maker_best_response(
    model: &MdpModel,
    usets: &UncertaintySet,
    nature: &NatureResponse,
    deviation_budget: usize,
) -> Result<f64> {
    backward_eval(model, usets, deviation_budget, |t, s, d, w| {
        let mut best = f64::NEG_INFINITY;
        for a in 0..model.num_actions {
            let v = move_value(model, usets, s, a, d, nature.response(t, s, d, a), w);
            if v > best {
                best = v;
            }
        }
        best
    })
}

/// Worst value Nature can force when the decision maker's policy is fixed.
/// The minimization searches all budget-feasible Nature strategies exactly.
pub fn nature_best_response_value(
    model: &MdpModel,
    usets: &UncertaintySet,
    policy: &AdaptivePolicy,
    deviation_budget: usize,
) -> Result<f64> {
    backward_eval(model, usets, deviation_budget, |t, s, d, w| {
        let a = policy.action(t, s, d);
        let mut worst = move_value(model, usets, s, a, d, NatureMove::Nominal, w);
        if d >= 1 {
            for (k, vertex) in usets.per_state[s].iter().enumerate() {
                // realizing the nominal point costs nothing and is the
                // nominal move; only genuine deviations spend budget
                if vertex.p == model.nominal_p[s] && vertex.r == model.nominal_r[s] {
                    continue;
                }
                let v = move_value(model, usets, s, a, d, NatureMove::Deviate { vertex: k }, w);
                if v < worst {
                    worst = v;
                }
            }
        }
        worst
    })
}

fn move_value(
    model: &MdpModel,
    usets: &UncertaintySet,
    s: usize,
    a: usize,
    d: usize,
    mv: NatureMove,
    w: &dyn Fn(usize, usize) -> f64, // continuation (s', d') -> value
) -> f64 {
    let (p_row, r_sa, d_next) = match mv {
        NatureMove::Nominal => (&model.nominal_p[s][a], model.nominal_r[s][a], d),
        NatureMove::Deviate { vertex } => {
            let v = &usets.per_state[s][vertex];
            (&v.p[a], v.r[a], d.saturating_sub(1))
        }
    };
    let mut exp = 0.0;
    for (sp, prob) in p_row.iter().enumerate() {
        if *prob > 0.0 {
            exp += prob * w(sp, d_next);
        }
    }
    r_sa + model.discount * exp
}

fn backward_eval(
    model: &MdpModel,
    usets: &UncertaintySet,
    deviation_budget: usize,
    cell: impl Fn(usize, usize, usize, &dyn Fn(usize, usize) -> f64) -> f64,
) -> Result<f64> {
    validated(model, usets)?;
    let t_len = model.horizon.finite_or_err("strategy evaluation")?;
    let n = model.num_states;
    let cap = deviation_budget.min(t_len);
    let mut next = vec![vec![0.0; n]; cap + 1];
    for t in (0..t_len).rev() {
        let mut cur = vec![vec![0.0; n]; cap + 1];
        for d in 0..=cap {
            for s in 0..n {
                let w = |sp: usize, dn: usize| next[dn.min(cap)][sp];
                cur[d][s] = cell(t, s, d, &w);
            }
        }
        next = cur;
    }
    let mut total = 0.0;
    for s in 0..n {
        total += model.initial_dist[s] * next[cap][s];
    }
    Ok(total)
}
