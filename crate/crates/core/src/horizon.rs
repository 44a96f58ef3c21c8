//! Infinite-horizon discounted solvers over an augmented budget coordinate.
//!
//! Three budget regimes:
//!
//! - **Plain counts** ([`solve_setup_a`]): Nature may deviate at most `D`
//!   stages over the whole infinite run. The budget axis is the integers
//!   `0..=D` and the Bellman operator is an exact gamma-contraction.
//! - **Discounted counts** ([`solve_setup_b`]): a deviation at stage `t`
//!   costs `beta^(t-1)` of the budget. Carrying the remaining budget in
//!   current-stage units (`b' = (b - cost) / beta`) makes the recursion
//!   stationary; the budget axis is continuous and is discretized on a
//!   uniform grid with piecewise-linear interpolation. Budgets at or above
//!   `1/(1-beta)` fund a deviation at every remaining stage, so the axis is
//!   capped there.
//! - **Fractional deviations** ([`solve_continuous`]): Nature may blend the
//!   nominal point toward a vertex by a magnitude `alpha` in [0, 1] and is
//!   charged `alpha` (the minimal scaling that reaches the realized point, see
//!   [`deviation_cost`]). Magnitudes are discretized on a per-cell uniform
//!   grid over `[0, min(1, b)]`; this solver also runs on finite horizons,
//!   where backward induction replaces value iteration.
//!
//! Linear interpolation is monotone and non-expansive, so every interpolated
//! operator here remains a sup-norm gamma-contraction.

use crate::dp::{q_cell, sweep_cap};
use crate::error::{Result, SolverError};
use crate::model::{validated, Horizon, MdpModel, UncertaintySet};

/// Default number of budget grid points for the discounted/continuous solvers.
pub const DEFAULT_BUDGET_GRID_POINTS: usize = 101;
/// Default number of magnitude grid points for the continuous solver.
pub const DEFAULT_MAGNITUDE_GRID_POINTS: usize = 11;
/// Default sup-norm residual tolerance.
pub const DEFAULT_TOLERANCE: f64 = 1e-8;
/// Absolute slack allowed on the per-sweep contraction check, per unit of
/// value scale; covers floating-point rounding of the stored iterates.
pub const CONTRACTION_SLACK: f64 = 1e-12;

/// Deviation-budget regimes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BudgetKind {
    Discrete,
    Discounted,
    Continuous,
}

/// A deviation budget: its regime, size, per-stage discount and grid
/// resolutions (grids apply to the discounted and continuous regimes only).
#[derive(Debug, Clone, Copy)]
pub struct BudgetSpec {
    pub kind: BudgetKind,
    pub budget: f64,
    pub beta: f64,
    pub budget_grid_points: usize,
    pub magnitude_grid_points: usize,
}

impl BudgetSpec {
    pub fn discrete(budget: usize) -> BudgetSpec {
        BudgetSpec {
            kind: BudgetKind::Discrete,
            budget: budget as f64,
            beta: 1.0,
            budget_grid_points: 0,
            magnitude_grid_points: 0,
        }
    }

    pub fn discounted(budget: f64, beta: f64, budget_grid_points: usize) -> BudgetSpec {
        BudgetSpec {
            kind: BudgetKind::Discounted,
            budget,
            beta,
            budget_grid_points,
            magnitude_grid_points: 0,
        }
    }

    pub fn continuous(
        budget: f64,
        beta: f64,
        budget_grid_points: usize,
        magnitude_grid_points: usize,
    ) -> BudgetSpec {
        BudgetSpec {
            kind: BudgetKind::Continuous,
            budget,
            beta,
            budget_grid_points,
            magnitude_grid_points,
        }
    }

    pub fn violations(&self, model: &MdpModel) -> Vec<String> {
        let mut out = Vec::new();
        if self.budget < 0.0 || !self.budget.is_finite() {
            out.push(format!("budget {} must be nonnegative", self.budget));
        }
        match self.kind {
            BudgetKind::Discrete => {
                if self.budget.fract() != 0.0 {
                    out.push(format!("discrete budget {} must be an integer", self.budget));
                }
            }
            BudgetKind::Discounted | BudgetKind::Continuous => {
                if !(self.beta >= model.discount && self.beta <= 1.0) {
                    out.push(format!(
                        "beta {} outside [discount {}, 1]",
                        self.beta, model.discount
                    ));
                }
                if self.budget_grid_points < 2 {
                    out.push("budget grid needs at least 2 points".to_string());
                }
                if self.kind == BudgetKind::Continuous && self.magnitude_grid_points < 1 {
                    out.push("magnitude grid needs at least 1 point".to_string());
                }
            }
        }
        out
    }

    /// Budget-axis cap: budgets at or above `1/(1-beta)` are saturated.
    pub fn budget_cap_value(&self) -> f64 {
        if self.beta < 1.0 {
            self.budget.min(1.0 / (1.0 - self.beta))
        } else {
            self.budget
        }
    }
}

/// A value function over states and a budget grid, piecewise linear in the
/// budget coordinate.
#[derive(Debug, Clone)]
pub struct BudgetedValueFunction {
    /// Ascending budget grid; integers `0..=D` in the discrete regime.
    pub grid: Vec<f64>,
    /// `values[s][i]` at budget `grid[i]`.
    pub values: Vec<Vec<f64>>,
}

impl BudgetedValueFunction {
    /// Interpolated value at budget `b` (clamped to the grid range).
    pub fn eval(&self, s: usize, b: f64) -> f64 {
        if self.grid.len() < 2 {
            return self.values[s][0];
        }
        let grid = UniformGrid::from_points(&self.grid);
        let (i, w) = grid.bracket(b);
        (1.0 - w) * self.values[s][i] + w * self.values[s][i + 1]
    }

    /// Monotonicity in the budget coordinate: more budget for Nature never
    /// helps the decision maker. Exact (`tol = 0`) for the plain and
    /// discounted-count solvers; the fractional solver compares blends with
    /// budget-dependent weights, which leaves rounding noise at the ulp
    /// level, so its checks pass a small value-scaled tolerance.
    pub fn violations(&self, tol: f64) -> Vec<String> {
        let mut out = Vec::new();
        for (s, row) in self.values.iter().enumerate() {
            for i in 0..row.len().saturating_sub(1) {
                if row[i + 1] > row[i] + tol {
                    out.push(format!(
                        "value increases in budget at (s={s}, grid {i}->{}): {} -> {}",
                        i + 1,
                        row[i],
                        row[i + 1]
                    ));
                }
            }
        }
        out
    }
}

/// Output of the grid solvers: values, a greedy stationary policy per
/// `(state, grid point)`, and the per-sweep sup-norm residual log.
#[derive(Debug, Clone)]
pub struct BudgetedSolution {
    pub values: BudgetedValueFunction,
    /// `policy[s][i]`.
    pub policy: Vec<Vec<usize>>,
    pub residuals: Vec<f64>,
}

/// Uniform grid with exact endpoint handling.
#[derive(Debug, Clone, Copy)]
struct UniformGrid {
    lo: f64,
    hi: f64,
    points: usize,
}

impl UniformGrid {
    fn new(lo: f64, hi: f64, points: usize) -> UniformGrid {
        UniformGrid { lo, hi, points }
    }

    fn from_points(grid: &[f64]) -> UniformGrid {
        UniformGrid {
            lo: grid[0],
            hi: grid[grid.len() - 1],
            points: grid.len(),
        }
    }

    fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.points - 1) as f64
    }

    fn point(&self, i: usize) -> f64 {
        if i + 1 == self.points {
            self.hi
        } else {
            self.lo + i as f64 * self.step()
        }
    }

    fn to_vec(self) -> Vec<f64> {
        (0..self.points).map(|i| self.point(i)).collect()
    }

    /// Bracketing index and weight: the value at `b` is
    /// `(1 - w) * v[i] + w * v[i + 1]`, with `b` clamped to the range.
    fn bracket(&self, b: f64) -> (usize, f64) {
        if self.points < 2 || self.hi <= self.lo {
            return (0, 0.0);
        }
        if b <= self.lo {
            return (0, 0.0);
        }
        if b >= self.hi {
            return (self.points - 2, 1.0);
        }
        let u = (b - self.lo) / self.step();
        let mut i = u.floor() as usize;
        if i > self.points - 2 {
            i = self.points - 2;
        }
        (i, (u - i as f64).clamp(0.0, 1.0))
    }
}

/// Interpolation and blend weights differ across adjacent budget cells, so
/// grid-solver monotonicity holds only up to rounding of the weighted sums;
/// slack scales with the value magnitude. (The integer-layer solver has no
/// interpolation and stays exactly monotone.)
fn interpolation_monotone_tol(model: &MdpModel, usets: &UncertaintySet) -> f64 {
    let horizon_scale = match model.horizon {
        Horizon::Infinite => 1.0 / (1.0 - model.discount),
        Horizon::Finite(t) => t as f64,
    };
    1e-12 * (max_abs_reward_with(model, usets) * horizon_scale).max(1.0)
}

fn max_abs_reward_with(model: &MdpModel, usets: &UncertaintySet) -> f64 {
    let mut scale = model.max_abs_reward();
    for vs in &usets.per_state {
        for v in vs {
            for r in &v.r {
                scale = scale.max(r.abs());
            }
        }
    }
    scale
}

fn require_discounted(model: &MdpModel, op: &str) -> Result<()> {
    if model.discount >= 1.0 {
        return Err(SolverError::Unsupported(format!(
            "{op} requires discount < 1"
        )));
    }
    Ok(())
}

/// Plain deviation counts: Nature may deviate at most `budget` stages over
/// the infinite run. Value iteration over the layered `(state, d)` space.
///
/// The per-sweep residual log is returned and the solver asserts the
/// contraction `res_k <= gamma * res_{k-1} + slack` on every sweep, with
/// `slack` equal to [`CONTRACTION_SLACK`] scaled by the value magnitude.
pub fn solve_setup_a(
    model: &MdpModel,
    usets: &UncertaintySet,
    budget: usize,
    tol: f64,
) -> Result<BudgetedSolution> {
    validated(model, usets)?;
    require_discounted(model, "solve_setup_a")?;
    let (n, m) = (model.num_states, model.num_actions);
    let gamma = model.discount;
    let layers = budget + 1;
    let mut v = vec![vec![0.0; n]; layers];
    let mut v_new = vec![vec![0.0; n]; layers];
    let mut residuals = Vec::new();
    let scale = max_abs_reward_with(model, usets) / (1.0 - gamma);
    let slack = CONTRACTION_SLACK * scale.max(1.0);
    let max_sweeps = sweep_cap(max_abs_reward_with(model, usets), gamma, tol);

    for sweep in 0..max_sweeps {
        let mut residual = 0.0_f64;
        for d in 0..layers {
            for s in 0..n {
                let mut best = f64::NEG_INFINITY;
                for a in 0..m {
                    let val = setup_a_cell(model, usets, &v, d, s, a);
                    if val > best {
                        best = val;
                    }
                }
                v_new[d][s] = best;
                residual = residual.max((best - v[d][s]).abs());
            }
        }
        std::mem::swap(&mut v, &mut v_new);
        if let Some(&prev) = residuals.last() {
            assert!(
                residual <= gamma * prev + slack,
                "contraction violated at sweep {sweep}: {residual} > {gamma} * {prev} + {slack}"
            );
        }
        residuals.push(residual);
        if residual <= tol {
            let mut policy = vec![vec![0usize; layers]; n];
            for d in 0..layers {
                for s in 0..n {
                    let mut best = f64::NEG_INFINITY;
                    let mut best_a = 0;
                    for a in 0..m {
                        let val = setup_a_cell(model, usets, &v, d, s, a);
                        if val > best {
                            best = val;
                            best_a = a;
                        }
                    }
                    policy[s][d] = best_a;
                }
            }
            let values = BudgetedValueFunction {
                grid: (0..layers).map(|d| d as f64).collect(),
                values: (0..n).map(|s| (0..layers).map(|d| v[d][s]).collect()).collect(),
            };
            let viol = values.violations(0.0);
            assert!(viol.is_empty(), "budget monotonicity violated: {}", viol.join("; "));
            return Ok(BudgetedSolution { values, policy, residuals });
        }
    }
    Err(SolverError::Convergence(format!(
        "setup-A iteration did not reach tolerance {tol} within {max_sweeps} sweeps (residual {})",
        residuals.last().copied().unwrap_or(f64::NAN)
    )))
}

fn setup_a_cell(
    model: &MdpModel,
    usets: &UncertaintySet,
    v: &[Vec<f64>],
    d: usize,
    s: usize,
    a: usize,
) -> f64 {
    let mut val = q_cell(model.discount, &model.nominal_p[s][a], model.nominal_r[s][a], &v[d]);
    if d >= 1 {
        let mut dev_min = f64::INFINITY;
        for vertex in &usets.per_state[s] {
            let q = q_cell(model.discount, &vertex.p[a], vertex.r[a], &v[d - 1]);
            if q < dev_min {
                dev_min = q;
            }
        }
        if dev_min < val {
            val = dev_min;
        }
    }
    val
}

/// Discounted deviation budget on a uniform grid with linear interpolation.
///
/// Remaining budget is carried in current-stage units: not deviating maps
/// `b -> min(b / beta, cap)`, deviating costs one unit first. Deviation is
/// affordable only when `b >= 1`.
pub fn solve_setup_b(
    model: &MdpModel,
    usets: &UncertaintySet,
    spec: &BudgetSpec,
    tol: f64,
) -> Result<BudgetedSolution> {
    validated(model, usets)?;
    require_discounted(model, "solve_setup_b")?;
    if spec.kind != BudgetKind::Discounted {
        return Err(SolverError::Unsupported(
            "solve_setup_b needs a discounted budget spec".to_string(),
        ));
    }
    let v = spec.violations(model);
    if !v.is_empty() {
        return Err(SolverError::Validation(v));
    }
    let monotone_tol = interpolation_monotone_tol(model, usets);
    grid_value_iteration(model, usets, spec, tol, monotone_tol, |b, beta, cap| {
        let mut moves = vec![NatureGridMove {
            magnitude: 0.0,
            next_budget: (b / beta).min(cap),
        }];
        if b >= 1.0 {
            moves.push(NatureGridMove {
                magnitude: 1.0,
                next_budget: ((b - 1.0) / beta).min(cap),
            });
        }
        moves
    })
}

/// Fractional deviations: per stage Nature picks a vertex direction and a
/// magnitude `alpha` on a uniform grid over `[0, min(1, b)]`, realizing the
/// blend `(1 - alpha) * nominal + alpha * vertex` at budget cost `alpha`.
///
/// Finite-horizon models are solved by backward induction (the returned
/// values are for the first stage and the residual log is empty); infinite
///-horizon models by value iteration.
pub fn solve_continuous(
    model: &MdpModel,
    usets: &UncertaintySet,
    spec: &BudgetSpec,
    tol: f64,
) -> Result<BudgetedSolution> {
    validated(model, usets)?;
    if spec.kind != BudgetKind::Continuous {
        return Err(SolverError::Unsupported(
            "solve_continuous needs a continuous budget spec".to_string(),
        ));
    }
    let v = spec.violations(model);
    if !v.is_empty() {
        return Err(SolverError::Validation(v));
    }
    let moves_at = |b: f64, beta: f64, cap: f64| continuous_moves(b, beta, cap, spec.magnitude_grid_points);
    let monotone_tol = interpolation_monotone_tol(model, usets);
    match model.horizon {
        Horizon::Infinite => {
            require_discounted(model, "solve_continuous")?;
            grid_value_iteration(model, usets, spec, tol, monotone_tol, moves_at)
        }
        Horizon::Finite(t_len) => {
            grid_backward_induction(model, usets, spec, t_len, monotone_tol, moves_at)
        }
    }
}

/// One Nature move on the budget grid: realize the blend of the nominal point
/// with some vertex at the given magnitude; the budget charge is already
/// folded into `next_budget`.
#[derive(Debug, Clone, Copy)]
struct NatureGridMove {
    /// Blend weight toward the vertex; 0 means the nominal move.
    magnitude: f64,
    next_budget: f64,
}

fn continuous_moves(b: f64, beta: f64, cap: f64, magnitude_points: usize) -> Vec<NatureGridMove> {
    let mut moves = vec![NatureGridMove {
        magnitude: 0.0,
        next_budget: (b / beta).min(cap),
    }];
    let reach = b.min(1.0);
    if reach > 0.0 && magnitude_points >= 2 {
        for j in 1..magnitude_points {
            let alpha = j as f64 * reach / (magnitude_points - 1) as f64;
            moves.push(NatureGridMove {
                magnitude: alpha,
                next_budget: ((b - alpha) / beta).min(cap),
            });
        }
    }
    moves
}

/// Shared value-iteration engine for the grid solvers.
fn grid_value_iteration(
    model: &MdpModel,
    usets: &UncertaintySet,
    spec: &BudgetSpec,
    tol: f64,
    monotone_tol: f64,
    moves_at: impl Fn(f64, f64, f64) -> Vec<NatureGridMove>,
) -> Result<BudgetedSolution> {
    let (n, _m) = (model.num_states, model.num_actions);
    let gamma = model.discount;
    let cap = spec.budget_cap_value();
    let grid = UniformGrid::new(0.0, cap, spec.budget_grid_points);
    let points = grid.points;
    let mut v = vec![vec![0.0; n]; points];
    let mut v_new = vec![vec![0.0; n]; points];
    let mut residuals = Vec::new();
    let max_sweeps = sweep_cap(max_abs_reward_with(model, usets), gamma, tol);
    let moves: Vec<Vec<NatureGridMove>> = (0..points)
        .map(|i| moves_at(grid.point(i), spec.beta, cap))
        .collect();

    for _ in 0..max_sweeps {
        let mut residual = 0.0_f64;
        for i in 0..points {
            let row = grid_cell_row(model, usets, &grid, &v, &moves[i]);
            for s in 0..n {
                residual = residual.max((row[s].0 - v[i][s]).abs());
                v_new[i][s] = row[s].0;
            }
        }
        std::mem::swap(&mut v, &mut v_new);
        residuals.push(residual);
        if residual <= tol {
            let mut policy = vec![vec![0usize; points]; n];
            for i in 0..points {
                let row = grid_cell_row(model, usets, &grid, &v, &moves[i]);
                for s in 0..n {
                    policy[s][i] = row[s].1;
                }
            }
            let values = BudgetedValueFunction {
                grid: grid.to_vec(),
                values: (0..n).map(|s| (0..points).map(|i| v[i][s]).collect()).collect(),
            };
            let viol = values.violations(monotone_tol);
            assert!(viol.is_empty(), "budget monotonicity violated: {}", viol.join("; "));
            return Ok(BudgetedSolution { values, policy, residuals });
        }
    }
    Err(SolverError::Convergence(format!(
        "grid iteration did not reach tolerance {tol} within {max_sweeps} sweeps (residual {})",
        residuals.last().copied().unwrap_or(f64::NAN)
    )))
}

fn grid_backward_induction(
    model: &MdpModel,
    usets: &UncertaintySet,
    spec: &BudgetSpec,
    t_len: usize,
    monotone_tol: f64,
    moves_at: impl Fn(f64, f64, f64) -> Vec<NatureGridMove>,
) -> Result<BudgetedSolution> {
    let n = model.num_states;
    let cap = spec.budget_cap_value();
    let grid = UniformGrid::new(0.0, cap, spec.budget_grid_points);
    let points = grid.points;
    let moves: Vec<Vec<NatureGridMove>> = (0..points)
        .map(|i| moves_at(grid.point(i), spec.beta, cap))
        .collect();
    let mut v = vec![vec![0.0; n]; points];
    let mut policy = vec![vec![0usize; points]; n];
    for _t in (0..t_len).rev() {
        let mut v_new = vec![vec![0.0; n]; points];
        for i in 0..points {
            let row = grid_cell_row(model, usets, &grid, &v, &moves[i]);
            for s in 0..n {
                v_new[i][s] = row[s].0;
                policy[s][i] = row[s].1; // stage-0 policy survives the loop
            }
        }
        v = v_new;
    }
    let values = BudgetedValueFunction {
        grid: grid.to_vec(),
        values: (0..n).map(|s| (0..points).map(|i| v[i][s]).collect()).collect(),
    };
    let viol = values.violations(monotone_tol);
    assert!(viol.is_empty(), "budget monotonicity violated: {}", viol.join("; "));
    Ok(BudgetedSolution { values, policy, residuals: Vec::new() })
}

/// Values and greedy actions of every state at one budget grid point.
fn grid_cell_row(
    model: &MdpModel,
    usets: &UncertaintySet,
    grid: &UniformGrid,
    v: &[Vec<f64>],
    moves: &[NatureGridMove],
) -> Vec<(f64, usize)> {
    let (n, m) = (model.num_states, model.num_actions);
    let gamma = model.discount;
    // interpolated continuation vector per move
    let continuations: Vec<Vec<f64>> = moves
        .iter()
        .map(|mv| {
            let (i, w) = grid.bracket(mv.next_budget);
            (0..n).map(|s| (1.0 - w) * v[i][s] + w * v[i + 1][s]).collect()
        })
        .collect();
    let mut out = Vec::with_capacity(n);
    for s in 0..n {
        let mut best = f64::NEG_INFINITY;
        let mut best_a = 0;
        for a in 0..m {
            let mut worst = f64::INFINITY;
            for (mv, w) in moves.iter().zip(&continuations) {
                let q = if mv.magnitude == 0.0 {
                    q_cell(gamma, &model.nominal_p[s][a], model.nominal_r[s][a], w)
                } else {
                    let mut vertex_min = f64::INFINITY;
                    let q_nom = q_cell(gamma, &model.nominal_p[s][a], model.nominal_r[s][a], w);
                    for vertex in &usets.per_state[s] {
                        let q_vert = q_cell(gamma, &vertex.p[a], vertex.r[a], w);
                        let blended = (1.0 - mv.magnitude) * q_nom + mv.magnitude * q_vert;
                        if blended < vertex_min {
                            vertex_min = blended;
                        }
                    }
                    vertex_min
                };
                if q < worst {
                    worst = q;
                }
            }
            if worst > best {
                best = worst;
                best_a = a;
            }
        }
        out.push((best, best_a));
    }
    out
}

/// Minimal blend weight needed to reach `(p, r)` from the nominal point along
/// a single vertex ray of state `state`: the smallest `alpha` with
/// `(p, r) = (1 - alpha) * nominal + alpha * vertex` for some vertex.
///
/// Exact for segment-shaped sets; for hulls with several non-nominal vertices
/// this upper-bounds the true minimal scaling (interior points may be
/// reachable more cheaply along non-vertex directions).
pub fn deviation_cost(
    p: &[Vec<f64>],
    r: &[f64],
    state: usize,
    usets: &UncertaintySet,
) -> Result<f64> {
    const TOL: f64 = 1e-9;
    let vertices = usets
        .per_state
        .get(state)
        .ok_or_else(|| SolverError::DimensionMismatch(format!("state {state} out of range")))?;
    let nominal = &vertices[0];
    if p.len() != nominal.p.len() || r.len() != nominal.r.len() {
        return Err(SolverError::DimensionMismatch(
            "candidate parameters do not match the model's action count".to_string(),
        ));
    }
    let flatten = |p: &[Vec<f64>], r: &[f64]| -> Vec<f64> {
        p.iter().flatten().copied().chain(r.iter().copied()).collect()
    };
    let x = flatten(p, r);
    let x0 = flatten(&nominal.p, &nominal.r);
    let delta: Vec<f64> = x.iter().zip(&x0).map(|(a, b)| a - b).collect();
    if delta.iter().all(|d| d.abs() <= TOL) {
        return Ok(0.0);
    }
    let mut best: Option<f64> = None;
    for vertex in &vertices[1..] {
        let dir: Vec<f64> = flatten(&vertex.p, &vertex.r)
            .iter()
            .zip(&x0)
            .map(|(a, b)| a - b)
            .collect();
        // estimate alpha from the largest-magnitude direction component
        let Some((k, _)) = dir
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .filter(|(_, g)| g.abs() > TOL)
        else {
            continue;
        };
        let alpha = delta[k] / dir[k];
        if !(-TOL..=1.0 + TOL).contains(&alpha) {
            continue;
        }
        if delta.iter().zip(&dir).all(|(d, g)| (d - alpha * g).abs() <= TOL) {
            let alpha = alpha.clamp(0.0, 1.0);
            best = Some(best.map_or(alpha, |b: f64| b.min(alpha)));
        }
    }
    best.ok_or_else(|| {
        SolverError::NotInSet(format!(
            "parameters are not a nominal-vertex blend for state {state}"
        ))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dp::solve_nominal_infinite;
    use crate::model::ScenarioVertex;
    use crate::testing::{random_model, random_uncertainty, single_state_model};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn reward_drop_instance(gamma: f64) -> (MdpModel, UncertaintySet) {
        let mut model = single_state_model(1, gamma, 1.0);
        model.horizon = Horizon::Infinite;
        let mut usets = UncertaintySet::singleton_nominal(&model);
        let mut low = usets.per_state[0][0].clone();
        low.r[0] = 0.0;
        usets.per_state[0].push(low);
        (model, usets)
    }

    #[test]
    fn setup_a_zero_budget_is_nominal() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let model = random_model(&mut rng, 4, 2, Horizon::Infinite, 0.8);
        let usets = random_uncertainty(&mut rng, &model, 2);
        let sol = solve_setup_a(&model, &usets, 0, 1e-10).unwrap();
        let (v_nom, _) = solve_nominal_infinite(&model, 1e-10).unwrap();
        for s in 0..4 {
            assert!((sol.values.values[s][0] - v_nom[s]).abs() <= 1e-8);
        }
    }

    #[test]
    fn setup_a_single_state_hand_recursion() {
        // nominal reward 1, deviated reward 0, gamma = 0.5:
        // V(s, 0) = 2; V(s, 1) solves V = min(1 + 0.5 V, 0 + 0.5 * 2)
        let (model, usets) = reward_drop_instance(0.5);
        let sol = solve_setup_a(&model, &usets, 1, 1e-12).unwrap();
        let v0 = sol.values.values[0][0];
        let v1 = sol.values.values[0][1];
        assert!((v0 - 2.0).abs() <= 1e-10, "{v0}");
        // independent scalar fixed-point iteration
        let mut w = 0.0_f64;
        for _ in 0..200 {
            w = (1.0 + 0.5 * w).min(0.5 * v0);
        }
        assert!((v1 - w).abs() <= 1e-10, "solver {v1} vs scalar {w}");
        assert!((v1 - 1.0).abs() <= 1e-10, "Nature should burn its deviation immediately: {v1}");
    }

    #[test]
    fn setup_a_residuals_contract() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..5 {
            let gamma = rng.gen_range(0.4..0.95);
            let model = random_model(&mut rng, 5, 3, Horizon::Infinite, gamma);
            let usets = random_uncertainty(&mut rng, &model, 2);
            let sol = solve_setup_a(&model, &usets, 3, 1e-10).unwrap();
            for k in 1..sol.residuals.len() {
                assert!(sol.residuals[k] <= gamma * sol.residuals[k - 1] + 1e-12);
            }
        }
    }

    #[test]
    fn setup_a_matches_truncated_finite_horizon() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..5 {
            let gamma = rng.gen_range(0.5..0.9);
            let model = random_model(&mut rng, 4, 2, Horizon::Infinite, gamma);
            let usets = random_uncertainty(&mut rng, &model, 2);
            let d = rng.gen_range(0..=2);
            let sol = solve_setup_a(&model, &usets, d, 1e-12).unwrap();
            let t = 200usize;
            let finite = model.with_horizon(Horizon::Finite(t));
            let adaptive = crate::adaptive::solve_adaptive_finite(&finite, &usets, d).unwrap();
            let bound = gamma.powi(t as i32) * max_abs_reward_with(&model, &usets) / (1.0 - gamma)
                + 1e-9;
            for s in 0..4 {
                let diff = (sol.values.values[s][d] - adaptive.values.value(0, s, d)).abs();
                assert!(diff <= bound, "state {s}: {diff} > {bound}");
            }
        }
    }

    #[test]
    fn setup_a_rejects_undiscounted() {
        let model = single_state_model(1, 1.0, 1.0);
        let usets = UncertaintySet::singleton_nominal(&model);
        assert!(matches!(
            solve_setup_a(&model, &usets, 1, 1e-8),
            Err(SolverError::Unsupported(_))
        ));
    }

    #[test]
    fn setup_b_at_beta_one_matches_setup_a() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let model = random_model(&mut rng, 3, 2, Horizon::Infinite, 0.7);
        let usets = random_uncertainty(&mut rng, &model, 2);
        let d = 3usize;
        let a = solve_setup_a(&model, &usets, d, 1e-11).unwrap();
        let spec = BudgetSpec::discounted(d as f64, 1.0, d + 1); // integer grid 0..=3
        let b = solve_setup_b(&model, &usets, &spec, 1e-11).unwrap();
        for s in 0..3 {
            for i in 0..=d {
                assert!(
                    (a.values.values[s][i] - b.values.values[s][i]).abs() <= 1e-9,
                    "s={s} d={i}: {} vs {}",
                    a.values.values[s][i],
                    b.values.values[s][i]
                );
            }
        }
    }

    #[test]
    fn setup_b_saturates_at_rectangular_robust() {
        // with budget >= 1/(1-beta) Nature can deviate every stage
        let (model, usets) = reward_drop_instance(0.6);
        let beta = 0.8;
        let spec = BudgetSpec::discounted(100.0, beta, 201);
        let sol = solve_setup_b(&model, &usets, &spec, 1e-11).unwrap();
        // worst vertex (reward 0) every stage gives 0
        let top = sol.values.values[0].last().copied().unwrap();
        assert!(top.abs() <= 1e-8, "{top}");
        // and the zero-budget end is the nominal value 1/(1-0.6) = 2.5
        assert!((sol.values.values[0][0] - 2.5).abs() <= 1e-8);
    }

    #[test]
    fn setup_b_rejects_bad_beta() {
        let (model, usets) = reward_drop_instance(0.9);
        let spec = BudgetSpec::discounted(1.0, 0.5, 11); // beta < gamma
        assert!(solve_setup_b(&model, &usets, &spec, 1e-8).is_err());
    }

    #[test]
    fn continuous_all_or_nothing_matches_setup_a() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let model = random_model(&mut rng, 3, 2, Horizon::Infinite, 0.75);
        let usets = random_uncertainty(&mut rng, &model, 2);
        let d = 2usize;
        let a = solve_setup_a(&model, &usets, d, 1e-11).unwrap();
        let spec = BudgetSpec::continuous(d as f64, 1.0, d + 1, 2); // magnitudes {0, 1}
        let c = solve_continuous(&model, &usets, &spec, 1e-11).unwrap();
        for s in 0..3 {
            for i in 0..=d {
                assert!(
                    (a.values.values[s][i] - c.values.values[s][i]).abs() <= 1e-9,
                    "s={s} d={i}"
                );
            }
        }
    }

    #[test]
    fn continuous_zero_budget_is_nominal() {
        let (model, usets) = reward_drop_instance(0.5);
        let spec = BudgetSpec::continuous(0.0, 1.0, 2, 5);
        let sol = solve_continuous(&model, &usets, &spec, 1e-11).unwrap();
        assert!((sol.values.values[0][0] - 2.0).abs() <= 1e-9);
    }

    #[test]
    fn continuous_finer_magnitudes_never_help_decision_maker() {
        // finite horizon: backward induction is exact, so nesting is exact
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let model = random_model(&mut rng, 3, 2, Horizon::Finite(4), 0.9);
        let usets = random_uncertainty(&mut rng, &model, 2);
        let mut prev: Option<BudgetedSolution> = None;
        for n_m in [2usize, 3, 5, 9] {
            let spec = BudgetSpec::continuous(2.0, 0.95, 21, n_m);
            let sol = solve_continuous(&model, &usets, &spec, 1e-10).unwrap();
            if let Some(p) = &prev {
                for s in 0..3 {
                    for i in 0..21 {
                        assert!(
                            sol.values.values[s][i] <= p.values.values[s][i] + 1e-12,
                            "s={s} i={i} n_m={n_m}"
                        );
                    }
                }
            }
            prev = Some(sol);
        }
    }

    #[test]
    fn deviation_cost_blends() {
        let model = single_state_model(1, 1.0, 1.0);
        let mut usets = UncertaintySet::singleton_nominal(&model);
        let mut vertex = usets.per_state[0][0].clone();
        vertex.r[0] = 0.0;
        usets.per_state[0].push(vertex.clone());

        let nominal = ScenarioVertex::nominal_of(&model, 0);
        assert_eq!(deviation_cost(&nominal.p, &nominal.r, 0, &usets).unwrap(), 0.0);
        assert_eq!(deviation_cost(&vertex.p, &vertex.r, 0, &usets).unwrap(), 1.0);
        let mid = ScenarioVertex { p: vertex.p.clone(), r: vec![0.5] };
        assert!((deviation_cost(&mid.p, &mid.r, 0, &usets).unwrap() - 0.5).abs() <= 1e-12);

        let outside = ScenarioVertex { p: vertex.p.clone(), r: vec![2.0] };
        assert!(matches!(
            deviation_cost(&outside.p, &outside.r, 0, &usets),
            Err(SolverError::NotInSet(_))
        ));
    }

    #[test]
    fn deviation_cost_picks_cheapest_vertex() {
        let model = single_state_model(1, 1.0, 1.0);
        let mut usets = UncertaintySet::singleton_nominal(&model);
        let mut far = usets.per_state[0][0].clone();
        far.r[0] = -1.0; // distance 2 from nominal
        let mut near = usets.per_state[0][0].clone();
        near.r[0] = 0.0; // distance 1
        usets.per_state[0].push(far);
        usets.per_state[0].push(near);
        // r = 0.5 sits at alpha 0.25 along the far ray, 0.5 along the near one
        let p = usets.per_state[0][0].p.clone();
        let cost = deviation_cost(&p, &[0.5], 0, &usets).unwrap();
        assert!((cost - 0.25).abs() <= 1e-12, "{cost}");
    }
}
