//! Nominal model representation and validation.
//!
//! An [`MdpModel`] stores the nominal parameters of a finite MDP: the
//! transition kernel `p0(s'|s,a)`, the reward table `r0(s,a)`, the initial
//! state distribution, the horizon and the discount factor. Uncertainty about
//! the parameters of a state is captured by an [`UncertaintySet`]: a finite
//! list of extreme points ([`ScenarioVertex`]) whose convex hull is the set of
//! admissible `(p_s, r_s)` pairs. Vertex 0 of every state is, by convention,
//! the nominal parameter point itself.

use crate::error::{Result, SolverError};

/// Tolerance used when checking that probability vectors sum to one.
pub const DIST_TOL: f64 = 1e-9;

/// Decision horizon: a fixed number of stages, or an infinite stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Horizon {
    Finite(usize),
    Infinite,
}

impl Horizon {
    pub fn is_finite(&self) -> bool {
        matches!(self, Horizon::Finite(_))
    }

    /// Number of stages, or an unsupported-input error for infinite horizons.
    pub fn finite_or_err(&self, op: &str) -> Result<usize> {
        match self {
            Horizon::Finite(t) => Ok(*t),
            Horizon::Infinite => Err(SolverError::Unsupported(format!(
                "{op} requires a finite horizon"
            ))),
        }
    }
}

/// A finite MDP with nominal parameters.
///
/// Indexing convention: `nominal_p[s][a][s']` is the probability of moving to
/// `s'` from `s` under action `a`; `nominal_r[s][a]` is the immediate reward.
#[derive(Debug, Clone)]
pub struct MdpModel {
    pub num_states: usize,
    pub num_actions: usize,
    pub horizon: Horizon,
    /// Discount factor in (0, 1]; exactly 1 is allowed only with a finite horizon.
    pub discount: f64,
    /// Initial state distribution.
    pub initial_dist: Vec<f64>,
    pub nominal_p: Vec<Vec<Vec<f64>>>,
    pub nominal_r: Vec<Vec<f64>>,
}

impl MdpModel {
    /// Collects invariant violations of the model itself (see also
    /// [`validate_model`] for joint model + uncertainty-set validation).
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let n = self.num_states;
        let m = self.num_actions;
        if n == 0 {
            out.push("num_states must be positive".to_string());
        }
        if m == 0 {
            out.push("num_actions must be positive".to_string());
        }
        if let Horizon::Finite(0) = self.horizon {
            out.push("horizon must be positive".to_string());
        }
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            out.push(format!("discount {} outside (0, 1]", self.discount));
        }
        if self.discount == 1.0 && !self.horizon.is_finite() {
            out.push("discount 1 requires a finite horizon".to_string());
        }
        if self.initial_dist.len() != n {
            out.push(format!(
                "initial distribution has length {} but there are {} states",
                self.initial_dist.len(),
                n
            ));
        } else if let Some(msg) = check_distribution(&self.initial_dist, "initial distribution") {
            out.push(msg);
        }
        if self.nominal_p.len() != n || self.nominal_r.len() != n {
            out.push("nominal parameter tables must have one row block per state".to_string());
            return out;
        }
        for s in 0..n {
            if self.nominal_p[s].len() != m || self.nominal_r[s].len() != m {
                out.push(format!("state {s}: parameter tables must cover every action"));
                continue;
            }
            for a in 0..m {
                let row = &self.nominal_p[s][a];
                if row.len() != n {
                    out.push(format!("transition row (s={s}, a={a}) has length {}", row.len()));
                } else if let Some(msg) =
                    check_distribution(row, &format!("transition row (s={s}, a={a})"))
                {
                    out.push(msg);
                }
            }
        }
        out
    }

    /// Largest absolute nominal reward; used for value-scale bounds.
    pub fn max_abs_reward(&self) -> f64 {
        self.nominal_r
            .iter()
            .flatten()
            .fold(0.0_f64, |acc, r| acc.max(r.abs()))
    }

    /// Copy of this model with a different horizon (used to truncate an
    /// infinite-horizon model for finite-horizon comparisons).
    pub fn with_horizon(&self, horizon: Horizon) -> MdpModel {
        let mut m = self.clone();
        m.horizon = horizon;
        m
    }
}

fn check_distribution(row: &[f64], what: &str) -> Option<String> {
    if let Some((i, v)) = row.iter().enumerate().find(|(_, v)| **v < 0.0 || !v.is_finite()) {
        return Some(format!("{what}: entry {i} is {v}"));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > DIST_TOL {
        return Some(format!("{what}: sums to {sum}"));
    }
    None
}

/// One extreme point of a state's uncertainty set: a full transition row per
/// action plus a reward per action.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioVertex {
    /// `p[a][s']`.
    pub p: Vec<Vec<f64>>,
    /// `r[a]`.
    pub r: Vec<f64>,
}

impl ScenarioVertex {
    /// The nominal parameters of state `s`, sliced out of the model.
    pub fn nominal_of(model: &MdpModel, s: usize) -> ScenarioVertex {
        ScenarioVertex {
            p: model.nominal_p[s].clone(),
            r: model.nominal_r[s].clone(),
        }
    }

    /// True if this vertex's rows all match the nominal kernel of state `s`
    /// exactly (bitwise).
    pub fn has_nominal_transitions(&self, model: &MdpModel, s: usize) -> bool {
        self.p == model.nominal_p[s]
    }
}

/// Per-state uncertainty sets, each represented by its vertex list.
///
/// Vertex 0 of every state must equal the nominal parameters exactly, so the
/// nominal point is always admissible and solvers can address it by index.
#[derive(Debug, Clone)]
pub struct UncertaintySet {
    /// `per_state[s]` is the vertex list of state `s`.
    pub per_state: Vec<Vec<ScenarioVertex>>,
}

impl UncertaintySet {
    /// Singleton sets: every state's uncertainty set is just its nominal point.
    pub fn singleton_nominal(model: &MdpModel) -> UncertaintySet {
        UncertaintySet {
            per_state: (0..model.num_states)
                .map(|s| vec![ScenarioVertex::nominal_of(model, s)])
                .collect(),
        }
    }

    /// Builds a set from per-state extra vertices; vertex 0 is filled in with
    /// the nominal parameters automatically.
    pub fn from_deviations(model: &MdpModel, extra: Vec<Vec<ScenarioVertex>>) -> UncertaintySet {
        let mut per_state = Vec::with_capacity(model.num_states);
        for (s, vs) in extra.into_iter().enumerate() {
            let mut list = vec![ScenarioVertex::nominal_of(model, s)];
            list.extend(vs);
            per_state.push(list);
        }
        UncertaintySet { per_state }
    }

    pub fn max_vertices(&self) -> usize {
        self.per_state.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// True if every vertex of every state keeps the nominal transition kernel
    /// (only rewards deviate).
    pub fn is_reward_only(&self, model: &MdpModel) -> bool {
        self.per_state.iter().enumerate().all(|(s, vs)| {
            vs.iter().all(|v| v.has_nominal_transitions(model, s))
        })
    }

    /// Collects invariant violations against the given model.
    pub fn violations(&self, model: &MdpModel) -> Vec<String> {
        let mut out = Vec::new();
        let n = model.num_states;
        let m = model.num_actions;
        if self.per_state.len() != n {
            out.push(format!(
                "uncertainty set covers {} states but the model has {n}",
                self.per_state.len()
            ));
            return out;
        }
        for s in 0..n {
            let vs = &self.per_state[s];
            if vs.is_empty() {
                out.push(format!("state {s}: vertex list is empty"));
                continue;
            }
            if vs[0].p != model.nominal_p[s] || vs[0].r != model.nominal_r[s] {
                out.push(format!("state {s}: vertex 0 differs from the nominal parameters"));
            }
            for (k, v) in vs.iter().enumerate() {
                if v.p.len() != m || v.r.len() != m {
                    out.push(format!("state {s} vertex {k}: must cover every action"));
                    continue;
                }
                for a in 0..m {
                    if v.p[a].len() != n {
                        out.push(format!(
                            "state {s} vertex {k}: transition row for action {a} has length {}",
                            v.p[a].len()
                        ));
                    } else if let Some(msg) = check_distribution(
                        &v.p[a],
                        &format!("state {s} vertex {k} action {a} transition row"),
                    ) {
                        out.push(msg);
                    }
                }
            }
        }
        out
    }
}

/// A Markov policy over a finite horizon: one action (or one action
/// distribution) per stage and state.
#[derive(Debug, Clone, PartialEq)]
pub enum MarkovPolicy {
    /// `actions[t][s]` for stages `t = 0..T`.
    Deterministic(Vec<Vec<usize>>),
    /// `dist[t][s][a]`, each row a distribution over actions.
    Randomized(Vec<Vec<Vec<f64>>>),
}

impl MarkovPolicy {
    pub fn num_stages(&self) -> usize {
        match self {
            MarkovPolicy::Deterministic(a) => a.len(),
            MarkovPolicy::Randomized(d) => d.len(),
        }
    }

    /// Probability of taking `a` in state `s` at stage `t` (0-based).
    pub fn action_prob(&self, t: usize, s: usize, a: usize) -> f64 {
        match self {
            MarkovPolicy::Deterministic(acts) => {
                if acts[t][s] == a {
                    1.0
                } else {
                    0.0
                }
            }
            MarkovPolicy::Randomized(dist) => dist[t][s][a],
        }
    }

    pub fn violations(&self, model: &MdpModel) -> Vec<String> {
        let mut out = Vec::new();
        let (n, m) = (model.num_states, model.num_actions);
        match self {
            MarkovPolicy::Deterministic(acts) => {
                for (t, row) in acts.iter().enumerate() {
                    if row.len() != n {
                        out.push(format!("policy stage {t}: covers {} states, expected {n}", row.len()));
                        continue;
                    }
                    for (s, &a) in row.iter().enumerate() {
                        if a >= m {
                            out.push(format!("policy stage {t} state {s}: action {a} out of range"));
                        }
                    }
                }
            }
            MarkovPolicy::Randomized(dist) => {
                for (t, block) in dist.iter().enumerate() {
                    for (s, row) in block.iter().enumerate() {
                        if row.len() != m {
                            out.push(format!(
                                "policy stage {t} state {s}: row length {}, expected {m}",
                                row.len()
                            ));
                        } else if let Some(msg) =
                            check_distribution(row, &format!("policy row (t={t}, s={s})"))
                        {
                            out.push(msg);
                        }
                    }
                }
            }
        }
        out
    }
}

/// Joint validation of a model and its uncertainty set. An empty return means
/// every invariant holds; otherwise each entry names the offending index and
/// quantity. Models violating the tolerance are rejected rather than
/// renormalized.
pub fn validate_model(model: &MdpModel, usets: &UncertaintySet) -> Vec<String> {
    let mut out = model.violations();
    // Only check the uncertainty set against a structurally sound model.
    if out.is_empty() || model.nominal_p.len() == model.num_states {
        out.extend(usets.violations(model));
    }
    out
}

/// Turns a violation list into a `Result`.
pub fn validated(model: &MdpModel, usets: &UncertaintySet) -> Result<()> {
    let v = validate_model(model, usets);
    if v.is_empty() {
        Ok(())
    } else {
        Err(SolverError::Validation(v))
    }
}
