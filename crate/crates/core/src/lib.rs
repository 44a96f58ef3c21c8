//! Solvers for finite Markov decision processes whose transition and reward
//! parameters may deviate from nominal estimates, with the total amount of
//! deviation limited by a budget.
//!
//! The classical rectangular robust-MDP model lets every state sit at its
//! worst parameters simultaneously, which is usually far too pessimistic.
//! Here Nature draws from per-state uncertainty sets but pays one unit of
//! budget per deviating decision stage (or state, in the non-adaptive model),
//! so the budget interpolates between the nominal MDP (budget 0) and the
//! fully rectangular robust MDP (budget >= horizon).
//!
//! Module map:
//!
//! - [`model`]: the nominal MDP, vertex-list uncertainty sets, validation.
//! - [`dp`]: nominal and rectangular-robust dynamic programming baselines.
//! - [`adaptive`]: exact finite-horizon solver on the (state, remaining
//!   budget) space, Nature's equilibrium response, and a game-tree oracle.
//! - [`horizon`]: infinite-horizon variants (plain, discounted and fractional
//!   deviation budgets) on a discretized budget grid.
//! - [`nonadaptive`]: the reward-only non-adaptive solver via occupancy
//!   measures and cutting planes, plus exhaustive desk-scale oracles.
//! - [`budget`]: probabilistic budget sizing and a Monte Carlo coverage check.
//! - [`inventory`]: a single-product stochastic inventory-control benchmark
//!   with a demand-rush deviation and a seeded trajectory simulator.

pub mod adaptive;
pub mod budget;
pub mod dp;
pub mod error;
pub mod horizon;
pub mod inventory;
pub mod lp;
pub mod model;
pub mod nonadaptive;
pub mod testing;

pub use error::{Result, SolverError};
pub use model::{
    validate_model, validated, Horizon, MarkovPolicy, MdpModel, ScenarioVertex, UncertaintySet,
};
