//! Probabilistic sizing of the deviation budget.
//!
//! When parameters deviate independently with per-state (or per-stage)
//! probabilities `alpha_i`, the total number of deviations concentrates
//! around `sum alpha_i`. [`budget_bound`] returns a budget `D'` that covers
//! the realized deviation count with probability at least `1 - delta`:
//!
//! ```text
//! D' = sum_i alpha_i
//!    + (1/3) * ln(1/delta) * (1 + sqrt(1 + 18 * sum_i alpha_i / ln(1/delta)))
//! ```
//!
//! The same expression also bounds the total *amount* of fractional deviation
//! when per-stage deviation amounts in [0, 1] are independent with means
//! `alpha_i`. Logarithms are natural.

use crate::error::{Result, SolverError};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Per-unit deviation probabilities (or mean fractional deviation amounts)
/// together with the confidence parameter.
#[derive(Debug, Clone)]
pub struct DeviationRates {
    pub alphas: Vec<f64>,
    /// Failure probability, strictly inside (0, 1).
    pub delta: f64,
}

impl DeviationRates {
    pub fn new(alphas: Vec<f64>, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(SolverError::Unsupported(format!(
                "delta must lie strictly in (0, 1), got {delta}"
            )));
        }
        if let Some((i, a)) = alphas.iter().enumerate().find(|(_, a)| **a < 0.0 || !a.is_finite()) {
            return Err(SolverError::Unsupported(format!(
                "rate {i} is {a}; rates must be nonnegative"
            )));
        }
        Ok(DeviationRates { alphas, delta })
    }

    pub fn sum(&self) -> f64 {
        self.alphas.iter().sum()
    }

    /// The Bernoulli regime additionally requires every rate to be a
    /// probability.
    fn require_probabilities(&self) -> Result<()> {
        if let Some((i, a)) = self.alphas.iter().enumerate().find(|(_, a)| **a > 1.0) {
            return Err(SolverError::Unsupported(format!(
                "rate {i} is {a}; Bernoulli deviation rates must be at most 1"
            )));
        }
        Ok(())
    }
}

/// Budget that covers independent deviations with probability `1 - delta`.
///
/// Callers feeding a discrete solver should round up with [`ceil_budget`];
/// rounding is kept out of the formula so the raw bound stays visible.
pub fn budget_bound(rates: &DeviationRates) -> Result<f64> {
    if !(rates.delta > 0.0 && rates.delta < 1.0) {
        return Err(SolverError::Unsupported(format!(
            "delta must lie strictly in (0, 1), got {}",
            rates.delta
        )));
    }
    let sum = rates.sum();
    let log_term = (1.0 / rates.delta).ln();
    Ok(sum + log_term / 3.0 * (1.0 + (1.0 + 18.0 * sum / log_term).sqrt()))
}

/// Ceiling of a fractional budget, for discrete solvers. Coverage must not be
/// weakened, so the bound is always rounded up.
pub fn ceil_budget(bound: f64) -> usize {
    bound.max(0.0).ceil() as usize
}

/// Monte Carlo estimate of the probability that the realized deviation count
/// stays within budget `d`, for independent Bernoulli deviations.
///
/// Each trial draws one Bernoulli per rate on its own counter-mode stream, so
/// the result is deterministic for a fixed seed regardless of scheduling.
pub fn empirical_coverage_check(
    rates: &DeviationRates,
    d: f64,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    rates.require_probabilities()?;
    if trials == 0 {
        return Err(SolverError::Unsupported("need at least one trial".to_string()));
    }
    let mut covered = 0usize;
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial as u64);
        let mut count = 0usize;
        for &alpha in &rates.alphas {
            if rng.gen::<f64>() < alpha {
                count += 1;
            }
        }
        if (count as f64) <= d {
            covered += 1;
        }
    }
    Ok(covered as f64 / trials as f64)
}
