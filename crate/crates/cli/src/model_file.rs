//! The JSON model interchange format.
//!
//! ```json
//! {
//!   "num_states": 2,
//!   "num_actions": 1,
//!   "horizon": 10,            // integer, or null for infinite
//!   "discount": 0.95,
//!   "initial": [1.0, 0.0],
//!   "nominal": { "p": [[[...]]], "r": [[...]] },   // p[s][a][s'], r[s][a]
//!   "uncertainty": [ [ {"p": [[...]], "r": [...]}, ... ], null, ... ],
//!   "budget": { "kind": "discrete", "D": 2 }
//! }
//! ```
//!
//! `uncertainty` lists each state's full vertex list (vertex 0 must repeat the
//! nominal parameters); `null` entries, missing trailing entries or a missing
//! member mean a singleton nominal set. `budget.kind` is `discrete`,
//! `discounted` or `continuous`; `beta`, `budget_grid` and `magnitude_grid`
//! default to 1.0, 101 and 11. A missing `budget` member means a discrete
//! budget of 0 (command-line flags override it either way).

use crate::CliError;
use rmdp_core::horizon::{
    BudgetKind, BudgetSpec, DEFAULT_BUDGET_GRID_POINTS, DEFAULT_MAGNITUDE_GRID_POINTS,
};
use rmdp_core::{validate_model, Horizon, MdpModel, ScenarioVertex, UncertaintySet};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Serialize, Deserialize)]
pub struct ModelFile {
    pub num_states: usize,
    pub num_actions: usize,
    /// Number of stages; `null` means infinite horizon.
    pub horizon: Option<usize>,
    pub discount: f64,
    pub initial: Vec<f64>,
    pub nominal: NominalBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uncertainty: Option<Vec<Option<Vec<VertexBlock>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<BudgetBlock>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct NominalBlock {
    pub p: Vec<Vec<Vec<f64>>>,
    pub r: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct VertexBlock {
    pub p: Vec<Vec<f64>>,
    pub r: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct BudgetBlock {
    pub kind: String,
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget_grid: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub magnitude_grid: Option<usize>,
}

/// Parses and validates a model file into the solver types.
pub fn parse_model(path: &Path) -> Result<(MdpModel, UncertaintySet, BudgetSpec), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::validation(format!("reading {}: {e}", path.display())))?;
    let file: ModelFile = serde_json::from_str(&text)
        .map_err(|e| CliError::validation(format!("parsing {}: {e}", path.display())))?;
    from_file(file)
}

pub fn from_file(file: ModelFile) -> Result<(MdpModel, UncertaintySet, BudgetSpec), CliError> {
    let horizon = match file.horizon {
        Some(t) => Horizon::Finite(t),
        None => Horizon::Infinite,
    };
    let model = MdpModel {
        num_states: file.num_states,
        num_actions: file.num_actions,
        horizon,
        discount: file.discount,
        initial_dist: file.initial,
        nominal_p: file.nominal.p,
        nominal_r: file.nominal.r,
    };
    let mut per_state: Vec<Vec<ScenarioVertex>> = (0..file.num_states)
        .map(|s| {
            if s < model.nominal_p.len() {
                vec![ScenarioVertex::nominal_of(&model, s)]
            } else {
                Vec::new()
            }
        })
        .collect();
    if let Some(entries) = file.uncertainty {
        if entries.len() > file.num_states {
            return Err(CliError::validation(format!(
                "uncertainty lists {} states but the model has {}",
                entries.len(),
                file.num_states
            )));
        }
        for (s, entry) in entries.into_iter().enumerate() {
            if let Some(vertices) = entry {
                per_state[s] = vertices
                    .into_iter()
                    .map(|v| ScenarioVertex { p: v.p, r: v.r })
                    .collect();
            }
        }
    }
    let usets = UncertaintySet { per_state };
    let violations = validate_model(&model, &usets);
    if !violations.is_empty() {
        return Err(CliError::validation(format!(
            "model validation failed:\n  {}",
            violations.join("\n  ")
        )));
    }
    let budget = match file.budget {
        None => BudgetSpec::discrete(0),
        Some(b) => {
            let kind = match b.kind.as_str() {
                "discrete" => BudgetKind::Discrete,
                "discounted" => BudgetKind::Discounted,
                "continuous" => BudgetKind::Continuous,
                other => {
                    return Err(CliError::validation(format!(
                        "unknown budget kind {other:?} (expected discrete, discounted or continuous)"
                    )))
                }
            };
            BudgetSpec {
                kind,
                budget: b.d,
                beta: b.beta.unwrap_or(1.0),
                budget_grid_points: b.budget_grid.unwrap_or(DEFAULT_BUDGET_GRID_POINTS),
                magnitude_grid_points: b.magnitude_grid.unwrap_or(DEFAULT_MAGNITUDE_GRID_POINTS),
            }
        }
    };
    Ok((model, usets, budget))
}

/// Serializes the triple back into the file schema; `parse(serialize(x))`
/// reproduces `x` exactly (floats are written in shortest round-trip form).
pub fn to_file(model: &MdpModel, usets: &UncertaintySet, budget: Option<&BudgetSpec>) -> ModelFile {
    ModelFile {
        num_states: model.num_states,
        num_actions: model.num_actions,
        horizon: match model.horizon {
            Horizon::Finite(t) => Some(t),
            Horizon::Infinite => None,
        },
        discount: model.discount,
        initial: model.initial_dist.clone(),
        nominal: NominalBlock { p: model.nominal_p.clone(), r: model.nominal_r.clone() },
        uncertainty: Some(
            usets
                .per_state
                .iter()
                .map(|vs| {
                    Some(
                        vs.iter()
                            .map(|v| VertexBlock { p: v.p.clone(), r: v.r.clone() })
                            .collect(),
                    )
                })
                .collect(),
        ),
        budget: budget.map(|b| BudgetBlock {
            kind: match b.kind {
                BudgetKind::Discrete => "discrete",
                BudgetKind::Discounted => "discounted",
                BudgetKind::Continuous => "continuous",
            }
            .to_string(),
            d: b.budget,
            beta: Some(b.beta),
            budget_grid: Some(b.budget_grid_points),
            magnitude_grid: Some(b.magnitude_grid_points),
        }),
    }
}

pub fn write_model(
    path: &Path,
    model: &MdpModel,
    usets: &UncertaintySet,
    budget: Option<&BudgetSpec>,
) -> Result<(), CliError> {
    let file = to_file(model, usets, budget);
    let json = serde_json::to_string_pretty(&file)
        .map_err(|e| CliError::validation(format!("serializing model: {e}")))?;
    std::fs::write(path, json)
        .map_err(|e| CliError::validation(format!("writing {}: {e}", path.display())))?;
    Ok(())
}
