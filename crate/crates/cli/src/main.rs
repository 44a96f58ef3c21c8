//! Command-line front end: model-file parsing, solver dispatch and CSV
//! emission.
//!
//! Exit codes: 0 success, 1 validation or input error, 2 solver convergence
//! failure, 3 enumeration size-cap refusal.

mod model_file;
mod output;
mod policy_file;

use clap::{Args, Parser, Subcommand};
use rmdp_core::adaptive::{solve_adaptive_finite, NatureMove};
use rmdp_core::budget::{budget_bound, ceil_budget, DeviationRates};
use rmdp_core::horizon::{
    solve_continuous, solve_setup_a, solve_setup_b, BudgetKind, BudgetSpec, BudgetedSolution,
    DEFAULT_BUDGET_GRID_POINTS, DEFAULT_MAGNITUDE_GRID_POINTS, DEFAULT_TOLERANCE,
};
use rmdp_core::inventory::{
    build_inventory_mdp, figure3_experiment, simulate, InventoryParams, PolicyRef,
};
use rmdp_core::nonadaptive::solve_nonadaptive_reward_only;
use rmdp_core::{validate_model, SolverError};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use output::{fmt_f64, write_csv};

/// Error with the exit code it maps to.
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> CliError {
        CliError { code: 1, message: message.into() }
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> CliError {
        let code = match &e {
            SolverError::Convergence(_) => 2,
            SolverError::SizeCap(_) => 3,
            _ => 1,
        };
        CliError { code, message: e.to_string() }
    }
}

#[derive(Parser)]
#[command(
    name = "rmdp",
    about = "Solvers for MDPs whose parameters may deviate from nominal values within a bounded budget",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a model file against every structural invariant.
    Validate {
        #[arg(long)]
        model: PathBuf,
    },
    /// Finite-horizon backward induction over (state, remaining budget).
    SolveAdaptive {
        #[arg(long)]
        model: PathBuf,
        /// Deviation budget; overrides the model file's budget.
        #[arg(long = "D")]
        budget: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Infinite-horizon value iteration with a plain deviation count.
    SolveInfiniteA {
        #[arg(long)]
        model: PathBuf,
        #[arg(long = "D")]
        budget: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Infinite-horizon value iteration with a discounted deviation budget.
    SolveInfiniteB {
        #[arg(long)]
        model: PathBuf,
        #[arg(long = "D")]
        budget: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        budget_grid: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fractional deviations on a magnitude grid (finite or infinite horizon).
    SolveContinuous {
        #[arg(long)]
        model: PathBuf,
        #[arg(long = "D")]
        budget: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        budget_grid: Option<usize>,
        #[arg(long)]
        magnitude_grid: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reward-only non-adaptive solver (occupancy measures + cutting planes).
    SolveNonadaptiveReward {
        #[arg(long)]
        model: PathBuf,
        #[arg(long = "D")]
        budget: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Deviation budget covering independent deviations with confidence 1-delta.
    BudgetBound {
        /// Comma-separated per-state or per-stage deviation rates.
        #[arg(long, value_delimiter = ',', required = true)]
        alphas: Vec<f64>,
        #[arg(long)]
        delta: f64,
    },
    /// Inventory benchmark sweep: solve budget-aware policies and simulate.
    BenchInventory {
        #[arg(long = "p-rush", value_delimiter = ',', default_values_t = [0.01, 0.05, 0.1])]
        p_rush: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = [0usize, 1, 5, 100])]
        d0: Vec<usize>,
        #[arg(long, default_value_t = 10_000)]
        trajectories: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the generated model file here (for inspection or reuse).
        #[arg(long)]
        emit_model: Option<PathBuf>,
        #[command(flatten)]
        params: InventoryArgs,
    },
    /// Evaluate a stored policy file on the inventory benchmark.
    Simulate {
        /// policy.csv with header t,s,d,action (budget-aware) or t,s,action.
        #[arg(long)]
        policy: PathBuf,
        #[arg(long, default_value_t = 0)]
        d0: usize,
        #[arg(long = "p-rush")]
        p_rush: f64,
        #[arg(long)]
        trajectories: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        params: InventoryArgs,
    },
}

/// Inventory benchmark parameters (defaults: 100 days, 20-item store, order
/// cost 5, sale price 50, Poisson(10) demand, holding 2n^2, penalty 7n^2).
#[derive(Args)]
struct InventoryArgs {
    #[arg(long)]
    days: Option<usize>,
    #[arg(long)]
    max_stock: Option<usize>,
    #[arg(long)]
    store_price: Option<f64>,
    #[arg(long)]
    customer_price: Option<f64>,
    #[arg(long)]
    num_customers: Option<f64>,
    #[arg(long)]
    holding_cost: Option<f64>,
    #[arg(long)]
    penalty: Option<f64>,
    #[arg(long)]
    initial_stock: Option<usize>,
}

impl InventoryArgs {
    fn to_params(&self) -> InventoryParams {
        let d = InventoryParams::default();
        InventoryParams {
            days: self.days.unwrap_or(d.days),
            max_stock: self.max_stock.unwrap_or(d.max_stock),
            store_price: self.store_price.unwrap_or(d.store_price),
            customer_price: self.customer_price.unwrap_or(d.customer_price),
            num_customers: self.num_customers.unwrap_or(d.num_customers),
            holding_cost_coeff: self.holding_cost.unwrap_or(d.holding_cost_coeff),
            penalty_coeff: self.penalty.unwrap_or(d.penalty_coeff),
            initial_stock: self.initial_stock.unwrap_or(d.initial_stock),
            demand_cutoff_mass: d.demand_cutoff_mass,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                e.exit();
            }
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

/// Discrete budget: flag first, then a discrete budget from the model file.
fn resolve_discrete(flag: Option<usize>, file: &BudgetSpec, stage: &str) -> Result<usize, CliError> {
    if let Some(d) = flag {
        return Ok(d);
    }
    if file.kind == BudgetKind::Discrete {
        if file.budget.fract() != 0.0 || file.budget < 0.0 {
            return Err(CliError::validation(format!(
                "{stage}: model-file budget {} is not a nonnegative integer",
                file.budget
            )));
        }
        return Ok(file.budget as usize);
    }
    Err(CliError::validation(format!(
        "{stage}: no discrete budget; pass --D or put a discrete budget in the model file"
    )))
}

/// Grid budget spec: flags override the model file's spec of the same kind.
fn resolve_grid_spec(
    kind: BudgetKind,
    file: &BudgetSpec,
    budget: Option<f64>,
    beta: Option<f64>,
    budget_grid: Option<usize>,
    magnitude_grid: Option<usize>,
    stage: &str,
) -> Result<BudgetSpec, CliError> {
    let from_file = file.kind == kind;
    let budget = budget
        .or_else(|| from_file.then_some(file.budget))
        .ok_or_else(|| {
            CliError::validation(format!(
                "{stage}: no budget; pass --D or put a matching budget in the model file"
            ))
        })?;
    Ok(BudgetSpec {
        kind,
        budget,
        beta: beta.or_else(|| from_file.then_some(file.beta)).unwrap_or(1.0),
        budget_grid_points: budget_grid
            .or_else(|| from_file.then_some(file.budget_grid_points))
            .unwrap_or(DEFAULT_BUDGET_GRID_POINTS),
        magnitude_grid_points: magnitude_grid
            .or_else(|| from_file.then_some(file.magnitude_grid_points))
            .unwrap_or(DEFAULT_MAGNITUDE_GRID_POINTS),
    })
}

fn write_grid_solution(out: &Path, sol: &BudgetedSolution) -> Result<(), CliError> {
    let mut values = Vec::new();
    let mut policy = Vec::new();
    for s in 0..sol.values.values.len() {
        for (i, b) in sol.values.grid.iter().enumerate() {
            values.push(format!("{s},{},{}", fmt_f64(*b), fmt_f64(sol.values.values[s][i])));
            policy.push(format!("{s},{},{}", fmt_f64(*b), sol.policy[s][i]));
        }
    }
    write_csv(&out.join("values.csv"), "s,budget,value", &values)?;
    write_csv(&out.join("policy.csv"), "s,budget,action", &policy)?;
    Ok(())
}

fn ensure_out_dir(out: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out)
        .map_err(|e| CliError::validation(format!("creating {}: {e}", out.display())))
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Validate { model } => {
            let (m, u, _) = model_file::parse_model(&model)?;
            // parse_model already validates; re-check to report success
            let violations = validate_model(&m, &u);
            if violations.is_empty() {
                println!("OK");
                Ok(())
            } else {
                Err(CliError::validation(violations.join("\n")))
            }
        }

        Command::SolveAdaptive { model, budget, out } => {
            let (m, u, file_budget) = model_file::parse_model(&model)?;
            let d = resolve_discrete(budget, &file_budget, "solve-adaptive")?;
            let sol = solve_adaptive_finite(&m, &u, d)?;
            ensure_out_dir(&out)?;
            let cap = sol.values.budget_cap();
            let t_len = sol.values.num_stages;
            let n = sol.values.num_states;
            let mut values = Vec::new();
            for t in 0..=t_len {
                for s in 0..n {
                    for dd in 0..=cap {
                        values.push(format!(
                            "{},{s},{dd},{}",
                            t + 1,
                            fmt_f64(sol.values.value(t, s, dd))
                        ));
                    }
                }
            }
            write_csv(&out.join("values.csv"), "t,s,d,value", &values)?;
            let mut policy = Vec::new();
            for t in 0..t_len {
                for s in 0..n {
                    for dd in 0..=cap {
                        policy.push(format!("{},{s},{dd},{}", t + 1, sol.policy.action(t, s, dd)));
                    }
                }
            }
            write_csv(&out.join("policy.csv"), "t,s,d,action", &policy)?;
            let mut nature = Vec::new();
            for t in 0..t_len {
                for s in 0..n {
                    for dd in 0..=cap {
                        for a in 0..m.num_actions {
                            let (deviate, vertex) = match sol.nature.response(t, s, dd, a) {
                                NatureMove::Nominal => (0, String::new()),
                                NatureMove::Deviate { vertex } => (1, vertex.to_string()),
                            };
                            nature.push(format!("{},{s},{dd},{a},{deviate},{vertex}", t + 1));
                        }
                    }
                }
            }
            write_csv(&out.join("nature.csv"), "t,s,d,a,deviate,vertex", &nature)?;
            println!("value = {}", fmt_f64(sol.game_value(&m)));
            Ok(())
        }

        Command::SolveInfiniteA { model, budget, tol, out } => {
            let (m, u, file_budget) = model_file::parse_model(&model)?;
            let d = resolve_discrete(budget, &file_budget, "solve-infinite-a")?;
            let sol = solve_setup_a(&m, &u, d, tol.unwrap_or(DEFAULT_TOLERANCE))?;
            ensure_out_dir(&out)?;
            write_grid_solution(&out, &sol)?;
            println!("sweeps = {}", sol.residuals.len());
            Ok(())
        }

        Command::SolveInfiniteB { model, budget, beta, tol, budget_grid, out } => {
            let (m, u, file_budget) = model_file::parse_model(&model)?;
            let spec = resolve_grid_spec(
                BudgetKind::Discounted,
                &file_budget,
                budget,
                beta,
                budget_grid,
                None,
                "solve-infinite-b",
            )?;
            let sol = solve_setup_b(&m, &u, &spec, tol.unwrap_or(DEFAULT_TOLERANCE))?;
            ensure_out_dir(&out)?;
            write_grid_solution(&out, &sol)?;
            println!("sweeps = {}", sol.residuals.len());
            Ok(())
        }

        Command::SolveContinuous { model, budget, beta, tol, budget_grid, magnitude_grid, out } => {
            let (m, u, file_budget) = model_file::parse_model(&model)?;
            let spec = resolve_grid_spec(
                BudgetKind::Continuous,
                &file_budget,
                budget,
                beta,
                budget_grid,
                magnitude_grid,
                "solve-continuous",
            )?;
            let sol = solve_continuous(&m, &u, &spec, tol.unwrap_or(DEFAULT_TOLERANCE))?;
            ensure_out_dir(&out)?;
            write_grid_solution(&out, &sol)?;
            Ok(())
        }

        Command::SolveNonadaptiveReward { model, budget, tol, out } => {
            let (m, u, file_budget) = model_file::parse_model(&model)?;
            let d = resolve_discrete(budget, &file_budget, "solve-nonadaptive-reward")?;
            let sol = solve_nonadaptive_reward_only(&m, &u, d, tol.unwrap_or(1e-6))?;
            ensure_out_dir(&out)?;
            let mut occupancy = Vec::new();
            for (t, stage) in sol.occupancy.rho.iter().enumerate() {
                for (s, row) in stage.iter().enumerate() {
                    for (a, rho) in row.iter().enumerate() {
                        occupancy.push(format!("{},{s},{a},{}", t + 1, fmt_f64(*rho)));
                    }
                }
            }
            write_csv(&out.join("occupancy.csv"), "t,s,a,rho", &occupancy)?;
            write_csv(
                &out.join("summary.csv"),
                "value,gap,cuts",
                &[format!("{},{},{}", fmt_f64(sol.value), fmt_f64(sol.gap), sol.cuts)],
            )?;
            println!("value = {}", fmt_f64(sol.value));
            Ok(())
        }

        Command::BudgetBound { alphas, delta } => {
            let rates = DeviationRates::new(alphas, delta)?;
            let bound = budget_bound(&rates)?;
            println!("D' = {bound:.3}");
            println!("ceil(D') = {}", ceil_budget(bound));
            Ok(())
        }

        Command::BenchInventory { p_rush, d0, trajectories, seed, out, emit_model, params } => {
            let params = params.to_params();
            if let Some(path) = &emit_model {
                let (m, u) = build_inventory_mdp(&params)?;
                model_file::write_model(path, &m, &u, None)?;
                println!("model written to {}", path.display());
            }
            if let Some(out) = out {
                let table = figure3_experiment(&params, &p_rush, &d0, trajectories, seed)?;
                ensure_out_dir(&out)?;
                let rows: Vec<String> = table
                    .budget_aware
                    .iter()
                    .map(|c| {
                        format!(
                            "{},{},{},{},{}",
                            c.d0,
                            fmt_f64(c.p_rush),
                            fmt_f64(c.report.mean),
                            fmt_f64(c.report.std_error),
                            c.report.trajectories
                        )
                    })
                    .collect();
                write_csv(&out.join("figure3.csv"), "d0,p_rush,mean,stderr,n", &rows)?;
                let rows: Vec<String> = table
                    .rush_aware
                    .iter()
                    .map(|c| {
                        format!(
                            "{},{},{},{}",
                            fmt_f64(c.p_rush),
                            fmt_f64(c.report.mean),
                            fmt_f64(c.report.std_error),
                            c.report.trajectories
                        )
                    })
                    .collect();
                write_csv(&out.join("rush_aware.csv"), "p_rush,mean,stderr,n", &rows)?;
            } else if emit_model.is_none() {
                return Err(CliError::validation(
                    "bench-inventory: pass --out to run the sweep or --emit-model to export the model",
                ));
            }
            Ok(())
        }

        Command::Simulate { policy, d0, p_rush, trajectories, seed, out, params } => {
            let params = params.to_params();
            let stored = policy_file::read_policy(&policy)?;
            let report = match &stored {
                policy_file::StoredPolicy::Adaptive(p) => {
                    simulate(&params, PolicyRef::Adaptive(p), d0, p_rush, trajectories, seed)?
                }
                policy_file::StoredPolicy::Markov(p) => {
                    simulate(&params, PolicyRef::Markov(p), d0, p_rush, trajectories, seed)?
                }
            };
            println!(
                "mean = {} stderr = {} n = {}",
                fmt_f64(report.mean),
                fmt_f64(report.std_error),
                report.trajectories
            );
            if let Some(out) = out {
                ensure_out_dir(&out)?;
                write_csv(
                    &out.join("report.csv"),
                    "d0,p_rush,mean,stderr,n",
                    &[format!(
                        "{d0},{},{},{},{}",
                        fmt_f64(p_rush),
                        fmt_f64(report.mean),
                        fmt_f64(report.std_error),
                        report.trajectories
                    )],
                )?;
            }
            Ok(())
        }
    }
}
