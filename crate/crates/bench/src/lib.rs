//! Shared fixtures for the solver benchmarks.

use rmdp_core::inventory::{build_inventory_mdp, InventoryParams};
use rmdp_core::{MdpModel, UncertaintySet};

/// The default inventory benchmark at a shorter horizon, so a single solve
/// stays in benchmark-friendly territory.
pub fn inventory_fixture(days: usize) -> (MdpModel, UncertaintySet) {
    let params = InventoryParams { days, ..InventoryParams::default() };
    build_inventory_mdp(&params).expect("default parameters are valid")
}
