use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{simulate, BiasProfile, OpinionState, SimulationOptions};
use crate::error::Result;
use crate::graph::InfluenceNetwork;

/// One paired run: DeGroot (`b = 0`) and biased dynamics from the same start.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConjectureRow {
    pub degroot_converged: bool,
    pub degroot_steps: usize,
    pub biased_converged: bool,
    pub biased_steps: usize,
    pub biased_limit: Vec<f64>,
    /// DeGroot converged but the biased run did not within the budget.
    /// Evidence only; a longer horizon may clear it.
    pub counterexample: bool,
}

/// Checks, per `(bias, x0)` pair, whether convergence of the DeGroot run
/// carries over to the biased run.
pub fn conjecture_sweep(
    net: &InfluenceNetwork,
    pairs: &[(BiasProfile, OpinionState)],
    max_steps: usize,
    tol: f64,
) -> Result<Vec<ConjectureRow>> {
    let opts = SimulationOptions { max_steps, tol, ..Default::default() };
    let degroot = BiasProfile::uniform(net.n(), 0.0)?;
    pairs
        .par_iter()
        .map(|(bias, x0)| {
            let base = simulate(net, &degroot, x0, &opts)?;
            let biased = simulate(net, bias, x0, &opts)?;
            Ok(ConjectureRow {
                degroot_converged: base.converged,
                degroot_steps: base.steps_run,
                biased_converged: biased.converged,
                biased_steps: biased.steps_run,
                biased_limit: biased.terminal().as_slice().to_vec(),
                counterexample: base.converged && !biased.converged,
            })
        })
        .collect()
}
