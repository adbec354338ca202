//! Biased-assimilation opinion dynamics on weighted directed networks.
//!
//! Each agent holds an opinion in `[0, 1]` and updates it by weighing
//! neighbours' opinions with an exponent that favours confirming views.
//! The crate simulates the dynamics, builds the socially meaningful
//! equilibria, classifies their local stability by linearization and runs
//! seeded experiments from declarative configs.

pub mod dynamics;
pub mod equilibria;
pub mod error;
pub mod graph;
pub mod harness;
pub mod rng;
pub mod stability;

pub use dynamics::{
    bias_response, classify_bias, simulate, step, BiasClass, BiasProfile, BiasRegime, OpinionState, SimulationOptions,
    Trajectory,
};
pub use equilibria::{
    canonical_equilibria, find_equilibrium_near, is_equilibrium, polarization, star_center_free, star_half_leaves,
    EquilibriumPoint, Family, Partition,
};
pub use error::{Error, Result};
pub use graph::{InfluenceNetwork, Topology};
pub use stability::{classify, StabilityReport, Theorem, Verdict};
