//! Fixtures shared by the criterion benches.

use biasnet::graph::{make_two_island, randomize_weights, InfluenceNetwork, TwoIslandSpec};
use biasnet::rng::{self, Stream};
use biasnet::{BiasProfile, OpinionState};
use rand::Rng;

/// 50+50 two-island network with 4 same-island and 2 cross-island neighbours
/// and weights drawn from `U[0.5, 1.5]`.
pub fn two_island_network(seed: u64) -> InfluenceNetwork {
    let net = make_two_island(&TwoIslandSpec::uniform(50, 50, 4, 2, seed)).expect("feasible spec");
    randomize_weights(&net, 0.5, 1.5, seed).expect("valid interval")
}

pub fn uniform_bias(n: usize, low: f64, high: f64, seed: u64) -> BiasProfile {
    let mut rng = rng::stream(seed, Stream::Bias);
    BiasProfile::new((0..n).map(|_| rng.gen_range(low..=high)).collect()).expect("finite bias")
}

pub fn uniform_state(n: usize, seed: u64) -> OpinionState {
    let mut rng = rng::stream(seed, Stream::Init);
    OpinionState::new((0..n).map(|_| rng.gen::<f64>()).collect()).expect("opinions in [0, 1]")
}
