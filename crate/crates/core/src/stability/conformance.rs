//! Seeded sweeps that check classification verdicts against the theorem
//! statements on random instances satisfying each theorem's hypotheses.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{classify, neutral_jacobian, row_sum_bounds, Theorem, Verdict, DEFAULT_MARGIN};
use crate::dynamics::BiasProfile;
use crate::equilibria::{
    canonical_equilibria, polarization, star_center_free, star_half_leaves, EquilibriumPoint, Partition,
};
use crate::error::{Error, Result};
use crate::graph::{
    make_random_graph, make_regular_ring, make_small_world, make_star, make_two_island, randomize_weights,
    require_strongly_connected, InfluenceNetwork, TwoIslandSpec,
};
use crate::rng::{self, derive_seed, Stream};

/// Magnitude of the negative-bias band used for the neutral-consensus regime.
pub const THM2_EPSILON: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    ExtremeAndNeutral,
    NegativeBiasNeutral,
    WeakBiasPolarization,
    CompleteGraphPolarization,
    TwoIslandPolarization,
    StarEquilibria,
}

impl Regime {
    pub const ALL: [Regime; 6] = [
        Regime::ExtremeAndNeutral,
        Regime::NegativeBiasNeutral,
        Regime::WeakBiasPolarization,
        Regime::CompleteGraphPolarization,
        Regime::TwoIslandPolarization,
        Regime::StarEquilibria,
    ];
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Regime::ExtremeAndNeutral => "thm1",
            Regime::NegativeBiasNeutral => "thm2",
            Regime::WeakBiasPolarization => "thm4",
            Regime::CompleteGraphPolarization => "thm5",
            Regime::TwoIslandPolarization => "thm6",
            Regime::StarEquilibria => "thm7",
        };
        f.write_str(s)
    }
}

impl FromStr for Regime {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Regime::ALL
            .into_iter()
            .find(|r| r.to_string() == s)
            .ok_or_else(|| Error::parse(format!("unknown regime {s:?}")))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConformanceReport {
    pub regime: Option<Regime>,
    pub trials: usize,
    /// Individual equilibrium classifications checked.
    pub checks: usize,
    pub violations: Vec<String>,
    pub notes: Vec<String>,
}

impl ConformanceReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    fn merge(&mut self, other: ConformanceReport) {
        self.checks += other.checks;
        self.violations.extend(other.violations);
        self.notes.extend(other.notes);
    }

    fn expect(
        &mut self,
        trial: usize,
        net: &InfluenceNetwork,
        bias: &BiasProfile,
        eq: &EquilibriumPoint,
        accept: impl Fn(Verdict) -> bool,
        tag: Theorem,
    ) {
        self.checks += 1;
        match classify(net, bias, eq, DEFAULT_MARGIN) {
            Ok(report) => {
                if !accept(report.verdict) || report.theorem_tag != Some(tag) {
                    self.violations.push(format!(
                        "trial {trial}: {:?} at {:?} got {:?} (rho {:?}, tag {:?})",
                        eq.family(),
                        eq.x().as_slice(),
                        report.verdict,
                        report.spectral_radius,
                        report.theorem_tag
                    ));
                }
            }
            Err(e) => self.violations.push(format!("trial {trial}: classification failed: {e}")),
        }
    }
}

fn stable(v: Verdict) -> bool {
    v == Verdict::LocallyExpStable
}

fn unstable(v: Verdict) -> bool {
    v.is_unstable()
}

/// Runs `trials` seeded instances of one regime.
pub fn run_conformance(regime: Regime, trials: usize, seed: u64) -> Result<ConformanceReport> {
    let parts = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = rng::stream(derive_seed(seed, trial as u64), Stream::Sweep);
            match regime {
                Regime::ExtremeAndNeutral => extreme_and_neutral(trial, &mut rng),
                Regime::NegativeBiasNeutral => negative_bias_neutral(trial, &mut rng),
                Regime::WeakBiasPolarization => weak_bias_polarization(trial, &mut rng),
                Regime::CompleteGraphPolarization => complete_graph_polarization(trial, &mut rng),
                Regime::TwoIslandPolarization => two_island_polarization(trial, &mut rng),
                Regime::StarEquilibria => star_equilibria(trial, &mut rng),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = ConformanceReport { regime: Some(regime), trials, ..Default::default() };
    for part in parts {
        report.merge(part);
    }
    Ok(report)
}

fn self_weights(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(lo..=hi)).collect()
}

/// Random directed graph with independent edge draws, resampled until
/// strongly connected.
fn directed_random(n: usize, p: f64, seed: u64) -> Result<InfluenceNetwork> {
    require_strongly_connected(200, |attempt| {
        let mut rng = rng::stream(derive_seed(seed, attempt), Stream::Topology);
        let m = DMatrix::from_fn(n, n, |i, j| if i != j && rng.gen::<f64>() < p { 1.0 } else { 0.0 });
        InfluenceNetwork::from_matrix(m)
    })
}

/// A strongly connected network drawn from a mix of directed and undirected
/// topology classes, with randomized edge weights.
fn random_connected(rng: &mut ChaCha8Rng, n_max: usize, weights: (f64, f64)) -> Result<InfluenceNetwork> {
    let n = rng.gen_range(2..=n_max);
    let seed: u64 = rng.gen();
    let net = match (rng.gen_range(0..4), n) {
        (0, _) | (_, 2..=3) => directed_random(n, rng.gen_range(0.3..0.7), seed)?,
        (1, _) => require_strongly_connected(200, |a| make_random_graph(n, 0.5, derive_seed(seed, a)))?,
        (2, 4) => make_regular_ring(n, 2, 1.0)?,
        (2, _) => {
            require_strongly_connected(200, |a| make_small_world(n, 4.min(n - 1) & !1, 0.3, derive_seed(seed, a)))?
        }
        _ => make_regular_ring(n, 2, 1.0)?,
    };
    randomize_weights(&net, weights.0, weights.1, rng.gen())
}

fn extreme_and_neutral(trial: usize, rng: &mut ChaCha8Rng) -> Result<ConformanceReport> {
    let mut report = ConformanceReport::default();
    let net = random_connected(rng, 12, (0.2, 2.0))?;
    let n = net.n();
    let diag = if rng.gen_bool(0.3) { vec![0.0] } else { self_weights(rng, n, 0.0, 1.5) };
    let net = net.with_self_weights(&diag)?;
    let bias = BiasProfile::new((0..n).map(|_| rng.gen_range(0.05..=5.0)).collect())?;
    let eqs = canonical_equilibria(&net, &bias, 0)?;
    report.expect(trial, &net, &bias, &eqs[0], stable, Theorem::ExtremeAndNeutral);
    report.expect(trial, &net, &bias, &eqs[1], stable, Theorem::ExtremeAndNeutral);
    report.expect(trial, &net, &bias, &eqs[2], unstable, Theorem::ExtremeAndNeutral);
    Ok(report)
}

fn negative_bias_neutral(trial: usize, rng: &mut ChaCha8Rng) -> Result<ConformanceReport> {
    let mut report = ConformanceReport::default();
    let net = random_connected(rng, 10, (0.2, 0.8))?;
    let n = net.n();
    let net = net.with_self_weights(&self_weights(rng, n, 0.5, 1.5))?;
    let bias = BiasProfile::new((0..n).map(|_| -THM2_EPSILON * (1.0 - rng.gen::<f64>())).collect())?;
    let jac = neutral_jacobian(&net, &bias)?.matrix.expect("neutral Jacobian is finite");
    let nonnegative = super::is_nonnegative(&jac);
    let (_, max_row) = row_sum_bounds(&jac);
    if !nonnegative {
        report.notes.push(format!("trial {trial}: neutral Jacobian has a negative diagonal; bias band too wide here"));
        return Ok(report);
    }
    if max_row >= 1.0 {
        report.violations.push(format!("trial {trial}: neutral Jacobian row sum {max_row} >= 1"));
    }
    let half = crate::dynamics::OpinionState::constant(n, 0.5)?;
    let eq = crate::equilibria::find_equilibrium_near(&net, &bias, &half, 1e-10, 1)?;
    report.expect(trial, &net, &bias, &eq, stable, Theorem::NegativeBiasNeutral);
    Ok(report)
}

fn all_partitions(n: usize) -> impl Iterator<Item = Partition> {
    (1..(1usize << n) - 1).map(move |mask| Partition::new((0..n).map(|i| mask >> i & 1 == 1).collect()).unwrap())
}

fn weak_bias_polarization(trial: usize, rng: &mut ChaCha8Rng) -> Result<ConformanceReport> {
    let mut report = ConformanceReport::default();
    let net = random_connected(rng, 8, (0.2, 2.0))?;
    let n = net.n();
    let diag = if rng.gen_bool(0.3) { vec![0.0] } else { self_weights(rng, n, 0.0, 1.5) };
    let net = net.with_self_weights(&diag)?;
    let bias = BiasProfile::new((0..n).map(|_| rng.gen_range(0.05..0.95)).collect())?;
    for partition in all_partitions(n) {
        let eq = polarization(&net, &bias, partition)?;
        report.expect(trial, &net, &bias, &eq, |v| v == Verdict::SingularUnstable, Theorem::WeakBiasPolarization);
    }
    Ok(report)
}

fn complete_graph_polarization(trial: usize, rng: &mut ChaCha8Rng) -> Result<ConformanceReport> {
    let mut report = ConformanceReport::default();
    let n = rng.gen_range(4..=10);
    let net = crate::graph::make_complete(n, 1.0, 0.0)?.with_self_weights(&self_weights(rng, n, 0.0, 1.5))?;
    let partitions: Vec<Partition> = if n <= 8 {
        all_partitions(n).collect()
    } else {
        (0..64)
            .map(|_| loop {
                let bits: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
                if let Ok(p) = Partition::new(bits) {
                    break p;
                }
            })
            .collect()
    };
    let unit = BiasProfile::uniform(n, 1.0)?;
    let strong = BiasProfile::new((0..n).map(|_| 1.0 + rng.gen_range(1e-3..=3.0)).collect())?;
    for partition in partitions {
        let zeros = n - partition.count_ones();
        if !(2..=n - 2).contains(&zeros) {
            continue;
        }
        let eq = polarization(&net, &unit, partition.clone())?;
        report.expect(trial, &net, &unit, &eq, unstable, Theorem::CompleteGraphPolarization);
        let eq = polarization(&net, &strong, partition)?;
        report.expect(trial, &net, &strong, &eq, stable, Theorem::CompleteGraphPolarization);
    }
    Ok(report)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Island sizes and degrees with a strictly homophilous degree split.
fn random_island_spec(rng: &mut ChaCha8Rng) -> TwoIslandSpec {
    loop {
        let (n1, n2) = (rng.gen_range(3..=16), rng.gen_range(3..=16));
        let g = gcd(n1, n2);
        let cross = [n2 / g, n1 / g];
        let pick_same = |rng: &mut ChaCha8Rng, size: usize, cross: usize| -> Option<usize> {
            let options: Vec<usize> = (cross + 1..size).filter(|s| (s * size).is_multiple_of(2)).collect();
            (!options.is_empty()).then(|| options[rng.gen_range(0..options.len())])
        };
        let (Some(s1), Some(s2)) = (pick_same(rng, n1, cross[0]), pick_same(rng, n2, cross[1])) else {
            continue;
        };
        return TwoIslandSpec { n1, n2, same_deg: [s1, s2], cross_deg: cross, seed: rng.gen() };
    }
}

fn two_island_polarization(trial: usize, rng: &mut ChaCha8Rng) -> Result<ConformanceReport> {
    let mut report = ConformanceReport::default();
    let spec = random_island_spec(rng);
    let net = require_strongly_connected(200, |a| {
        make_two_island(&TwoIslandSpec { seed: derive_seed(spec.seed, a), ..spec.clone() })
    })?;
    let n = net.n();
    let net = net.with_self_weights(&self_weights(rng, n, 0.0, 1.5))?;
    let bias: Vec<f64> = match trial % 3 {
        0 => vec![1.0; n],
        1 => (0..n).map(|_| rng.gen_range(1.0..=3.0)).collect(),
        _ => (0..n).map(|_| if rng.gen_bool(0.5) { 1.0 } else { rng.gen_range(1.0..=3.0) }).collect(),
    };
    let bias = BiasProfile::new(bias)?;
    for (zeros, ones) in [(spec.n1, spec.n2), (0, 0)] {
        let partition = if zeros > 0 {
            Partition::blocks(zeros, ones)?
        } else {
            Partition::new((0..n).map(|i| i < spec.n1).collect())?
        };
        let eq = polarization(&net, &bias, partition)?;
        report.expect(trial, &net, &bias, &eq, stable, Theorem::TwoIslandPolarization);
    }
    Ok(report)
}

/// Leaf values in `[0, 1]` summing to `(N - 1) / 2`, spread by random
/// sum-preserving transfers away from all-halves.
fn random_half_leaves(rng: &mut ChaCha8Rng, leaves: usize) -> Vec<f64> {
    let mut a = vec![0.5; leaves];
    if leaves < 2 {
        return a;
    }
    for _ in 0..3 * leaves {
        let i = rng.gen_range(0..leaves);
        let j = (i + rng.gen_range(1..leaves)) % leaves;
        let up = (1.0 - a[i]).min(a[j]);
        let down = a[i].min(1.0 - a[j]);
        let delta = rng.gen_range(-down..=up);
        a[i] = (a[i] + delta).clamp(0.0, 1.0);
        a[j] = (a[j] - delta).clamp(0.0, 1.0);
    }
    a
}

fn star_equilibria(trial: usize, rng: &mut ChaCha8Rng) -> Result<ConformanceReport> {
    let mut report = ConformanceReport::default();
    let n = rng.gen_range(3..=9);
    let diag = if rng.gen_bool(0.25) { vec![0.0] } else { self_weights(rng, n, 0.0, 1.5) };
    let net = make_star(n, 1.0, &diag)?;
    let bias = BiasProfile::uniform(n, 1.0)?;
    let eqs = canonical_equilibria(&net, &bias, 0)?;
    report.expect(trial, &net, &bias, &eqs[0], stable, Theorem::ExtremeAndNeutral);
    report.expect(trial, &net, &bias, &eqs[1], stable, Theorem::ExtremeAndNeutral);
    for partition in all_partitions(n) {
        let eq = polarization(&net, &bias, partition)?;
        report.expect(trial, &net, &bias, &eq, unstable, Theorem::StarEquilibria);
    }
    for _ in 0..4 {
        let leaves = random_half_leaves(rng, n - 1);
        match star_half_leaves(&net, &bias, &leaves) {
            Ok(eq) => report.expect(trial, &net, &bias, &eq, unstable, Theorem::StarEquilibria),
            Err(e) => report.violations.push(format!("trial {trial}: star family rejected {leaves:?}: {e}")),
        }
    }
    if n % 2 == 1 {
        let half = (n - 1) / 2;
        let boundary: Vec<f64> = (0..n - 1).map(|i| if i < half { 1.0 } else { 0.0 }).collect();
        let eq = star_half_leaves(&net, &bias, &boundary)?;
        report.expect(trial, &net, &bias, &eq, unstable, Theorem::StarEquilibria);
        let mut centers: Vec<f64> = (0..3).map(|_| rng.gen_range(0.01..0.99)).collect();
        centers.push(0.5);
        for c in centers {
            let eq = star_center_free(&net, &bias, c)?;
            report.expect(trial, &net, &bias, &eq, unstable, Theorem::StarEquilibria);
        }
    }
    Ok(report)
}
