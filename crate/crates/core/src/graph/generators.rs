use std::collections::BTreeSet;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{broadcast, InfluenceNetwork, Topology};
use crate::error::{Error, Result};
use crate::rng::{self, Stream};

/// Retry bound for the randomized pairings.
const MAX_PAIRING_ATTEMPTS: usize = 200;
/// Degree-preserving swaps per edge when falling back from rejection sampling.
const SWAPS_PER_EDGE: usize = 20;

pub fn make_complete(n: usize, off_diag_weight: f64, self_weight: f64) -> Result<InfluenceNetwork> {
    if n < 2 {
        return Err(Error::InvalidSize(format!("complete graph needs n >= 2, got {n}")));
    }
    check_positive("off_diag_weight", off_diag_weight)?;
    check_nonnegative("self_weight", self_weight)?;
    let m = DMatrix::from_fn(n, n, |i, j| if i == j { self_weight } else { off_diag_weight });
    InfluenceNetwork::with_topology(m, Topology::Complete)
}

/// Undirected star with node 0 at the center. `self_weights` has length 1 or `n`.
pub fn make_star(n: usize, weight: f64, self_weights: &[f64]) -> Result<InfluenceNetwork> {
    if n < 3 {
        return Err(Error::InvalidSize(format!("star needs n >= 3, got {n}")));
    }
    check_positive("weight", weight)?;
    let diag = broadcast(self_weights, n, "self_weights")?;
    for &w in &diag {
        check_nonnegative("self_weight", w)?;
    }
    let m = DMatrix::from_fn(n, n, |i, j| match (i, j) {
        _ if i == j => diag[i],
        (0, _) | (_, 0) => weight,
        _ => 0.0,
    });
    InfluenceNetwork::with_topology(m, Topology::Star { center: 0 })
}

pub fn make_path(n: usize, weight: f64) -> Result<InfluenceNetwork> {
    if n < 2 {
        return Err(Error::InvalidSize(format!("path needs n >= 2, got {n}")));
    }
    check_positive("weight", weight)?;
    let m = DMatrix::from_fn(n, n, |i, j| if i.abs_diff(j) == 1 { weight } else { 0.0 });
    InfluenceNetwork::with_topology(m, Topology::Path)
}

/// Ring lattice where each node links to the `deg / 2` nearest nodes on each side.
pub fn make_regular_ring(n: usize, deg: usize, weight: f64) -> Result<InfluenceNetwork> {
    check_ring(n, deg)?;
    check_positive("weight", weight)?;
    let m = DMatrix::from_fn(n, n, |i, j| {
        let gap = i.abs_diff(j);
        if i != j && gap.min(n - gap) <= deg / 2 {
            weight
        } else {
            0.0
        }
    });
    InfluenceNetwork::with_topology(m, Topology::Ring { deg })
}

/// Undirected Erdős–Rényi sample with unit weights.
pub fn make_random_graph(n: usize, edge_prob: f64, seed: u64) -> Result<InfluenceNetwork> {
    if n < 2 {
        return Err(Error::InvalidSize(format!("random graph needs n >= 2, got {n}")));
    }
    if !(0.0..=1.0).contains(&edge_prob) {
        return Err(Error::InvalidParameter(format!("edge_prob {edge_prob} outside [0, 1]")));
    }
    let mut rng = rng::stream(seed, Stream::Topology);
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen::<f64>() < edge_prob {
                m[(i, j)] = 1.0;
                m[(j, i)] = 1.0;
            }
        }
    }
    InfluenceNetwork::with_topology(m, Topology::Random)
}

/// Watts–Strogatz small world: ring lattice of degree `ring_deg`, each
/// clockwise edge rewired with probability `rewire_prob`. Unit weights.
pub fn make_small_world(n: usize, ring_deg: usize, rewire_prob: f64, seed: u64) -> Result<InfluenceNetwork> {
    check_ring(n, ring_deg)?;
    if !(0.0..=1.0).contains(&rewire_prob) {
        return Err(Error::InvalidParameter(format!("rewire_prob {rewire_prob} outside [0, 1]")));
    }
    let mut rng = rng::stream(seed, Stream::Topology);
    let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    for i in 0..n {
        for k in 1..=ring_deg / 2 {
            edges.insert(ordered(i, (i + k) % n));
        }
    }
    for k in 1..=ring_deg / 2 {
        for i in 0..n {
            let old = ordered(i, (i + k) % n);
            if !edges.contains(&old) || rng.gen::<f64>() >= rewire_prob {
                continue;
            }
            let candidates: Vec<usize> = (0..n).filter(|&t| t != i && !edges.contains(&ordered(i, t))).collect();
            if let Some(&target) = candidates.choose(&mut rng) {
                edges.remove(&old);
                edges.insert(ordered(i, target));
            }
        }
    }
    let mut m = DMatrix::zeros(n, n);
    for &(a, b) in &edges {
        m[(a, b)] = 1.0;
        m[(b, a)] = 1.0;
    }
    InfluenceNetwork::with_topology(m, Topology::SmallWorld)
}

/// Two homophilous islands with regular same-island and cross-island degrees.
///
/// Island 1 is agents `0..n1`, island 2 is `n1..n1 + n2`. Index 0 of the
/// degree arrays refers to island 1.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwoIslandSpec {
    pub n1: usize,
    pub n2: usize,
    pub same_deg: [usize; 2],
    pub cross_deg: [usize; 2],
    pub seed: u64,
}

impl TwoIslandSpec {
    /// Same per-node degrees on both islands.
    pub fn uniform(n1: usize, n2: usize, same_deg: usize, cross_deg: usize, seed: u64) -> Self {
        Self { n1, n2, same_deg: [same_deg; 2], cross_deg: [cross_deg; 2], seed }
    }

    pub fn validate(&self) -> Result<()> {
        let sizes = [self.n1, self.n2];
        for island in 0..2 {
            let (size, same, cross) = (sizes[island], self.same_deg[island], self.cross_deg[island]);
            if size == 0 || same == 0 || cross == 0 {
                return Err(Error::ConstructionInfeasible(format!(
                    "island {} needs positive size and degrees (size {size}, same {same}, cross {cross})",
                    island + 1
                )));
            }
            if same >= size {
                return Err(Error::ConstructionInfeasible(format!(
                    "island {} same-island degree {same} must be below its size {size}",
                    island + 1
                )));
            }
            if same * size % 2 != 0 {
                return Err(Error::ConstructionInfeasible(format!(
                    "island {} has odd degree sum {same} x {size}",
                    island + 1
                )));
            }
            if cross > sizes[1 - island] {
                return Err(Error::ConstructionInfeasible(format!(
                    "island {} cross degree {cross} exceeds the other island's size",
                    island + 1
                )));
            }
        }
        if self.n1 * self.cross_deg[0] != self.n2 * self.cross_deg[1] {
            return Err(Error::ConstructionInfeasible(format!(
                "cross edge counts disagree: {} x {} != {} x {}",
                self.n1, self.cross_deg[0], self.n2, self.cross_deg[1]
            )));
        }
        Ok(())
    }
}

pub fn make_two_island(spec: &TwoIslandSpec) -> Result<InfluenceNetwork> {
    spec.validate()?;
    let mut rng = rng::stream(spec.seed, Stream::Topology);
    let n = spec.n1 + spec.n2;
    let mut edges = regular_pairing(spec.n1, spec.same_deg[0], &mut rng)?;
    edges.extend(
        regular_pairing(spec.n2, spec.same_deg[1], &mut rng)?.into_iter().map(|(a, b)| (a + spec.n1, b + spec.n1)),
    );
    edges.extend(bipartite_pairing(spec, &mut rng)?);
    let mut m = DMatrix::zeros(n, n);
    for (a, b) in edges {
        m[(a, b)] = 1.0;
        m[(b, a)] = 1.0;
    }
    InfluenceNetwork::with_topology(
        m,
        Topology::TwoIsland { n1: spec.n1, n2: spec.n2, same_deg: spec.same_deg, cross_deg: spec.cross_deg },
    )
}

/// Simple `deg`-regular graph on `size` nodes. Dense degrees are drawn as the
/// complement of a sparse one, where rejection sampling rarely succeeds.
fn regular_pairing(size: usize, deg: usize, rng: &mut ChaCha8Rng) -> Result<Vec<(usize, usize)>> {
    if 2 * deg < size {
        return sparse_regular_pairing(size, deg, rng);
    }
    let sparse: BTreeSet<_> = sparse_regular_pairing(size, size - 1 - deg, rng)?.into_iter().collect();
    Ok((0..size).flat_map(|a| (a + 1..size).map(move |b| (a, b))).filter(|e| !sparse.contains(e)).collect())
}

/// Configuration-model sample of a simple `deg`-regular graph on `size` nodes.
fn sparse_regular_pairing(size: usize, deg: usize, rng: &mut ChaCha8Rng) -> Result<Vec<(usize, usize)>> {
    if deg == 0 {
        return Ok(Vec::new());
    }
    let mut stubs: Vec<usize> = (0..size).flat_map(|v| std::iter::repeat_n(v, deg)).collect();
    'attempt: for _ in 0..MAX_PAIRING_ATTEMPTS {
        stubs.shuffle(rng);
        let mut seen = BTreeSet::new();
        for pair in stubs.chunks_exact(2) {
            let (a, b) = (pair[0], pair[1]);
            if a == b || !seen.insert(ordered(a, b)) {
                continue 'attempt;
            }
        }
        return Ok(seen.into_iter().collect());
    }
    // rejection is hopeless at this degree: start from a circulant and mix
    let mut edges = BTreeSet::new();
    for a in 0..size {
        for t in 1..=deg / 2 {
            edges.insert(ordered(a, (a + t) % size));
        }
        if deg % 2 == 1 {
            edges.insert(ordered(a, (a + size / 2) % size));
        }
    }
    Ok(swap_edges(edges, rng, |(a, b), (c, d)| (ordered(a, d), ordered(c, b))))
}

/// Cross-island edges, complemented when denser than half the bipartite graph.
fn bipartite_pairing(spec: &TwoIslandSpec, rng: &mut ChaCha8Rng) -> Result<Vec<(usize, usize)>> {
    let (n1, n2) = (spec.n1, spec.n2);
    if 2 * spec.cross_deg[0] <= n2 {
        return sparse_bipartite_pairing(n1, n2, spec.cross_deg, rng);
    }
    let sparse: BTreeSet<_> =
        sparse_bipartite_pairing(n1, n2, [n2 - spec.cross_deg[0], n1 - spec.cross_deg[1]], rng)?.into_iter().collect();
    Ok((0..n1).flat_map(|a| (n1..n1 + n2).map(move |b| (a, b))).filter(|e| !sparse.contains(e)).collect())
}

fn sparse_bipartite_pairing(
    n1: usize,
    n2: usize,
    cross_deg: [usize; 2],
    rng: &mut ChaCha8Rng,
) -> Result<Vec<(usize, usize)>> {
    let left: Vec<usize> = (0..n1).flat_map(|v| std::iter::repeat_n(v, cross_deg[0])).collect();
    let mut right: Vec<usize> = (n1..n1 + n2).flat_map(|v| std::iter::repeat_n(v, cross_deg[1])).collect();
    'attempt: for _ in 0..MAX_PAIRING_ATTEMPTS {
        right.shuffle(rng);
        let mut seen = BTreeSet::new();
        for (&a, &b) in left.iter().zip(&right) {
            if !seen.insert((a, b)) {
                continue 'attempt;
            }
        }
        return Ok(seen.into_iter().collect());
    }
    // left node a takes the next cross_deg[0] right nodes cyclically
    let edges = (0..n1).flat_map(|a| (0..cross_deg[0]).map(move |t| (a, n1 + (a * cross_deg[0] + t) % n2))).collect();
    Ok(swap_edges(edges, rng, |(a, b), (c, d)| ((a, d), (c, b))))
}

/// Randomizes a simple graph by double-edge swaps that keep every degree.
/// `rewire` maps two edges to the candidate replacement pair.
fn swap_edges(
    edges: BTreeSet<(usize, usize)>,
    rng: &mut ChaCha8Rng,
    rewire: impl Fn((usize, usize), (usize, usize)) -> ((usize, usize), (usize, usize)),
) -> Vec<(usize, usize)> {
    let mut list: Vec<_> = edges.iter().copied().collect();
    let mut set = edges;
    if list.len() < 2 {
        return list;
    }
    for _ in 0..SWAPS_PER_EDGE * list.len() {
        let (i, j) = (rng.gen_range(0..list.len()), rng.gen_range(0..list.len()));
        let (e, f) = rewire(list[i], list[j]);
        if e.0 == e.1 || f.0 == f.1 || e == f || set.contains(&e) || set.contains(&f) {
            continue;
        }
        set.remove(&list[i]);
        set.remove(&list[j]);
        set.insert(e);
        set.insert(f);
        list[i] = e;
        list[j] = f;
    }
    set.into_iter().collect()
}

/// Redraws every positive off-diagonal weight from `U[low, high]`, independently
/// per direction. Zero entries and the diagonal are left untouched.
pub fn randomize_weights(net: &InfluenceNetwork, low: f64, high: f64, seed: u64) -> Result<InfluenceNetwork> {
    if !(low.is_finite() && high.is_finite()) || low > high {
        return Err(Error::InvalidParameter(format!("weight interval [{low}, {high}] is empty")));
    }
    check_positive("low", low)?;
    let mut rng = rng::stream(seed, Stream::Weights);
    let n = net.n();
    let mut m = net.weights().clone();
    for i in 0..n {
        for j in 0..n {
            if i != j && m[(i, j)] > 0.0 {
                m[(i, j)] = if low == high { low } else { rng.gen_range(low..=high) };
            }
        }
    }
    InfluenceNetwork::with_topology(m, net.topology().clone())
}

/// Calls `generate(attempt)` for `attempt = 0, 1, ...` until it yields a
/// strongly connected network, giving up after `max_attempts`.
pub fn require_strongly_connected<F>(max_attempts: usize, mut generate: F) -> Result<InfluenceNetwork>
where
    F: FnMut(u64) -> Result<InfluenceNetwork>,
{
    for attempt in 0..max_attempts {
        let net = generate(attempt as u64)?;
        if net.is_strongly_connected() {
            return Ok(net);
        }
    }
    Err(Error::GenerationFailed { attempts: max_attempts, reason: "no strongly connected sample".into() })
}

fn ordered(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

fn check_ring(n: usize, deg: usize) -> Result<()> {
    if n < 3 {
        return Err(Error::InvalidSize(format!("ring needs n >= 3, got {n}")));
    }
    if deg < 2 || !deg.is_multiple_of(2) || deg >= n {
        return Err(Error::InvalidParameter(format!("ring degree {deg} must be even and in [2, {n})")));
    }
    Ok(())
}

fn check_positive(what: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{what} = {v} must be positive")))
    }
}

fn check_nonnegative(what: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{what} = {v} must be nonnegative")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn count_in(net: &InfluenceNetwork, i: usize, range: std::ops::Range<usize>) -> usize {
        net.neighbors(i).iter().filter(|(j, _)| range.contains(j)).count()
    }

    #[test]
    fn complete_degrees() {
        let net = make_complete(4, 1.0, 0.0).unwrap();
        assert!(net.degrees().iter().all(|&d| d == 3.0));
        let net = make_complete(2, 1.0, 0.5).unwrap();
        assert_eq!(net.weights().as_slice(), &[0.5, 1.0, 1.0, 0.5]);
        assert!(make_complete(10, 1.0, 0.0).unwrap().is_strongly_connected());
        assert!(matches!(make_complete(1, 1.0, 0.0), Err(Error::InvalidSize(_))));
    }

    #[test]
    fn star_shape() {
        let net = make_star(5, 1.0, &[0.0]).unwrap();
        assert_eq!(net.degrees(), &[4.0, 1.0, 1.0, 1.0, 1.0]);
        assert_eq!(net.star_center(), Some(0));
        let net = make_star(3, 1.0, &[1.0]).unwrap();
        assert_eq!(net.neighbors(1), &[(0, 1.0)]);
        assert_eq!(net.neighbors(2), &[(0, 1.0)]);
        assert!(make_star(7, 1.0, &[0.0]).unwrap().is_strongly_connected());
        assert!(matches!(make_star(2, 1.0, &[0.0]), Err(Error::InvalidSize(_))));
    }

    #[test]
    fn path_and_ring() {
        let p = make_path(3, 1.0).unwrap();
        assert_eq!(p.degrees(), &[1.0, 2.0, 1.0]);
        assert_eq!(p.weight(0, 2), 0.0);
        let r = make_regular_ring(6, 2, 1.0).unwrap();
        assert!(r.degrees().iter().all(|&d| d == 2.0));
        assert!(r.is_strongly_connected());
        assert!(matches!(make_regular_ring(6, 3, 1.0), Err(Error::InvalidParameter(_))));
        assert!(matches!(make_regular_ring(4, 4, 1.0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn random_generators_are_seeded() {
        let a = make_random_graph(20, 0.3, 1).unwrap();
        let b = make_random_graph(20, 0.3, 1).unwrap();
        assert_eq!(a.weights(), b.weights());
        assert!(a.is_undirected());
        let c = make_small_world(20, 4, 0.2, 5).unwrap();
        assert_eq!(c.weights(), make_small_world(20, 4, 0.2, 5).unwrap().weights());
        assert!(c.is_undirected());
        let edges: f64 = c.degrees().iter().sum::<f64>() / 2.0;
        assert_eq!(edges, 40.0);
        assert!(matches!(make_random_graph(5, 1.5, 0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn two_island_fifty_fifty_configuration() {
        let spec = TwoIslandSpec::uniform(50, 50, 4, 2, 7);
        let net = make_two_island(&spec).unwrap();
        assert_eq!(net.n(), 100);
        for i in 0..100 {
            let (own, other) = if i < 50 { (0..50, 50..100) } else { (50..100, 0..50) };
            assert_eq!(count_in(&net, i, own), 4, "agent {i}");
            assert_eq!(count_in(&net, i, other), 2, "agent {i}");
        }
        assert!(net.is_undirected());
    }

    #[test]
    fn two_island_small_cross_is_perfect_matching() {
        let net = make_two_island(&TwoIslandSpec::uniform(4, 4, 2, 1, 0)).unwrap();
        assert_eq!(net.n(), 8);
        let mut partners = BTreeSet::new();
        for i in 0..4 {
            let cross: Vec<usize> = net.neighbors(i).iter().map(|&(j, _)| j).filter(|&j| j >= 4).collect();
            assert_eq!(cross.len(), 1);
            partners.insert(cross[0]);
            assert_eq!(count_in(&net, i, 0..4), 2);
        }
        assert_eq!(partners.len(), 4);
    }

    #[test]
    fn two_island_handshake_violation() {
        let spec = TwoIslandSpec { n1: 4, n2: 6, same_deg: [2, 2], cross_deg: [2, 2], seed: 0 };
        assert!(matches!(make_two_island(&spec), Err(Error::ConstructionInfeasible(_))));
        let odd = TwoIslandSpec::uniform(5, 5, 3, 1, 0);
        assert!(matches!(make_two_island(&odd), Err(Error::ConstructionInfeasible(_))));
    }

    #[test]
    fn randomized_weights_keep_pattern() {
        let net = make_two_island(&TwoIslandSpec::uniform(50, 50, 4, 2, 3)).unwrap();
        let r = randomize_weights(&net, 0.5, 1.5, 11).unwrap();
        for i in 0..100 {
            for j in 0..100 {
                if i == j {
                    assert_eq!(r.weight(i, i), net.weight(i, i));
                } else if net.weight(i, j) == 0.0 {
                    assert_eq!(r.weight(i, j), 0.0);
                } else {
                    assert!((0.5..=1.5).contains(&r.weight(i, j)));
                }
            }
        }
        assert_ne!(r.weight(0, r.neighbors(0)[0].0), r.weight(r.neighbors(0)[0].0, 0));
        let same = randomize_weights(&net, 1.0, 1.0, 11).unwrap();
        assert_eq!(same.weights(), net.weights());
        assert!(matches!(randomize_weights(&net, 2.0, 1.0, 0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn connectivity_retry_reports_failure() {
        let err = require_strongly_connected(3, |s| make_random_graph(10, 0.0, s)).unwrap_err();
        assert!(matches!(err, Error::GenerationFailed { attempts: 3, .. }));
        let ok = require_strongly_connected(50, |s| make_random_graph(10, 0.4, s)).unwrap();
        assert!(ok.is_strongly_connected());
    }

    #[test]
    fn dense_islands_use_complement() {
        // 8-regular on 11 nodes and full cross wiring are rejection-hostile
        let spec = TwoIslandSpec { n1: 11, n2: 4, same_deg: [8, 3], cross_deg: [4, 11], seed: 5 };
        let net = make_two_island(&spec).unwrap();
        for i in 0..15 {
            let same = net.neighbors(i).iter().filter(|&&(j, _)| (j < 11) == (i < 11)).count();
            let cross = net.neighbors(i).len() - same;
            let island = usize::from(i >= 11);
            assert_eq!((same, cross), (spec.same_deg[island], spec.cross_deg[island]), "agent {i}");
        }
        assert!(net.is_undirected());
    }
}
