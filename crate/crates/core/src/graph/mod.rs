//! Influence networks with self-weights.
//!
//! Weights are stored dense. Row `i` holds the influences acting on agent
//! `i`: the off-diagonal entry `(i, j)` is positive exactly when agent `j`
//! influences agent `i`, and the diagonal holds the self-weight. Self-weights
//! are kept out of the neighbor sets and the in-degree weights.

mod edgelist;
mod generators;

use std::collections::VecDeque;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use edgelist::{read_edge_list, write_edge_list};
pub use generators::{
    make_complete, make_path, make_random_graph, make_regular_ring, make_small_world, make_star, make_two_island,
    randomize_weights, require_strongly_connected, TwoIslandSpec,
};

/// Generator metadata, used for syntactic matching of theorem hypotheses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Topology {
    Complete,
    Star { center: usize },
    TwoIsland { n1: usize, n2: usize, same_deg: [usize; 2], cross_deg: [usize; 2] },
    Path,
    Ring { deg: usize },
    Random,
    SmallWorld,
    Custom,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InfluenceNetwork {
    weights: DMatrix<f64>,
    neighbors: Vec<Vec<(usize, f64)>>,
    degrees: Vec<f64>,
    topology: Topology,
}

impl InfluenceNetwork {
    /// Builds a network from a dense weight matrix. Entries must be finite and
    /// nonnegative.
    pub fn from_matrix(weights: DMatrix<f64>) -> Result<Self> {
        Self::with_topology(weights, Topology::Custom)
    }

    pub(crate) fn with_topology(weights: DMatrix<f64>, topology: Topology) -> Result<Self> {
        let n = weights.nrows();
        if weights.ncols() != n {
            return Err(Error::InvalidSize(format!("weight matrix is {}x{}, expected square", n, weights.ncols())));
        }
        if n < 2 {
            return Err(Error::InvalidSize(format!("network needs at least 2 agents, got {n}")));
        }
        for i in 0..n {
            for j in 0..n {
                let w = weights[(i, j)];
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "weight ({}, {}) = {w} must be finite and nonnegative",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        let neighbors: Vec<Vec<(usize, f64)>> = (0..n)
            .map(|i| (0..n).filter(|&j| j != i && weights[(i, j)] > 0.0).map(|j| (j, weights[(i, j)])).collect())
            .collect();
        let degrees = neighbors.iter().map(|row| row.iter().map(|&(_, w)| w).sum()).collect();
        Ok(Self { weights, neighbors, degrees, topology })
    }

    pub fn n(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    /// Influence of agent `j` on agent `i` (`i != j`), or the self-weight when `i == j`.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[(i, j)]
    }

    pub fn self_weight(&self, i: usize) -> f64 {
        self.weights[(i, i)]
    }

    /// Agents influencing `i`, with their weights, in increasing index order.
    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.neighbors[i]
    }

    /// Sum of neighbor weights of agent `i`, excluding the self-weight.
    pub fn degree(&self, i: usize) -> f64 {
        self.degrees[i]
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    /// Replaces the diagonal. `self_weights` has length 1 (broadcast) or `n`.
    pub fn with_self_weights(&self, self_weights: &[f64]) -> Result<Self> {
        let n = self.n();
        let values = broadcast(self_weights, n, "self_weights")?;
        let mut weights = self.weights.clone();
        for (i, &w) in values.iter().enumerate() {
            weights[(i, i)] = w;
        }
        Self::with_topology(weights, self.topology.clone())
    }

    pub(crate) fn retag(mut self, topology: Topology) -> Self {
        self.topology = topology;
        self
    }

    /// True when every influence edge has a reverse edge.
    pub fn is_undirected(&self) -> bool {
        let n = self.n();
        (0..n).all(|i| (0..n).all(|j| i == j || (self.weights[(i, j)] > 0.0) == (self.weights[(j, i)] > 0.0)))
    }

    /// True when every off-diagonal positive weight equals exactly one.
    pub fn has_unit_weights(&self) -> bool {
        self.neighbors.iter().all(|row| row.iter().all(|&(_, w)| w == 1.0))
    }

    /// Every ordered pair of distinct agents is an influence edge.
    pub fn is_structurally_complete(&self) -> bool {
        let n = self.n();
        self.neighbors.iter().all(|row| row.len() == n - 1)
    }

    /// The center of an undirected star on at least three agents, if the
    /// network is one.
    pub fn star_center(&self) -> Option<usize> {
        let n = self.n();
        if n < 3 || !self.is_undirected() {
            return None;
        }
        let center = (0..n).find(|&i| self.neighbors[i].len() == n - 1)?;
        let leaves_ok =
            (0..n).filter(|&i| i != center).all(|i| self.neighbors[i].len() == 1 && self.neighbors[i][0].0 == center);
        leaves_ok.then_some(center)
    }

    /// True iff every agent reaches every other agent along influence edges.
    pub fn is_strongly_connected(&self) -> bool {
        let n = self.n();
        // influence flows j -> i when w_ij > 0
        let mut outgoing = vec![Vec::new(); n];
        for (i, row) in self.neighbors.iter().enumerate() {
            for &(j, _) in row {
                outgoing[j].push(i);
            }
        }
        let incoming: Vec<Vec<usize>> =
            self.neighbors.iter().map(|row| row.iter().map(|&(j, _)| j).collect()).collect();
        reaches_all(&outgoing) && reaches_all(&incoming)
    }
}

fn reaches_all(adjacency: &[Vec<usize>]) -> bool {
    let mut seen = vec![false; adjacency.len()];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = queue.pop_front() {
        for &v in &adjacency[u] {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                queue.push_back(v);
            }
        }
    }
    count == adjacency.len()
}

pub(crate) fn broadcast(values: &[f64], n: usize, what: &str) -> Result<Vec<f64>> {
    match values.len() {
        1 => Ok(vec![values[0]; n]),
        len if len == n => Ok(values.to_vec()),
        len => Err(Error::InvalidParameter(format!("{what} has length {len}, expected 1 or {n}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_node(w12: f64, w21: f64) -> InfluenceNetwork {
        InfluenceNetwork::from_matrix(DMatrix::from_row_slice(2, 2, &[0.0, w12, w21, 0.0])).unwrap()
    }

    #[test]
    fn mutual_edge_is_strongly_connected() {
        assert!(two_node(1.0, 1.0).is_strongly_connected());
    }

    #[test]
    fn one_way_edge_is_not_strongly_connected() {
        assert!(!two_node(1.0, 0.0).is_strongly_connected());
    }

    #[test]
    fn degrees_exclude_self_weight() {
        let m = DMatrix::from_row_slice(3, 3, &[5.0, 1.0, 2.0, 0.5, 0.0, 0.0, 0.0, 3.0, 1.0]);
        let net = InfluenceNetwork::from_matrix(m).unwrap();
        assert_eq!(net.degrees(), &[3.0, 0.5, 3.0]);
        assert_eq!(net.neighbors(1), &[(0, 0.5)]);
        assert_eq!(net.self_weight(0), 5.0);
    }

    #[test]
    fn rejects_negative_or_non_square() {
        let neg = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        assert!(matches!(InfluenceNetwork::from_matrix(neg), Err(Error::InvalidParameter(_))));
        let rect = DMatrix::<f64>::zeros(2, 3);
        assert!(matches!(InfluenceNetwork::from_matrix(rect), Err(Error::InvalidSize(_))));
        let tiny = DMatrix::<f64>::zeros(1, 1);
        assert!(matches!(InfluenceNetwork::from_matrix(tiny), Err(Error::InvalidSize(_))));
    }

    #[test]
    fn self_weight_broadcast() {
        let net = two_node(1.0, 1.0).with_self_weights(&[0.25]).unwrap();
        assert_eq!(net.self_weight(0), 0.25);
        assert_eq!(net.self_weight(1), 0.25);
        assert!(net.with_self_weights(&[1.0, 2.0, 3.0]).is_err());
    }
}
