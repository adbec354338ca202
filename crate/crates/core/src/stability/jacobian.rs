//! Jacobians of the update map.
//!
//! With `g = w + x^b s + (1 - x)^b (d - s)` and numerator `h = w x + x^b s`:
//!
//! ```text
//! df_i/dx_i = [(w + b x^(b-1) s) g - h (b x^(b-1) s - b (1-x)^(b-1) (d - s))] / g^2
//! df_i/dx_l = w_il [x^b g - h (x^b - (1-x)^b)] / g^2          (l != i)
//! ```
//!
//! At a boundary coordinate the row reduces to a single diagonal entry whose
//! value depends on whether `b` is below, at or above 1; the sub-unit case with
//! any pull toward the opposite extreme diverges and is reported through
//! `singular_rows`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dynamics::{check_dims, support, BiasProfile, OpinionState};
use crate::equilibria::Partition;
use crate::error::{Error, Result};
use crate::graph::InfluenceNetwork;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JacobianSource {
    GenericFormula,
    ClosedFormAtEquilibrium,
}

#[derive(Clone, Debug, PartialEq)]
pub struct JacobianResult {
    /// `None` exactly when `singular_rows` is nonempty.
    pub matrix: Option<DMatrix<f64>>,
    /// Agents whose diagonal derivative diverges.
    pub singular_rows: Vec<usize>,
    pub source: JacobianSource,
}

impl JacobianResult {
    fn from_rows(n: usize, diag_or_singular: Vec<Option<f64>>, mut fill: DMatrix<f64>, source: JacobianSource) -> Self {
        let singular_rows: Vec<usize> = (0..n).filter(|&i| diag_or_singular[i].is_none()).collect();
        if !singular_rows.is_empty() {
            return Self { matrix: None, singular_rows, source };
        }
        for (i, v) in diag_or_singular.into_iter().enumerate() {
            if let Some(v) = v {
                fill[(i, i)] = v;
            }
        }
        Self { matrix: Some(fill), singular_rows, source }
    }

    pub fn is_singular(&self) -> bool {
        !self.singular_rows.is_empty()
    }
}

/// Diagonal derivative of an agent sitting at an extreme.
///
/// `opposite` is the neighbor mass pulling toward the other extreme and `same`
/// the mass on the agent's side. Off-diagonal derivatives vanish there.
fn boundary_diagonal(w: f64, b: f64, opposite: f64, same: f64) -> Option<f64> {
    let denom = w + same;
    if denom == 0.0 {
        // w = 0 with every neighbor on the other side: the map jumps
        return None;
    }
    if opposite == 0.0 || b > 1.0 {
        Some(w / denom)
    } else if b == 1.0 {
        Some((w + opposite) / denom)
    } else {
        None
    }
}

fn require_positive(bias: &BiasProfile) -> Result<()> {
    match bias.as_slice().iter().position(|&b| b <= 0.0) {
        Some(agent) => Err(Error::HypothesisViolated(format!(
            "Jacobian needs positive bias, agent {} has {}",
            agent + 1,
            bias[agent]
        ))),
        None => Ok(()),
    }
}

/// Entry-wise Jacobian at an arbitrary state. All biases must be positive.
pub fn jacobian(net: &InfluenceNetwork, bias: &BiasProfile, x: &OpinionState) -> Result<JacobianResult> {
    check_dims(net, bias, x)?;
    require_positive(bias)?;
    let n = net.n();
    let xs = x.as_slice();
    let mut m = DMatrix::zeros(n, n);
    let mut diag = Vec::with_capacity(n);
    for i in 0..n {
        let (w, d, b, xi) = (net.self_weight(i), net.degree(i), bias[i], xs[i]);
        if w == 0.0 && d == 0.0 {
            return Err(Error::IsolatedAgent { agent: i });
        }
        let s = support(net, i, xs);
        if xi == 0.0 {
            diag.push(boundary_diagonal(w, b, s, d - s));
            continue;
        }
        if xi == 1.0 {
            diag.push(boundary_diagonal(w, b, d - s, s));
            continue;
        }
        let up = xi.powf(b);
        let down = (1.0 - xi).powf(b);
        let up_d = b * xi.powf(b - 1.0);
        let down_d = b * (1.0 - xi).powf(b - 1.0);
        let g = w + up * s + down * (d - s);
        let h = w * xi + up * s;
        let g2 = g * g;
        diag.push(Some(((w + up_d * s) * g - h * (up_d * s - down_d * (d - s))) / g2));
        let cross = (up * g - h * (up - down)) / g2;
        for &(l, wil) in net.neighbors(i) {
            m[(i, l)] = wil * cross;
        }
    }
    Ok(JacobianResult::from_rows(n, diag, m, JacobianSource::GenericFormula))
}

/// Diagonal Jacobian `w_ii / (w_ii + d_i)` at the consensus `0` or `1`.
pub fn extreme_jacobian(net: &InfluenceNetwork, bias: &BiasProfile) -> Result<JacobianResult> {
    let n = net.n();
    check_dims(net, bias, &OpinionState::constant(n, 0.0)?)?;
    require_positive(bias)?;
    let diag = (0..n)
        .map(|i| {
            let denom = net.self_weight(i) + net.degree(i);
            if denom == 0.0 {
                Err(Error::IsolatedAgent { agent: i })
            } else {
                Ok(Some(net.self_weight(i) / denom))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(JacobianResult::from_rows(n, diag, DMatrix::zeros(n, n), JacobianSource::ClosedFormAtEquilibrium))
}

/// Jacobian at the neutral consensus `1/2`, valid for positive and negative bias:
///
/// ```text
/// diag  (w_ii + b_i d_i 2^-b_i) / (w_ii + d_i 2^-b_i)
/// off   w_il 2^-b_i / (w_ii + d_i 2^-b_i)
/// ```
pub fn neutral_jacobian(net: &InfluenceNetwork, bias: &BiasProfile) -> Result<JacobianResult> {
    let n = net.n();
    check_dims(net, bias, &OpinionState::constant(n, 0.5)?)?;
    let mut m = DMatrix::zeros(n, n);
    let mut diag = Vec::with_capacity(n);
    for i in 0..n {
        let (w, d, b) = (net.self_weight(i), net.degree(i), bias[i]);
        if b < 0.0 && w <= 0.0 {
            return Err(Error::HypothesisViolated(format!(
                "negative bias at agent {} needs a positive self-weight",
                i + 1
            )));
        }
        let scale = (-b).exp2();
        let g = w + d * scale;
        if g == 0.0 {
            return Err(Error::IsolatedAgent { agent: i });
        }
        diag.push(Some((w + b * d * scale) / g));
        for &(l, wil) in net.neighbors(i) {
            m[(i, l)] = wil * scale / g;
        }
    }
    Ok(JacobianResult::from_rows(n, diag, m, JacobianSource::ClosedFormAtEquilibrium))
}

/// Split of agent `i`'s neighbor weight into the mass at 0 and the mass at 1.
pub fn side_degrees(net: &InfluenceNetwork, partition: &Partition, i: usize) -> (f64, f64) {
    net.neighbors(i).iter().fold(
        (0.0, 0.0),
        |(zero, one), &(j, w)| {
            if partition.is_one(j) {
                (zero, one + w)
            } else {
                (zero + w, one)
            }
        },
    )
}

/// Diagonal Jacobian at a polarization point. For an agent at 0 the entry is
/// `w / (w + d0)` when `b > 1` (or no neighbor at 1), `(w + d1) / (w + d0)` when
/// `b = 1`, and divergent when `b < 1`; agents at 1 mirror this.
pub fn polarization_jacobian(
    net: &InfluenceNetwork,
    bias: &BiasProfile,
    partition: &Partition,
) -> Result<JacobianResult> {
    let n = net.n();
    if partition.len() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: partition.len() });
    }
    check_dims(net, bias, &partition.to_state())?;
    require_positive(bias)?;
    let diag = (0..n)
        .map(|i| {
            let (d0, d1) = side_degrees(net, partition, i);
            let (opposite, same) = if partition.is_one(i) { (d0, d1) } else { (d1, d0) };
            let w = net.self_weight(i);
            if w == 0.0 && d0 + d1 == 0.0 {
                return Err(Error::IsolatedAgent { agent: i });
            }
            Ok(boundary_diagonal(w, bias[i], opposite, same))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(JacobianResult::from_rows(n, diag, DMatrix::zeros(n, n), JacobianSource::ClosedFormAtEquilibrium))
}

fn require_unit_star(net: &InfluenceNetwork, bias: &BiasProfile) -> Result<()> {
    if net.star_center() != Some(0) || !net.has_unit_weights() || bias.len() != net.n() || !bias.all(|b| b == 1.0) {
        return Err(Error::HypothesisViolated(
            "star closed forms need a unit-weight star centered at agent 1 with every bias equal to 1".into(),
        ));
    }
    Ok(())
}

/// Closed form at `[1/2, a_2, ..., a_N]` on a unit star with `b = 1`:
/// center row `[1, 1/(2 w_11 + N - 1), ...]`, leaf rows
/// `4 a_i (1 - a_i) / (2 w_ii + 1)` toward the center and 1 on the diagonal.
pub fn star_half_jacobian(net: &InfluenceNetwork, bias: &BiasProfile, leaves: &[f64]) -> Result<JacobianResult> {
    require_unit_star(net, bias)?;
    let n = net.n();
    if leaves.len() + 1 != n {
        return Err(Error::DimensionMismatch { expected: n - 1, actual: leaves.len() });
    }
    let mut m = DMatrix::identity(n, n);
    let to_leaf = 1.0 / (2.0 * net.self_weight(0) + (n - 1) as f64);
    for i in 1..n {
        let a = leaves[i - 1];
        m[(0, i)] = to_leaf;
        m[(i, 0)] = 4.0 * a * (1.0 - a) / (2.0 * net.self_weight(i) + 1.0);
    }
    Ok(JacobianResult { matrix: Some(m), singular_rows: Vec::new(), source: JacobianSource::ClosedFormAtEquilibrium })
}

/// Closed form at `[c, 0, ..., 0, 1, ..., 1]` on an odd unit star with `b = 1`:
/// center row `[1, 4c(1-c)/(2 w_11 + N - 1), ...]`, leaves at 0 get
/// `(w + c)/(w + 1 - c)` and leaves at 1 get `(w + 1 - c)/(w + c)`.
pub fn star_center_free_jacobian(net: &InfluenceNetwork, bias: &BiasProfile, c: f64) -> Result<JacobianResult> {
    require_unit_star(net, bias)?;
    let n = net.n();
    if n.is_multiple_of(2) {
        return Err(Error::FamilyUndefined(format!("center-free star family needs odd N, got {n}")));
    }
    let half = (n - 1) / 2;
    let mut m = DMatrix::zeros(n, n);
    m[(0, 0)] = 1.0;
    let to_leaf = 4.0 * c * (1.0 - c) / (2.0 * net.self_weight(0) + (n - 1) as f64);
    let mut diag = vec![Some(1.0)];
    for i in 1..n {
        m[(0, i)] = to_leaf;
        let w = net.self_weight(i);
        let (num, den) = if i <= half { (w + c, w + 1.0 - c) } else { (w + 1.0 - c, w + c) };
        diag.push((den > 0.0).then(|| num / den));
    }
    Ok(JacobianResult::from_rows(n, diag, m, JacobianSource::ClosedFormAtEquilibrium))
}
