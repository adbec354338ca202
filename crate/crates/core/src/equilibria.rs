//! Equilibrium catalog: extreme and neutral consensus, polarization, the
//! star-graph families, and a damped fixed-point search for everything else.

use serde::{Deserialize, Serialize};

use crate::dynamics::{check_dims, step, BiasProfile, OpinionState};
use crate::error::{Error, Result};
use crate::graph::InfluenceNetwork;

/// Default residual acceptance for constructed and detected equilibria.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Tolerance on the star leaf-sum constraint.
pub const STAR_SUM_TOL: f64 = 1e-12;
/// Largest network for which every polarization vector is enumerated.
pub const DEFAULT_ENUMERATION_CAP: usize = 16;

/// Which agents sit at opinion 1; the rest sit at 0. Both sides are nonempty.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Partition(Vec<bool>);

impl Partition {
    pub fn new(at_one: Vec<bool>) -> Result<Self> {
        if at_one.iter().all(|&b| b) || at_one.iter().all(|&b| !b) {
            return Err(Error::InvalidParameter("polarization needs agents at both 0 and 1".into()));
        }
        Ok(Self(at_one))
    }

    /// First `n_zero` agents at 0, the following `n_one` at 1.
    pub fn blocks(n_zero: usize, n_one: usize) -> Result<Self> {
        Self::new((0..n_zero + n_one).map(|i| i >= n_zero).collect())
    }

    /// Parses a string of `0`/`1` characters, one per agent.
    pub fn from_bits(bits: &str) -> Result<Self> {
        let v = bits
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::parse(format!("partition bit {other:?} is not 0 or 1"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_one(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn to_state(&self) -> OpinionState {
        OpinionState::new(self.0.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect())
            .expect("0/1 entries are in range")
    }

    fn from_state(x: &[f64]) -> Option<Self> {
        if x.iter().all(|&v| v == 0.0 || v == 1.0) {
            Self::new(x.iter().map(|&v| v == 1.0).collect()).ok()
        } else {
            None
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    ExtremeZero,
    ExtremeOne,
    Neutral,
    Polarization {
        partition: Partition,
    },
    /// Star center at 1/2, leaves carrying values that sum to `(N - 1) / 2`.
    StarHalfLeaves {
        leaves: Vec<f64>,
    },
    /// Odd star: center at `c`, first half of the leaves at 0, second half at 1.
    StarCenterFree {
        c: f64,
    },
    Numeric,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumPoint {
    x: OpinionState,
    #[serde(flatten)]
    family: Family,
    residual: f64,
}

impl EquilibriumPoint {
    fn checked(net: &InfluenceNetwork, bias: &BiasProfile, x: OpinionState, family: Family, tol: f64) -> Result<Self> {
        if !structure_matches(&x, &family) {
            return Err(Error::InvalidParameter(format!("state does not have the structure of {family:?}")));
        }
        let (ok, residual) = is_equilibrium(net, bias, &x, tol)?;
        if !ok {
            return Err(Error::NotAnEquilibrium(format!("residual {residual:e} exceeds {tol:e}")));
        }
        Ok(Self { x, family, residual })
    }

    pub fn x(&self) -> &OpinionState {
        &self.x
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }
}

fn structure_matches(x: &OpinionState, family: &Family) -> bool {
    let xs = x.as_slice();
    let n = xs.len();
    match family {
        Family::ExtremeZero => xs.iter().all(|&v| v == 0.0),
        Family::ExtremeOne => xs.iter().all(|&v| v == 1.0),
        Family::Neutral => xs.iter().all(|&v| v == 0.5),
        Family::Polarization { partition } => {
            partition.len() == n && (0..n).all(|i| xs[i] == if partition.is_one(i) { 1.0 } else { 0.0 })
        }
        Family::StarHalfLeaves { leaves } => leaves.len() + 1 == n && xs[0] == 0.5 && xs[1..] == leaves[..],
        Family::StarCenterFree { c } => n % 2 == 1 && xs == star_center_free_state(n, *c).as_slice(),
        Family::Numeric => true,
    }
}

/// Returns whether `x` is a fixed point to within `tol` (max norm), and the residual.
pub fn is_equilibrium(net: &InfluenceNetwork, bias: &BiasProfile, x: &OpinionState, tol: f64) -> Result<(bool, f64)> {
    let residual = step(net, bias, x)?.max_diff(x);
    Ok((residual <= tol, residual))
}

fn require_positive_bias(bias: &BiasProfile) -> Result<()> {
    match bias.as_slice().iter().position(|&b| b <= 0.0) {
        Some(agent) => Err(Error::OutOfFamily { agent, bias: bias[agent] }),
        None => Ok(()),
    }
}

/// Extreme consensus at 0 and 1, neutral consensus, and (for `n <= cap`)
/// every polarization vector.
pub fn canonical_equilibria(
    net: &InfluenceNetwork,
    bias: &BiasProfile,
    enumeration_cap: usize,
) -> Result<Vec<EquilibriumPoint>> {
    let n = net.n();
    check_dims(net, bias, &OpinionState::constant(n, 0.0)?)?;
    require_positive_bias(bias)?;
    let mut out = vec![
        EquilibriumPoint::checked(net, bias, OpinionState::constant(n, 0.0)?, Family::ExtremeZero, DEFAULT_TOL)?,
        EquilibriumPoint::checked(net, bias, OpinionState::constant(n, 1.0)?, Family::ExtremeOne, DEFAULT_TOL)?,
        EquilibriumPoint::checked(net, bias, OpinionState::constant(n, 0.5)?, Family::Neutral, DEFAULT_TOL)?,
    ];
    if n <= enumeration_cap.min(usize::BITS as usize - 1) {
        for mask in 1..(1usize << n) - 1 {
            let partition = Partition((0..n).map(|i| mask >> i & 1 == 1).collect());
            out.push(polarization(net, bias, partition)?);
        }
    }
    Ok(out)
}

pub fn polarization(net: &InfluenceNetwork, bias: &BiasProfile, partition: Partition) -> Result<EquilibriumPoint> {
    if partition.len() != net.n() {
        return Err(Error::DimensionMismatch { expected: net.n(), actual: partition.len() });
    }
    require_positive_bias(bias)?;
    let x = partition.to_state();
    EquilibriumPoint::checked(net, bias, x, Family::Polarization { partition }, DEFAULT_TOL)
}

fn require_unit_star(net: &InfluenceNetwork, bias: &BiasProfile) -> Result<()> {
    if net.star_center() != Some(0) || !net.has_unit_weights() {
        return Err(Error::HypothesisViolated("star families need a unit-weight star centered at agent 1".into()));
    }
    if bias.len() != net.n() || !bias.all(|b| b == 1.0) {
        return Err(Error::HypothesisViolated("star families need every bias equal to 1".into()));
    }
    Ok(())
}

/// `[1/2, a_2, ..., a_N]` with `a_i in [0, 1]` summing to `(N - 1) / 2`.
pub fn star_half_leaves(net: &InfluenceNetwork, bias: &BiasProfile, leaves: &[f64]) -> Result<EquilibriumPoint> {
    require_unit_star(net, bias)?;
    let n = net.n();
    if leaves.len() + 1 != n {
        return Err(Error::DimensionMismatch { expected: n - 1, actual: leaves.len() });
    }
    let sum: f64 = leaves.iter().sum();
    let target = (n - 1) as f64 / 2.0;
    if (sum - target).abs() > STAR_SUM_TOL {
        return Err(Error::NotAnEquilibrium(format!("leaf values sum to {sum}, need {target}")));
    }
    let mut x = Vec::with_capacity(n);
    x.push(0.5);
    x.extend_from_slice(leaves);
    let x = OpinionState::new(x)?;
    EquilibriumPoint::checked(net, bias, x, Family::StarHalfLeaves { leaves: leaves.to_vec() }, DEFAULT_TOL)
}

fn star_center_free_state(n: usize, c: f64) -> Vec<f64> {
    let half = (n - 1) / 2;
    std::iter::once(c).chain(std::iter::repeat_n(0.0, half)).chain(std::iter::repeat_n(1.0, half)).collect()
}

/// `[c, 0, ..., 0, 1, ..., 1]` on a star with an odd number of agents.
pub fn star_center_free(net: &InfluenceNetwork, bias: &BiasProfile, c: f64) -> Result<EquilibriumPoint> {
    require_unit_star(net, bias)?;
    let n = net.n();
    if n.is_multiple_of(2) {
        return Err(Error::FamilyUndefined(format!("center-free star family needs odd N, got {n}")));
    }
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::InvalidParameter(format!("center value {c} outside (0, 1)")));
    }
    let x = OpinionState::new(star_center_free_state(n, c))?;
    EquilibriumPoint::checked(net, bias, x, Family::StarCenterFree { c }, DEFAULT_TOL)
}

const MIN_DAMPING: f64 = 1.0 / (1u64 << 20) as f64;

/// Damped fixed-point iteration `x <- (1 - a) x + a F(x)` from `guess`.
///
/// The damping starts at 1 and halves whenever a trial step would raise the
/// residual, down to `2^-20`. Points that sit within `tol` of a cataloged
/// family are snapped onto it and tagged accordingly; anything else is
/// returned as [`Family::Numeric`].
pub fn find_equilibrium_near(
    net: &InfluenceNetwork,
    bias: &BiasProfile,
    guess: &OpinionState,
    tol: f64,
    max_iter: usize,
) -> Result<EquilibriumPoint> {
    let mut x = guess.clone();
    let mut fx = step(net, bias, &x)?;
    let mut residual = fx.max_diff(&x);
    let mut damping = 1.0;
    for _ in 0..max_iter {
        if residual <= tol {
            break;
        }
        let trial: Vec<f64> = x
            .as_slice()
            .iter()
            .zip(fx.as_slice())
            .map(|(&a, &fa)| ((1.0 - damping) * a + damping * fa).clamp(0.0, 1.0))
            .collect();
        let trial = OpinionState::new(trial)?;
        let f_trial = step(net, bias, &trial)?;
        let trial_residual = f_trial.max_diff(&trial);
        if trial_residual > residual && damping > MIN_DAMPING {
            damping = (damping / 2.0).max(MIN_DAMPING);
            continue;
        }
        x = trial;
        fx = f_trial;
        residual = trial_residual;
    }
    if residual > tol {
        return Err(Error::EquilibriumNotFound { best_residual: residual });
    }
    identify(net, bias, x, residual, tol)
}

/// Tags a numerically verified fixed point with the structural family it sits
/// on, if any.
fn identify(
    net: &InfluenceNetwork,
    bias: &BiasProfile,
    x: OpinionState,
    residual: f64,
    tol: f64,
) -> Result<EquilibriumPoint> {
    let n = x.len();
    let snapped_binary: Vec<f64> = x.as_slice().iter().map(|&v| if v < 0.5 { 0.0 } else { 1.0 }).collect();
    let candidates = [OpinionState::constant(n, 0.5)?, OpinionState::new(snapped_binary)?];
    for exact in candidates {
        if exact.max_diff(&x) > tol {
            continue;
        }
        let family = if exact.as_slice().iter().all(|&v| v == 0.5) {
            Family::Neutral
        } else if exact.as_slice().iter().all(|&v| v == 0.0) {
            Family::ExtremeZero
        } else if exact.as_slice().iter().all(|&v| v == 1.0) {
            Family::ExtremeOne
        } else {
            Family::Polarization { partition: Partition::from_state(exact.as_slice()).expect("binary state") }
        };
        if let Ok(point) = EquilibriumPoint::checked(net, bias, exact, family, tol) {
            return Ok(point);
        }
    }
    Ok(EquilibriumPoint { x, family: Family::Numeric, residual })
}
