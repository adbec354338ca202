//! The biased-assimilation update rule and trajectory simulation.
//!
//! Agent `i` with opinion `x`, self-weight `w`, neighbor weight sum `d` and
//! neighbor support `s = sum_j w_ij x_j` moves to
//!
//! ```text
//!            w x + x^b s
//! x+ = -----------------------------
//!      w + x^b s + (1 - x)^b (d - s)
//! ```
//!
//! `b = 0` is the DeGroot average. For `b > 0` the extremes 0 and 1 are
//! absorbing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::InfluenceNetwork;

/// Opinions of all agents at one time step, each in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OpinionState(Vec<f64>);

impl OpinionState {
    pub fn new(x: Vec<f64>) -> Result<Self> {
        for (agent, &value) in x.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::OpinionOutOfRange { agent, value });
            }
        }
        Ok(Self(x))
    }

    pub fn constant(n: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Max-norm distance to another state of the same length.
    pub fn max_diff(&self, other: &OpinionState) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

impl std::ops::Index<usize> for OpinionState {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Coarse sign pattern of a bias vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiasRegime {
    AllPositive,
    AllNegative,
    Zero,
    Mixed,
}

/// Per-agent bias exponents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BiasProfile(Vec<f64>);

impl BiasProfile {
    pub fn new(b: Vec<f64>) -> Result<Self> {
        if let Some(i) = b.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("bias of agent {} is not finite", i + 1)));
        }
        Ok(Self(b))
    }

    pub fn uniform(n: usize, b: f64) -> Result<Self> {
        Self::new(vec![b; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn regime(&self) -> BiasRegime {
        if self.0.iter().all(|&b| b == 0.0) {
            BiasRegime::Zero
        } else if self.0.iter().all(|&b| b > 0.0) {
            BiasRegime::AllPositive
        } else if self.0.iter().all(|&b| b < 0.0) {
            BiasRegime::AllNegative
        } else {
            BiasRegime::Mixed
        }
    }

    pub fn all(&self, pred: impl Fn(f64) -> bool) -> bool {
        self.0.iter().all(|&b| pred(b))
    }
}

impl std::ops::Index<usize> for BiasProfile {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// `t^b` with `t^0 = 1` (including `t = 0`) and `0^b = 0` for `b > 0`.
pub(crate) fn biased_pow(t: f64, b: f64) -> f64 {
    if b == 0.0 {
        1.0
    } else if t == 0.0 && b > 0.0 {
        0.0
    } else {
        t.powf(b)
    }
}

pub(crate) fn check_dims(net: &InfluenceNetwork, bias: &BiasProfile, x: &OpinionState) -> Result<()> {
    let n = net.n();
    if bias.len() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: bias.len() });
    }
    if x.len() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: x.len() });
    }
    Ok(())
}

/// Neighbor support `s_i = sum_j w_ij x_j`.
pub(crate) fn support(net: &InfluenceNetwork, i: usize, x: &[f64]) -> f64 {
    net.neighbors(i).iter().map(|&(j, w)| w * x[j]).sum()
}

fn update_agent(net: &InfluenceNetwork, i: usize, b: f64, x: &[f64]) -> Result<f64> {
    let xi = x[i];
    let boundary = xi == 0.0 || xi == 1.0;
    if b < 0.0 && boundary {
        return Err(Error::BoundaryWithNegativeBias { agent: i });
    }
    let w = net.self_weight(i);
    let d = net.degree(i);
    if w == 0.0 && d == 0.0 {
        return Err(Error::IsolatedAgent { agent: i });
    }
    if b > 0.0 && boundary {
        // absorbing; also avoids 0/0 when w = 0 and every neighbor sits at the other extreme
        return Ok(xi);
    }
    let s = support(net, i, x);
    if b == 0.0 {
        // DeGroot; avoids re-deriving d as s + (d - s)
        return Ok(((w * xi + s) / (w + d)).clamp(0.0, 1.0));
    }
    let toward_one = biased_pow(xi, b) * s;
    let toward_zero = biased_pow(1.0 - xi, b) * (d - s);
    let next = (w * xi + toward_one) / (w + toward_one + toward_zero);
    Ok(next.clamp(0.0, 1.0))
}

/// One synchronous application of the update rule to every agent.
pub fn step(net: &InfluenceNetwork, bias: &BiasProfile, x: &OpinionState) -> Result<OpinionState> {
    check_dims(net, bias, x)?;
    let xs = x.as_slice();
    let next = (0..net.n()).map(|i| update_agent(net, i, bias[i], xs)).collect::<Result<Vec<_>>>()?;
    Ok(OpinionState(next))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationOptions {
    pub max_steps: usize,
    /// Max-norm residual threshold.
    pub tol: f64,
    /// Consecutive sub-`tol` steps required to declare convergence.
    pub window: usize,
    /// Record every `stride`-th state; the first and last are always kept.
    pub stride: usize,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self { max_steps: 100_000, tol: 1e-12, window: 10, stride: 1 }
    }
}

impl SimulationOptions {
    fn validate(&self) -> Result<()> {
        if self.max_steps == 0 || self.window == 0 || self.stride == 0 {
            return Err(Error::InvalidParameter("max_steps, window and stride must be at least 1".into()));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::InvalidParameter(format!("tol {} must be positive", self.tol)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// Recorded `(step, state)` pairs, starting with step 0.
    pub states: Vec<(usize, OpinionState)>,
    pub converged: bool,
    pub steps_run: usize,
    /// Max-norm change of the last step.
    pub terminal_residual: f64,
}

impl Trajectory {
    pub fn initial(&self) -> &OpinionState {
        &self.states[0].1
    }

    pub fn terminal(&self) -> &OpinionState {
        &self.states.last().expect("trajectory always holds the initial state").1
    }
}

/// Iterates [`step`] until the residual stays below `tol` for `window`
/// consecutive steps or `max_steps` is exhausted.
pub fn simulate(
    net: &InfluenceNetwork,
    bias: &BiasProfile,
    x0: &OpinionState,
    opts: &SimulationOptions,
) -> Result<Trajectory> {
    opts.validate()?;
    check_dims(net, bias, x0)?;
    let mut states = vec![(0, x0.clone())];
    let mut current = x0.clone();
    let mut quiet = 0;
    let mut residual = f64::INFINITY;
    let mut steps_run = 0;
    let mut converged = false;
    while steps_run < opts.max_steps {
        let next = step(net, bias, &current).map_err(|e| Error::StepFailed { step: steps_run, source: Box::new(e) })?;
        residual = next.max_diff(&current);
        steps_run += 1;
        current = next;
        quiet = if residual < opts.tol { quiet + 1 } else { 0 };
        if quiet >= opts.window {
            converged = true;
            break;
        }
        if steps_run % opts.stride == 0 {
            states.push((steps_run, current.clone()));
        }
    }
    if states.last().map(|(k, _)| *k) != Some(steps_run) {
        states.push((steps_run, current));
    }
    Ok(Trajectory { states, converged, steps_run, terminal_residual: residual })
}

/// Single-agent update under balanced influence with unit weights and
/// `s = d / 2 = 1`:
/// `p(b, x) = (x + x^b) / (1 + x^b + (1 - x)^b)`.
pub fn bias_response(b: f64, x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::OpinionOutOfRange { agent: 0, value: x });
    }
    if b < 0.0 && (x == 0.0 || x == 1.0) {
        return Err(Error::BoundaryWithNegativeBias { agent: 0 });
    }
    let up = biased_pow(x, b);
    let down = biased_pow(1.0 - x, b);
    Ok((x + up) / (1.0 + up + down))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiasClass {
    /// `b = 0`, plain DeGroot averaging.
    None,
    Weak,
    Intermediate,
    Strong,
    Negative,
}

pub fn classify_bias(b: f64) -> BiasClass {
    if b < 0.0 {
        BiasClass::Negative
    } else if b == 0.0 {
        BiasClass::None
    } else if b < 1.0 {
        BiasClass::Weak
    } else if b == 1.0 {
        BiasClass::Intermediate
    } else {
        BiasClass::Strong
    }
}
