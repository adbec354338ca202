use serde::{Deserialize, Serialize};

use crate::dynamics::{check_dims, step, BiasProfile, OpinionState};
use crate::error::{Error, Result};
use crate::graph::InfluenceNetwork;

/// Distance to the extreme consensus at which a run counts as converged.
pub const CERTIFICATE_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Every opinion at least 1/2, heading to consensus at 1.
    Up,
    /// Every opinion at most 1/2, heading to consensus at 0.
    Down,
}

impl Direction {
    fn target(self) -> f64 {
        match self {
            Direction::Up => 1.0,
            Direction::Down => 0.0,
        }
    }

    /// `1 - min x` going up, `max x` going down.
    fn lyapunov(self, x: &[f64]) -> f64 {
        match self {
            Direction::Up => 1.0 - x.iter().copied().fold(f64::INFINITY, f64::min),
            Direction::Down => x.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// Signed progress `next - prev` in the direction of travel.
    fn advance(self, prev: f64, next: f64) -> f64 {
        match self {
            Direction::Up => next - prev,
            Direction::Down => prev - next,
        }
    }

    fn strictly_past_half(self, v: f64) -> bool {
        match self {
            Direction::Up => v > 0.5,
            Direction::Down => v < 0.5,
        }
    }

    fn on_side(self, v: f64) -> bool {
        match self {
            Direction::Up => v >= 0.5,
            Direction::Down => v <= 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum MonotoneOutcome {
    Certified {
        /// Steps until the Lyapunov function fell below the tolerance.
        steps: usize,
        /// First step at which every agent was strictly past 1/2.
        tau: usize,
        limit: f64,
    },
    Refuted {
        step: usize,
        agent: Option<usize>,
        reason: String,
    },
}

impl MonotoneOutcome {
    pub fn is_certified(&self) -> bool {
        matches!(self, MonotoneOutcome::Certified { .. })
    }
}

/// Runs a one-sided trajectory and checks, step by step, that every opinion
/// moves monotonically toward the target extreme and that the Lyapunov
/// function is non-increasing (strictly decreasing once every agent is
/// strictly past 1/2).
///
/// Requires a strongly connected network, every bias at least 1, and an initial
/// state on one side of 1/2 with at least one agent strictly past it.
pub fn monotone_certificate(
    net: &InfluenceNetwork,
    bias: &BiasProfile,
    x0: &OpinionState,
    direction: Direction,
    max_steps: usize,
) -> Result<MonotoneOutcome> {
    check_dims(net, bias, x0)?;
    if !bias.all(|b| b >= 1.0) {
        return Err(Error::HypothesisViolated("monotone certificate needs every bias >= 1".into()));
    }
    if !net.is_strongly_connected() {
        return Err(Error::HypothesisViolated("monotone certificate needs a strongly connected network".into()));
    }
    let xs = x0.as_slice();
    if !xs.iter().all(|&v| direction.on_side(v)) || !xs.iter().any(|&v| direction.strictly_past_half(v)) {
        return Err(Error::HypothesisViolated(format!(
            "initial state must lie on the {direction:?} side of 1/2 with one agent strictly past it"
        )));
    }

    let n = net.n();
    let mut x = x0.clone();
    let mut v = direction.lyapunov(x.as_slice());
    let mut tau = xs.iter().all(|&v| direction.strictly_past_half(v)).then_some(0);
    for k in 0..max_steps {
        if v <= CERTIFICATE_TOL {
            return Ok(MonotoneOutcome::Certified {
                steps: k,
                tau: tau.expect("v below tolerance implies every agent past 1/2"),
                limit: direction.target(),
            });
        }
        let next = step(net, bias, &x)?;
        for i in 0..n {
            if direction.advance(x[i], next[i]) < -f64::EPSILON {
                return Ok(MonotoneOutcome::Refuted {
                    step: k,
                    agent: Some(i),
                    reason: format!("opinion moved from {} to {} against the direction", x[i], next[i]),
                });
            }
        }
        let v_next = direction.lyapunov(next.as_slice());
        let decreased = if tau.is_some() { v_next < v } else { v_next <= v };
        if !decreased {
            return Ok(MonotoneOutcome::Refuted {
                step: k,
                agent: None,
                reason: format!("Lyapunov value went from {v:e} to {v_next:e}"),
            });
        }
        if tau.is_none() && next.as_slice().iter().all(|&v| direction.strictly_past_half(v)) {
            tau = Some(k + 1);
        }
        if tau.is_none() && k + 1 >= n {
            return Ok(MonotoneOutcome::Refuted {
                step: k,
                agent: None,
                reason: format!("some agent still at 1/2 after {} steps", k + 1),
            });
        }
        x = next;
        v = v_next;
    }
    if v <= CERTIFICATE_TOL {
        if let Some(tau) = tau {
            return Ok(MonotoneOutcome::Certified { steps: max_steps, tau, limit: direction.target() });
        }
    }
    Ok(MonotoneOutcome::Refuted {
        step: max_steps,
        agent: None,
        reason: format!("Lyapunov value {v:e} still above {CERTIFICATE_TOL:e}"),
    })
}
