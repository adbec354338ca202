//! Compact textual specs for per-agent values and equilibria, as accepted on
//! the command line.

use std::path::PathBuf;
use std::str::FromStr;

use rand::Rng;

use super::output::read_values;
use crate::dynamics::{BiasProfile, OpinionState};
use crate::equilibria::{
    find_equilibrium_near, polarization, star_center_free, star_half_leaves, EquilibriumPoint, Partition,
};
use crate::error::{Error, Result};
use crate::graph::InfluenceNetwork;
use crate::rng::{self, Stream};

/// Per-agent values:
/// `const:V`, `uniform:LO:HI:SEED`, `file:PATH`, `split:LO1:HI1:LO2:HI2:SEED:N1`.
#[derive(Clone, Debug, PartialEq)]
pub enum ValueSpec {
    Const(f64),
    Uniform {
        low: f64,
        high: f64,
        seed: u64,
    },
    File(PathBuf),
    /// First `n1` agents from `U[lo1, hi1]`, the rest from `U[lo2, hi2]`.
    Split {
        low1: f64,
        high1: f64,
        low2: f64,
        high2: f64,
        seed: u64,
        n1: usize,
    },
}

fn num<T: FromStr>(tok: &str, what: &str) -> Result<T> {
    tok.parse().map_err(|_| Error::parse(format!("bad {what} {tok:?}")))
}

impl FromStr for ValueSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s.split_once(':').ok_or_else(|| Error::parse(format!("spec {s:?} has no kind prefix")))?;
        if kind == "file" {
            return Ok(ValueSpec::File(PathBuf::from(rest)));
        }
        let parts: Vec<&str> = rest.split(':').collect();
        let arity = |k: usize| {
            if parts.len() == k {
                Ok(())
            } else {
                Err(Error::parse(format!("{kind} spec takes {k} fields, got {}", parts.len())))
            }
        };
        match kind {
            "const" => {
                arity(1)?;
                Ok(ValueSpec::Const(num(parts[0], "value")?))
            }
            "uniform" => {
                arity(3)?;
                Ok(ValueSpec::Uniform {
                    low: num(parts[0], "bound")?,
                    high: num(parts[1], "bound")?,
                    seed: num(parts[2], "seed")?,
                })
            }
            "split" => {
                arity(6)?;
                Ok(ValueSpec::Split {
                    low1: num(parts[0], "bound")?,
                    high1: num(parts[1], "bound")?,
                    low2: num(parts[2], "bound")?,
                    high2: num(parts[3], "bound")?,
                    seed: num(parts[4], "seed")?,
                    n1: num(parts[5], "block size")?,
                })
            }
            other => Err(Error::parse(format!("unknown spec kind {other:?}"))),
        }
    }
}

/// Draws from `U[low, high]`; a degenerate interval yields `low` exactly.
pub(crate) fn draw(rng: &mut impl Rng, low: f64, high: f64) -> Result<f64> {
    if !(low.is_finite() && high.is_finite()) || low > high {
        return Err(Error::InvalidParameter(format!("interval [{low}, {high}] is empty")));
    }
    Ok(if low == high { low } else { rng.gen_range(low..=high) })
}

impl ValueSpec {
    /// Materializes `n` values. Random kinds draw from `label`'s stream.
    pub fn realize(&self, n: usize, label: Stream) -> Result<Vec<f64>> {
        match self {
            ValueSpec::Const(v) => Ok(vec![*v; n]),
            ValueSpec::Uniform { low, high, seed } => {
                let mut rng = rng::stream(*seed, label);
                (0..n).map(|_| draw(&mut rng, *low, *high)).collect()
            }
            ValueSpec::File(path) => {
                let v = read_values(path)?;
                if v.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, actual: v.len() });
                }
                Ok(v)
            }
            ValueSpec::Split { low1, high1, low2, high2, seed, n1 } => {
                if *n1 > n {
                    return Err(Error::InvalidParameter(format!("first block {n1} exceeds {n} agents")));
                }
                let mut rng = rng::stream(*seed, label);
                (0..n)
                    .map(|i| if i < *n1 { draw(&mut rng, *low1, *high1) } else { draw(&mut rng, *low2, *high2) })
                    .collect()
            }
        }
    }

    pub fn bias(&self, n: usize) -> Result<BiasProfile> {
        BiasProfile::new(self.realize(n, Stream::Bias)?)
    }

    pub fn state(&self, n: usize) -> Result<OpinionState> {
        OpinionState::new(self.realize(n, Stream::Init)?)
    }
}

/// `zero | one | neutral | partition:BITS | star-half:A,B,.. | star-center:C | file:PATH`.
/// Partition bits list agents in order, `1` meaning the agent sits at 1.
#[derive(Clone, Debug, PartialEq)]
pub enum EquilibriumSpec {
    Zero,
    One,
    Neutral,
    Partition(Partition),
    StarHalf(Vec<f64>),
    StarCenter(f64),
    File(PathBuf),
}

impl FromStr for EquilibriumSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => return Ok(EquilibriumSpec::Zero),
            "one" => return Ok(EquilibriumSpec::One),
            "neutral" => return Ok(EquilibriumSpec::Neutral),
            _ => {}
        }
        let (kind, rest) = s.split_once(':').ok_or_else(|| Error::parse(format!("unknown equilibrium spec {s:?}")))?;
        match kind {
            "partition" => Ok(EquilibriumSpec::Partition(Partition::from_bits(rest)?)),
            "star-half" => Ok(EquilibriumSpec::StarHalf(
                rest.split(',').map(|t| num(t.trim(), "leaf value")).collect::<Result<_>>()?,
            )),
            "star-center" => Ok(EquilibriumSpec::StarCenter(num(rest, "center value")?)),
            "file" => Ok(EquilibriumSpec::File(PathBuf::from(rest))),
            other => Err(Error::parse(format!("unknown equilibrium kind {other:?}"))),
        }
    }
}

impl EquilibriumSpec {
    /// Builds the point and verifies it is a fixed point to within `tol`.
    /// States read from a file are accepted as-is (no iteration) and tagged
    /// with a cataloged family when they sit on one.
    pub fn resolve(&self, net: &InfluenceNetwork, bias: &BiasProfile, tol: f64) -> Result<EquilibriumPoint> {
        let n = net.n();
        let exact = |v: f64| -> Result<EquilibriumPoint> {
            find_equilibrium_near(net, bias, &OpinionState::constant(n, v)?, tol, 0).map_err(|e| match e {
                Error::EquilibriumNotFound { best_residual } => {
                    Error::NotAnEquilibrium(format!("constant state {v} has residual {best_residual:e}"))
                }
                e => e,
            })
        };
        match self {
            EquilibriumSpec::Zero => exact(0.0),
            EquilibriumSpec::One => exact(1.0),
            EquilibriumSpec::Neutral => exact(0.5),
            EquilibriumSpec::Partition(p) => polarization(net, bias, p.clone()),
            EquilibriumSpec::StarHalf(leaves) => star_half_leaves(net, bias, leaves),
            EquilibriumSpec::StarCenter(c) => star_center_free(net, bias, *c),
            EquilibriumSpec::File(path) => {
                let x = OpinionState::new(read_values(path)?)?;
                find_equilibrium_near(net, bias, &x, tol, 0).map_err(|e| match e {
                    Error::EquilibriumNotFound { best_residual } => {
                        Error::NotAnEquilibrium(format!("{} has residual {best_residual:e}", path.display()))
                    }
                    e => e,
                })
            }
        }
    }
}
