//! Local stability of equilibria by linearization.

mod certificate;
mod conformance;
mod conjecture;
mod jacobian;
mod spectral;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dynamics::BiasProfile;
use crate::equilibria::{EquilibriumPoint, Family, Partition};
use crate::error::Result;
use crate::graph::{InfluenceNetwork, Topology};

pub use certificate::{monotone_certificate, Direction, MonotoneOutcome};
pub use conformance::{run_conformance, ConformanceReport, Regime, THM2_EPSILON};
pub use conjecture::{conjecture_sweep, ConjectureRow};
pub use jacobian::{
    extreme_jacobian, jacobian, neutral_jacobian, polarization_jacobian, side_degrees, star_center_free_jacobian,
    star_half_jacobian, JacobianResult, JacobianSource,
};
pub use spectral::{eigenvalues, is_nonnegative, perron_root, row_sum_bounds, spectral_radius, ROW_SUM_TOL};

/// Band around `|lambda| = 1` inside which no verdict is given.
pub const DEFAULT_MARGIN: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    LocallyExpStable,
    Unstable,
    Inconclusive,
    /// Some diagonal derivative diverges.
    SingularUnstable,
}

impl Verdict {
    pub fn is_unstable(self) -> bool {
        matches!(self, Verdict::Unstable | Verdict::SingularUnstable)
    }
}

/// Theorem whose hypotheses the instance matches syntactically.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Theorem {
    /// Extreme consensus stable, neutral consensus unstable (positive bias).
    #[serde(rename = "theorem_1")]
    ExtremeAndNeutral,
    /// Neutral consensus stable under small negative bias.
    #[serde(rename = "theorem_2")]
    NegativeBiasNeutral,
    /// Polarization unstable under weak bias.
    #[serde(rename = "theorem_4")]
    WeakBiasPolarization,
    /// Polarization on complete graphs.
    #[serde(rename = "theorem_5")]
    CompleteGraphPolarization,
    /// Island-aligned polarization on two-island networks.
    #[serde(rename = "theorem_6")]
    TwoIslandPolarization,
    /// Star-graph equilibria with unit bias.
    #[serde(rename = "theorem_7")]
    StarEquilibria,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityReport {
    pub equilibrium: EquilibriumPoint,
    #[serde(skip)]
    pub jacobian: JacobianResult,
    pub jacobian_source: JacobianSource,
    pub singular_rows: Vec<usize>,
    /// `None` when the linearization diverges.
    pub spectral_radius: Option<f64>,
    /// `(re, im)` pairs, largest modulus first.
    pub eigenvalues: Vec<(f64, f64)>,
    pub verdict: Verdict,
    pub theorem_tag: Option<Theorem>,
}

impl StabilityReport {
    pub fn jacobian_matrix(&self) -> Option<&DMatrix<f64>> {
        self.jacobian.matrix.as_ref()
    }
}

/// Picks the closed-form Jacobian for the equilibrium's family (the generic
/// formula for numeric points), computes the spectrum and applies the margin
/// rule.
pub fn classify(
    net: &InfluenceNetwork,
    bias: &BiasProfile,
    eq: &EquilibriumPoint,
    margin: f64,
) -> Result<StabilityReport> {
    let jac = match eq.family() {
        Family::ExtremeZero | Family::ExtremeOne => extreme_jacobian(net, bias)?,
        Family::Neutral => neutral_jacobian(net, bias)?,
        Family::Polarization { partition } => polarization_jacobian(net, bias, partition)?,
        Family::StarHalfLeaves { leaves } => star_half_jacobian(net, bias, leaves)?,
        Family::StarCenterFree { c } => star_center_free_jacobian(net, bias, *c)?,
        Family::Numeric => jacobian(net, bias, eq.x())?,
    };
    let theorem_tag = match_theorem(net, bias, eq.family());
    let (spectral_radius, eigenvalues, verdict) = match &jac.matrix {
        None => (None, Vec::new(), Verdict::SingularUnstable),
        Some(m) => {
            let mut ev: Vec<(f64, f64)> = self::eigenvalues(m)?.iter().map(|z| (z.re, z.im)).collect();
            ev.sort_by(|a, b| b.0.hypot(b.1).total_cmp(&a.0.hypot(a.1)));
            let rho = self::spectral_radius(m)?;
            let mut verdict = if rho < 1.0 - margin {
                Verdict::LocallyExpStable
            } else if rho > 1.0 + margin {
                Verdict::Unstable
            } else {
                Verdict::Inconclusive
            };
            // rho = 1 star points are settled by an escape argument, not the spectrum
            let star_family = matches!(eq.family(), Family::StarHalfLeaves { .. } | Family::StarCenterFree { .. });
            if verdict == Verdict::Inconclusive && star_family && theorem_tag == Some(Theorem::StarEquilibria) {
                verdict = Verdict::Unstable;
            }
            (Some(rho), ev, verdict)
        }
    };
    Ok(StabilityReport {
        equilibrium: eq.clone(),
        jacobian_source: jac.source,
        singular_rows: jac.singular_rows.clone(),
        jacobian: jac,
        spectral_radius,
        eigenvalues,
        verdict,
        theorem_tag,
    })
}

fn is_unit_star(net: &InfluenceNetwork, bias: &BiasProfile) -> bool {
    net.star_center() == Some(0) && net.has_unit_weights() && bias.all(|b| b == 1.0)
}

/// Two-island metadata with a strictly homophilous degree split.
fn homophilous_islands(net: &InfluenceNetwork) -> Option<usize> {
    match *net.topology() {
        Topology::TwoIsland { n1, same_deg, cross_deg, .. }
            if same_deg[0] > cross_deg[0] && same_deg[1] > cross_deg[1] =>
        {
            Some(n1)
        }
        _ => None,
    }
}

fn island_aligned(partition: &Partition, n1: usize) -> bool {
    let first = partition.is_one(0);
    (0..partition.len()).all(|i| partition.is_one(i) == if i < n1 { first } else { !first })
}

/// Syntactic matching of theorem hypotheses against the instance.
pub fn match_theorem(net: &InfluenceNetwork, bias: &BiasProfile, family: &Family) -> Option<Theorem> {
    let connected = net.is_strongly_connected();
    let all_positive = bias.all(|b| b > 0.0);
    match family {
        Family::ExtremeZero | Family::ExtremeOne if connected && all_positive => Some(Theorem::ExtremeAndNeutral),
        Family::Neutral if connected && all_positive => Some(Theorem::ExtremeAndNeutral),
        Family::Neutral
            if connected
                && bias.all(|b| (-THM2_EPSILON..0.0).contains(&b))
                && (0..net.n()).all(|i| net.self_weight(i) > 0.0) =>
        {
            Some(Theorem::NegativeBiasNeutral)
        }
        Family::Polarization { partition } => {
            if connected && bias.all(|b| b > 0.0 && b < 1.0) {
                return Some(Theorem::WeakBiasPolarization);
            }
            let n = net.n();
            let zeros = n - partition.count_ones();
            let uniform_regime = bias.all(|b| b == 1.0) || bias.all(|b| b > 1.0);
            if net.is_structurally_complete()
                && net.has_unit_weights()
                && uniform_regime
                && (2..=n.saturating_sub(2)).contains(&zeros)
            {
                return Some(Theorem::CompleteGraphPolarization);
            }
            if let Some(n1) = homophilous_islands(net) {
                if connected && net.has_unit_weights() && bias.all(|b| b >= 1.0) && island_aligned(partition, n1) {
                    return Some(Theorem::TwoIslandPolarization);
                }
            }
            is_unit_star(net, bias).then_some(Theorem::StarEquilibria)
        }
        Family::StarHalfLeaves { .. } | Family::StarCenterFree { .. } if is_unit_star(net, bias) => {
            Some(Theorem::StarEquilibria)
        }
        _ => None,
    }
}
