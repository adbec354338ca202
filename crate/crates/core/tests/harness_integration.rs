use std::fs;
use std::path::PathBuf;

use biasnet::equilibria::find_equilibrium_near;
use biasnet::harness::{batch, classify_outcome, run_experiment, Draw, ExperimentConfig, OutcomeLabel};
use biasnet::stability::conjecture_sweep;
use biasnet::{Family, OpinionState};
use proptest::prelude::*;

fn preset(name: &str) -> ExperimentConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../presets").join(name);
    ExperimentConfig::load(&path).unwrap()
}

#[test]
fn presets_load_and_describe_themselves() {
    for name in ["fig1.json", "fig2.json", "fig3.json", "fig3-unit-weights.json"] {
        let config = preset(name);
        assert!(config.note.is_some(), "{name} has no note");
        let net = config.build_network().unwrap();
        assert_eq!(net.n(), 100);
        assert!(net.is_strongly_connected());
        assert!((0..100).all(|i| net.neighbors(i).len() == 6));
    }
}

#[test]
fn replay_is_byte_identical() {
    let config = preset("fig2.json");
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_experiment(&config, Some(a.path())).unwrap();
    run_experiment(&config, Some(b.path())).unwrap();
    for file in ["trajectory.csv", "summary.json"] {
        let (x, y) = (fs::read(a.path().join(file)).unwrap(), fs::read(b.path().join(file)).unwrap());
        assert!(!x.is_empty());
        assert_eq!(x, y, "{file} differs between replays");
    }

    let small = ExperimentConfig { horizon: 2000, ..preset("fig1.json") };
    batch(&small, 4, Some(a.path())).unwrap();
    batch(&small, 4, Some(b.path())).unwrap();
    for file in ["frequencies.csv", "runs.csv", "batch_summary.json"] {
        assert_eq!(fs::read(a.path().join(file)).unwrap(), fs::read(b.path().join(file)).unwrap(), "{file}");
    }
    let (single, runs) = batch(&small, 1, None).unwrap();
    assert_eq!(runs.len(), 1);
    assert_eq!(single.frequencies.iter().filter(|c| c.count > 0).count(), 1);
}

#[test]
fn mixed_terminal_state_is_a_genuine_equilibrium() {
    let run = run_experiment(&preset("fig2.json"), None).unwrap();
    assert!(run.trajectory.converged);
    assert_eq!(run.summary.label, OutcomeLabel::ClusteredMixed);
    let eq = find_equilibrium_near(&run.network, &run.bias, run.trajectory.terminal(), 1e-10, 10_000).unwrap();
    assert!(eq.residual() <= 1e-10);
    assert_eq!(eq.family(), &Family::Numeric);
    assert!(eq.x().as_slice().iter().any(|&v| v > 1e-6 && v < 1.0 - 1e-6));
}

#[test]
fn strong_bias_two_island_runs_follow_their_degroot_counterparts() {
    let config = preset("fig1.json");
    let net = config.build_network().unwrap();
    let pairs: Vec<_> = (0..8)
        .map(|k| {
            let c = config.reseeded(config.seed + 100 + k);
            (c.draw_bias(100).unwrap(), c.draw_init(100).unwrap())
        })
        .collect();
    let rows = conjecture_sweep(&net, &pairs, 100_000, 1e-12).unwrap();
    for row in rows {
        assert!(row.degroot_converged && row.biased_converged && !row.counterexample);
        let limit = OpinionState::new(row.biased_limit).unwrap();
        assert_eq!(classify_outcome(&limit, true, 1e-6), OutcomeLabel::ExtremePolarization);
    }
}

/// Extreme consensus should not become rarer as the bias shrinks toward zero.
/// Both ranges sit close to saturation on this topology, so the comparison is
/// non-strict.
#[test]
fn near_zero_bias_favours_consensus() {
    let base = ExperimentConfig { weights: None, ..preset("fig1.json") };
    let consensus = |low: f64, high: f64| {
        let config =
            ExperimentConfig { bias: biasnet::harness::Seeded::new(Draw::Uniform { low, high }), ..base.clone() };
        let (summary, _) = batch(&config, 200, None).unwrap();
        summary.frequency(OutcomeLabel::ExtremeConsensus0) + summary.frequency(OutcomeLabel::ExtremeConsensus1)
    };
    let near_zero = consensus(0.05, 0.15);
    let moderate = consensus(0.5, 0.95);
    assert!(near_zero >= moderate, "near-zero {near_zero} vs moderate {moderate}");
    assert!(near_zero >= 0.9);
}

proptest! {
    #[test]
    fn outcome_labels_match_their_definitions(
        x in prop::collection::vec(prop_oneof![Just(0.0), Just(1.0), 0.0f64..1e-6, (1.0 - 1e-6)..=1.0f64, 0.0f64..=1.0], 1..20),
        converged: bool,
    ) {
        let delta = 1e-6;
        let label = classify_outcome(&OpinionState::new(x.clone()).unwrap(), converged, delta);
        let low = x.iter().filter(|&&v| v <= delta).count();
        let high = x.iter().filter(|&&v| v >= 1.0 - delta).count();
        let expect = if !converged {
            OutcomeLabel::NonConverged
        } else if low == x.len() {
            OutcomeLabel::ExtremeConsensus0
        } else if high == x.len() {
            OutcomeLabel::ExtremeConsensus1
        } else if low + high == x.len() {
            OutcomeLabel::ExtremePolarization
        } else {
            OutcomeLabel::ClusteredMixed
        };
        prop_assert_eq!(label, expect);
    }
}
