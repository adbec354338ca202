//! Acceptance criteria. Each test prints one `criterion N: PASS|FAIL` line to
//! stderr (uncaptured) and then asserts.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use biasnet::stability::{jacobian, monotone_certificate, Direction};
use biasnet::{bias_response, step, BiasProfile, InfluenceNetwork, OpinionState};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(criterion: u32, pass: bool, detail: String) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    // bypass libtest capture so the line shows on every run
    let _ = writeln!(std::io::stderr(), "criterion {criterion}: {verdict} ({detail})");
    assert!(pass, "criterion {criterion} failed: {detail}");
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_biasnet"))
}

fn preset(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../presets").join(name)
}

/// Random weighted network with a spanning ring (no isolated agents).
fn random_network(rng: &mut ChaCha8Rng, n: usize) -> InfluenceNetwork {
    let density = rng.gen_range(0.0..0.6);
    let self_weighted = rng.gen_bool(0.5);
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.gen_bool(density) {
                m[(i, j)] = rng.gen_range(0.05..3.0);
            }
        }
        m[(i, (i + 1) % n)] = rng.gen_range(0.2..3.0);
        if self_weighted {
            m[(i, i)] = rng.gen_range(0.0..2.0);
        }
    }
    InfluenceNetwork::from_matrix(m).unwrap()
}

fn opinion(rng: &mut ChaCha8Rng) -> f64 {
    match rng.gen_range(0..10) {
        0 => 0.0,
        1 => 1.0,
        2 => 0.5,
        _ => rng.gen_range(0.0..=1.0),
    }
}

/// The update rule written out from the raw weight matrix.
fn oracle_f(w: &DMatrix<f64>, b: &[f64], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|i| {
            let (mut s, mut d) = (0.0, 0.0);
            for j in (0..n).filter(|&j| j != i) {
                s += w[(i, j)] * x[j];
                d += w[(i, j)];
            }
            let up = x[i].powf(b[i]) * s;
            let down = (1.0 - x[i]).powf(b[i]) * (d - s);
            (w[(i, i)] * x[i] + up) / (w[(i, i)] + up + down)
        })
        .collect()
}

fn ulps(a: f64, b: f64) -> u64 {
    (a.to_bits() as i64 - b.to_bits() as i64).unsigned_abs()
}

#[test]
fn criterion_1_interval_invariance() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut bad = 0;
    for _ in 0..10_000 {
        let n = rng.gen_range(2..=20);
        let net = random_network(&mut rng, n);
        let b: Vec<f64> = (0..n).map(|_| if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(0.0..6.0) }).collect();
        let x: Vec<f64> = (0..n).map(|_| opinion(&mut rng)).collect();
        let out = step(&net, &BiasProfile::new(b).unwrap(), &OpinionState::new(x).unwrap()).unwrap();
        bad += out.as_slice().iter().filter(|v| !(0.0..=1.0).contains(*v)).count();
    }
    let secs = start.elapsed().as_secs_f64();
    report(1, bad == 0 && secs < 10.0, format!("10000 triples, {bad} entries outside [0,1], {secs:.2} s"));
}

#[test]
fn criterion_2_degroot_reduction() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0;
    for _ in 0..1000 {
        let n = rng.gen_range(2..=20);
        let net = random_network(&mut rng, n);
        let x: Vec<f64> = (0..n).map(|_| opinion(&mut rng)).collect();
        let out = step(&net, &BiasProfile::uniform(n, 0.0).unwrap(), &OpinionState::new(x.clone()).unwrap()).unwrap();
        let w = net.weights();
        for i in 0..n {
            let avg = (0..n).map(|j| w[(i, j)] * x[j]).sum::<f64>() / w.row(i).iter().sum::<f64>();
            worst = worst.max(ulps(out[i], avg));
        }
    }
    report(2, worst <= 4, format!("1000 instances, worst deviation {worst} ulps"));
}

#[test]
fn criterion_3_bias_response_law() {
    let mut violations = Vec::new();
    let mut worst_identity = 0;
    for b in [0.1, 0.5, 0.9, 1.0, 1.1, 2.0, 5.0] {
        for k in 1..=999 {
            let x = k as f64 / 1000.0;
            let p = bias_response(b, x).unwrap();
            let p0 = bias_response(0.0, x).unwrap();
            let side = if x > 0.5 {
                1.0
            } else if x < 0.5 {
                -1.0
            } else {
                0.0
            };
            if side != 0.0 && (p - p0) * side <= 0.0 {
                violations.push(format!("p({b},{x}) vs p(0,{x})"));
            }
            if b == 1.0 {
                worst_identity = worst_identity.max(ulps(p, x));
            } else if side != 0.0 {
                let expected = if b > 1.0 { side } else { -side };
                if (p - x) * expected <= 0.0 {
                    violations.push(format!("p({b},{x}) vs {x}"));
                }
            }
        }
    }
    report(
        3,
        violations.is_empty() && worst_identity <= 4,
        format!("7 x 999 grid, {} sign violations, p(1,x) within {worst_identity} ulps", violations.len()),
    );
}

#[test]
fn criterion_4_jacobian_vs_finite_differences() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = rng.gen_range(2..=12);
        let net = random_network(&mut rng, n);
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..=3.0)).collect();
        let bias = BiasProfile::new(b.clone()).unwrap();
        for _ in 0..100 {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0.02..0.98)).collect();
            let j = jacobian(&net, &bias, &OpinionState::new(x.clone()).unwrap()).unwrap().matrix.unwrap();
            for l in 0..n {
                let (mut xp, mut xm) = (x.clone(), x.clone());
                xp[l] += h;
                xm[l] -= h;
                let (fp, fm) = (oracle_f(net.weights(), &b, &xp), oracle_f(net.weights(), &b, &xm));
                for i in 0..n {
                    let fd = (fp[i] - fm[i]) / (2.0 * h);
                    let a = j[(i, l)];
                    let scale = a.abs().max(1e-3 * j.amax());
                    if scale > 0.0 {
                        worst = worst.max((a - fd).abs() / scale);
                    }
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    report(
        4,
        worst <= 1e-5 && secs < 30.0,
        format!("50 instances x 100 points, max relative error {worst:.2e}, {secs:.2} s"),
    );
}

#[test]
fn criterion_5_conformance_sweep() {
    let mut lines = Vec::new();
    let mut ok = true;
    for regime in ["thm1", "thm2", "thm4", "thm5", "thm6", "thm7"] {
        let out =
            bin().args(["conformance", "--regime", regime, "--trials", "100", "--seed", "2024"]).output().unwrap();
        ok &= out.status.success();
        lines.push(String::from_utf8_lossy(&out.stdout).trim().to_string());
    }
    report(5, ok, lines.join("; "));
}

#[test]
fn criterion_6_monotone_certificates() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut failures = Vec::new();
    let mut max_steps = 0;
    for trial in 0..100 {
        let n = rng.gen_range(2..=15);
        let net = random_network(&mut rng, n);
        let b: Vec<f64> = (0..n).map(|_| if rng.gen_bool(0.3) { 1.0 } else { rng.gen_range(1.0..3.0) }).collect();
        let bias = BiasProfile::new(b).unwrap();
        let up = rng.gen_bool(0.5);
        let mut x: Vec<f64> = (0..n).map(|_| if rng.gen_bool(0.2) { 0.5 } else { rng.gen_range(0.5..1.0) }).collect();
        let k = rng.gen_range(0..n);
        x[k] = rng.gen_range(0.501..1.0);
        if !up {
            x.iter_mut().for_each(|v| *v = 1.0 - *v);
        }
        let target = if up { 1.0 } else { 0.0 };

        // independent replay of the trajectory
        let mut cur = OpinionState::new(x.clone()).unwrap();
        let mut reached = None;
        for k in 0..100_000 {
            if cur.as_slice().iter().all(|v| (v - target).abs() <= 1e-10) {
                reached = Some(k);
                break;
            }
            let next = step(&net, &bias, &cur).unwrap();
            let monotone = cur.as_slice().iter().zip(next.as_slice()).all(|(a, b)| {
                if up {
                    *b >= a - f64::EPSILON
                } else {
                    *b <= a + f64::EPSILON
                }
            });
            if !monotone {
                failures.push(format!("trial {trial}: non-monotone at step {k}"));
                break;
            }
            cur = next;
        }
        match reached {
            Some(k) => max_steps = max_steps.max(k),
            None => failures.push(format!("trial {trial}: did not reach {target} within 1e5 steps")),
        }
        let dir = if up { Direction::Up } else { Direction::Down };
        let cert = monotone_certificate(&net, &bias, &OpinionState::new(x).unwrap(), dir, 100_000).unwrap();
        if !cert.is_certified() {
            failures.push(format!("trial {trial}: {cert:?}"));
        }
    }
    report(
        6,
        failures.is_empty(),
        format!("100 instances, {} failures {:?}, slowest {max_steps} steps", failures.len(), failures),
    );
}

fn n3_family_distance(x: &[f64; 3]) -> f64 {
    let binary = x.iter().map(|&v| v.min(1.0 - v)).fold(0.0, f64::max);
    let half = (x[0] - 0.5).abs().max((x[1] + x[2] - 1.0).abs() / 2.0);
    let center_free = x[1].max(1.0 - x[2]).min((1.0 - x[1]).max(x[2]));
    binary.min(half).min(center_free)
}

#[test]
fn criterion_7_star_grid_scan() {
    let w = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
    let net = InfluenceNetwork::from_matrix(w).unwrap();
    let bias = BiasProfile::uniform(3, 1.0).unwrap();
    let grid: Vec<f64> = (0..=64).map(|k| k as f64 / 64.0).collect();
    let (mut hits, mut outside) = (0, Vec::new());
    for &c in &grid {
        for &a in &grid {
            for &z in &grid {
                let x = [c, a, z];
                let next = step(&net, &bias, &OpinionState::new(x.to_vec()).unwrap()).unwrap();
                let residual = next.as_slice().iter().zip(&x).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
                if residual < 1e-3 {
                    hits += 1;
                    if n3_family_distance(&x) > 1.0 / 64.0 {
                        outside.push(x);
                    }
                }
            }
        }
    }
    report(
        7,
        outside.is_empty(),
        format!("65^3 grid, {hits} near-fixed points, {} outside the catalog", outside.len()),
    );
}

fn read_frequencies(dir: &Path) -> Vec<(String, f64)> {
    fs::read_to_string(dir.join("frequencies.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].to_string(), f[2].parse().unwrap())
        })
        .collect()
}

fn frequency(table: &[(String, f64)], label: &str) -> f64 {
    table.iter().find(|(l, _)| l == label).map_or(0.0, |(_, f)| *f)
}

#[test]
fn criterion_8_two_island_experiments() {
    let start = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let run = |config: &str, dir: &str, batch: Option<&str>| {
        let out = tmp.path().join(dir);
        let mut cmd = bin();
        cmd.args(["experiment", "--config"]).arg(preset(config)).arg("--out").arg(&out);
        if let Some(k) = batch {
            cmd.args(["--batch", k]);
        }
        assert!(cmd.output().unwrap().status.success(), "{config} failed to run");
        out
    };
    let fig1 = frequency(&read_frequencies(&run("fig1.json", "fig1", Some("50"))), "extreme_polarization");
    let fig2 = frequency(&read_frequencies(&run("fig2.json", "fig2", Some("50"))), "clustered_mixed");
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(run("fig3.json", "fig3", None).join("summary.json")).unwrap())
            .unwrap();
    let terminal: Vec<f64> = serde_json::from_value(summary["terminal_state"].clone()).unwrap();
    let island1 = terminal[..50].iter().cloned().fold(0.0, f64::max);
    let island2 = terminal[50..].iter().cloned().fold(1.0, f64::min);
    let fig3 = island1 <= 0.1 && island2 >= 0.9;
    let secs = start.elapsed().as_secs_f64();
    report(
        8,
        fig1 >= 0.8 && fig2 > 0.0 && fig3 && secs < 300.0,
        format!(
            "fig1 polarization {fig1:.2} (need >= 0.8); fig2 clustered_mixed {fig2:.2} (need > 0); \
             fig3 max island-1 {island1:.4} (need <= 0.1), min island-2 {island2:.4} (need >= 0.9), label {}; {secs:.1} s",
            summary["label"]
        ),
    );
}

fn collect_files(dir: &Path, out: &mut Vec<PathBuf>) {
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            collect_files(&path, out);
        } else {
            out.push(path);
        }
    }
}

#[test]
fn criterion_9_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let mut compared = 0;
    let mut mismatched = Vec::new();
    let mut cases: Vec<(String, Option<&str>)> = fs::read_dir(preset(""))
        .unwrap()
        .map(|e| (e.unwrap().file_name().to_string_lossy().into_owned(), None))
        .filter(|(name, _)| name.ends_with(".json"))
        .collect();
    cases.sort();
    cases.push(("fig2.json".into(), Some("5")));
    for (k, (name, batch)) in cases.iter().enumerate() {
        let dirs: Vec<PathBuf> = (0..2).map(|r| tmp.path().join(format!("{k}-{r}"))).collect();
        for dir in &dirs {
            let mut cmd = bin();
            cmd.args(["experiment", "--config"]).arg(preset(name)).arg("--out").arg(dir);
            if let Some(b) = batch {
                cmd.args(["--batch", b]);
            }
            assert!(cmd.output().unwrap().status.success());
        }
        let mut files = Vec::new();
        collect_files(&dirs[0], &mut files);
        for f in files {
            let twin = dirs[1].join(f.strip_prefix(&dirs[0]).unwrap());
            compared += 1;
            if fs::read(&f).unwrap() != fs::read(&twin).unwrap_or_default() {
                mismatched.push(twin);
            }
        }
    }
    report(
        9,
        mismatched.is_empty() && compared > 0,
        format!("{} configs replayed, {compared} files compared, {} differ", cases.len(), mismatched.len()),
    );
}
