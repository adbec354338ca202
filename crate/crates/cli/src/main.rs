use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use biasnet::equilibria::{canonical_equilibria, find_equilibrium_near, DEFAULT_ENUMERATION_CAP, DEFAULT_TOL};
use biasnet::graph::{
    make_complete, make_path, make_random_graph, make_regular_ring, make_small_world, make_star, make_two_island,
    randomize_weights, read_edge_list, require_strongly_connected, write_edge_list, InfluenceNetwork, TwoIslandSpec,
};
use biasnet::harness::{batch, run_experiment, write_trajectory_csv, EquilibriumSpec, ExperimentConfig, ValueSpec};
use biasnet::rng::derive_seed;
use biasnet::stability::{classify, run_conformance, Regime, DEFAULT_MARGIN};
use biasnet::{simulate, OpinionState, SimulationOptions};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

/// Jacobians of larger networks are left out of stability reports.
const MAX_REPORTED_JACOBIAN: usize = 32;
const CONNECTIVITY_ATTEMPTS: usize = 1000;

#[derive(Parser)]
#[command(name = "biasnet", version, about = "Biased-assimilation opinion dynamics on networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum TopologyKind {
    Complete,
    Star,
    TwoIsland,
    Path,
    Ring,
    Random,
    SmallWorld,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a network and write it as an edge list.
    Generate {
        #[arg(long, value_enum)]
        topology: TopologyKind,
        /// Number of agents (all topologies except two-island).
        #[arg(long, short)]
        n: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Ring degree (ring) or initial ring degree (small-world).
        #[arg(long, default_value_t = 2)]
        deg: usize,
        /// Edge probability (random) or rewiring probability (small-world).
        #[arg(long, default_value_t = 0.3)]
        p: f64,
        #[arg(long)]
        n1: Option<usize>,
        #[arg(long)]
        n2: Option<usize>,
        /// Same-island degree, `D` or `D1,D2`.
        #[arg(long, default_value = "4")]
        same_deg: String,
        /// Cross-island degree, `D` or `D1,D2`.
        #[arg(long, default_value = "2")]
        cross_deg: String,
        /// Redraw each off-diagonal weight from U[LOW, HIGH].
        #[arg(long, num_args = 2, value_names = ["LOW", "HIGH"])]
        weights: Option<Vec<f64>>,
        #[arg(long, default_value_t = 0.0)]
        self_weight: f64,
        /// Resample random topologies until strongly connected.
        #[arg(long)]
        connected: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate the dynamics and write the trajectory as CSV.
    Simulate {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        bias: String,
        #[arg(long)]
        init: String,
        #[arg(long, default_value_t = 100_000)]
        steps: usize,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[arg(long, default_value_t = 10)]
        window: usize,
        #[arg(long, default_value_t = 1)]
        stride: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List canonical equilibria, or locate one near a given state.
    Equilibria {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        bias: String,
        #[arg(long, conflicts_with = "near")]
        enumerate: bool,
        /// File holding a guess state.
        #[arg(long)]
        near: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        /// Polarization vectors are enumerated only up to this many agents.
        #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
        cap: usize,
        #[arg(long, default_value_t = 100_000)]
        max_iter: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify the local stability of an equilibrium.
    Stability {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        bias: String,
        /// zero | one | neutral | partition:BITS | star-half:A,B,.. | star-center:C | file:PATH
        #[arg(long)]
        equilibrium: String,
        #[arg(long, default_value_t = DEFAULT_MARGIN)]
        margin: f64,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a seeded sweep checking verdicts against a stability result.
    Conformance {
        #[arg(long)]
        regime: String,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an experiment config, or a batch over consecutive base seeds.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        batch: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn read_graph(path: &Path) -> Result<InfluenceNetwork> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_edge_list(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json(path: Option<&Path>, value: &Value) -> Result<()> {
    let mut out = output(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn degree_pair(s: &str) -> Result<[usize; 2]> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|t| t.trim().parse())
        .collect::<Result<_, _>>()
        .with_context(|| format!("bad degree {s:?}"))?;
    match parts[..] {
        [d] => Ok([d, d]),
        [a, b] => Ok([a, b]),
        _ => bail!("degree {s:?} must be D or D1,D2"),
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Generate {
            topology,
            n,
            seed,
            deg,
            p,
            n1,
            n2,
            same_deg,
            cross_deg,
            weights,
            self_weight,
            connected,
            out,
        } => {
            let need_n = || n.context("--n is required for this topology");
            let sample = |make: &dyn Fn(u64) -> biasnet::Result<InfluenceNetwork>| -> Result<InfluenceNetwork> {
                Ok(if connected {
                    require_strongly_connected(CONNECTIVITY_ATTEMPTS, |a| make(derive_seed(seed, a)))?
                } else {
                    make(seed)?
                })
            };
            let net = match topology {
                TopologyKind::Complete => make_complete(need_n()?, 1.0, 0.0)?,
                TopologyKind::Star => make_star(need_n()?, 1.0, &[0.0])?,
                TopologyKind::Path => make_path(need_n()?, 1.0)?,
                TopologyKind::Ring => make_regular_ring(need_n()?, deg, 1.0)?,
                TopologyKind::Random => {
                    let n = need_n()?;
                    sample(&|s| make_random_graph(n, p, s))?
                }
                TopologyKind::SmallWorld => {
                    let n = need_n()?;
                    sample(&|s| make_small_world(n, deg, p, s))?
                }
                TopologyKind::TwoIsland => {
                    let spec = TwoIslandSpec {
                        n1: n1.context("--n1 is required for two-island")?,
                        n2: n2.context("--n2 is required for two-island")?,
                        same_deg: degree_pair(&same_deg)?,
                        cross_deg: degree_pair(&cross_deg)?,
                        seed,
                    };
                    sample(&|s| make_two_island(&TwoIslandSpec { seed: s, ..spec.clone() }))?
                }
            };
            let net = match weights.as_deref() {
                Some(&[low, high]) => randomize_weights(&net, low, high, seed)?,
                _ => net,
            };
            let net = if self_weight != 0.0 { net.with_self_weights(&[self_weight])? } else { net };
            let mut w = output(out.as_deref())?;
            write_edge_list(&net, &mut w)?;
            w.flush()?;
        }
        Command::Simulate { graph, bias, init, steps, tol, window, stride, out } => {
            let net = read_graph(&graph)?;
            let n = net.n();
            let bias = bias.parse::<ValueSpec>()?.bias(n).context("bias spec")?;
            let x0 = init.parse::<ValueSpec>()?.state(n).context("init spec")?;
            let opts = SimulationOptions { max_steps: steps, tol, window, stride };
            let traj = simulate(&net, &bias, &x0, &opts)?;
            let mut w = output(out.as_deref())?;
            write_trajectory_csv(&traj, &mut w)?;
            eprintln!(
                "converged: {}, steps: {}, terminal residual: {:e}",
                traj.converged, traj.steps_run, traj.terminal_residual
            );
        }
        Command::Equilibria { graph, bias, enumerate: _, near, tol, cap, max_iter, out } => {
            let net = read_graph(&graph)?;
            let bias = bias.parse::<ValueSpec>()?.bias(net.n()).context("bias spec")?;
            let points = match near {
                Some(path) => {
                    let guess = OpinionState::new(biasnet::harness::read_values(&path)?)?;
                    vec![find_equilibrium_near(&net, &bias, &guess, tol, max_iter)?]
                }
                // enumeration is also the default when neither mode is given
                None => canonical_equilibria(&net, &bias, cap)?,
            };
            write_json(out.as_deref(), &json!({ "n": net.n(), "tol": tol, "equilibria": points }))?;
        }
        Command::Stability { graph, bias, equilibrium, margin, tol, out } => {
            let net = read_graph(&graph)?;
            let bias = bias.parse::<ValueSpec>()?.bias(net.n()).context("bias spec")?;
            let eq = equilibrium.parse::<EquilibriumSpec>()?.resolve(&net, &bias, tol)?;
            let report = classify(&net, &bias, &eq, margin)?;
            let mut doc = serde_json::to_value(&report)?;
            if let Some(m) = report.jacobian_matrix().filter(|m| m.nrows() <= MAX_REPORTED_JACOBIAN) {
                let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
                doc["jacobian"] = json!(rows);
            }
            write_json(out.as_deref(), &doc)?;
        }
        Command::Conformance { regime, trials, seed, out } => {
            let regime: Regime = regime.parse()?;
            let report = run_conformance(regime, trials, seed)?;
            if let Some(path) = out.as_deref() {
                write_json(Some(path), &serde_json::to_value(&report)?)?;
            }
            for v in &report.violations {
                eprintln!("violation: {v}");
            }
            println!(
                "{regime}: {} trials, {} checks, {} violations, {} notes",
                report.trials,
                report.checks,
                report.violations.len(),
                report.notes.len()
            );
            if !report.passed() {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Experiment { config, batch: seeds, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            match seeds {
                Some(k) => {
                    let (summary, _) = batch(&cfg, k, Some(&out))?;
                    for c in &summary.frequencies {
                        println!("{}: {} ({:.3})", c.label.as_str(), c.count, c.frequency);
                    }
                }
                None => {
                    let run = run_experiment(&cfg, Some(&out))?;
                    println!(
                        "{}: converged {} after {} steps",
                        run.summary.label.as_str(),
                        run.summary.converged,
                        run.summary.steps
                    );
                }
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
