//! Declarative experiments: build a network, draw biases and initial
//! opinions, simulate, and label the outcome. Every random component has its
//! own seeded stream, so a config fully determines its outputs.

mod output;
mod specs;

use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{simulate, step, BiasProfile, OpinionState, SimulationOptions, Trajectory};
use crate::error::{Error, Result};
use crate::graph::{
    make_complete, make_path, make_random_graph, make_regular_ring, make_small_world, make_star, make_two_island,
    randomize_weights, read_edge_list, require_strongly_connected, InfluenceNetwork, TwoIslandSpec,
};
use crate::rng::{self, derive_seed, Stream};

pub use output::{parse_values, read_values, write_trajectory_csv};
pub use specs::{EquilibriumSpec, ValueSpec};

/// Distance to an extreme below which an opinion counts as extreme.
pub const DEFAULT_DELTA: f64 = 1e-6;
/// Calibrated lower bound on the polarization frequency of the strong-bias
/// two-island batch. Recorded in outputs; not enforced by the harness.
pub const POLARIZATION_FREQUENCY_BOUND: f64 = 0.8;

const CONNECTIVITY_ATTEMPTS: usize = 1000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case")]
pub enum TopologySpec {
    Complete {
        n: usize,
    },
    Star {
        n: usize,
    },
    Path {
        n: usize,
    },
    Ring {
        n: usize,
        deg: usize,
    },
    Random {
        n: usize,
        edge_prob: f64,
    },
    SmallWorld {
        n: usize,
        ring_deg: usize,
        rewire_prob: f64,
    },
    TwoIsland {
        n1: usize,
        n2: usize,
        same_deg: [usize; 2],
        cross_deg: [usize; 2],
    },
    /// Edge-list file; relative paths resolve against the config's directory.
    File {
        path: PathBuf,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Draw {
    Const { value: f64 },
    Uniform { low: f64, high: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub size: usize,
    pub low: f64,
    pub high: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitSpec {
    Const {
        value: f64,
    },
    Uniform {
        low: f64,
        high: f64,
    },
    /// Consecutive agent blocks, each drawn from its own interval.
    Blocks {
        blocks: Vec<Block>,
    },
}

/// A component spec with an optional seed overriding the config's base seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Seeded<T> {
    #[serde(flatten)]
    pub spec: T,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl<T> Seeded<T> {
    pub fn new(spec: T) -> Self {
        Self { spec, seed: None }
    }

    fn seed_or(&self, base: u64) -> u64 {
        self.seed.unwrap_or(base)
    }
}

fn default_horizon() -> usize {
    SimulationOptions::default().max_steps
}
fn default_tol() -> f64 {
    SimulationOptions::default().tol
}
fn default_window() -> usize {
    SimulationOptions::default().window
}
fn default_stride() -> usize {
    1
}
fn default_delta() -> f64 {
    DEFAULT_DELTA
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    /// Base seed; each component draws from its own stream of it unless the
    /// component carries an explicit seed.
    pub seed: u64,
    pub topology: Seeded<TopologySpec>,
    /// Positive off-diagonal weights; absent keeps the generator's unit weights.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Seeded<Draw>>,
    #[serde(default)]
    pub self_weight: f64,
    pub bias: Seeded<Draw>,
    pub init: Seeded<InitSpec>,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default = "default_stride")]
    pub stride: usize,
    #[serde(default = "default_delta")]
    pub delta: f64,
}

impl ExperimentConfig {
    /// Reads a JSON config. Relative edge-list paths are resolved against the
    /// config file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config: Self =
            serde_json::from_str(&text).map_err(|e| Error::from(e).context(format!("config {}", path.display())))?;
        if let TopologySpec::File { path: graph } = &mut config.topology.spec {
            if graph.is_relative() {
                if let Some(dir) = path.parent() {
                    *graph = dir.join(&*graph);
                }
            }
        }
        Ok(config)
    }

    pub fn simulation_options(&self) -> SimulationOptions {
        SimulationOptions { max_steps: self.horizon, tol: self.tol, window: self.window, stride: self.stride }
    }

    /// Same config with a different base seed; explicitly seeded components
    /// are unaffected.
    pub fn reseeded(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    pub fn build_network(&self) -> Result<InfluenceNetwork> {
        let seed = self.topology.seed_or(self.seed);
        let net = match &self.topology.spec {
            TopologySpec::Complete { n } => make_complete(*n, 1.0, 0.0)?,
            TopologySpec::Star { n } => make_star(*n, 1.0, &[0.0])?,
            TopologySpec::Path { n } => make_path(*n, 1.0)?,
            TopologySpec::Ring { n, deg } => make_regular_ring(*n, *deg, 1.0)?,
            TopologySpec::Random { n, edge_prob } => require_strongly_connected(CONNECTIVITY_ATTEMPTS, |a| {
                make_random_graph(*n, *edge_prob, derive_seed(seed, a))
            })?,
            TopologySpec::SmallWorld { n, ring_deg, rewire_prob } => {
                require_strongly_connected(CONNECTIVITY_ATTEMPTS, |a| {
                    make_small_world(*n, *ring_deg, *rewire_prob, derive_seed(seed, a))
                })?
            }
            TopologySpec::TwoIsland { n1, n2, same_deg, cross_deg } => {
                require_strongly_connected(CONNECTIVITY_ATTEMPTS, |a| {
                    make_two_island(&TwoIslandSpec {
                        n1: *n1,
                        n2: *n2,
                        same_deg: *same_deg,
                        cross_deg: *cross_deg,
                        seed: derive_seed(seed, a),
                    })
                })?
            }
            TopologySpec::File { path } => {
                let file = File::open(path).map_err(|e| Error::io(path, e))?;
                read_edge_list(BufReader::new(file))?
            }
        };
        let net = match &self.weights {
            None => net,
            Some(w) => {
                let (low, high) = match w.spec {
                    Draw::Const { value } => (value, value),
                    Draw::Uniform { low, high } => (low, high),
                };
                randomize_weights(&net, low, high, w.seed_or(self.seed))?
            }
        };
        // zero keeps whatever self-weights an edge-list file carries
        if self.self_weight == 0.0 {
            return Ok(net);
        }
        net.with_self_weights(&[self.self_weight])
    }

    pub fn draw_bias(&self, n: usize) -> Result<BiasProfile> {
        let mut rng = rng::stream(self.bias.seed_or(self.seed), Stream::Bias);
        let b = match self.bias.spec {
            Draw::Const { value } => vec![value; n],
            Draw::Uniform { low, high } => (0..n).map(|_| specs::draw(&mut rng, low, high)).collect::<Result<_>>()?,
        };
        BiasProfile::new(b)
    }

    pub fn draw_init(&self, n: usize) -> Result<OpinionState> {
        let mut rng = rng::stream(self.init.seed_or(self.seed), Stream::Init);
        let x = match &self.init.spec {
            InitSpec::Const { value } => vec![*value; n],
            InitSpec::Uniform { low, high } => {
                (0..n).map(|_| specs::draw(&mut rng, *low, *high)).collect::<Result<_>>()?
            }
            InitSpec::Blocks { blocks } => {
                let total: usize = blocks.iter().map(|b| b.size).sum();
                if total != n {
                    return Err(Error::DimensionMismatch { expected: n, actual: total });
                }
                let mut x = Vec::with_capacity(n);
                for block in blocks {
                    for _ in 0..block.size {
                        x.push(specs::draw(&mut rng, block.low, block.high)?);
                    }
                }
                x
            }
        };
        OpinionState::new(x)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeLabel {
    #[serde(rename = "extreme_consensus_0")]
    ExtremeConsensus0,
    #[serde(rename = "extreme_consensus_1")]
    ExtremeConsensus1,
    ExtremePolarization,
    ClusteredMixed,
    NonConverged,
}

impl OutcomeLabel {
    pub const ALL: [OutcomeLabel; 5] = [
        OutcomeLabel::ExtremeConsensus0,
        OutcomeLabel::ExtremeConsensus1,
        OutcomeLabel::ExtremePolarization,
        OutcomeLabel::ClusteredMixed,
        OutcomeLabel::NonConverged,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            OutcomeLabel::ExtremeConsensus0 => "extreme_consensus_0",
            OutcomeLabel::ExtremeConsensus1 => "extreme_consensus_1",
            OutcomeLabel::ExtremePolarization => "extreme_polarization",
            OutcomeLabel::ClusteredMixed => "clustered_mixed",
            OutcomeLabel::NonConverged => "non_converged",
        }
    }
}

/// Labels a terminated run. Total: every input gets exactly one label.
pub fn classify_outcome(terminal: &OpinionState, converged: bool, delta: f64) -> OutcomeLabel {
    if !converged {
        return OutcomeLabel::NonConverged;
    }
    let xs = terminal.as_slice();
    let near0 = |v: f64| v <= delta;
    let near1 = |v: f64| v >= 1.0 - delta;
    if xs.iter().all(|&v| near0(v)) {
        OutcomeLabel::ExtremeConsensus0
    } else if xs.iter().all(|&v| near1(v)) {
        OutcomeLabel::ExtremeConsensus1
    } else if xs.iter().all(|&v| near0(v) || near1(v)) {
        OutcomeLabel::ExtremePolarization
    } else {
        OutcomeLabel::ClusteredMixed
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub delta: f64,
    pub polarization_frequency_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub label: OutcomeLabel,
    pub converged: bool,
    pub steps: usize,
    /// Max-norm change of the final step.
    pub terminal_residual: f64,
    /// Largest distance of any terminal opinion from its nearer extreme.
    pub max_extreme_distance: f64,
    pub terminal_state: Vec<f64>,
    pub calibration: Calibration,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug)]
pub struct ExperimentRun {
    pub network: InfluenceNetwork,
    pub bias: BiasProfile,
    pub trajectory: Trajectory,
    pub summary: RunSummary,
}

fn simulate_config(config: &ExperimentConfig, opts: &SimulationOptions) -> Result<ExperimentRun> {
    let ctx = |stage: &str| format!("seed {}: {stage}", config.seed);
    let network = config.build_network().map_err(|e| e.context(ctx("building network")))?;
    let n = network.n();
    let bias = config.draw_bias(n).map_err(|e| e.context(ctx("drawing bias")))?;
    let x0 = config.draw_init(n).map_err(|e| e.context(ctx("drawing initial state")))?;
    let trajectory = simulate(&network, &bias, &x0, opts).map_err(|e| e.context(ctx("simulating")))?;
    let terminal = trajectory.terminal();
    let summary = RunSummary {
        seed: config.seed,
        label: classify_outcome(terminal, trajectory.converged, config.delta),
        converged: trajectory.converged,
        steps: trajectory.steps_run,
        terminal_residual: trajectory.terminal_residual,
        max_extreme_distance: terminal.as_slice().iter().map(|&v| v.min(1.0 - v)).fold(0.0, f64::max),
        terminal_state: terminal.as_slice().to_vec(),
        calibration: Calibration { delta: config.delta, polarization_frequency_bound: POLARIZATION_FREQUENCY_BOUND },
        note: config.note.clone(),
    };
    Ok(ExperimentRun { network, bias, trajectory, summary })
}

/// Runs one experiment. With `out_dir`, writes `trajectory.csv` and
/// `summary.json` there.
pub fn run_experiment(config: &ExperimentConfig, out_dir: Option<&Path>) -> Result<ExperimentRun> {
    let run = simulate_config(config, &config.simulation_options())?;
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join("trajectory.csv");
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        write_trajectory_csv(&run.trajectory, std::io::BufWriter::new(file)).map_err(|e| Error::io(&path, e))?;
        output::write_file(&dir.join("summary.json"), &to_json(&run.summary)?)?;
    }
    Ok(run)
}

/// Whether `x` is a fixed point of the experiment's dynamics, by max-norm
/// residual of one step.
pub fn fixed_point_residual(run: &ExperimentRun) -> Result<f64> {
    let x = run.trajectory.terminal();
    Ok(step(&run.network, &run.bias, x)?.max_diff(x))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelCount {
    pub label: OutcomeLabel,
    pub count: usize,
    pub frequency: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub base_seed: u64,
    pub runs: usize,
    pub frequencies: Vec<LabelCount>,
    pub calibration: Calibration,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl BatchSummary {
    pub fn frequency(&self, label: OutcomeLabel) -> f64 {
        self.frequencies.iter().find(|c| c.label == label).map_or(0.0, |c| c.frequency)
    }
}

/// Runs the config under base seeds `seed, seed + 1, ..` in parallel and
/// tallies outcome labels. Only the first and last states of each run are
/// kept. With `out_dir`, writes `frequencies.csv`, `runs.csv`,
/// `batch_summary.json` and one `runs/seed_<S>/summary.json` per run.
pub fn batch(
    config: &ExperimentConfig,
    n_seeds: usize,
    out_dir: Option<&Path>,
) -> Result<(BatchSummary, Vec<RunSummary>)> {
    if n_seeds == 0 {
        return Err(Error::InvalidParameter("batch needs at least one seed".into()));
    }
    let opts = SimulationOptions { stride: config.horizon.max(1), ..config.simulation_options() };
    let runs: Vec<RunSummary> = (0..n_seeds as u64)
        .into_par_iter()
        .map(|k| simulate_config(&config.reseeded(config.seed.wrapping_add(k)), &opts).map(|r| r.summary))
        .collect::<Result<_>>()?;
    let frequencies = OutcomeLabel::ALL
        .iter()
        .map(|&label| {
            let count = runs.iter().filter(|r| r.label == label).count();
            LabelCount { label, count, frequency: count as f64 / n_seeds as f64 }
        })
        .collect();
    let summary = BatchSummary {
        base_seed: config.seed,
        runs: n_seeds,
        frequencies,
        calibration: Calibration { delta: config.delta, polarization_frequency_bound: POLARIZATION_FREQUENCY_BOUND },
        note: config.note.clone(),
    };
    if let Some(dir) = out_dir {
        write_batch(dir, &summary, &runs)?;
    }
    Ok((summary, runs))
}

fn write_batch(dir: &Path, summary: &BatchSummary, runs: &[RunSummary]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut freq = String::from("label,count,frequency\n");
    for c in &summary.frequencies {
        freq.push_str(&format!("{},{},{}\n", c.label.as_str(), c.count, c.frequency));
    }
    output::write_file(&dir.join("frequencies.csv"), freq.as_bytes())?;
    let mut table = String::from("seed,label,converged,steps,terminal_residual,max_extreme_distance\n");
    for r in runs {
        table.push_str(&format!(
            "{},{},{},{},{:e},{:e}\n",
            r.seed,
            r.label.as_str(),
            r.converged,
            r.steps,
            r.terminal_residual,
            r.max_extreme_distance
        ));
    }
    output::write_file(&dir.join("runs.csv"), table.as_bytes())?;
    output::write_file(&dir.join("batch_summary.json"), &to_json(summary)?)?;
    for r in runs {
        let run_dir = dir.join("runs").join(format!("seed_{}", r.seed));
        fs::create_dir_all(&run_dir).map_err(|e| Error::io(&run_dir, e))?;
        output::write_file(&run_dir.join("summary.json"), &to_json(r)?)?;
    }
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}
