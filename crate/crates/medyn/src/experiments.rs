//! The Monte Carlo studies: consensus probability over network grids,
//! extremeness vs. centrality, and initial-vs-final opinion distributions.
//!
//! Trials run in parallel; each derives its RNG stream from
//! `(master seed, cell, trial)` and results are keyed by trial index, so
//! output is independent of thread count.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::baselines::{degroot_run, fj_run, is_consensus, make_stubborn, nbc_run};
use crate::dynamics::{default_max_steps, wm_run, RunResult, UpdateSchedule};
use crate::generate::{generate, GeneratorConfig};
use crate::metrics::{categorize, extremist_focus, in_degree_centrality, OpinionCategory};
use crate::network::{InfluenceNetwork, NetworkError};
use crate::sampling::{sample_initial, InitialDistribution};
use crate::seed::mix;

/// Which dynamics a trial runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    WeightedMedian,
    DeGroot,
    /// DeGroot after a seeded fraction of agents is made absolutely stubborn.
    StubbornDeGroot,
    FriedkinJohnsen,
    BoundedConfidence,
}

impl Model {
    pub fn parse(id: &str) -> Option<Self> {
        Some(match id {
            "wm" | "weighted_median" => Self::WeightedMedian,
            "degroot" => Self::DeGroot,
            "stubborn" | "stubborn_degroot" => Self::StubbornDeGroot,
            "fj" | "friedkin_johnsen" => Self::FriedkinJohnsen,
            "nbc" | "bounded_confidence" => Self::BoundedConfidence,
            _ => return None,
        })
    }
}

pub const STUBBORN_FRACTION: f64 = 0.05;
/// Averaging models in experiments iterate to a tight steady state so the
/// consensus spread test is meaningful.
const AVG_TOL: f64 = 1e-18;
const AVG_MAX_ITERS: usize = 200_000;

/// One trial of `model` from `x0`; `seed` drives every stochastic choice
/// (schedule, stubborn picks, attachments, radii).
pub fn run_model(
    model: Model,
    network: &InfluenceNetwork,
    x0: &[f64],
    seed: u64,
) -> Result<RunResult, NetworkError> {
    let n = network.agent_count();
    Ok(match model {
        Model::WeightedMedian => wm_run(
            x0,
            network,
            &UpdateSchedule::UniformRandom { seed },
            default_max_steps(n),
            false,
        )
        .expect("uniform-random schedules never exhaust"),
        Model::DeGroot => degroot_run(x0, network, AVG_TOL, AVG_MAX_ITERS),
        Model::StubbornDeGroot => {
            let stubborn = make_stubborn(network, STUBBORN_FRACTION, seed)?;
            degroot_run(x0, &stubborn, AVG_TOL, AVG_MAX_ITERS)
        }
        Model::FriedkinJohnsen => {
            let mut rng = crate::seed::rng_from(mix(seed, 0x6a));
            let attachments: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
            fj_run(x0, network, &attachments, AVG_TOL, AVG_MAX_ITERS)
        }
        Model::BoundedConfidence => {
            let mut rng = crate::seed::rng_from(mix(seed, 0x6b));
            // radius law scales with the opinion range
            let span = x0.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                - x0.iter().cloned().fold(f64::INFINITY, f64::min);
            let radius_max = if span > 1.5 { 1.0 } else { 0.5 };
            let radii: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..radius_max)).collect();
            nbc_run(x0, network, &radii, AVG_TOL, AVG_MAX_ITERS)
        }
    })
}

fn trial_reached_consensus(model: Model, result: &RunResult) -> bool {
    match model {
        Model::WeightedMedian => result.converged && is_consensus(&result.final_opinions),
        _ => is_consensus(&result.final_opinions),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GridCell {
    pub n: usize,
    pub d: usize,
    pub beta: f64,
    pub trials: u32,
    pub consensus: u32,
    pub frequency: f64,
}

/// Consensus frequency over a Watts-Strogatz parameter grid. Each
/// realization regenerates both the network and the Uniform[0,1] initial
/// condition.
pub fn consensus_probability_experiment(
    model: Model,
    grid: &[(usize, usize, f64)],
    trials: u32,
    master_seed: u64,
) -> Result<Vec<GridCell>, NetworkError> {
    grid.iter()
        .enumerate()
        .map(|(cell_idx, &(n, d, beta))| {
            let outcomes: Result<Vec<bool>, NetworkError> = (0..trials)
                .into_par_iter()
                .map(|t| {
                    let s = mix(mix(master_seed, cell_idx as u64), t as u64);
                    let network =
                        generate(&GeneratorConfig::ws(n, d, beta, mix(s, 1)))?;
                    let x0 =
                        sample_initial(InitialDistribution::Uniform01, n, mix(s, 2));
                    let result = run_model(model, &network, &x0, mix(s, 3))?;
                    Ok(trial_reached_consensus(model, &result))
                })
                .collect();
            let outcomes = outcomes?;
            let consensus = outcomes.iter().filter(|&&c| c).count() as u32;
            Ok(GridCell {
                n,
                d,
                beta,
                trials,
                consensus,
                frequency: consensus as f64 / trials as f64,
            })
        })
        .collect()
}

/// Per-trial, per-agent outcome of the extremeness study.
#[derive(Debug, Clone, Serialize)]
pub struct ExtremenessTrial {
    pub trial: u32,
    pub converged: bool,
    pub categories: Vec<OpinionCategory>,
    pub focus: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct ExtremenessResult {
    pub in_degree: Vec<f64>,
    pub trials: Vec<ExtremenessTrial>,
    /// Per-agent frequency of ending in the extreme category.
    pub extreme_frequency: Vec<f64>,
}

/// Runs `trials` realizations of `model` on one fixed network with
/// Uniform[-1,1] initial opinions.
pub fn extremeness_centrality_experiment(
    model: Model,
    network: &InfluenceNetwork,
    trials: u32,
    master_seed: u64,
) -> Result<ExtremenessResult, NetworkError> {
    let n = network.agent_count();
    let in_degree = in_degree_centrality(network);
    let trial_results: Result<Vec<ExtremenessTrial>, NetworkError> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let s = mix(master_seed, t as u64);
            let x0 = sample_initial(InitialDistribution::UniformSym, n, mix(s, 2));
            let result = run_model(model, network, &x0, mix(s, 3))?;
            // averaging iterates stay inside the convex hull of x0
            let categories = categorize(&result.final_opinions)
                .expect("final opinions stay inside [-1, 1]");
            let focus = extremist_focus(network, &result.final_opinions)
                .expect("final opinions stay inside [-1, 1]");
            Ok(ExtremenessTrial { trial: t, converged: result.converged, categories, focus })
        })
        .collect();
    let trial_results = trial_results?;
    let mut extreme_counts = vec![0u32; n];
    for trial in &trial_results {
        for (i, &c) in trial.categories.iter().enumerate() {
            if c == OpinionCategory::Extreme {
                extreme_counts[i] += 1;
            }
        }
    }
    let denom = trials.max(1) as f64;
    Ok(ExtremenessResult {
        in_degree,
        trials: trial_results,
        extreme_frequency: extreme_counts.iter().map(|&c| c as f64 / denom).collect(),
    })
}

/// Fixed-width histogram over [lo, hi].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn build(data: &[f64], bins: usize, lo: f64, hi: f64) -> Self {
        let mut counts = vec![0u64; bins];
        let width = (hi - lo) / bins as f64;
        for &v in data {
            let idx = if width > 0.0 {
                (((v - lo) / width) as usize).min(bins - 1)
            } else {
                0
            };
            counts[idx] += 1;
        }
        Histogram { lo, hi, counts }
    }

    /// Runs of nonempty bins separated by at least one empty bin.
    pub fn cluster_count(&self) -> usize {
        let mut clusters = 0;
        let mut in_cluster = false;
        for &c in &self.counts {
            if c > 0 && !in_cluster {
                clusters += 1;
                in_cluster = true;
            } else if c == 0 {
                in_cluster = false;
            }
        }
        clusters
    }

    pub fn nonempty_bins(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }
}

pub const DEFAULT_BINS: usize = 50;

#[derive(Debug, Serialize)]
pub struct DistributionResult {
    pub initial: Histogram,
    pub finals: Vec<(Model, Histogram)>,
}

/// All models share the network and, per trial, the same initial vector.
/// Histograms are accumulated over trials on the initial data range.
pub fn distribution_experiment(
    models: &[Model],
    network: &InfluenceNetwork,
    dist: InitialDistribution,
    trials: u32,
    bins: usize,
    master_seed: u64,
) -> Result<DistributionResult, NetworkError> {
    let n = network.agent_count();
    // initial opinions plus one final profile per model
    type TrialOutcome = (Vec<f64>, Vec<Vec<f64>>);
    let per_trial: Result<Vec<TrialOutcome>, NetworkError> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let s = mix(master_seed, t as u64);
            let x0 = sample_initial(dist, n, mix(s, 2));
            let finals: Result<Vec<Vec<f64>>, NetworkError> = models
                .iter()
                .map(|&m| Ok(run_model(m, network, &x0, mix(s, 3))?.final_opinions))
                .collect();
            Ok((x0, finals?))
        })
        .collect();
    let per_trial = per_trial?;
    let all_initials: Vec<f64> =
        per_trial.iter().flat_map(|(x0, _)| x0.iter().copied()).collect();
    let lo = all_initials.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = all_initials.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let initial = Histogram::build(&all_initials, bins, lo, hi);
    let finals = models
        .iter()
        .enumerate()
        .map(|(mi, &m)| {
            let data: Vec<f64> = per_trial
                .iter()
                .flat_map(|(_, f)| f[mi].iter().copied())
                .collect();
            (m, Histogram::build(&data, bins, lo, hi))
        })
        .collect();
    Ok(DistributionResult { initial, finals })
}
