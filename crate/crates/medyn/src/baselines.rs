//! Synchronous baseline models: DeGroot, DeGroot with absolutely stubborn
//! agents, Friedkin-Johnsen, and the networked bounded-confidence model,
//! plus the opinion-manipulation harness.
//!
//! All baselines iterate synchronously, stopping when the squared step
//! change drops below `tol` or at `max_iters`.

use rand::seq::index::sample;
use rand::Rng;

use crate::dynamics::{wm_step, RunResult};
use crate::network::{InfluenceNetwork, NetworkError};
use crate::seed::rng_from;

pub const DEFAULT_TOL: f64 = 0.001;
/// Consensus tolerance on the final opinion spread.
pub const CONSENSUS_SPREAD: f64 = 1e-6;

pub fn is_consensus(x: &[f64]) -> bool {
    let max = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = x.iter().cloned().fold(f64::INFINITY, f64::min);
    max - min < CONSENSUS_SPREAD
}

fn squared_change(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn synchronous_run(
    x0: &[f64],
    tol: f64,
    max_iters: usize,
    mut step: impl FnMut(&[f64]) -> Vec<f64>,
) -> RunResult {
    let mut x = x0.to_vec();
    for iter in 1..=max_iters {
        let next = step(&x);
        let delta = squared_change(&next, &x);
        x = next;
        if delta < tol {
            return RunResult {
                final_opinions: x,
                steps_taken: iter,
                converged: true,
                trajectory: None,
            };
        }
    }
    RunResult { final_opinions: x, steps_taken: max_iters, converged: false, trajectory: None }
}

fn degroot_step(x: &[f64], network: &InfluenceNetwork) -> Vec<f64> {
    (0..network.agent_count())
        .map(|i| network.out_neighbors(i).iter().map(|&(j, w)| w * x[j]).sum())
        .collect()
}

/// Synchronous weighted-averaging iteration x <- Wx.
pub fn degroot_run(
    x0: &[f64],
    network: &InfluenceNetwork,
    tol: f64,
    max_iters: usize,
) -> RunResult {
    synchronous_run(x0, tol, max_iters, |x| degroot_step(x, network))
}

/// Turns round(fraction * n) uniformly chosen agents absolutely stubborn
/// (w_ii = 1, all other row entries 0).
pub fn make_stubborn(
    network: &InfluenceNetwork,
    fraction: f64,
    seed: u64,
) -> Result<InfluenceNetwork, NetworkError> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(NetworkError::BadParameters(format!(
            "stubborn fraction {fraction} outside [0, 1]"
        )));
    }
    let n = network.agent_count();
    let count = (fraction * n as f64).round() as usize;
    let mut rng = rng_from(seed);
    let chosen = sample(&mut rng, n, count.min(n));
    let mut dense = network.to_dense();
    for i in chosen {
        for (j, w) in dense[i].iter_mut().enumerate() {
            *w = if i == j { 1.0 } else { 0.0 };
        }
    }
    InfluenceNetwork::from_dense(&dense)
}

/// Friedkin-Johnsen: x(t+1) = A W x(t) + (I - A) x(0).
pub fn fj_run(
    x0: &[f64],
    network: &InfluenceNetwork,
    attachments: &[f64],
    tol: f64,
    max_iters: usize,
) -> RunResult {
    assert_eq!(attachments.len(), x0.len());
    synchronous_run(x0, tol, max_iters, |x| {
        degroot_step(x, network)
            .into_iter()
            .enumerate()
            .map(|(i, wx)| attachments[i] * wx + (1.0 - attachments[i]) * x0[i])
            .collect()
    })
}

/// Networked bounded-confidence: truncated averaging over neighbors within
/// radius r_i. The agent itself is always in its confidence set.
pub fn nbc_run(
    x0: &[f64],
    network: &InfluenceNetwork,
    radii: &[f64],
    tol: f64,
    max_iters: usize,
) -> RunResult {
    assert_eq!(radii.len(), x0.len());
    synchronous_run(x0, tol, max_iters, |x| {
        (0..network.agent_count())
            .map(|i| {
                let mut num = 0.0;
                let mut den = 0.0;
                for &(j, w) in network.out_neighbors(i) {
                    if j == i || (x[j] - x[i]).abs() < radii[i] {
                        num += w * x[j];
                        den += w;
                    }
                }
                if den > 0.0 {
                    num / den
                } else {
                    x[i]
                }
            })
            .collect()
    })
}

/// Model choice for a manipulation run.
#[derive(Debug, Clone)]
pub enum ManipulationModel {
    /// Non-manipulated agents update asynchronously in seeded random order,
    /// one activation each per signal step.
    WeightedMedian { seed: u64 },
    DeGroot,
}

/// Overwrites one agent's opinion with an external signal each step while
/// the others update per the chosen model. Returns the full trajectory,
/// x(0) first.
pub fn manipulation_run(
    x0: &[f64],
    network: &InfluenceNetwork,
    model: &ManipulationModel,
    manipulated_agent: usize,
    signal: &[f64],
) -> Vec<Vec<f64>> {
    let n = network.agent_count();
    let mut x = x0.to_vec();
    let mut trajectory = vec![x.clone()];
    let mut rng = match model {
        ManipulationModel::WeightedMedian { seed } => Some(rng_from(*seed)),
        ManipulationModel::DeGroot => None,
    };
    for &s in signal {
        x[manipulated_agent] = s;
        match model {
            ManipulationModel::WeightedMedian { .. } => {
                let rng = rng.as_mut().unwrap();
                let mut order: Vec<usize> =
                    (0..n).filter(|&i| i != manipulated_agent).collect();
                // Fisher-Yates with the run's own stream
                for k in (1..order.len()).rev() {
                    order.swap(k, rng.gen_range(0..=k));
                }
                for i in order {
                    wm_step(&mut x, network, i);
                }
            }
            ManipulationModel::DeGroot => {
                let next = degroot_step(&x, network);
                for (i, v) in next.into_iter().enumerate() {
                    if i != manipulated_agent {
                        x[i] = v;
                    }
                }
            }
        }
        trajectory.push(x.clone());
    }
    trajectory
}
