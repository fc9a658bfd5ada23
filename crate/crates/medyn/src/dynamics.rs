//! The asynchronous weighted-median engine and the constructive steering
//! sequences behind the convergence proof.
//!
//! One randomly (or prescribed) activated agent per step adopts its
//! weighted-median opinion. Equilibrium is tested exactly every n
//! activations and after any change-free window of n activations; the
//! state space is finite, so the fixed-point test is sound.

use serde::Serialize;
use thiserror::Error;

use rand::Rng;

use crate::equilibria::is_equilibrium;
use crate::median::med;
use crate::network::InfluenceNetwork;
use crate::seed::rng_from;

#[derive(Debug, Error, PartialEq)]
pub enum RunError {
    #[error("prescribed schedule exhausted after {0} steps without equilibrium")]
    ScheduleExhausted(usize),
}

/// Activation order for the asynchronous engine.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum UpdateSchedule {
    UniformRandom { seed: u64 },
    Prescribed { agents: Vec<usize> },
}

/// Outcome of one run.
#[derive(Debug, Clone, Serialize)]
pub struct RunResult {
    pub final_opinions: Vec<f64>,
    pub steps_taken: usize,
    pub converged: bool,
    /// `(step, agent, new_opinion)` for every activation that changed a value.
    pub trajectory: Option<Vec<(usize, usize, f64)>>,
}

/// Default activation cap for weighted-median runs.
pub fn default_max_steps(n: usize) -> usize {
    50 * n * n
}

/// One activation: agent `i` adopts its weighted-median opinion.
pub fn wm_step(x: &mut [f64], network: &InfluenceNetwork, i: usize) -> bool {
    let target = med(i, x, network);
    if target != x[i] {
        x[i] = target;
        true
    } else {
        false
    }
}

/// Runs the weighted-median dynamics until equilibrium or `max_steps`.
pub fn wm_run(
    x0: &[f64],
    network: &InfluenceNetwork,
    schedule: &UpdateSchedule,
    max_steps: usize,
    record_trajectory: bool,
) -> Result<RunResult, RunError> {
    let n = network.agent_count();
    let mut x = x0.to_vec();
    let mut trajectory = record_trajectory.then(Vec::new);
    if is_equilibrium(network, &x).is_ok() {
        return Ok(RunResult { final_opinions: x, steps_taken: 0, converged: true, trajectory });
    }
    let mut rng = match schedule {
        UpdateSchedule::UniformRandom { seed } => Some(rng_from(*seed)),
        UpdateSchedule::Prescribed { .. } => None,
    };
    let mut quiet = 0usize; // activations since the last change
    let mut steps = 0usize;
    while steps < max_steps {
        let agent = match schedule {
            UpdateSchedule::UniformRandom { .. } => {
                rng.as_mut().unwrap().gen_range(0..n)
            }
            UpdateSchedule::Prescribed { agents } => {
                if steps >= agents.len() {
                    return Err(RunError::ScheduleExhausted(steps));
                }
                agents[steps]
            }
        };
        steps += 1;
        if wm_step(&mut x, network, agent) {
            quiet = 0;
            if let Some(t) = trajectory.as_mut() {
                t.push((steps, agent, x[agent]));
            }
        } else {
            quiet += 1;
        }
        if steps.is_multiple_of(n) || quiet >= n {
            if is_equilibrium(network, &x).is_ok() {
                return Ok(RunResult {
                    final_opinions: x,
                    steps_taken: steps,
                    converged: true,
                    trajectory,
                });
            }
            quiet = 0;
        }
    }
    let converged = is_equilibrium(network, &x).is_ok();
    Ok(RunResult { final_opinions: x, steps_taken: steps, converged, trajectory })
}

/// Constructive update sequence reaching an equilibrium from `x0`.
///
/// Distinct opinion values are processed in ascending layers. For each
/// layer boundary, first every low-side agent with strict-majority weight
/// on the high side switches up, then the cohesive-expansion phase pulls
/// high-side agents with strict-majority weight on the low side down.
/// After both phases the low side is maximal cohesive (or empty, or V) and
/// frozen for the rest of the run.
pub fn steering_sequence(x0: &[f64], network: &InfluenceNetwork) -> Vec<usize> {
    let n = network.agent_count();
    let mut distinct: Vec<f64> = x0.to_vec();
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
    distinct.dedup();
    let mut x = x0.to_vec();
    let mut sequence = Vec::new();
    for layer in distinct.iter().take(distinct.len().saturating_sub(1)) {
        let threshold = *layer;
        // switch phase: low-side agents with > 1/2 mass strictly above
        loop {
            let candidate = (0..n).find(|&i| {
                x[i] <= threshold && {
                    let above: f64 = network
                        .out_neighbors(i)
                        .iter()
                        .filter(|&&(j, _)| x[j] > threshold)
                        .map(|&(_, w)| w)
                        .sum();
                    above > 0.5
                }
            });
            match candidate {
                Some(i) => {
                    wm_step(&mut x, network, i);
                    sequence.push(i);
                }
                None => break,
            }
        }
        // expansion phase: high-side agents with > 1/2 mass at or below
        loop {
            let candidate = (0..n).find(|&i| {
                x[i] > threshold && {
                    let low: f64 = network
                        .out_neighbors(i)
                        .iter()
                        .filter(|&&(j, _)| x[j] <= threshold)
                        .map(|&(_, w)| w)
                        .sum();
                    low > 0.5
                }
            });
            match candidate {
                Some(i) => {
                    wm_step(&mut x, network, i);
                    sequence.push(i);
                }
                None => break,
            }
        }
    }
    sequence
}
