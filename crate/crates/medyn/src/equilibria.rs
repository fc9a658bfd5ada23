//! Equilibrium verification: fixed-point, Nash, and the structural
//! (maximal-cohesive-partition) characterization.

use serde::Serialize;

use crate::cohesion::{is_maximal_cohesive, NodeSet};
use crate::median::{best_response_interval, med};
use crate::network::InfluenceNetwork;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EquilibriumVerdict {
    NotEquilibrium { witness: usize },
    Consensus,
    Disagreement { partitions: Vec<(Vec<usize>, Vec<usize>)> },
}

/// Fixed-point test: med(i, x) == x_i for every agent. Returns the first
/// deviator otherwise.
pub fn is_equilibrium(network: &InfluenceNetwork, x: &[f64]) -> Result<(), usize> {
    for i in 0..network.agent_count() {
        if med(i, x, network) != x[i] {
            return Err(i);
        }
    }
    Ok(())
}

/// Nash test: every agent's opinion lies in its best-response interval.
pub fn is_nash(network: &InfluenceNetwork, x: &[f64]) -> bool {
    (0..network.agent_count()).all(|i| {
        let (lo, hi) = best_response_interval(i, x, network);
        lo <= x[i] && x[i] <= hi
    })
}

/// Structural classification. For a non-consensus vector, every threshold
/// between consecutive distinct values must split the agents into two
/// maximal cohesive sets. One threshold per gap is exact: the induced
/// partition is constant within a gap.
pub fn classify(network: &InfluenceNetwork, x: &[f64]) -> EquilibriumVerdict {
    let n = network.agent_count();
    let mut distinct: Vec<f64> = x.to_vec();
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
    distinct.dedup();
    if distinct.len() == 1 {
        return EquilibriumVerdict::Consensus;
    }
    let mut partitions = Vec::new();
    for gap in distinct.windows(2) {
        let y = (gap[0] + gap[1]) / 2.0;
        let lower = NodeSet::new((0..n).filter(|&i| x[i] < y).collect::<Vec<_>>());
        let upper = NodeSet::new((0..n).filter(|&i| x[i] >= y).collect::<Vec<_>>());
        let lower_ok = is_maximal_cohesive(network, &lower).unwrap_or(false);
        let upper_ok = is_maximal_cohesive(network, &upper).unwrap_or(false);
        if !(lower_ok && upper_ok) {
            let witness = is_equilibrium(network, x).err().unwrap_or(0);
            return EquilibriumVerdict::NotEquilibrium { witness };
        }
        partitions.push((lower.members().to_vec(), upper.members().to_vec()));
    }
    EquilibriumVerdict::Disagreement { partitions }
}

/// Verdict JSON for the analyze surface.
#[derive(Debug, Serialize)]
pub struct VerdictDoc {
    pub kind: &'static str,
    pub witness: Option<usize>,
    pub partitions: Vec<(Vec<usize>, Vec<usize>)>,
}

impl From<&EquilibriumVerdict> for VerdictDoc {
    fn from(v: &EquilibriumVerdict) -> Self {
        match v {
            EquilibriumVerdict::NotEquilibrium { witness } => VerdictDoc {
                kind: "not_equilibrium",
                witness: Some(*witness),
                partitions: Vec::new(),
            },
            EquilibriumVerdict::Consensus => {
                VerdictDoc { kind: "consensus", witness: None, partitions: Vec::new() }
            }
            EquilibriumVerdict::Disagreement { partitions } => VerdictDoc {
                kind: "disagreement",
                witness: None,
                partitions: partitions.clone(),
            },
        }
    }
}
