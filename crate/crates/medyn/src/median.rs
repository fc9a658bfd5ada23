//! Weighted medians, the closest-to-own tie-break, and the dissonance-cost
//! machinery the update rule is the best response of.
//!
//! The weighted median of values x with nonnegative weights w (summing
//! to 1) is any x* among the values with at most 1/2 weight strictly below
//! and at most 1/2 strictly above. Equal values are grouped before the
//! cumulative scan: the definition sums over value classes, not sorted
//! positions. All comparisons against 1/2 are exact; generic weights never
//! tie.

use thiserror::Error;

use crate::network::{InfluenceNetwork, ROW_SUM_TOL};

#[derive(Debug, Error, PartialEq)]
pub enum MedianError {
    #[error("weights must be nonnegative and sum to 1 (got sum {0})")]
    BadWeights(f64),
    #[error("length mismatch: {0} values vs {1} weights")]
    LengthMismatch(usize, usize),
}

/// Outcome of a weighted-median computation.
#[derive(Debug, Clone, PartialEq)]
pub struct MedianResult {
    pub value: f64,
    pub unique: bool,
    /// Smallest and largest weighted medians; equal when unique.
    pub median_set_bounds: (f64, f64),
}

/// Distinct values of `x` with their aggregated weights, ascending.
fn grouped(x: &[f64], w: &[f64]) -> Vec<(f64, f64)> {
    let mut pairs: Vec<(f64, f64)> = x.iter().copied().zip(w.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut groups: Vec<(f64, f64)> = Vec::new();
    for (v, wt) in pairs {
        match groups.last_mut() {
            Some(last) if last.0 == v => last.1 += wt,
            _ => groups.push((v, wt)),
        }
    }
    groups
}

fn check_weights(x: &[f64], w: &[f64]) -> Result<(), MedianError> {
    if x.len() != w.len() {
        return Err(MedianError::LengthMismatch(x.len(), w.len()));
    }
    if w.iter().any(|&wi| wi < 0.0 || !wi.is_finite()) {
        return Err(MedianError::BadWeights(f64::NAN));
    }
    let sum: f64 = w.iter().sum();
    if (sum - 1.0).abs() > ROW_SUM_TOL {
        return Err(MedianError::BadWeights(sum));
    }
    Ok(())
}

/// All weighted medians of `x` under `w`, ascending.
pub fn weighted_median_set(x: &[f64], w: &[f64]) -> Result<Vec<f64>, MedianError> {
    check_weights(x, w)?;
    let groups = grouped(x, w);
    // suffix[k] = total weight of groups strictly after k
    let mut suffix = vec![0.0; groups.len()];
    for k in (0..groups.len().saturating_sub(1)).rev() {
        suffix[k] = suffix[k + 1] + groups[k + 1].1;
    }
    let mut medians = Vec::new();
    let mut below = 0.0;
    for (k, &(v, wt)) in groups.iter().enumerate() {
        if below <= 0.5 && suffix[k] <= 0.5 {
            medians.push(v);
        }
        below += wt;
    }
    Ok(medians)
}

/// Weighted median with bounds and uniqueness flag.
pub fn median_result(x: &[f64], w: &[f64], own: f64) -> Result<MedianResult, MedianError> {
    let set = weighted_median_set(x, w)?;
    let lo = set[0];
    let hi = *set.last().unwrap();
    let unique = lo == hi;
    let value = if unique || own <= lo {
        lo
    } else if own >= hi {
        hi
    } else {
        // interior case: own value carries zero weight and is itself a median
        own
    };
    Ok(MedianResult { value, unique, median_set_bounds: (lo, hi) })
}

/// The model's update target for agent `i`: the weighted median of `x`
/// under row i of the network, tie-broken toward `x[i]`.
pub fn med(i: usize, x: &[f64], network: &InfluenceNetwork) -> f64 {
    // only positive-weight entries matter; row weights sum to 1
    let row = network.out_neighbors(i);
    let values: Vec<f64> = row.iter().map(|&(j, _)| x[j]).collect();
    let weights: Vec<f64> = row.iter().map(|&(_, w)| w).collect();
    median_result(&values, &weights, x[i])
        .expect("network rows are valid weight vectors")
        .value
}

/// Cognitive dissonance of agent `i` taking opinion `z` against opinions `x`.
pub fn cost(i: usize, z: f64, x: &[f64], network: &InfluenceNetwork, alpha: f64) -> f64 {
    network
        .out_neighbors(i)
        .iter()
        .map(|&(j, w)| w * (z - x[j]).abs().powf(alpha))
        .sum()
}

/// `[inf, sup]` of the alpha = 1 cost minimizers for agent `i`. The cost is
/// piecewise linear, so the scan over the candidate values {x_j} is exact.
pub fn best_response_interval(i: usize, x: &[f64], network: &InfluenceNetwork) -> (f64, f64) {
    let mut candidates: Vec<f64> = x.to_vec();
    candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    candidates.dedup();
    let mut best = f64::INFINITY;
    let mut lo = candidates[0];
    let mut hi = candidates[0];
    for &z in &candidates {
        let c = cost(i, z, x, network, 1.0);
        if c < best {
            best = c;
            lo = z;
            hi = z;
        } else if c == best {
            hi = z;
        }
    }
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::k3u;

    #[test]
    fn median_set_examples() {
        assert_eq!(
            weighted_median_set(&[1.0, 2.0, 3.0], &[0.4, 0.3, 0.3]).unwrap(),
            vec![2.0]
        );
        assert_eq!(
            weighted_median_set(&[0.0, 1.0], &[0.5, 0.5]).unwrap(),
            vec![0.0, 1.0]
        );
        assert_eq!(
            weighted_median_set(&[5.0, 5.0, 5.0], &[0.2, 0.3, 0.5]).unwrap(),
            vec![5.0]
        );
    }

    #[test]
    fn bad_weights_rejected() {
        assert!(weighted_median_set(&[1.0, 2.0], &[0.9, 0.2]).is_err());
        assert!(weighted_median_set(&[1.0, 2.0], &[-0.1, 1.1]).is_err());
    }

    #[test]
    fn med_examples() {
        let net = k3u();
        assert_eq!(med(0, &[0.0, 1.0, 2.0], &net), 1.0);

        let two = InfluenceNetwork::from_dense(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        assert_eq!(med(0, &[0.0, 1.0], &two), 0.0);
        assert_eq!(med(1, &[0.0, 1.0], &two), 1.0);

        assert_eq!(med(2, &[4.0, 4.0, 4.0], &net), 4.0);
    }

    #[test]
    fn tie_break_interior_keeps_own() {
        // row puts 0.5 below and 0.5 above agent 0's own value
        let net = InfluenceNetwork::from_dense(&[
            vec![0.0, 0.5, 0.5],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        assert_eq!(med(0, &[1.0, 0.0, 2.0], &net), 1.0);
    }

    #[test]
    fn cost_examples() {
        let net = k3u();
        assert!((cost(0, 1.0, &[0.0, 1.0, 2.0], &net, 1.0) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(cost(0, 5.0, &[5.0, 5.0, 5.0], &net, 1.7), 0.0);
        assert!((cost(0, 1.0, &[0.0, 0.0, 3.0], &net, 2.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn best_response_examples() {
        let net = k3u();
        assert_eq!(best_response_interval(0, &[0.0, 1.0, 2.0], &net), (1.0, 1.0));
        assert_eq!(best_response_interval(0, &[0.0, 0.0, 3.0], &net), (0.0, 0.0));

        let two = InfluenceNetwork::from_dense(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        assert_eq!(best_response_interval(0, &[0.0, 1.0], &two), (0.0, 1.0));
    }

    #[test]
    fn degroot_mean_is_alpha_two_argmin() {
        // golden-section search on the alpha = 2 cost vs the closed-form mean
        use rand::Rng;
        let mut rng = crate::seed::rng_from(4);
        for _ in 0..50 {
            let n = rng.gen_range(2..=8usize);
            let raw: Vec<Vec<f64>> =
                (0..n).map(|_| (0..n).map(|_| rng.gen::<f64>()).collect()).collect();
            let net = InfluenceNetwork::normalize_rows(&raw).unwrap();
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
            for i in 0..n {
                let mean: f64 =
                    net.out_neighbors(i).iter().map(|&(j, w)| w * x[j]).sum();
                let (mut a, mut b) = (-10.0f64, 10.0f64);
                let phi = (5.0f64.sqrt() - 1.0) / 2.0;
                while b - a > 1e-10 {
                    let c = b - phi * (b - a);
                    let d = a + phi * (b - a);
                    if cost(i, c, &x, &net, 2.0) < cost(i, d, &x, &net, 2.0) {
                        b = d;
                    } else {
                        a = c;
                    }
                }
                // comparisons near a quadratic minimum bottom out at
                // ~sqrt(eps) * scale, so the bracket is only good to ~1e-6
                assert!(((a + b) / 2.0 - mean).abs() < 1e-6);
            }
        }
    }
}
