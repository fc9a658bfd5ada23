//! Validation pipeline for multi-round estimation-game data: six candidate
//! update rules (H1-H6), per-participant parameter fits, and error metrics.
//!
//! Row schema (CSV header `experiment_id,participant_id,question,round,answer,truth,game`):
//! within one `(experiment_id, question)` group, every participant answers
//! once per round, and the predictors map round `r` answers to round `r+1`.

use std::collections::BTreeMap;
use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::median::median_result;

#[derive(Debug, Error)]
pub enum ValidationError {
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("participant {participant} answered round {round} of question {question} {count} times")]
    DuplicateAnswer { participant: String, question: u32, round: u32, count: usize },
    #[error("participant {participant} has no round-{round} answer for question {question}")]
    MissingAnswer { participant: String, question: u32, round: u32 },
    #[error("regression for participant {participant} is degenerate (no variation in the regressor)")]
    DegenerateRegression { participant: String },
    #[error("true value is zero; error rate undefined")]
    ZeroTruth,
    #[error("no evaluation points matched")]
    NoPredictions,
    #[error("{n} samples are too few for a {confidence} median confidence interval")]
    TooFewSamples { n: usize, confidence: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseRow {
    pub experiment_id: String,
    pub participant_id: String,
    pub question: u32,
    pub round: u32,
    pub answer: f64,
    pub truth: f64,
    pub game: String,
}

pub fn read_rows_csv<R: io::Read>(reader: R) -> Result<Vec<ResponseRow>, ValidationError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut rows = Vec::new();
    for rec in rdr.deserialize() {
        rows.push(rec?);
    }
    Ok(rows)
}

pub fn write_rows_csv<W: io::Write>(writer: W, rows: &[ResponseRow]) -> Result<(), ValidationError> {
    let mut wtr = csv::Writer::from_writer(writer);
    for row in rows {
        wtr.serialize(row)?;
    }
    wtr.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Hypothesis {
    /// Group median of the previous round, ties broken toward own previous answer.
    H1,
    /// Group mean of the previous round.
    H2,
    /// Median pulled toward own previous answer: (1-g) med + g x_prev.
    H3,
    /// Mean pulled toward own previous answer.
    H4,
    /// Median pulled toward own first-round answer.
    H5,
    /// Mean pulled toward own first-round answer.
    H6,
}

impl Hypothesis {
    pub const ALL: [Hypothesis; 6] =
        [Self::H1, Self::H2, Self::H3, Self::H4, Self::H5, Self::H6];

    pub fn parse(id: &str) -> Option<Self> {
        Some(match id.to_ascii_lowercase().as_str() {
            "h1" => Self::H1,
            "h2" => Self::H2,
            "h3" => Self::H3,
            "h4" => Self::H4,
            "h5" => Self::H5,
            "h6" => Self::H6,
            _ => return None,
        })
    }

    pub fn has_parameter(self) -> bool {
        !matches!(self, Self::H1 | Self::H2)
    }

    fn uses_median(self) -> bool {
        matches!(self, Self::H1 | Self::H3 | Self::H5)
    }

    /// Anchor the parameter pulls toward: own previous (inertia) or own
    /// first-round answer (prejudice).
    fn anchor(self, own_prev: f64, own_first: f64) -> f64 {
        match self {
            Self::H3 | Self::H4 => own_prev,
            Self::H5 | Self::H6 => own_first,
            _ => own_prev,
        }
    }
}

fn group_median(values: &[f64], own: f64) -> f64 {
    let w = vec![1.0 / values.len() as f64; values.len()];
    median_result(values, &w, own).expect("uniform weights on nonempty data").value
}

fn group_mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Model answer for one participant at one round, given the whole group's
/// previous-round answers.
pub fn predict(
    h: Hypothesis,
    param: f64,
    group_prev: &[f64],
    own_prev: f64,
    own_first: f64,
) -> f64 {
    let base = if h.uses_median() {
        group_median(group_prev, own_prev)
    } else {
        group_mean(group_prev)
    };
    if h.has_parameter() {
        let anchor = h.anchor(own_prev, own_first);
        (1.0 - param) * base + param * anchor
    } else {
        base
    }
}

/// One prediction instance: a participant's actual answer at round `r`
/// together with everything the predictors may use.
#[derive(Debug, Clone)]
pub struct PredictionPoint {
    pub participant_id: String,
    pub question: u32,
    pub round: u32,
    pub actual: f64,
    pub truth: f64,
    pub group_prev: Vec<f64>,
    pub own_prev: f64,
    pub own_first: f64,
}

/// Explodes rows into prediction points (rounds >= 2), sorted by
/// (participant, question, round).
pub fn prediction_points(rows: &[ResponseRow]) -> Result<Vec<PredictionPoint>, ValidationError> {
    // (experiment, question) -> round -> participant -> answer
    type RoundMap = BTreeMap<u32, BTreeMap<String, f64>>;
    let mut groups: BTreeMap<(String, u32), (RoundMap, f64)> = BTreeMap::new();
    for row in rows {
        let entry = groups
            .entry((row.experiment_id.clone(), row.question))
            .or_insert_with(|| (BTreeMap::new(), row.truth));
        let by_participant = entry.0.entry(row.round).or_default();
        if by_participant.insert(row.participant_id.clone(), row.answer).is_some() {
            return Err(ValidationError::DuplicateAnswer {
                participant: row.participant_id.clone(),
                question: row.question,
                round: row.round,
                count: 2,
            });
        }
    }
    let mut points = Vec::new();
    for ((_, question), (rounds, truth)) in &groups {
        let round_ids: Vec<u32> = rounds.keys().copied().collect();
        let first_round = &rounds[&round_ids[0]];
        for w in round_ids.windows(2) {
            let (prev_r, cur_r) = (w[0], w[1]);
            let prev = &rounds[&prev_r];
            let group_prev: Vec<f64> = prev.values().copied().collect();
            for (pid, &actual) in &rounds[&cur_r] {
                let own_prev = *prev.get(pid).ok_or_else(|| ValidationError::MissingAnswer {
                    participant: pid.clone(),
                    question: *question,
                    round: prev_r,
                })?;
                let own_first =
                    *first_round.get(pid).ok_or_else(|| ValidationError::MissingAnswer {
                        participant: pid.clone(),
                        question: *question,
                        round: round_ids[0],
                    })?;
                points.push(PredictionPoint {
                    participant_id: pid.clone(),
                    question: *question,
                    round: cur_r,
                    actual,
                    truth: *truth,
                    group_prev: group_prev.clone(),
                    own_prev,
                    own_first,
                });
            }
        }
    }
    points.sort_by(|a, b| {
        (&a.participant_id, a.question, a.round).cmp(&(&b.participant_id, b.question, b.round))
    });
    Ok(points)
}

/// Per-participant scalar least squares for H3-H6 on the training
/// questions. The model is linear in the parameter:
/// pred = base + g (anchor - base), so g* = <a-base, anchor-base> / |anchor-base|^2,
/// clamped to [0, 1]. H1/H2 take no parameter and fit to 0.
pub fn fit_parameters(
    points: &[PredictionPoint],
    h: Hypothesis,
    train: impl Fn(u32) -> bool,
) -> Result<BTreeMap<String, f64>, ValidationError> {
    let mut acc: BTreeMap<String, (f64, f64)> = BTreeMap::new();
    for p in points.iter().filter(|p| train(p.question)) {
        let base = if h.uses_median() {
            group_median(&p.group_prev, p.own_prev)
        } else {
            group_mean(&p.group_prev)
        };
        let dx = h.anchor(p.own_prev, p.own_first) - base;
        let dy = p.actual - base;
        let e = acc.entry(p.participant_id.clone()).or_insert((0.0, 0.0));
        e.0 += dx * dy;
        e.1 += dx * dx;
    }
    acc.into_iter()
        .map(|(pid, (num, den))| {
            if !h.has_parameter() {
                return Ok((pid, 0.0));
            }
            if den <= 0.0 {
                return Err(ValidationError::DegenerateRegression { participant: pid });
            }
            Ok((pid, (num / den).clamp(0.0, 1.0)))
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorMetrics {
    pub n: usize,
    /// |pred - actual| / truth, one per evaluation point.
    pub error_rates: Vec<f64>,
    pub mean_error_rate: f64,
    pub median_error_rate: f64,
    pub mean_absolute_error: f64,
    pub median_absolute_error: f64,
}

fn median_of(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Evaluates a fitted hypothesis on the evaluation questions. Participants
/// absent from `params` fall back to parameter 0.
pub fn evaluate(
    points: &[PredictionPoint],
    h: Hypothesis,
    params: &BTreeMap<String, f64>,
    eval: impl Fn(u32) -> bool,
) -> Result<ErrorMetrics, ValidationError> {
    let mut rates = Vec::new();
    let mut abs_errors = Vec::new();
    for p in points.iter().filter(|p| eval(p.question)) {
        if p.truth == 0.0 {
            return Err(ValidationError::ZeroTruth);
        }
        let g = params.get(&p.participant_id).copied().unwrap_or(0.0);
        let pred = predict(h, g, &p.group_prev, p.own_prev, p.own_first);
        abs_errors.push((pred - p.actual).abs());
        rates.push((pred - p.actual).abs() / p.truth.abs());
    }
    if rates.is_empty() {
        return Err(ValidationError::NoPredictions);
    }
    let mut sorted_rates = rates.clone();
    sorted_rates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut sorted_abs = abs_errors.clone();
    sorted_abs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(ErrorMetrics {
        n: rates.len(),
        mean_error_rate: rates.iter().sum::<f64>() / rates.len() as f64,
        median_error_rate: median_of(&sorted_rates),
        mean_absolute_error: abs_errors.iter().sum::<f64>() / abs_errors.len() as f64,
        median_absolute_error: median_of(&sorted_abs),
        error_rates: rates,
    })
}

/// Distribution-free confidence interval for the population median from the
/// sign-test order statistics: the tightest symmetric pair (x_(k), x_(n+1-k))
/// whose binomial coverage reaches `confidence`.
pub fn median_confidence_interval(
    samples: &[f64],
    confidence: f64,
) -> Result<(f64, f64), ValidationError> {
    let n = samples.len();
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // coverage of (x_(k), x_(n+1-k)) is 1 - 2 P(X <= k-1), X ~ Binomial(n, 1/2)
    let half_pow = 0.5f64.powi(n as i32);
    let mut best_k = None;
    let mut cdf = 0.0; // P(X <= k-1)
    for k in 1..=(n / 2) {
        cdf += half_pow * binom(n, k - 1);
        if 1.0 - 2.0 * cdf >= confidence {
            best_k = Some(k);
        }
    }
    match best_k {
        Some(k) => Ok((sorted[k - 1], sorted[n - k])),
        None => Err(ValidationError::TooFewSamples { n, confidence }),
    }
}

fn binom(n: usize, k: usize) -> f64 {
    let mut v = 1.0;
    for i in 0..k {
        v *= (n - i) as f64 / (i + 1) as f64;
    }
    v
}

// --- synthetic processes for end-to-end checks ---

use rand::Rng;

use crate::seed::rng_from;

fn synth_rounds(
    participants: usize,
    questions: u32,
    rounds: u32,
    seed: u64,
    step: impl Fn(&[f64], usize) -> f64,
) -> Vec<ResponseRow> {
    let mut rng = rng_from(seed);
    let mut rows = Vec::new();
    for q in 1..=questions {
        let truth = rng.gen_range(50.0..150.0);
        let mut answers: Vec<f64> =
            (0..participants).map(|_| truth * rng.gen_range(0.5..1.5)).collect();
        for r in 1..=rounds {
            for (p, &a) in answers.iter().enumerate() {
                rows.push(ResponseRow {
                    experiment_id: "synthetic".into(),
                    participant_id: format!("p{p:02}"),
                    question: q,
                    round: r,
                    answer: a,
                    truth,
                    game: "estimation".into(),
                });
            }
            answers = (0..participants).map(|p| step(&answers, p)).collect();
        }
    }
    rows
}

/// Every participant reports the exact group median with own-answer
/// tie-breaking; H1 fits this with zero error.
pub fn synth_median_process(
    participants: usize,
    questions: u32,
    rounds: u32,
    seed: u64,
) -> Vec<ResponseRow> {
    synth_rounds(participants, questions, rounds, seed, |prev, p| {
        group_median(prev, prev[p])
    })
}

/// Every participant reports the exact group mean; H2 fits with zero error.
pub fn synth_mean_process(
    participants: usize,
    questions: u32,
    rounds: u32,
    seed: u64,
) -> Vec<ResponseRow> {
    synth_rounds(participants, questions, rounds, seed, |prev, _| group_mean(prev))
}

/// Each participant mixes the group median with their own previous answer
/// at a fixed weight `gamma`; H3 recovers `gamma` exactly.
pub fn synth_h3_process(
    participants: usize,
    questions: u32,
    rounds: u32,
    gamma: f64,
    seed: u64,
) -> Vec<ResponseRow> {
    synth_rounds(participants, questions, rounds, seed, move |prev, p| {
        (1.0 - gamma) * group_median(prev, prev[p]) + gamma * prev[p]
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_metrics(rows: &[ResponseRow], h: Hypothesis) {
        let points = prediction_points(rows).unwrap();
        let params = fit_parameters(&points, h, |q| q <= 20).unwrap_or_default();
        let m = evaluate(&points, h, &params, |q| q > 20).unwrap();
        assert!(m.mean_error_rate < 1e-12, "{h:?}: {}", m.mean_error_rate);
        assert!(m.mean_absolute_error < 1e-9);
    }

    #[test]
    fn median_process_fits_h1_exactly() {
        zero_metrics(&synth_median_process(7, 30, 4, 9), Hypothesis::H1);
    }

    #[test]
    fn mean_process_fits_h2_exactly() {
        zero_metrics(&synth_mean_process(7, 30, 4, 10), Hypothesis::H2);
    }

    #[test]
    fn h3_recovers_gamma() {
        let rows = synth_h3_process(7, 30, 4, 0.35, 11);
        let points = prediction_points(&rows).unwrap();
        let params = fit_parameters(&points, Hypothesis::H3, |q| q <= 20).unwrap();
        for g in params.values() {
            assert!((g - 0.35).abs() < 1e-9);
        }
        let m = evaluate(&points, Hypothesis::H3, &params, |q| q > 20).unwrap();
        assert!(m.mean_error_rate < 1e-12);
    }

    #[test]
    fn h3_with_zero_gamma_matches_h1() {
        let rows = synth_mean_process(5, 6, 3, 12);
        let points = prediction_points(&rows).unwrap();
        for p in &points {
            let a = predict(Hypothesis::H1, 0.0, &p.group_prev, p.own_prev, p.own_first);
            let b = predict(Hypothesis::H3, 0.0, &p.group_prev, p.own_prev, p.own_first);
            assert_eq!(a, b);
            let c = predict(Hypothesis::H2, 0.0, &p.group_prev, p.own_prev, p.own_first);
            let d = predict(Hypothesis::H4, 0.0, &p.group_prev, p.own_prev, p.own_first);
            assert_eq!(c, d);
        }
    }

    #[test]
    fn h1_beats_h2_on_median_process() {
        let rows = synth_median_process(9, 30, 5, 13);
        let points = prediction_points(&rows).unwrap();
        let none = BTreeMap::new();
        let m1 = evaluate(&points, Hypothesis::H1, &none, |q| q > 20).unwrap();
        let m2 = evaluate(&points, Hypothesis::H2, &none, |q| q > 20).unwrap();
        assert!(m1.mean_error_rate < m2.mean_error_rate);
    }

    #[test]
    fn csv_round_trip() {
        let rows = synth_median_process(3, 2, 2, 14);
        let mut buf = Vec::new();
        write_rows_csv(&mut buf, &rows).unwrap();
        let header = String::from_utf8_lossy(&buf);
        assert!(header.starts_with("experiment_id,participant_id,question,round,answer,truth,game"));
        let back = read_rows_csv(buf.as_slice()).unwrap();
        assert_eq!(rows, back);
    }

    #[test]
    fn duplicate_answer_detected() {
        let mut rows = synth_median_process(3, 1, 2, 15);
        rows.push(rows[0].clone());
        assert!(matches!(
            prediction_points(&rows),
            Err(ValidationError::DuplicateAnswer { .. })
        ));
    }

    #[test]
    fn degenerate_regression_detected() {
        // constant data: anchor equals base everywhere, no variation
        let mut rows = Vec::new();
        for r in 1..=3 {
            for p in 0..3 {
                rows.push(ResponseRow {
                    experiment_id: "e".into(),
                    participant_id: format!("p{p}"),
                    question: 1,
                    round: r,
                    answer: 5.0,
                    truth: 5.0,
                    game: "g".into(),
                });
            }
        }
        let points = prediction_points(&rows).unwrap();
        assert!(matches!(
            fit_parameters(&points, Hypothesis::H3, |_| true),
            Err(ValidationError::DegenerateRegression { .. })
        ));
    }

    #[test]
    fn zero_truth_detected() {
        let mut rows = synth_median_process(3, 1, 2, 16);
        for r in &mut rows {
            r.truth = 0.0;
        }
        let points = prediction_points(&rows).unwrap();
        assert!(matches!(
            evaluate(&points, Hypothesis::H1, &BTreeMap::new(), |_| true),
            Err(ValidationError::ZeroTruth)
        ));
    }

    #[test]
    fn median_ci_order_statistics() {
        // n = 6 at 95%: coverage of (x_(1), x_(6)) is 1 - 2/64 = 0.96875
        let s: Vec<f64> = (1..=6).map(|v| v as f64).collect();
        assert_eq!(median_confidence_interval(&s, 0.95).unwrap(), (1.0, 6.0));
        assert!(matches!(
            median_confidence_interval(&s[..5], 0.95),
            Err(ValidationError::TooFewSamples { n: 5, .. })
        ));
        // n = 20 at 95%: k = 6 gives coverage 0.9586
        let t: Vec<f64> = (1..=20).map(|v| v as f64).collect();
        assert_eq!(median_confidence_interval(&t, 0.95).unwrap(), (6.0, 15.0));
    }
}
