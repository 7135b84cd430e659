use serde::{Deserialize, Serialize};

use safebai::bai::{RunRecord, RunStatus};
use safebai::instance::{best_safe_arm, Action, Instance};

/// Summary of one configuration's replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub fingerprint: String,
    pub parameter: String,
    /// NaN when the row is not part of a sweep.
    pub value: f64,
    pub replications: usize,
    pub mean_tau: f64,
    pub std_tau: f64,
    pub min_tau: f64,
    pub max_tau: f64,
    pub mean_unsafe_fraction: f64,
    pub std_unsafe_fraction: f64,
    pub min_unsafe_fraction: f64,
    pub max_unsafe_fraction: f64,
    pub correct_exact_rate: f64,
    pub correct_epsilon_rate: f64,
    pub truncated: usize,
    /// Per arm, at stop.
    pub mean_gamma_bar: Vec<f64>,
    pub min_gamma_bar: Vec<f64>,
    pub max_gamma_bar: Vec<f64>,
}

pub const AGGREGATE_HEADER: [&str; 18] = [
    "fingerprint",
    "parameter",
    "value",
    "replications",
    "mean_tau",
    "std_tau",
    "min_tau",
    "max_tau",
    "mean_unsafe_fraction",
    "std_unsafe_fraction",
    "min_unsafe_fraction",
    "max_unsafe_fraction",
    "correct_exact_rate",
    "correct_epsilon_rate",
    "truncated",
    "mean_gamma_bar",
    "min_gamma_bar",
    "max_gamma_bar",
];

/// Mean and sample standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn min_max(xs: &[f64]) -> (f64, f64) {
    xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(*x), hi.max(*x)))
}

/// Whether the recommendation is within `epsilon` of the best action in the
/// run's final certified safe set `{γ̄_k x_k}`.
pub fn epsilon_correct(record: &RunRecord, inst: &Instance, epsilon: f64) -> bool {
    let best = (0..inst.num_arms())
        .map(|k| inst.expected_reward(Action::new(k, record.gamma_bar_final[k])))
        .fold(f64::NEG_INFINITY, f64::max);
    best - inst.expected_reward(record.recommended) <= epsilon
}

/// Folds `records` in index order.
pub fn aggregate(
    records: &[RunRecord],
    inst: &Instance,
    epsilon: f64,
    fingerprint: String,
    parameter: &str,
    value: f64,
) -> AggregateRow {
    let taus: Vec<f64> = records.iter().map(|r| r.tau as f64).collect();
    let unsafe_: Vec<f64> = records.iter().map(|r| r.unsafe_fraction).collect();
    let (mean_tau, std_tau) = mean_std(&taus);
    let (min_tau, max_tau) = min_max(&taus);
    let (mean_u, std_u) = mean_std(&unsafe_);
    let (best, _, _) = best_safe_arm(inst);
    let n = records.len() as f64;
    let exact = records.iter().filter(|r| r.recommended.arm == best).count() as f64 / n;
    let eps_ok = records.iter().filter(|r| epsilon_correct(r, inst, epsilon)).count() as f64 / n;
    let k = inst.num_arms();
    let per_arm: Vec<Vec<f64>> = (0..k).map(|a| records.iter().map(|r| r.gamma_bar_final[a]).collect()).collect();
    AggregateRow {
        fingerprint,
        parameter: parameter.to_string(),
        value,
        replications: records.len(),
        mean_tau,
        std_tau,
        min_tau,
        max_tau,
        mean_unsafe_fraction: mean_u,
        std_unsafe_fraction: std_u,
        min_unsafe_fraction: min_max(&unsafe_).0,
        max_unsafe_fraction: min_max(&unsafe_).1,
        correct_exact_rate: exact,
        correct_epsilon_rate: eps_ok,
        truncated: records.iter().filter(|r| r.status == RunStatus::Truncated).count(),
        mean_gamma_bar: per_arm.iter().map(|v| mean_std(v).0).collect(),
        min_gamma_bar: per_arm.iter().map(|v| min_max(v).0).collect(),
        max_gamma_bar: per_arm.iter().map(|v| min_max(v).1).collect(),
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

impl AggregateRow {
    /// CSV fields in [`AGGREGATE_HEADER`] order; per-arm lists are `;`-joined.
    pub fn fields(&self) -> Vec<String> {
        vec![
            self.fingerprint.clone(),
            self.parameter.clone(),
            if self.value.is_nan() { String::new() } else { self.value.to_string() },
            self.replications.to_string(),
            self.mean_tau.to_string(),
            self.std_tau.to_string(),
            self.min_tau.to_string(),
            self.max_tau.to_string(),
            self.mean_unsafe_fraction.to_string(),
            self.std_unsafe_fraction.to_string(),
            self.min_unsafe_fraction.to_string(),
            self.max_unsafe_fraction.to_string(),
            self.correct_exact_rate.to_string(),
            self.correct_epsilon_rate.to_string(),
            self.truncated.to_string(),
            join(&self.mean_gamma_bar),
            join(&self.min_gamma_bar),
            join(&self.max_gamma_bar),
        ]
    }
}
