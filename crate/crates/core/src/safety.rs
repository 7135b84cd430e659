//! Safety coefficients from the safety channel, and forced exploration.
//!
//! The pessimistic coefficient of arm `k` is the largest `γ ∈ [0, 1]` such
//! that `γ · LCB_k ≥ η₀`, where `LCB_k = x_kᵀμ̂ − β ‖x_k‖_{W⁻¹}` is a lower
//! confidence bound on `x_kᵀμ⋆`. Pulling `γ̄_k x_k` is therefore safe whenever
//! `μ⋆` lies in the safety confidence set.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::estimation::EstimatorState;
use crate::instance::{coefficient_for_bound, Action, Environment, Observation};
use crate::linalg::{dot, scaled, PosDefState};

/// `1 − [1 − η₀ / bound]₊`, the bracket form of the coefficient. Agrees with
/// the case split of [`coefficient_from_bound`] for every negative bound.
pub fn gamma_bracket_form(bound: f64, eta0: f64) -> f64 {
    1.0 - (1.0 - eta0 / bound).max(0.0)
}

/// Largest `γ ∈ [0, 1]` with `γ · bound ≥ η₀`.
pub fn coefficient_from_bound(bound: f64, eta0: f64) -> f64 {
    coefficient_for_bound(bound, eta0)
}

fn confidence_bound(
    mu_hat: &[f64],
    width_design: &PosDefState,
    beta: f64,
    arm: &[f64],
    sign: f64,
) -> Result<f64> {
    Ok(dot(arm, mu_hat) + sign * beta * width_design.mahalanobis_inv(arm)?)
}

/// Pessimistic coefficient from the lower confidence bound on `xᵀμ⋆`.
pub fn pessimistic_gamma(est: &EstimatorState, arm: &[f64], eta0: f64, delta_s_prime: f64) -> Result<f64> {
    let beta = est.safety_beta(delta_s_prime)?.value;
    let lcb = confidence_bound(&est.mu_hat(), est.safety_width_design(), beta, arm, -1.0)?;
    Ok(coefficient_for_bound(lcb, eta0))
}

/// Optimistic coefficient from the upper confidence bound on `xᵀμ⋆`.
pub fn optimistic_gamma(est: &EstimatorState, arm: &[f64], eta0: f64, delta_s_prime: f64) -> Result<f64> {
    let beta = est.safety_beta(delta_s_prime)?.value;
    let ucb = confidence_bound(&est.mu_hat(), est.safety_width_design(), beta, arm, 1.0)?;
    Ok(coefficient_for_bound(ucb, eta0))
}

/// Per-arm pessimistic and optimistic coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SafetyProfile {
    pub gamma_bar: Vec<f64>,
    pub gamma_opt: Vec<f64>,
    pub frozen: bool,
    pub delta_s_prime: f64,
}

impl SafetyProfile {
    /// Every arm at full scale (the unconstrained baseline).
    pub fn unconstrained(num_arms: usize) -> Self {
        Self {
            gamma_bar: vec![1.0; num_arms],
            gamma_opt: vec![1.0; num_arms],
            frozen: true,
            delta_s_prime: 1.0,
        }
    }

    /// Profile from explicit estimates: `mu_hat`, the width matrix and the
    /// radius `beta`. Coefficients never drop below `floor`, the level known
    /// to be safe a priori.
    #[allow(clippy::too_many_arguments)]
    pub fn from_estimates(
        mu_hat: &[f64],
        width_design: &PosDefState,
        beta: f64,
        arms: &[Vec<f64>],
        eta0: f64,
        delta_s_prime: f64,
        dynamic: bool,
        floor: f64,
    ) -> Result<Self> {
        if !(eta0 < 0.0) {
            return invalid("eta0 must be negative");
        }
        let mut gamma_bar = Vec::with_capacity(arms.len());
        let mut gamma_opt = Vec::with_capacity(arms.len());
        for arm in arms {
            let lcb = confidence_bound(mu_hat, width_design, beta, arm, -1.0)?;
            let ucb = confidence_bound(mu_hat, width_design, beta, arm, 1.0)?;
            let pes = coefficient_for_bound(lcb, eta0).max(floor);
            let opt = coefficient_for_bound(ucb, eta0).max(pes);
            gamma_bar.push(pes);
            gamma_opt.push(opt);
        }
        Ok(Self {
            gamma_bar,
            gamma_opt,
            frozen: !dynamic,
            delta_s_prime,
        })
    }

    /// Conservative safe action set `{γ̄_k x_k}`.
    pub fn pessimistic_arms(&self, arms: &[Vec<f64>]) -> Vec<Vec<f64>> {
        arms.iter().zip(&self.gamma_bar).map(|(a, g)| scaled(a, *g)).collect()
    }

    /// Optimistic action set `{γ_k^opt x_k}`.
    pub fn optimistic_arms(&self, arms: &[Vec<f64>]) -> Vec<Vec<f64>> {
        arms.iter().zip(&self.gamma_opt).map(|(a, g)| scaled(a, *g)).collect()
    }

    pub fn approx_eq(&self, other: &SafetyProfile, tol: f64) -> bool {
        let close = |a: &[f64], b: &[f64]| a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol);
        close(&self.gamma_bar, &other.gamma_bar) && close(&self.gamma_opt, &other.gamma_opt)
    }
}

/// Evaluates the pessimistic and optimistic coefficients of every arm.
pub fn build_profile(
    est: &EstimatorState,
    arms: &[Vec<f64>],
    eta0: f64,
    delta_s_prime: f64,
    dynamic: bool,
    floor: f64,
) -> Result<SafetyProfile> {
    let beta = est.safety_beta(delta_s_prime)?.value;
    SafetyProfile::from_estimates(
        &est.mu_hat(),
        est.safety_width_design(),
        beta,
        arms,
        eta0,
        delta_s_prime,
        dynamic,
        floor,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Sampler {
    #[default]
    Uniform,
    RoundRobin,
}

/// One forced-exploration pull.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExplorationPull {
    pub action: Action,
    pub observation: Observation,
}

/// Pulls `γ_init x_k(t)` for `t_fe` rounds, feeding both responses to the
/// estimator.
pub fn forced_exploration<R: Rng>(
    env: &mut Environment,
    est: &mut EstimatorState,
    rng: &mut R,
    t_fe: usize,
    gamma_init: f64,
    sampler: Sampler,
) -> Result<Vec<ExplorationPull>> {
    if !(gamma_init > 0.0 && gamma_init <= 1.0) {
        return invalid(format!("gamma_init must lie in (0, 1], got {gamma_init}"));
    }
    let k = env.instance().num_arms();
    let mut pulls = Vec::with_capacity(t_fe);
    for t in 0..t_fe {
        let arm = match sampler {
            Sampler::Uniform => rng.random_range(0..k),
            Sampler::RoundRobin => t % k,
        };
        pulls.push(explore_once(env, est, arm, gamma_init)?);
    }
    Ok(pulls)
}

/// Forced exploration that stops early once every pessimistic coefficient
/// moves by less than `tol` between consecutive rounds (checked after at
/// least one pass over the arms), or after `max_rounds`.
#[allow(clippy::too_many_arguments)]
pub fn forced_exploration_adaptive<R: Rng>(
    env: &mut Environment,
    est: &mut EstimatorState,
    rng: &mut R,
    max_rounds: usize,
    gamma_init: f64,
    sampler: Sampler,
    delta_s_prime: f64,
    tol: f64,
) -> Result<Vec<ExplorationPull>> {
    let instance = env.instance().clone();
    let k = instance.num_arms();
    let profile_of = |est: &EstimatorState| {
        build_profile(est, instance.arms(), instance.eta0(), delta_s_prime, false, 0.0)
    };
    let mut prev = profile_of(est)?;
    let mut pulls = Vec::new();
    for t in 0..max_rounds {
        let arm = match sampler {
            Sampler::Uniform => rng.random_range(0..k),
            Sampler::RoundRobin => t % k,
        };
        pulls.push(explore_once(env, est, arm, gamma_init)?);
        let next = profile_of(est)?;
        let moved = prev
            .gamma_bar
            .iter()
            .zip(&next.gamma_bar)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        prev = next;
        if t + 1 >= k && moved < tol {
            break;
        }
    }
    Ok(pulls)
}

fn explore_once(
    env: &mut Environment,
    est: &mut EstimatorState,
    arm: usize,
    gamma: f64,
) -> Result<ExplorationPull> {
    let action = Action::new(arm, gamma);
    let observation = env.step(action)?;
    let x = env.instance().action_vector(action);
    est.update(&x, observation.reward, Some(observation.safety))?;
    Ok(ExplorationPull { action, observation })
}
