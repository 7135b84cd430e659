//! Problem instances and the stochastic environment.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::{dot, norm, scaled};

/// Ground truth of a safe linear bandit problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    arms: Vec<Vec<f64>>,
    theta_star: Vec<f64>,
    mu_star: Vec<f64>,
    eta0: f64,
    gamma_lb: f64,
    arm_norm_bound: f64,
    theta_norm_bound: f64,
    mu_norm_bound: f64,
}

impl Instance {
    /// Validates and builds an instance. The norm bounds are taken as the
    /// tight values `max_k ‖x_k‖`, `‖θ⋆‖` and `‖μ⋆‖`.
    pub fn new(
        arms: Vec<Vec<f64>>,
        theta_star: Vec<f64>,
        mu_star: Vec<f64>,
        eta0: f64,
        gamma_lb: f64,
    ) -> Result<Self> {
        if arms.len() < 2 {
            return invalid(format!("need at least 2 arms, got {}", arms.len()));
        }
        let d = theta_star.len();
        if d == 0 {
            return invalid("dimension must be >= 1");
        }
        if mu_star.len() != d || arms.iter().any(|a| a.len() != d) {
            return invalid("arms, theta_star and mu_star must share one dimension");
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !finite(&theta_star) || !finite(&mu_star) || arms.iter().any(|a| !finite(a)) {
            return invalid("instance entries must be finite");
        }
        if !(eta0 < 0.0) {
            return invalid(format!("eta0 must be negative, got {eta0}"));
        }
        if !(gamma_lb > 0.0 && gamma_lb <= 1.0) {
            return invalid(format!("gamma_lb must lie in (0, 1], got {gamma_lb}"));
        }
        for (k, arm) in arms.iter().enumerate() {
            if gamma_lb * dot(arm, &mu_star) < eta0 {
                return invalid(format!("declared safe level {gamma_lb} is unsafe for arm {k}"));
            }
        }
        let arm_norm_bound = arms.iter().map(|a| norm(a)).fold(0.0, f64::max);
        let theta_norm_bound = norm(&theta_star);
        let mu_norm_bound = norm(&mu_star);
        Ok(Self {
            arms,
            theta_star,
            mu_star,
            eta0,
            gamma_lb,
            arm_norm_bound,
            theta_norm_bound,
            mu_norm_bound,
        })
    }

    pub fn arms(&self) -> &[Vec<f64>] {
        &self.arms
    }

    pub fn arm(&self, k: usize) -> &[f64] {
        &self.arms[k]
    }

    pub fn num_arms(&self) -> usize {
        self.arms.len()
    }

    pub fn dim(&self) -> usize {
        self.theta_star.len()
    }

    pub fn theta_star(&self) -> &[f64] {
        &self.theta_star
    }

    pub fn mu_star(&self) -> &[f64] {
        &self.mu_star
    }

    pub fn eta0(&self) -> f64 {
        self.eta0
    }

    pub fn gamma_lb(&self) -> f64 {
        self.gamma_lb
    }

    /// `L = max_k ‖x_k‖`
    pub fn arm_norm_bound(&self) -> f64 {
        self.arm_norm_bound
    }

    /// `D ≥ ‖θ⋆‖`
    pub fn theta_norm_bound(&self) -> f64 {
        self.theta_norm_bound
    }

    /// Bound on `‖μ⋆‖`, used by the safety-channel radius.
    pub fn mu_norm_bound(&self) -> f64 {
        self.mu_norm_bound
    }

    /// Overrides the norm bounds (e.g. to use loose prior knowledge).
    pub fn with_bounds(mut self, arm_norm: f64, theta_norm: f64, mu_norm: f64) -> Result<Self> {
        if arm_norm < self.arm_norm_bound - 1e-12
            || theta_norm < self.theta_norm_bound - 1e-12
            || mu_norm < self.mu_norm_bound - 1e-12
        {
            return invalid("norm bounds must dominate the true norms");
        }
        self.arm_norm_bound = arm_norm;
        self.theta_norm_bound = theta_norm;
        self.mu_norm_bound = mu_norm;
        Ok(self)
    }

    /// Same instance with another safety threshold.
    pub fn with_eta0(&self, eta0: f64) -> Result<Self> {
        Self::new(
            self.arms.clone(),
            self.theta_star.clone(),
            self.mu_star.clone(),
            eta0,
            self.gamma_lb,
        )
    }

    /// `γ x_kᵀ θ⋆`
    pub fn expected_reward(&self, action: Action) -> f64 {
        action.coefficient * dot(self.arm(action.arm), &self.theta_star)
    }

    /// `γ x_kᵀ μ⋆`
    pub fn expected_safety(&self, action: Action) -> f64 {
        action.coefficient * dot(self.arm(action.arm), &self.mu_star)
    }

    pub fn is_violation(&self, action: Action) -> bool {
        self.expected_safety(action) < self.eta0
    }

    /// Largest safe coefficient of every arm under the true safety parameter.
    pub fn max_safe_coefficients(&self) -> Vec<f64> {
        self.arms
            .iter()
            .map(|a| max_safe_coefficient(a, &self.mu_star, self.eta0))
            .collect()
    }

    /// Scaled vector `γ x_k`.
    pub fn action_vector(&self, action: Action) -> Vec<f64> {
        scaled(self.arm(action.arm), action.coefficient)
    }
}

/// Perturbed canonical-basis instance: `e_1 … e_d` plus
/// `(cos ω, sin ω, 0, …)`, `θ⋆ = 2 e_1`, `μ⋆ = −e_2`.
pub fn hard_instance(d: usize, omega: f64, eta0: f64, gamma_lb: f64) -> Result<Instance> {
    if d < 2 {
        return invalid(format!("hard instance needs d >= 2, got {d}"));
    }
    if !(0.0..std::f64::consts::FRAC_PI_2).contains(&omega) {
        return invalid(format!("omega must lie in [0, pi/2), got {omega}"));
    }
    let mut arms: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            let mut e = vec![0.0; d];
            e[i] = 1.0;
            e
        })
        .collect();
    let mut last = vec![0.0; d];
    last[0] = omega.cos();
    last[1] = omega.sin();
    arms.push(last);
    let mut theta = vec![0.0; d];
    theta[0] = 2.0;
    let mut mu = vec![0.0; d];
    mu[1] = -1.0;
    Instance::new(arms, theta, mu, eta0, gamma_lb)
}

/// Largest `γ ∈ [0, 1]` with `γ xᵀμ ≥ η₀`.
pub fn max_safe_coefficient(x: &[f64], mu: &[f64], eta0: f64) -> f64 {
    coefficient_for_bound(dot(x, mu), eta0)
}

/// Largest `γ ∈ [0, 1]` with `γ · bound ≥ η₀`, for `η₀ < 0`.
pub(crate) fn coefficient_for_bound(bound: f64, eta0: f64) -> f64 {
    if bound >= eta0 {
        1.0
    } else {
        (eta0 / bound).clamp(0.0, 1.0)
    }
}

/// `(arm_index, coefficient, value)` of the best safe action; ties go to the
/// lowest index.
pub fn best_safe_arm(instance: &Instance) -> (usize, f64, f64) {
    let mut best = (0, 0.0, f64::NEG_INFINITY);
    for (k, gamma) in instance.max_safe_coefficients().into_iter().enumerate() {
        let value = gamma * dot(instance.arm(k), instance.theta_star());
        if value > best.2 {
            best = (k, gamma, value);
        }
    }
    best
}

/// A (possibly partial) pull `γ x_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub arm: usize,
    pub coefficient: f64,
}

impl Action {
    pub fn new(arm: usize, coefficient: f64) -> Self {
        Self { arm, coefficient }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub reward: f64,
    pub safety: f64,
    /// Ground-truth safety violation of the action (never shown to learners).
    pub violated: bool,
}

/// Deterministic generator for replication `index` under `master_seed`.
///
/// Every replication gets two independent ChaCha streams: one for the
/// environment noise and one for the learner's own randomization.
pub fn substream(master_seed: u64, index: u64, channel: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index.wrapping_mul(2).wrapping_add(channel & 1));
    rng
}

/// Noisy environment answering action queries.
#[derive(Debug, Clone)]
pub struct Environment {
    instance: Instance,
    sigma_r: f64,
    sigma_s: f64,
    rng: ChaCha8Rng,
}

impl Environment {
    pub fn new(instance: Instance, sigma_r: f64, sigma_s: f64, rng: ChaCha8Rng) -> Result<Self> {
        if !(sigma_r >= 0.0 && sigma_s >= 0.0) {
            return invalid("noise levels must be nonnegative");
        }
        Ok(Self {
            instance,
            sigma_r,
            sigma_s,
            rng,
        })
    }

    pub fn seeded(instance: Instance, sigma_r: f64, sigma_s: f64, seed: u64) -> Result<Self> {
        Self::new(instance, sigma_r, sigma_s, ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn instance(&self) -> &Instance {
        &self.instance
    }

    pub fn sigma_r(&self) -> f64 {
        self.sigma_r
    }

    pub fn sigma_s(&self) -> f64 {
        self.sigma_s
    }

    /// Pulls `γ x_k`. Both noise channels are drawn on every call so the
    /// stream position only depends on the number of steps.
    pub fn step(&mut self, action: Action) -> Result<Observation> {
        if action.arm >= self.instance.num_arms() {
            return invalid(format!(
                "arm index {} out of range for {} arms",
                action.arm,
                self.instance.num_arms()
            ));
        }
        if !(0.0..=1.0).contains(&action.coefficient) {
            return invalid(format!("coefficient {} outside [0, 1]", action.coefficient));
        }
        let eps_r: f64 = self.rng.sample(StandardNormal);
        let eps_s: f64 = self.rng.sample(StandardNormal);
        Ok(Observation {
            reward: self.instance.expected_reward(action) + self.sigma_r * eps_r,
            safety: self.instance.expected_safety(action) + self.sigma_s * eps_s,
            violated: self.instance.is_violation(action),
        })
    }
}

/// JSON problem description: instance plus noise levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemFile {
    pub arms: Vec<Vec<f64>>,
    pub theta_star: Vec<f64>,
    pub mu_star: Vec<f64>,
    pub eta0: f64,
    pub gamma_lb: f64,
    pub sigma_r: f64,
    pub sigma_s: f64,
}

impl ProblemFile {
    pub fn from_instance(instance: &Instance, sigma_r: f64, sigma_s: f64) -> Self {
        Self {
            arms: instance.arms.clone(),
            theta_star: instance.theta_star.clone(),
            mu_star: instance.mu_star.clone(),
            eta0: instance.eta0,
            gamma_lb: instance.gamma_lb,
            sigma_r,
            sigma_s,
        }
    }

    pub fn instance(&self) -> Result<Instance> {
        Instance::new(
            self.arms.clone(),
            self.theta_star.clone(),
            self.mu_star.clone(),
            self.eta0,
            self.gamma_lb,
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem file serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| crate::Error::InvalidArgument(e.to_string()))
    }
}
