//! Regularized least squares for the reward and safety channels, and the
//! two confidence radii built on top of it.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::{axpy, sub, PosDefState};

/// Which design matrix measures the width of the safety confidence set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SafetyWidth {
    /// Matrix accumulated from pulls whose safety signal was observed.
    #[default]
    SafetyDesign,
    /// The shared design matrix, which keeps growing after forced
    /// exploration even when the safety signal is no longer observed.
    SharedDesign,
}

/// Constants entering the confidence radii.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub lambda: f64,
    /// Reward noise level `R`.
    pub noise_r: f64,
    /// Safety noise level.
    pub noise_s: f64,
    /// `D ≥ ‖θ⋆‖`
    pub theta_norm_bound: f64,
    /// Bound on `‖μ⋆‖`.
    pub mu_norm_bound: f64,
    /// `L ≥ max_k ‖x_k‖`
    pub arm_norm_bound: f64,
    /// Known safe level used during forced exploration.
    pub gamma_lb: f64,
    /// Use `R` and `D` for the safety radius instead of the safety-channel
    /// constants.
    pub safety_radius_uses_r: bool,
    pub safety_width: SafetyWidth,
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) {
            return invalid("lambda must be positive");
        }
        if !(self.noise_r >= 0.0 && self.noise_s >= 0.0) {
            return invalid("noise levels must be nonnegative");
        }
        if !(self.theta_norm_bound >= 0.0 && self.mu_norm_bound >= 0.0 && self.arm_norm_bound > 0.0) {
            return invalid("norm bounds must be nonnegative (L positive)");
        }
        if !(self.gamma_lb > 0.0 && self.gamma_lb <= 1.0) {
            return invalid("gamma_lb must lie in (0, 1]");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadiusKind {
    Simplified,
    Determinant,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceRadius {
    pub value: f64,
    pub delta: f64,
    pub kind: RadiusKind,
}

impl ConfidenceRadius {
    /// Radius with an explicit value, mostly for tests and what-if analysis.
    pub fn fixed(value: f64, delta: f64) -> Self {
        Self {
            value,
            delta,
            kind: RadiusKind::Determinant,
        }
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return invalid(format!("confidence level must lie in (0, 1), got {delta}"));
    }
    Ok(())
}

/// `noise √(d log((1 + t L² scale / λ) / δ)) + √λ D`
pub fn beta_value(
    noise: f64,
    dim: usize,
    t: f64,
    arm_norm: f64,
    lambda: f64,
    norm_bound: f64,
    delta: f64,
    scale: f64,
) -> f64 {
    let inner = (1.0 + t * arm_norm * arm_norm * scale / lambda) / delta;
    noise * (dim as f64 * inner.ln()).max(0.0).sqrt() + lambda.sqrt() * norm_bound
}

/// Ridge estimator state shared by the reward and safety channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorState {
    design: PosDefState,
    safety_design: PosDefState,
    b_reward: Vec<f64>,
    b_safety: Vec<f64>,
    t: usize,
    safety_obs: usize,
    config: EstimatorConfig,
}

impl EstimatorState {
    pub fn new(dim: usize, config: EstimatorConfig) -> Result<Self> {
        config.validate()?;
        let design = PosDefState::new(dim, config.lambda)?;
        Ok(Self {
            safety_design: design.clone(),
            design,
            b_reward: vec![0.0; dim],
            b_safety: vec![0.0; dim],
            t: 0,
            safety_obs: 0,
            config,
        })
    }

    pub fn dim(&self) -> usize {
        self.b_reward.len()
    }

    pub fn config(&self) -> &EstimatorConfig {
        &self.config
    }

    /// Regularized design matrix `λI + Σ x̂ x̂ᵀ` over every pull.
    pub fn design(&self) -> &PosDefState {
        &self.design
    }

    /// Regularized design matrix over pulls with an observed safety signal.
    pub fn safety_design(&self) -> &PosDefState {
        &self.safety_design
    }

    /// Matrix used for safety confidence widths.
    pub fn safety_width_design(&self) -> &PosDefState {
        match self.config.safety_width {
            SafetyWidth::SafetyDesign => &self.safety_design,
            SafetyWidth::SharedDesign => &self.design,
        }
    }

    pub fn rounds(&self) -> usize {
        self.t
    }

    pub fn safety_observations(&self) -> usize {
        self.safety_obs
    }

    pub fn b_reward(&self) -> &[f64] {
        &self.b_reward
    }

    pub fn b_safety(&self) -> &[f64] {
        &self.b_safety
    }

    /// Records one pull of the action vector `x̂`. The safety response only
    /// moves when a safety observation is supplied.
    pub fn update(&mut self, x: &[f64], reward: f64, safety: Option<f64>) -> Result<()> {
        if x.len() != self.dim() {
            return invalid(format!(
                "action dimension {} does not match estimator dimension {}",
                x.len(),
                self.dim()
            ));
        }
        self.design.rank1_update(x)?;
        axpy(&mut self.b_reward, reward, x);
        if let Some(s) = safety {
            self.safety_design.rank1_update(x)?;
            axpy(&mut self.b_safety, s, x);
            self.safety_obs += 1;
        }
        self.t += 1;
        Ok(())
    }

    pub fn theta_hat(&self) -> Vec<f64> {
        self.design.solve(&self.b_reward).expect("dimensions agree")
    }

    pub fn mu_hat(&self) -> Vec<f64> {
        self.safety_design.solve(&self.b_safety).expect("dimensions agree")
    }

    /// Reward-channel radius `R √(d log((1 + t L² scale/λ)/δ)) + √λ D`.
    pub fn beta_simplified(&self, delta: f64, scale: f64) -> Result<ConfidenceRadius> {
        check_delta(delta)?;
        if !(scale > 0.0) {
            return invalid("scale must be positive");
        }
        let c = &self.config;
        Ok(ConfidenceRadius {
            value: beta_value(
                c.noise_r,
                self.dim(),
                self.t as f64,
                c.arm_norm_bound,
                c.lambda,
                c.theta_norm_bound,
                delta,
                scale,
            ),
            delta,
            kind: RadiusKind::Simplified,
        })
    }

    /// Safety-channel radius with the forced-exploration scaling `1/γ̲²`,
    /// counting only rounds with an observed safety signal.
    pub fn safety_beta(&self, delta: f64) -> Result<ConfidenceRadius> {
        check_delta(delta)?;
        let c = &self.config;
        let (noise, bound) = if c.safety_radius_uses_r {
            (c.noise_r, c.theta_norm_bound)
        } else {
            (c.noise_s, c.mu_norm_bound)
        };
        Ok(ConfidenceRadius {
            value: beta_value(
                noise,
                self.dim(),
                self.safety_obs as f64,
                c.arm_norm_bound,
                c.lambda,
                bound,
                delta,
                1.0 / (c.gamma_lb * c.gamma_lb),
            ),
            delta,
            kind: RadiusKind::Simplified,
        })
    }

    /// Determinant-based radius
    /// `R √(2 log(det(A_t)^{1/2} det(λI)^{-1/2} / δ)) + √λ D`.
    pub fn c_radius(&self, delta: f64) -> Result<ConfidenceRadius> {
        check_delta(delta)?;
        let c = &self.config;
        let d = self.dim() as f64;
        let half_log_ratio = 0.5 * (self.design.log_det() - d * c.lambda.ln());
        let inner = 2.0 * (half_log_ratio + (1.0 / delta).ln());
        Ok(ConfidenceRadius {
            value: c.noise_r * inner.max(0.0).sqrt() + c.lambda.sqrt() * c.theta_norm_bound,
            delta,
            kind: RadiusKind::Determinant,
        })
    }

    /// Whether `‖θ̂ − candidate‖_A ≤ radius`, with `A` the regularized design.
    pub fn in_confidence_set(&self, candidate: &[f64], radius: &ConfidenceRadius) -> Result<bool> {
        if candidate.len() != self.dim() {
            return invalid("candidate dimension mismatch");
        }
        let diff = sub(&self.theta_hat(), candidate);
        Ok(self.design.mahalanobis(&diff)? <= radius.value)
    }
}
