//! Sample-complexity and forced-exploration calculators.
//!
//! Everything here is a pure function of an instance and a few constants.
//! Bounds that are undefined for a given instance come back as
//! [`Bound::NotComputable`] with the reason, never as a clamped number.

use serde::{Deserialize, Serialize};

use crate::allocation::l1_min_weights;
use crate::error::{Error, Result};
use crate::estimation::beta_value;
use crate::instance::{best_safe_arm, Instance};
use crate::linalg::{dot, min_eigenvalue, norm, scaled, sub, SymMatrix};

/// A bound value or the reason it cannot be evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Bound {
    Value { value: f64 },
    NotComputable { reason: String },
}

impl Bound {
    pub fn value(&self) -> Option<f64> {
        match self {
            Bound::Value { value } => Some(*value),
            Bound::NotComputable { .. } => None,
        }
    }

    fn not(reason: impl Into<String>) -> Self {
        Bound::NotComputable { reason: reason.into() }
    }
}

/// Gaps of the scaled arms `γ̄_k x_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gaps {
    pub best: usize,
    pub gaps: Vec<f64>,
    /// Another arm ties with the best one.
    pub tied: bool,
}

/// `Δ_best = min_{j≠best}(v_best − v_j)`, `Δ_i = v_best − v_i` otherwise,
/// with `v_k = γ̄_k x_kᵀθ⋆`.
pub fn gaps(instance: &Instance, gamma_bar: &[f64]) -> Result<Gaps> {
    let k = instance.num_arms();
    if gamma_bar.len() != k {
        return Err(Error::InvalidArgument(format!("expected {k} coefficients")));
    }
    let values: Vec<f64> = (0..k)
        .map(|i| gamma_bar[i] * dot(instance.arm(i), instance.theta_star()))
        .collect();
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    let mut gaps: Vec<f64> = values.iter().map(|v| values[best] - v).collect();
    gaps[best] = (0..k)
        .filter(|&j| j != best)
        .map(|j| values[best] - values[j])
        .fold(f64::INFINITY, f64::min);
    let tied = gaps[best] == 0.0;
    Ok(Gaps { best, gaps, tied })
}

/// `H_FE(ε) = Σ_k max_{i,j} |w⋆_k(i,j)| ‖w⋆(i,j)‖₁ / max(ε, (ε+Δ_i)/3, (ε+Δ_j)/3)`
/// with `w⋆(i,j)` the L1-minimal reproduction of `γ̄_i x_i − γ̄_j x_j`.
pub fn problem_complexity(instance: &Instance, gamma_bar: &[f64], epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument("epsilon must be positive".into()));
    }
    let g = gaps(instance, gamma_bar)?;
    let k = instance.num_arms();
    let arms: Vec<Vec<f64>> = (0..k).map(|i| scaled(instance.arm(i), gamma_bar[i])).collect();
    let mut per_arm = vec![0.0f64; k];
    for i in 0..k {
        for j in 0..k {
            if i == j {
                continue;
            }
            let alloc = l1_min_weights(&arms, &sub(&arms[i], &arms[j]))?;
            let denom = epsilon.max((epsilon + g.gaps[i]) / 3.0).max((epsilon + g.gaps[j]) / 3.0);
            for (m, w) in per_arm.iter_mut().zip(&alloc.weights) {
                *m = m.max(w.abs() * alloc.l1_norm / denom);
            }
        }
    }
    Ok(per_arm.iter().sum())
}

/// `(C(δ_r), M)`:
/// `M = 64 H R⁴ d L²/λ + 4 (8 H R² log(K²/δ) + K)²`,
/// `C = 8 H R² log(K²/δ) + 4 H R² d log(1 + M L²/(λ d))`.
pub fn c_and_m(h: f64, k: usize, r: f64, d: usize, l: f64, lambda: f64, delta_r: f64) -> (f64, f64) {
    let (kf, df) = (k as f64, d as f64);
    let log_k = (kf * kf / delta_r).ln();
    let m = 64.0 * h * r.powi(4) * df * l * l / lambda + 4.0 * (8.0 * h * r * r * log_k + kf).powi(2);
    let c = 8.0 * h * r * r * log_k + 4.0 * h * r * r * df * (1.0 + m * l * l / (lambda * df)).ln();
    (c, m)
}

/// `Σ_FE = (γ̲²/K) Σ_k x_k x_kᵀ`.
pub fn sigma_fe(instance: &Instance, gamma_lb: f64) -> SymMatrix {
    let mut s = SymMatrix::zeros(instance.dim());
    let w = gamma_lb * gamma_lb / instance.num_arms() as f64;
    for arm in instance.arms() {
        s.add_outer(w, arm).expect("arm dimension matches");
    }
    s
}

/// `(λ_min(Σ_FE), λ₋(δ_r))` with
/// `λ₋ = λ_min − √(2L²/γ̲² · λ_min · log(2d/δ_r))`. `λ₋` may be negative.
pub fn sigma_fe_and_lambda_minus(instance: &Instance, gamma_lb: f64, delta_r: f64) -> Result<(f64, f64)> {
    let min_eig = min_eigenvalue(&sigma_fe(instance, gamma_lb))?;
    let l = instance.arm_norm_bound();
    let d = instance.dim() as f64;
    let penalty = (2.0 * l * l / (gamma_lb * gamma_lb) * min_eig.max(0.0) * (2.0 * d / delta_r).ln()).sqrt();
    Ok((min_eig, min_eig - penalty))
}

/// `d exp(−ε² λ_min(Σ_FE) / (2 γ̲² L²))`, clamped to `[0, 1]`.
pub fn matrix_hoeffding_tail(min_eig_sigma: f64, eps: f64, gamma_lb: f64, l: f64, d: usize) -> f64 {
    let v = d as f64 * (-eps * eps * min_eig_sigma / (2.0 * gamma_lb * gamma_lb * l * l)).exp();
    v.clamp(0.0, 1.0)
}

/// Scalars entering the forced-exploration condition, evaluated at the
/// scaled optimal arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TfeInputs {
    /// Pessimistic coefficient of the optimal arm.
    pub gamma_bar_star: f64,
    /// `x⋆ᵀθ⋆`
    pub reward_star: f64,
    /// `x⋆ᵀμ⋆`
    pub safety_star: f64,
    /// `‖x⋆‖`
    pub norm_star: f64,
    pub lambda_minus: f64,
    pub epsilon: f64,
}

impl TfeInputs {
    pub fn from_instance(instance: &Instance, gamma_bar: &[f64], epsilon: f64, delta_r: f64) -> Result<Self> {
        let (k, gamma, _) = best_safe_arm(instance);
        let x = scaled(instance.arm(k), gamma);
        let (_, lambda_minus) = sigma_fe_and_lambda_minus(instance, instance.gamma_lb(), delta_r)?;
        Ok(Self {
            gamma_bar_star: gamma_bar[k],
            reward_star: dot(&x, instance.theta_star()),
            safety_star: dot(&x, instance.mu_star()),
            norm_star: norm(&x),
            lambda_minus,
            epsilon,
        })
    }

    /// `(2γ̲⋆x⋆ᵀθ⋆/ε − 1) / (λ₋ |x⋆ᵀμ⋆| / ‖x⋆‖)`, or why it is undefined.
    pub fn rhs(&self) -> std::result::Result<f64, String> {
        if !(self.epsilon > 0.0) {
            return Err("epsilon must be positive".into());
        }
        let cap = 2.0 * self.gamma_bar_star * self.reward_star;
        if self.epsilon > cap {
            return Err(format!("epsilon {} exceeds 2 gamma* x*'theta* = {cap}", self.epsilon));
        }
        if !(self.lambda_minus > 0.0) {
            return Err(format!("lambda_minus = {} is not positive", self.lambda_minus));
        }
        if self.safety_star == 0.0 {
            return Err("x*'mu* = 0: the optimal direction is safety-neutral".into());
        }
        Ok((cap / self.epsilon - 1.0) / (self.lambda_minus * self.safety_star.abs() / self.norm_star))
    }
}

/// `√T / (2 β_FE(T)) ≥ rhs`
pub fn t_fe_predicate(t: f64, rhs: f64, beta_fe_at: &dyn Fn(f64) -> f64) -> bool {
    t.sqrt() / (2.0 * beta_fe_at(t)) >= rhs
}

const T_FE_MAX: u64 = 1_000_000_000_000;

/// Smallest integer `T ∈ [1, 10¹²]` satisfying the forced-exploration
/// condition, found by bisection.
pub fn t_fe_condition(inputs: &TfeInputs, beta_fe_at: &dyn Fn(f64) -> f64) -> Bound {
    let rhs = match inputs.rhs() {
        Ok(v) => v,
        Err(reason) => return Bound::not(reason),
    };
    t_fe_search(rhs, beta_fe_at)
}

/// Bisection behind [`t_fe_condition`] for an explicit right-hand side.
pub fn t_fe_search(rhs: f64, beta_fe_at: &dyn Fn(f64) -> f64) -> Bound {
    let pred = |t: u64| t_fe_predicate(t as f64, rhs, beta_fe_at);
    if pred(1) {
        return Bound::Value { value: 1.0 };
    }
    if !pred(T_FE_MAX) {
        return Bound::not(format!("condition not met for any T up to {T_FE_MAX}"));
    }
    let (mut lo, mut hi) = (1u64, T_FE_MAX);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Bound::Value { value: hi as f64 }
}

/// `β_FE(T) = R √(d log((1 + T L²/(γ̲² λ))/δ)) + D √λ` for `instance`.
pub fn beta_fe(instance: &Instance, noise_r: f64, lambda: f64, delta: f64) -> impl Fn(f64) -> f64 {
    let d = instance.dim();
    let l = instance.arm_norm_bound();
    let big_d = instance.theta_norm_bound();
    let g = instance.gamma_lb();
    move |t| beta_value(noise_r, d, t, l, lambda, big_d, delta, 1.0 / (g * g))
}

/// Principal branch of the product logarithm, `W(x) e^{W(x)} = x`.
pub fn lambert_w(x: f64) -> Result<f64> {
    const INV_E: f64 = 1.0 / std::f64::consts::E;
    if x.is_nan() || x < -INV_E - 1e-16 {
        return Err(Error::Domain(format!("lambert_w undefined at {x}")));
    }
    if x <= -INV_E {
        return Ok(-1.0);
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let mut w = if x < -0.25 {
        // series around the branch point
        let p = (2.0 * (std::f64::consts::E * x + 1.0)).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    } else if x < 3.0 {
        x.ln_1p() * 0.8
    } else {
        let l = x.ln();
        l - l.ln()
    };
    let tol = 1e-12 * x.abs().max(1.0);
    for _ in 0..100 {
        let ew = w.exp();
        let f = w * ew - x;
        if f.abs() <= tol * 0.25 {
            break;
        }
        let wp1 = w + 1.0;
        let step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
        if !step.is_finite() {
            break;
        }
        w -= step;
    }
    Ok(w)
}

/// Explicit forced-exploration length from the product-logarithm display:
/// `√T ≥ −a W(−δ_s e^{−1/a} / a) − 1` with
/// `a = 2‖x⋆‖(2γ̲⋆x⋆ᵀθ⋆ − ε)/(ε x⋆ᵀμ⋆)`. Returns `T`.
pub fn t_fe_closed_form(inputs: &TfeInputs, delta_s: f64) -> Bound {
    let cap = 2.0 * inputs.gamma_bar_star * inputs.reward_star;
    if !(inputs.epsilon > 0.0 && inputs.epsilon <= cap) {
        return Bound::not(format!("epsilon must lie in (0, {cap}]"));
    }
    if inputs.safety_star == 0.0 {
        return Bound::not("x*'mu* = 0: the optimal direction is safety-neutral");
    }
    if !(delta_s > 0.0 && delta_s < 1.0) {
        return Bound::not("delta_s must lie in (0, 1)");
    }
    let a = 2.0 * inputs.norm_star * (cap - inputs.epsilon) / (inputs.epsilon * inputs.safety_star);
    if a == 0.0 {
        return Bound::Value { value: 0.0 };
    }
    let arg = -delta_s * (-1.0 / a).exp() / a;
    match lambert_w(arg) {
        Ok(w) => {
            let root = (-a * w - 1.0).max(0.0);
            Bound::Value { value: root * root }
        }
        Err(e) => Bound::not(format!("product-logarithm argument {arg} out of domain ({e})")),
    }
}

/// Right-hand side of the ratio bound
/// `1 − γ̄⋆/γ⋆ ≤ 1 − 1/(1 + 2β_FE‖x⋆‖/(|x⋆ᵀμ⋆| √(T λ₋)))`, when `λ₋ > 0`.
pub fn ratio_bound(beta_fe: f64, norm_star: f64, safety_star: f64, t_fe: f64, lambda_minus: f64) -> Option<f64> {
    if !(lambda_minus > 0.0) || safety_star == 0.0 {
        return None;
    }
    let z = 2.0 * beta_fe * norm_star / (safety_star.abs() * (t_fe * lambda_minus).sqrt());
    Some(1.0 - 1.0 / (1.0 + z))
}

/// Constants for [`complexity_report`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportParams {
    pub epsilon: f64,
    pub delta_r: f64,
    pub delta_s: f64,
    pub noise_r: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityReport {
    pub h_fe: f64,
    pub gaps: Vec<f64>,
    pub best_arm: usize,
    pub c_delta: f64,
    pub m: f64,
    pub lambda_minus: f64,
    pub sigma_fe_min_eig: f64,
    pub t_fe_condition_rhs: Bound,
    pub t_fe_condition: Bound,
    pub t_fe_closed_form: Bound,
    /// Whether the closed-form length satisfies the condition it bounds.
    pub closed_form_satisfies_condition: Option<bool>,
}

/// Evaluates every calculator for `instance` under coefficients `gamma_bar`.
pub fn complexity_report(instance: &Instance, gamma_bar: &[f64], p: &ReportParams) -> Result<ComplexityReport> {
    let g = gaps(instance, gamma_bar)?;
    let h_fe = problem_complexity(instance, gamma_bar, p.epsilon)?;
    let (c_delta, m) = c_and_m(
        h_fe,
        instance.num_arms(),
        p.noise_r,
        instance.dim(),
        instance.arm_norm_bound(),
        p.lambda,
        p.delta_r,
    );
    let (sigma_fe_min_eig, lambda_minus) = sigma_fe_and_lambda_minus(instance, instance.gamma_lb(), p.delta_r)?;
    let inputs = TfeInputs::from_instance(instance, gamma_bar, p.epsilon, p.delta_r)?;
    let beta = beta_fe(instance, p.noise_r, p.lambda, p.delta_s);
    let rhs = inputs.rhs();
    let t_fe_condition = t_fe_condition(&inputs, &beta);
    let t_fe_closed_form = t_fe_closed_form(&inputs, p.delta_s);
    let closed_form_satisfies_condition = match (&rhs, t_fe_closed_form.value()) {
        (Ok(r), Some(t)) => Some(t_fe_predicate(t.max(1.0), *r, &beta)),
        _ => None,
    };
    Ok(ComplexityReport {
        h_fe,
        gaps: g.gaps,
        best_arm: g.best,
        c_delta,
        m,
        lambda_minus,
        sigma_fe_min_eig,
        t_fe_condition_rhs: match rhs {
            Ok(value) => Bound::Value { value },
            Err(reason) => Bound::NotComputable { reason },
        },
        t_fe_condition,
        t_fe_closed_form,
        closed_form_satisfies_condition,
    })
}
