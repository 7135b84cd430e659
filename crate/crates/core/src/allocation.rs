//! Allocations over arms: the L1-minimal reproduction of a direction, the
//! simplex ratios derived from it, the finite-λ design program for `ν⋆`, and
//! the two pull criteria (greedy and rounding).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, PosDefState, SymMatrix};
use crate::lp::{solve_standard_form, LpOutcome};

/// Weights reproducing `target` from the (scaled) arms with minimal L1 norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub weights: Vec<f64>,
    /// `|w_k| / ‖w‖₁`, or uniform when `degenerate`.
    pub ratios: Vec<f64>,
    pub l1_norm: f64,
    pub target: Vec<f64>,
    /// Set for the zero direction, whose ratios are a uniform placeholder.
    pub degenerate: bool,
}

/// Solves `min ‖w‖₁ s.t. Σ_k w_k x̃_k = y` by splitting `w = w⁺ − w⁻`.
pub fn l1_min_weights(scaled_arms: &[Vec<f64>], y: &[f64]) -> Result<Allocation> {
    let k = scaled_arms.len();
    if k == 0 {
        return Err(Error::InvalidArgument("no arms".into()));
    }
    let d = y.len();
    if scaled_arms.iter().any(|a| a.len() != d) {
        return Err(Error::InvalidArgument("arm and direction dimensions differ".into()));
    }
    if y.iter().all(|v| *v == 0.0) {
        return Ok(Allocation {
            weights: vec![0.0; k],
            ratios: vec![1.0 / k as f64; k],
            l1_norm: 0.0,
            target: y.to_vec(),
            degenerate: true,
        });
    }
    let rows: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            let mut row = Vec::with_capacity(2 * k);
            row.extend(scaled_arms.iter().map(|a| a[i]));
            row.extend(scaled_arms.iter().map(|a| -a[i]));
            row
        })
        .collect();
    let c = vec![1.0; 2 * k];
    match solve_standard_form(&c, &rows, y) {
        LpOutcome::Optimal { x, .. } => {
            let weights: Vec<f64> = (0..k).map(|j| x[j] - x[k + j]).collect();
            let l1_norm = weights.iter().map(|w| w.abs()).sum();
            let mut alloc = Allocation {
                weights,
                ratios: Vec::new(),
                l1_norm,
                target: y.to_vec(),
                degenerate: false,
            };
            alloc.ratios = ratios_from_weights(&alloc.weights)?;
            Ok(alloc)
        }
        LpOutcome::Infeasible => Err(Error::Infeasible { direction: y.to_vec() }),
        LpOutcome::Unbounded => unreachable!("an L1 objective is bounded below"),
    }
}

/// Normalized absolute weights on the simplex.
pub fn ratios_from_weights(weights: &[f64]) -> Result<Vec<f64>> {
    let l1: f64 = weights.iter().map(|w| w.abs()).sum();
    if !(l1 > 0.0) {
        return Err(Error::DegenerateDirection("weights have zero L1 norm".into()));
    }
    Ok(weights.iter().map(|w| w.abs() / l1).collect())
}

/// `yᵀ (A + Σ ν_k x̃_k x̃_kᵀ)⁻¹ y`
pub fn design_objective(design: &PosDefState, scaled_arms: &[Vec<f64>], y: &[f64], nu: &[f64]) -> Result<f64> {
    let m = mixed_design(design.matrix(), scaled_arms, nu)?;
    let sol = m.solve_pd(y)?;
    Ok(dot(y, &sol))
}

fn mixed_design(base: &SymMatrix, scaled_arms: &[Vec<f64>], nu: &[f64]) -> Result<SymMatrix> {
    let mut m = base.clone();
    for (x, w) in scaled_arms.iter().zip(nu) {
        if *w != 0.0 {
            m.add_outer(*w, x)?;
        }
    }
    Ok(m)
}

/// Minimizer `w⋆ = (ρ M⁻¹ + XᵀX)⁻¹ Xᵀ y` of `‖y − X w‖² + ρ wᵀ M⁻¹ w`
/// with `M = diag(mu)`, and the minimal value. The columns of `X` are `arms`.
pub fn weighted_ridge_dual(arms: &[Vec<f64>], mu: &[f64], y: &[f64], rho: f64) -> Result<(Vec<f64>, f64)> {
    let k = arms.len();
    if mu.len() != k || mu.iter().any(|m| !(*m > 0.0)) {
        return Err(Error::InvalidArgument("mu must hold one positive entry per arm".into()));
    }
    let rows: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..k).map(|j| dot(&arms[i], &arms[j]) + if i == j { rho / mu[i] } else { 0.0 }).collect())
        .collect();
    let gram = SymMatrix::from_rows(&rows)?;
    let xty: Vec<f64> = arms.iter().map(|a| dot(a, y)).collect();
    let w = gram.solve_pd(&xty)?;
    let mut resid = y.to_vec();
    for (a, wk) in arms.iter().zip(&w) {
        crate::linalg::axpy(&mut resid, -wk, a);
    }
    let penalty: f64 = w.iter().zip(mu).map(|(wk, m)| wk * wk / m).sum();
    Ok((w.clone(), dot(&resid, &resid) + rho * penalty))
}

/// Result of the Frank–Wolfe solve for `ν⋆`.
#[derive(Debug, Clone, PartialEq)]
pub struct NuStar {
    pub nu: Vec<f64>,
    pub objective: f64,
    pub gap: f64,
    pub iterations: usize,
    pub degenerate: bool,
}

/// Frank–Wolfe on the simplex for
/// `min_ν yᵀ (A + Σ ν_k x̃_k x̃_kᵀ)⁻¹ y`, starting from the uniform vector.
pub fn nu_star_finite(
    design: &PosDefState,
    scaled_arms: &[Vec<f64>],
    y: &[f64],
    budget: usize,
) -> Result<NuStar> {
    let k = scaled_arms.len();
    if k == 0 {
        return Err(Error::InvalidArgument("no arms".into()));
    }
    let mut nu = vec![1.0 / k as f64; k];
    if y.iter().all(|v| *v == 0.0) {
        return Ok(NuStar { nu, objective: 0.0, gap: 0.0, iterations: 0, degenerate: true });
    }
    let mut gap = f64::INFINITY;
    let mut iterations = 0;
    for i in 0..budget {
        let m = mixed_design(design.matrix(), scaled_arms, &nu)?;
        let z = m.solve_pd(y)?;
        // −∂f/∂ν_k = (x̃_kᵀ M⁻¹ y)²
        let scores: Vec<f64> = scaled_arms.iter().map(|x| dot(x, &z).powi(2)).collect();
        let (best, best_score) = scores
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (j, s)| if *s > acc.1 { (j, *s) } else { acc });
        gap = best_score - dot(&nu, &scores);
        iterations = i;
        if gap < 1e-8 {
            break;
        }
        let step = 2.0 / (i as f64 + 2.0);
        for (j, v) in nu.iter_mut().enumerate() {
            *v *= 1.0 - step;
            if j == best {
                *v += step;
            }
        }
        iterations = i + 1;
    }
    let objective = design_objective(design, scaled_arms, y, &nu)?;
    Ok(NuStar { nu, objective, gap, iterations, degenerate: false })
}

/// Arm minimizing `yᵀ (A + x xᵀ)⁻¹ y`, evaluated through the rank-1 identity
/// `yᵀA⁻¹y − (yᵀA⁻¹x)² / (1 + xᵀA⁻¹x)`. Lowest index wins ties.
pub fn greedy_select(design: &PosDefState, candidates: &[Vec<f64>], y: &[f64]) -> Result<usize> {
    if candidates.is_empty() {
        return Err(Error::InvalidState("empty safe set".into()));
    }
    let ay = design.inverse().mul_vec(y)?;
    let base = dot(y, &ay);
    let mut best = (0, f64::INFINITY);
    for (k, x) in candidates.iter().enumerate() {
        let value = base - dot(&ay, x).powi(2) / (1.0 + design.inv_quad(x)?);
        if value < best.1 {
            best = (k, value);
        }
    }
    Ok(best.0)
}

/// `yᵀ (A + x xᵀ)⁻¹ y` for a single candidate.
pub fn greedy_value(design: &PosDefState, x: &[f64], y: &[f64]) -> Result<f64> {
    let ay = design.inverse().mul_vec(y)?;
    Ok(dot(y, &ay) - dot(&ay, x).powi(2) / (1.0 + design.inv_quad(x)?))
}

/// Weighted pull counts `N_k = Σ γ_k(s)²` over the pulls of arm `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PullCounts {
    pub n: Vec<f64>,
}

impl PullCounts {
    pub fn new(num_arms: usize) -> Self {
        Self { n: vec![0.0; num_arms] }
    }

    pub fn record(&mut self, arm: usize, gamma: f64) {
        self.n[arm] += gamma * gamma;
    }

    /// `min_{k: w_k ≠ 0} N_k / (γ_k² |w_k|)`, the effective number of
    /// reproductions of the direction represented by `weights`.
    pub fn effective_count(&self, weights: &[f64], gammas: &[f64]) -> f64 {
        weights
            .iter()
            .zip(gammas)
            .zip(&self.n)
            .filter(|((w, _), _)| **w != 0.0)
            .map(|((w, g), n)| n / (g * g * w.abs()))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Arm minimizing `N_k / ratio_k` among unmasked arms with a positive ratio.
pub fn rounding_select(counts: &PullCounts, ratios: &[f64], mask: &[bool]) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (k, (&r, &allowed)) in ratios.iter().zip(mask).enumerate() {
        if !allowed || r <= 1e-12 {
            continue;
        }
        let score = counts.n[k] / r;
        if best.is_none_or(|(_, s)| score < s) {
            best = Some((k, score));
        }
    }
    best.map(|(k, _)| k)
        .ok_or_else(|| Error::DegenerateAllocation("no safe arm carries positive ratio".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hard_arms() -> Vec<Vec<f64>> {
        let w = 0.1f64;
        vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![w.cos(), w.sin(), 0.0],
        ]
    }

    #[test]
    fn zero_direction_is_degenerate() {
        let a = l1_min_weights(&hard_arms(), &[0.0; 3]).unwrap();
        assert!(a.degenerate);
        assert_eq!(a.l1_norm, 0.0);
        assert!(a.ratios.iter().all(|r| (r - 0.25).abs() < 1e-15));
    }

    #[test]
    fn hard_direction_uses_the_canonical_arms() {
        let w = 0.1f64;
        let y = [1.0 - w.cos(), -w.sin(), 0.0];
        let a = l1_min_weights(&hard_arms(), &y).unwrap();
        assert!((a.l1_norm - ((1.0 - w.cos()) + w.sin())).abs() < 1e-12);
        assert!((a.weights[0] - (1.0 - w.cos())).abs() < 1e-12);
        assert!((a.weights[1] + w.sin()).abs() < 1e-12);
        assert!(a.weights[2].abs() < 1e-12 && a.weights[3].abs() < 1e-12);
    }

    #[test]
    fn unit_reproduction() {
        let arms = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let a = l1_min_weights(&arms, &[0.0, 1.0]).unwrap();
        assert_eq!(a.weights, vec![0.0, 1.0]);
        assert_eq!(a.ratios, vec![0.0, 1.0]);
    }

    #[test]
    fn direction_outside_span_is_infeasible() {
        let arms = vec![vec![1.0, 0.0, 0.0], vec![2.0, 0.0, 0.0]];
        match l1_min_weights(&arms, &[0.0, 1.0, 0.0]) {
            Err(Error::Infeasible { direction }) => assert_eq!(direction, vec![0.0, 1.0, 0.0]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ratios_of_small_weights() {
        let r = ratios_from_weights(&[0.005, -0.0998, 0.0, 0.0]).unwrap();
        assert!((r[0] - 0.005 / 0.1048).abs() < 1e-12);
        assert!((r[1] - 0.0998 / 0.1048).abs() < 1e-12);
        assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(matches!(ratios_from_weights(&[0.0, 0.0]), Err(Error::DegenerateDirection(_))));
    }

    #[test]
    fn greedy_ties_and_orthogonality() {
        let design = PosDefState::new(3, 1.0).unwrap();
        let arms = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
        let y = [1.0, -1.0, 0.0];
        assert_eq!(greedy_select(&design, &arms, &y).unwrap(), 0);
        assert_eq!(greedy_value(&design, &arms[2], &y).unwrap(), 2.0);
        assert!(matches!(greedy_select(&design, &[], &y), Err(Error::InvalidState(_))));
    }

    #[test]
    fn rounding_examples() {
        let c = PullCounts::new(2);
        assert_eq!(rounding_select(&c, &[0.3, 0.7], &[true, true]).unwrap(), 0);
        let c = PullCounts { n: vec![10.0, 1.0] };
        assert_eq!(rounding_select(&c, &[0.5, 0.5], &[true, true]).unwrap(), 1);
        assert!(matches!(
            rounding_select(&c, &[0.0, 1.0], &[true, false]),
            Err(Error::DegenerateAllocation(_))
        ));
    }

    #[test]
    fn frank_wolfe_concentrates_on_reproducing_arm() {
        let design = PosDefState::new(2, 1e-6).unwrap();
        let arms = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let s = nu_star_finite(&design, &arms, &[1.0, 0.0], 10_000).unwrap();
        assert!(s.nu[0] > 0.999, "{:?}", s.nu);
    }
}
