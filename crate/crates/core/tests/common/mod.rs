//! Independent reference implementations used as test oracles. None of
//! these share code with the library.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_vec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal)).collect()
}

pub fn eye(n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

pub fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let (n, m, p) = (a.len(), b.len(), b[0].len());
    (0..n)
        .map(|i| (0..p).map(|j| (0..m).map(|k| a[i][k] * b[k][j]).sum()).collect())
        .collect()
}

pub fn matvec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter().map(|r| r.iter().zip(x).map(|(u, v)| u * v).sum()).collect()
}

pub fn max_abs_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(r, s)| r.iter().zip(s).map(|(u, v)| (u - v).abs()))
        .fold(0.0, f64::max)
}

/// Gauss–Jordan inverse with partial pivoting.
pub fn gauss_jordan_inverse(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            row
        })
        .collect();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())).unwrap();
        m.swap(c, p);
        let piv = m[c][c];
        assert!(piv.abs() > 1e-300, "singular matrix");
        for v in m[c].iter_mut() {
            *v /= piv;
        }
        for r in 0..n {
            if r != c {
                let f = m[r][c];
                if f != 0.0 {
                    for k in 0..2 * n {
                        m[r][k] -= f * m[c][k];
                    }
                }
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

pub fn gauss_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    matvec(&gauss_jordan_inverse(a), b)
}

/// Gaussian elimination that gives up when a pivot falls below `tol`
/// relative to the largest entry.
pub fn try_solve(a: &[Vec<f64>], b: &[f64], tol: f64) -> Option<Vec<f64>> {
    let n = a.len();
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut m: Vec<Vec<f64>> = a.iter().zip(b).map(|(r, bi)| r.iter().copied().chain([*bi]).collect()).collect();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())).unwrap();
        if m[p][c].abs() <= tol * scale {
            return None;
        }
        m.swap(c, p);
        for r in 0..n {
            if r != c {
                let f = m[r][c] / m[c][c];
                for k in c..=n {
                    m[r][k] -= f * m[c][k];
                }
            }
        }
    }
    Some((0..n).map(|i| m[i][n] / m[i][i]).collect())
}

/// `ln |det a|` through LU with partial pivoting.
pub fn lu_log_det(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let mut m = a.to_vec();
    let mut acc = 0.0;
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())).unwrap();
        m.swap(c, p);
        let piv = m[c][c];
        acc += piv.abs().ln();
        for r in c + 1..n {
            let f = m[r][c] / piv;
            for k in c..n {
                m[r][k] -= f * m[c][k];
            }
        }
    }
    acc
}

/// `λI + Σ x xᵀ` as dense rows.
pub fn ridge_matrix(dim: usize, lambda: f64, xs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut a: Vec<Vec<f64>> = eye(dim).into_iter().map(|r| r.into_iter().map(|v| v * lambda).collect()).collect();
    for x in xs {
        for i in 0..dim {
            for j in 0..dim {
                a[i][j] += x[i] * x[j];
            }
        }
    }
    a
}

/// Batch ridge solution `(λI + XᵀX)⁻¹ Xᵀ r`.
pub fn batch_ridge(dim: usize, lambda: f64, xs: &[Vec<f64>], rs: &[f64]) -> Vec<f64> {
    let a = ridge_matrix(dim, lambda, xs);
    let mut b = vec![0.0; dim];
    for (x, r) in xs.iter().zip(rs) {
        for i in 0..dim {
            b[i] += r * x[i];
        }
    }
    gauss_solve(&a, &b)
}

/// Eigenvalues of a symmetric 3×3 matrix from the characteristic cubic,
/// solved with the trigonometric formula. Sorted ascending.
pub fn cubic_eigenvalues(a: &[Vec<f64>]) -> [f64; 3] {
    let p1 = a[0][1].powi(2) + a[0][2].powi(2) + a[1][2].powi(2);
    let q = (a[0][0] + a[1][1] + a[2][2]) / 3.0;
    if p1 == 0.0 {
        let mut e = [a[0][0], a[1][1], a[2][2]];
        e.sort_by(f64::total_cmp);
        return e;
    }
    let p2 = (a[0][0] - q).powi(2) + (a[1][1] - q).powi(2) + (a[2][2] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let b: Vec<Vec<f64>> = (0..3)
        .map(|i| (0..3).map(|j| (a[i][j] - if i == j { q } else { 0.0 }) / p).collect())
        .collect();
    let det_b = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1]) - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
        + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
    let r = (det_b / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let e1 = q + 2.0 * p * phi.cos();
    let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
    let e2 = 3.0 * q - e1 - e3;
    let mut e = [e1, e2, e3];
    e.sort_by(f64::total_cmp);
    e
}

/// Minimum of `‖w‖₁ s.t. Σ w_k x_k = y` by enumerating every basic solution
/// of the split program `[X, −X] v = y, v ≥ 0`. Returns `None` when no
/// basis reproduces `y`. Requires the arms to span ℝ^d.
pub fn lp_vertex_enumeration(arms: &[Vec<f64>], y: &[f64]) -> Option<(f64, Vec<f64>)> {
    let d = y.len();
    let k = arms.len();
    let cols: Vec<Vec<f64>> = arms
        .iter()
        .cloned()
        .chain(arms.iter().map(|a| a.iter().map(|v| -v).collect()))
        .collect();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut subset: Vec<usize> = (0..d).collect();
    loop {
        let basis: Vec<Vec<f64>> = (0..d).map(|i| subset.iter().map(|&c| cols[c][i]).collect()).collect();
        if let Some(v) = try_solve(&basis, y, 1e-9) {
            if v.iter().all(|x| *x >= -1e-10) {
                let obj: f64 = v.iter().map(|x| x.max(0.0)).sum();
                if best.as_ref().is_none_or(|(b, _)| obj < *b) {
                    let mut w = vec![0.0; k];
                    for (&c, x) in subset.iter().zip(&v) {
                        if c < k {
                            w[c] += x;
                        } else {
                            w[c - k] -= x;
                        }
                    }
                    best = Some((obj, w));
                }
            }
        }
        // next combination of d out of 2k
        let n = 2 * k;
        let mut i = d;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if subset[i] < n - d + i {
                subset[i] += 1;
                for j in i + 1..d {
                    subset[j] = subset[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Grid search of `f(ν) = yᵀ(A + ν₁ x₁x₁ᵀ + ν₂ x₂x₂ᵀ)⁻¹y` over `Δ₂`.
pub fn simplex2_grid_search(a: &[Vec<f64>], x1: &[f64], x2: &[f64], y: &[f64], step: f64) -> (f64, f64) {
    let mut best = (0.0, f64::INFINITY);
    let n = (1.0 / step).round() as usize;
    for i in 0..=n {
        let nu1 = i as f64 * step;
        let m: Vec<Vec<f64>> = (0..a.len())
            .map(|r| {
                (0..a.len())
                    .map(|c| a[r][c] + nu1 * x1[r] * x1[c] + (1.0 - nu1) * x2[r] * x2[c])
                    .collect()
            })
            .collect();
        let z = gauss_solve(&m, y);
        let v: f64 = y.iter().zip(&z).map(|(u, w)| u * w).sum();
        if v < best.1 {
            best = (nu1, v);
        }
    }
    best
}

pub fn est_config(noise_r: f64, noise_s: f64) -> safebai::estimation::EstimatorConfig {
    safebai::estimation::EstimatorConfig {
        lambda: 1.0,
        noise_r,
        noise_s,
        theta_norm_bound: 2.0,
        mu_norm_bound: 1.0,
        arm_norm_bound: 1.0,
        gamma_lb: 0.2,
        safety_radius_uses_r: false,
        safety_width: safebai::estimation::SafetyWidth::SafetyDesign,
    }
}
