//! Dense two-phase primal simplex for small standard-form programs
//!
//! ```text
//! min cᵀx  s.t.  A x = b,  x ≥ 0
//! ```
//!
//! Pivoting follows Bland's rule (lowest-index entering column, lowest-index
//! leaving variable among ratio ties), which rules out cycling.

const EPS: f64 = 1e-11;
const MAX_PIVOTS: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
    Unbounded,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    cost: Vec<f64>,
    basis: Vec<usize>,
    width: usize,
}

impl Tableau {
    fn rhs(&self, r: usize) -> f64 {
        self.rows[r][self.width]
    }

    fn pivot(&mut self, r: usize, col: usize) {
        let p = self.rows[r][col];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[col];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[col] = 0.0;
            }
        }
        let f = self.cost[col];
        if f != 0.0 {
            for (v, pv) in self.cost.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            self.cost[col] = 0.0;
        }
        self.basis[r] = col;
    }

    /// Runs Bland pivots over the columns `allowed`; returns false on
    /// unboundedness.
    fn optimize(&mut self, allowed: usize) -> bool {
        for _ in 0..MAX_PIVOTS {
            let scale = self.cost[..allowed].iter().fold(1.0f64, |m, v| m.max(v.abs()));
            let Some(col) = (0..allowed).find(|&j| self.cost[j] < -EPS * scale) else {
                return true;
            };
            let mut best: Option<(usize, f64)> = None;
            for r in 0..self.rows.len() {
                let a = self.rows[r][col];
                if a > EPS {
                    let ratio = self.rhs(r) / a;
                    best = match best {
                        None => Some((r, ratio)),
                        Some((br, bratio)) => {
                            let tie = (ratio - bratio).abs() <= EPS * bratio.abs().max(1.0);
                            if ratio < bratio && !tie || tie && self.basis[r] < self.basis[br] {
                                Some((r, ratio))
                            } else {
                                Some((br, bratio))
                            }
                        }
                    };
                }
            }
            match best {
                Some((r, _)) => self.pivot(r, col),
                None => return false,
            }
        }
        panic!("simplex exceeded {MAX_PIVOTS} pivots despite Bland's rule");
    }
}

/// Solves `min cᵀx s.t. A x = b, x ≥ 0`.
pub fn solve_standard_form(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> LpOutcome {
    let m = a.len();
    let n = c.len();
    assert_eq!(b.len(), m, "rhs length must match the number of rows");
    assert!(a.iter().all(|r| r.len() == n), "every row needs {n} columns");

    // Columns: n structural, m artificial, then rhs.
    let width = n + m;
    let mut rows = Vec::with_capacity(m);
    for (i, (row, bi)) in a.iter().zip(b).enumerate() {
        let sign = if *bi < 0.0 { -1.0 } else { 1.0 };
        let mut r = vec![0.0; width + 1];
        for (j, v) in row.iter().enumerate() {
            r[j] = sign * v;
        }
        r[n + i] = 1.0;
        r[width] = sign * bi;
        rows.push(r);
    }
    // Phase 1 reduced costs: minimize the sum of artificials.
    let mut cost = vec![0.0; width + 1];
    for r in &rows {
        for j in 0..n {
            cost[j] -= r[j];
        }
        cost[width] -= r[width];
    }
    let mut t = Tableau {
        rows,
        cost,
        basis: (n..n + m).collect(),
        width,
    };
    if !t.optimize(width) {
        unreachable!("phase 1 objective is bounded below by zero");
    }
    let bscale = b.iter().fold(1.0f64, |s, v| s.max(v.abs()));
    if -t.cost[width] > 1e-9 * bscale {
        return LpOutcome::Infeasible;
    }

    // Drive remaining artificials out of the basis; drop redundant rows.
    let mut r = 0;
    while r < t.rows.len() {
        if t.basis[r] >= n {
            let row_scale = t.rows[r][..n].iter().fold(0.0f64, |s, v| s.max(v.abs()));
            match (0..n).find(|&j| t.rows[r][j].abs() > EPS.max(1e-9 * row_scale)) {
                Some(col) => t.pivot(r, col),
                None => {
                    t.rows.remove(r);
                    t.basis.remove(r);
                    continue;
                }
            }
        }
        r += 1;
    }

    // Phase 2 over the structural columns only.
    for row in t.rows.iter_mut() {
        for v in row[n..width].iter_mut() {
            *v = 0.0;
        }
    }
    let mut cost = vec![0.0; width + 1];
    cost[..n].copy_from_slice(c);
    for (r, &bv) in t.basis.iter().enumerate() {
        let cb = c[bv];
        if cb != 0.0 {
            for (v, rv) in cost.iter_mut().zip(&t.rows[r]) {
                *v -= cb * rv;
            }
        }
    }
    t.cost = cost;
    if !t.optimize(n) {
        return LpOutcome::Unbounded;
    }
    let mut x = vec![0.0; n];
    for (r, &bv) in t.basis.iter().enumerate() {
        x[bv] = t.rhs(r).max(0.0);
    }
    let objective = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    LpOutcome::Optimal { x, objective }
}
