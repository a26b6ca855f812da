//! Dense phase-1 simplex for small feasibility problems `Ax = b, x ≥ 0`.
//!
//! One artificial variable is attached to each row and their sum is
//! minimized. Pivoting follows Bland's rule (lowest eligible index for both
//! the entering and the leaving variable), so the method cannot cycle on the
//! heavily degenerate vertex-decomposition problems it is used for.

const PRICE_TOL: f64 = 1e-12;
const PIVOT_TOL: f64 = 1e-12;
const MAX_PIVOTS: usize = 50_000;

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseOne {
    /// Structural variables at the final basis.
    pub x: Vec<f64>,
    /// Optimal sum of artificials, i.e. `Σ_i |b_i − (Ax)_i|`.
    pub infeasibility: f64,
    pub pivots: usize,
}

impl PhaseOne {
    pub fn is_feasible(&self, tol: f64) -> bool {
        self.infeasibility <= tol
    }
}

/// Minimizes the total constraint violation of `Ax = b` over `x ≥ 0`.
///
/// `a` is row-major with `b.len()` rows of equal length.
pub fn phase_one(a: &[Vec<f64>], b: &[f64]) -> PhaseOne {
    let m = b.len();
    assert_eq!(a.len(), m, "row count mismatch");
    let n = a.first().map_or(0, Vec::len);
    let width = n + m + 1;
    let rhs = n + m;

    // Tableau rows, sign-normalized so the right-hand side is non-negative.
    let mut t = vec![vec![0.0; width]; m];
    for i in 0..m {
        assert_eq!(a[i].len(), n, "ragged constraint matrix");
        let s = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[i][j] = s * a[i][j];
        }
        t[i][n + i] = 1.0;
        t[i][rhs] = s * b[i];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    // Reduced costs of the phase-1 objective with artificials priced out.
    let mut cost = vec![0.0; width];
    for row in &t {
        for j in 0..n {
            cost[j] -= row[j];
        }
        cost[rhs] -= row[rhs];
    }

    let mut pivots = 0;
    while pivots < MAX_PIVOTS {
        let Some(enter) = (0..n + m).find(|&j| cost[j] < -PRICE_TOL) else {
            break;
        };
        let mut leave: Option<(usize, f64)> = None;
        for (i, row) in t.iter().enumerate() {
            let coef = row[enter];
            if coef <= PIVOT_TOL {
                continue;
            }
            let ratio = row[rhs] / coef;
            leave = match leave {
                None => Some((i, ratio)),
                Some((k, best)) => {
                    let tie = (ratio - best).abs() <= 1e-12 * (1.0 + best.abs());
                    if ratio < best && !tie || tie && basis[i] < basis[k] {
                        Some((i, ratio))
                    } else {
                        Some((k, best))
                    }
                }
            };
        }
        // The phase-1 objective is bounded below, so an unbounded column
        // only arises from round-off; stop there.
        let Some((r, _)) = leave else { break };

        let piv = t[r][enter];
        for v in t[r].iter_mut() {
            *v /= piv;
        }
        let pivot_row = t[r].clone();
        for (i, row) in t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[enter];
            if f != 0.0 {
                for (v, p) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * p;
                }
            }
        }
        let f = cost[enter];
        for (v, p) in cost.iter_mut().zip(&pivot_row) {
            *v -= f * p;
        }
        basis[r] = enter;
        pivots += 1;
    }

    let mut x = vec![0.0; n];
    let mut infeasibility = 0.0;
    for (i, &var) in basis.iter().enumerate() {
        let value = t[i][rhs].max(0.0);
        if var < n {
            x[var] = value;
        } else {
            infeasibility += value;
        }
    }
    PhaseOne {
        x,
        infeasibility,
        pivots,
    }
}
