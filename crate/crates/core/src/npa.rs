//! First level of the moment-matrix relaxation of the quantum set.
//!
//! For operators `{1, A₀, A₁, B₀, B₁}` the 5×5 moment matrix has every entry
//! fixed by the behavior except `u = ⟨A₀A₁⟩` and `v = ⟨B₀B₁⟩`. A behavior
//! passes iff some `(u, v) ∈ [−1, 1]²` makes the matrix positive
//! semidefinite. The smallest eigenvalue is a concave function of `(u, v)`,
//! and it is 1-Lipschitz in the max-norm (perturbing `u` and `v` moves the
//! matrix by a spectral norm of `max(|Δu|, |Δv|)`), which makes a coarse
//! grid followed by local refinement reliable.

use crate::behavior::CorrelatorTable;
use crate::linalg::min_eigenvalue;

pub const GRID_POINTS: usize = 41;
const GRID_STEP: f64 = 2.0 / (GRID_POINTS - 1) as f64;
const REFINE_ROUNDS: usize = 200;
const REFINE_IMPROVEMENT: f64 = 1e-12;
const GOLDEN_WIDTH: f64 = 1e-12;
const MIN_BRACKET: f64 = 1e-9;

/// A candidate completion and the smallest eigenvalue it achieves.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct Npa1Witness {
    pub u: f64,
    pub v: f64,
    pub min_eig: f64,
}

/// Fixed data of the moment matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentData {
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub e: [[f64; 2]; 2],
}

impl MomentData {
    /// Uses the context-averaged marginals; for a no-signalling behavior
    /// the per-context values agree anyway.
    pub fn from_correlators(c: &CorrelatorTable) -> Self {
        Self {
            a: [
                0.5 * (c.ma[0][0] + c.ma[0][1]),
                0.5 * (c.ma[1][0] + c.ma[1][1]),
            ],
            b: [
                0.5 * (c.mb[0][0] + c.mb[1][0]),
                0.5 * (c.mb[0][1] + c.mb[1][1]),
            ],
            e: c.e,
        }
    }

    pub fn matrix(&self, u: f64, v: f64) -> [[f64; 5]; 5] {
        let [a0, a1] = self.a;
        let [b0, b1] = self.b;
        let e = self.e;
        [
            [1.0, a0, a1, b0, b1],
            [a0, 1.0, u, e[0][0], e[0][1]],
            [a1, u, 1.0, e[1][0], e[1][1]],
            [b0, e[0][0], e[1][0], 1.0, v],
            [b1, e[0][1], e[1][1], v, 1.0],
        ]
    }

    pub fn min_eig(&self, u: f64, v: f64) -> f64 {
        min_eigenvalue(self.matrix(u, v))
    }
}

/// Golden-section maximization of a unimodal function on `[lo, hi]`.
fn golden_max(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > GOLDEN_WIDTH {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
    }
    // include the endpoints: the maximum of a concave function on a box
    // often sits on the boundary (e.g. u = ±1 for deterministic marginals)
    let mid = 0.5 * (lo + hi);
    [(mid, f(mid)), (lo, f(lo)), (hi, f(hi))].into_iter().fold(
        (f64::NAN, f64::NEG_INFINITY),
        |best, c| if c.1 > best.1 { c } else { best },
    )
}

/// Maximum of a concave function on `[-1, 1]`, searched first in
/// `[x - h, x + h]`. A maximiser strictly inside the bracket is a global one;
/// otherwise the whole interval is searched.
fn line_max(x: f64, h: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let (lo, hi) = ((x - h).max(-1.0), (x + h).min(1.0));
    let (t, ft) = golden_max(lo, hi, &f);
    let pinned = |edge: f64| edge.abs() < 1.0 && (t - edge).abs() <= 2.0 * GOLDEN_WIDTH;
    if pinned(lo) || pinned(hi) {
        golden_max(-1.0, 1.0, f)
    } else {
        (t, ft)
    }
}

fn grid_value(i: usize) -> f64 {
    -1.0 + 2.0 * i as f64 / (GRID_POINTS - 1) as f64
}

/// Best completion found by the search.
///
/// Stages: a 41×41 grid; coordinate-wise golden-section refinement from the
/// best grid point; and, when the result is still below `-tol` but the
/// Lipschitz bound on the grid cannot rule feasibility out, a nested
/// golden-section search (outer over `u`, inner over `v`), which is exact
/// for a concave objective.
/// Coarse-to-fine scan of the grid. The objective is 1-Lipschitz in the
/// max-norm, so a fine point whose bound from a coarse neighbour falls
/// strictly below the running best cannot attain the maximum. The result is
/// the row-major first maximiser of the full grid.
fn grid_search(data: &MomentData) -> Npa1Witness {
    const COARSE: usize = 4;
    const N: usize = GRID_POINTS;
    let mut values = [[f64::NAN; N]; N];
    let mut best = f64::NEG_INFINITY;
    for i in (0..N).step_by(COARSE) {
        for j in (0..N).step_by(COARSE) {
            let f = data.min_eig(grid_value(i), grid_value(j));
            values[i][j] = f;
            best = best.max(f);
        }
    }
    let neighbours = |i: usize| {
        let lo = i / COARSE * COARSE;
        let hi = (lo + COARSE).min(N - 1);
        [lo, hi]
    };
    for i in 0..N {
        for j in 0..N {
            if !values[i][j].is_nan() {
                continue;
            }
            let mut bound = f64::INFINITY;
            for ci in neighbours(i) {
                for cj in neighbours(j) {
                    let dist = ci.abs_diff(i).max(cj.abs_diff(j)) as f64 * GRID_STEP;
                    bound = bound.min(values[ci][cj] + dist);
                }
            }
            if bound < best {
                continue;
            }
            let f = data.min_eig(grid_value(i), grid_value(j));
            values[i][j] = f;
            best = best.max(f);
        }
    }
    for (i, row) in values.iter().enumerate() {
        for (j, &f) in row.iter().enumerate() {
            if f == best {
                return Npa1Witness {
                    u: grid_value(i),
                    v: grid_value(j),
                    min_eig: f,
                };
            }
        }
    }
    unreachable!("the grid maximum is attained")
}

pub fn search(data: &MomentData, tol: f64) -> Npa1Witness {
    let grid = grid_search(data);
    let mut best = grid;
    let grid_best = grid.min_eig;

    let (mut hu, mut hv) = (GRID_STEP, GRID_STEP);
    for _ in 0..REFINE_ROUNDS {
        let before = best;
        let (u, fu) = line_max(best.u, hu, |u| data.min_eig(u, best.v));
        if fu > best.min_eig {
            best = Npa1Witness {
                u,
                v: best.v,
                min_eig: fu,
            };
        }
        let (v, fv) = line_max(best.v, hv, |v| data.min_eig(best.u, v));
        if fv > best.min_eig {
            best = Npa1Witness {
                u: best.u,
                v,
                min_eig: fv,
            };
        }
        if best.min_eig - before.min_eig < REFINE_IMPROVEMENT {
            break;
        }
        hu = (4.0 * (best.u - before.u).abs()).clamp(MIN_BRACKET, GRID_STEP);
        hv = (4.0 * (best.v - before.v).abs()).clamp(MIN_BRACKET, GRID_STEP);
    }

    // Every point lies within GRID_STEP/2 (max-norm) of a grid point.
    let upper_bound = grid_best + 0.5 * GRID_STEP;
    if best.min_eig < -tol && upper_bound >= -tol {
        let inner = |u: f64| golden_max(-1.0, 1.0, |v| data.min_eig(u, v));
        let (u, _) = golden_max(-1.0, 1.0, |u| inner(u).1);
        let (v, min_eig) = inner(u);
        if min_eig > best.min_eig {
            best = Npa1Witness { u, v, min_eig };
        }
    }
    best
}
