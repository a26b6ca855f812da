//! Small dense complex matrices, cyclic Jacobi eigensolvers and a
//! tridiagonal QL routine for the smallest eigenvalue of small real
//! symmetric matrices.
//!
//! Everything here is sized for the toolkit's needs (dimension at most 8 for
//! complex operators, 5 for the real moment matrices), so the routines favour
//! robustness and exactness of invariants over asymptotic speed.

use num_complex::Complex64;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

/// Off-diagonal Frobenius norm at which the Jacobi sweeps stop.
pub const JACOBI_TOL: f64 = 1e-12;

/// Eigenvalues closer than this are treated as one degenerate cluster.
pub const EIGEN_GAP: f64 = 1e-8;

const MAX_SWEEPS: usize = 100;

/// Row-major square complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix from rows. Panics if the rows are not square.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            assert_eq!(row.len(), n, "matrix rows must form a square");
            data.extend_from_slice(row);
        }
        Self { n, data }
    }

    pub fn from_real(rows: &[Vec<f64>]) -> Self {
        let rows: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn outer(psi: &[Complex64]) -> Self {
        let n = psi.len();
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = psi[i] * psi[j].conj();
            }
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                m[(i, j)] = self[(j, i)].conj();
            }
        }
        m
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(Complex64::new(s, 0.0))
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let (n, m) = (self.n, other.n);
        let mut out = Self::zeros(n * m);
        for i in 0..n {
            for j in 0..n {
                let a = self[(i, j)];
                for k in 0..m {
                    for l in 0..m {
                        out[(i * m + k, j * m + l)] = a * other[(k, l)];
                    }
                }
            }
        }
        out
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entrywise deviation from the conjugate transpose.
    pub fn hermitian_deviation(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for i in 0..self.n {
            for j in i..self.n {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    /// `(M + M†) / 2`.
    pub fn hermitian_part(&self) -> Self {
        let mut m = self.clone();
        for i in 0..self.n {
            for j in 0..self.n {
                m[(i, j)] = (self[(i, j)] + self[(j, i)].conj()) * 0.5;
            }
        }
        m
    }

    /// Applies the matrix to a vector.
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.n);
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.n).map(|i| self[(i, j)]).collect()
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.n + j]
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.n, rhs.n, "dimension mismatch in matrix product");
        let n = self.n;
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.n, rhs.n, "dimension mismatch in matrix sum");
        CMatrix {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.n, rhs.n, "dimension mismatch in matrix difference");
        CMatrix {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct Eigh {
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// Unitary whose columns are the matching eigenvectors.
    pub vectors: CMatrix,
}

/// Jacobi rotation parameters `(c, s)` that annihilate the off-diagonal
/// entry `apq` of the real 2×2 block `[[app, apq], [apq, aqq]]`.
#[inline]
fn rotation(app: f64, aqq: f64, apq: f64) -> (f64, f64) {
    let theta = (aqq - app) / (2.0 * apq);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    (c, t * c)
}

/// Cyclic Jacobi diagonalization of a Hermitian matrix.
///
/// Each rotation first removes the phase of the pivot `a[p][q]` with a
/// diagonal unitary, then applies the classic real plane rotation. Sweeps
/// stop once the off-diagonal Frobenius norm drops below [`JACOBI_TOL`].
pub fn eigh(m: &CMatrix) -> Eigh {
    let n = m.dim();
    let mut a = m.hermitian_part();
    let mut v = CMatrix::identity(n);

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off < JACOBI_TOL {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag == 0.0 {
                    continue;
                }
                // Phase fix: column q scaled by w, row q by conj(w).
                let w = (apq / mag).conj();
                for k in 0..n {
                    a[(k, q)] *= w;
                    v[(k, q)] *= w;
                }
                for k in 0..n {
                    a[(q, k)] *= w.conj();
                }
                let (c, s) = rotation(a[(p, p)].re, a[(q, q)].re, mag);
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = akp * c - akq * s;
                    a[(k, q)] = akp * s + akq * c;
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = vkp * c - vkq * s;
                    v[(k, q)] = vkp * s + vkq * c;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = apk * c - aqk * s;
                    a[(q, k)] = apk * s + aqk * c;
                }
                a[(p, q)] = Complex64::new(0.0, 0.0);
                a[(q, p)] = Complex64::new(0.0, 0.0);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vectors = CMatrix::zeros(n);
    for (col, &src) in order.iter().enumerate() {
        for k in 0..n {
            vectors[(k, col)] = v[(k, src)];
        }
    }
    Eigh { values, vectors }
}

/// A cluster of (numerically) equal eigenvalues and the projector onto
/// their joint eigenspace.
#[derive(Clone, Debug)]
pub struct SpectralProjector {
    pub value: f64,
    pub multiplicity: usize,
    pub projector: CMatrix,
}

/// Groups eigenvectors into spectral projectors, merging eigenvalues whose
/// consecutive gap is at most `gap`.
pub fn spectral_projectors(e: &Eigh, gap: f64) -> Vec<SpectralProjector> {
    let n = e.values.len();
    let mut out: Vec<SpectralProjector> = Vec::new();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && e.values[end] - e.values[end - 1] <= gap {
            end += 1;
        }
        let mut projector = CMatrix::zeros(n);
        for col in start..end {
            let vcol = e.vectors.column(col);
            projector = &projector + &CMatrix::outer(&vcol);
        }
        let value = e.values[start..end].iter().sum::<f64>() / (end - start) as f64;
        out.push(SpectralProjector {
            value,
            multiplicity: end - start,
            projector,
        });
        start = end;
    }
    out
}

/// Eigenvalues (ascending) of a real symmetric `N×N` matrix by cyclic Jacobi
/// rotations. Only the upper triangle is read.
pub fn symmetric_eigenvalues<const N: usize>(mut a: [[f64; N]; N]) -> [f64; N] {
    for i in 0..N {
        for j in 0..i {
            a[i][j] = a[j][i];
        }
    }
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..N {
            for q in (p + 1)..N {
                off += a[p][q] * a[p][q];
            }
        }
        if (2.0 * off).sqrt() < JACOBI_TOL {
            break;
        }
        for p in 0..N {
            for q in (p + 1)..N {
                let apq = a[p][q];
                if apq == 0.0 {
                    continue;
                }
                let (c, s) = rotation(a[p][p], a[q][q], apq);
                for row in a.iter_mut() {
                    let (akp, akq) = (row[p], row[q]);
                    row[p] = akp * c - akq * s;
                    row[q] = akp * s + akq * c;
                }
                for k in 0..N {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = apk * c - aqk * s;
                    a[q][k] = apk * s + aqk * c;
                }
                a[p][q] = 0.0;
                a[q][p] = 0.0;
            }
        }
    }
    let mut out = [0.0; N];
    for (i, v) in out.iter_mut().enumerate() {
        *v = a[i][i];
    }
    out.sort_by(f64::total_cmp);
    out
}

/// Householder reduction of a symmetric matrix to tridiagonal form.
/// Returns the diagonal and the sub-diagonal (`off[i]` couples `i` and
/// `i + 1`; the last entry is zero).
fn tridiagonalize<const N: usize>(mut a: [[f64; N]; N]) -> ([f64; N], [f64; N]) {
    for k in 0..N.saturating_sub(2) {
        let norm = (k + 1..N).map(|i| a[i][k] * a[i][k]).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if a[k + 1][k] > 0.0 { -norm } else { norm };
        let mut v = [0.0; N];
        for i in k + 1..N {
            v[i] = a[i][k];
        }
        v[k + 1] -= alpha;
        let vnorm = (k + 1..N).map(|i| v[i] * v[i]).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        for x in v[k + 1..].iter_mut() {
            *x /= vnorm;
        }
        // H A H = A − v wᵀ − w vᵀ with p = A v, w = 2p − 2(vᵀp) v, on the
        // trailing block.
        let mut p = [0.0; N];
        for i in k + 1..N {
            p[i] = (k + 1..N).map(|j| a[i][j] * v[j]).sum();
        }
        let vp: f64 = (k + 1..N).map(|i| v[i] * p[i]).sum();
        let mut w = [0.0; N];
        for i in k + 1..N {
            w[i] = 2.0 * p[i] - 2.0 * vp * v[i];
        }
        for i in k + 1..N {
            for j in k + 1..N {
                a[i][j] -= v[i] * w[j] + w[i] * v[j];
            }
        }
        a[k + 1][k] = alpha;
        a[k][k + 1] = alpha;
        for i in k + 2..N {
            a[i][k] = 0.0;
            a[k][i] = 0.0;
        }
    }
    let mut d = [0.0; N];
    let mut off = [0.0; N];
    for i in 0..N {
        d[i] = a[i][i];
        if i + 1 < N {
            off[i] = a[i + 1][i];
        }
    }
    (d, off)
}

/// Eigenvalues of a symmetric tridiagonal matrix by implicit QL with
/// Wilkinson-type shifts.
fn tridiagonal_eigenvalues<const N: usize>(mut d: [f64; N], mut e: [f64; N]) -> [f64; N] {
    for l in 0..N {
        let mut iterations = 0;
        loop {
            let mut m = l;
            while m + 1 < N {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l || iterations == 64 {
                break;
            }
            iterations += 1;
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = (g * g + 1.0).sqrt();
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = (f * f + g * g).sqrt();
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d.sort_by(f64::total_cmp);
    d
}

/// Smallest eigenvalue of a real symmetric matrix (Householder
/// tridiagonalization followed by implicit QL). This sits in the inner loop
/// of the moment-matrix search, where it is several times faster than
/// [`symmetric_eigenvalues`].
pub fn min_eigenvalue<const N: usize>(a: [[f64; N]; N]) -> f64 {
    let (d, e) = tridiagonalize(a);
    tridiagonal_eigenvalues(d, e)[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn eigh_pauli_y() {
        let y = CMatrix::from_rows(&[vec![c(0., 0.), c(0., -1.)], vec![c(0., 1.), c(0., 0.)]]);
        let e = eigh(&y);
        assert_abs_diff_eq!(e.values[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.values[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn eigh_reconstructs_complex_hermitian() {
        let m = CMatrix::from_rows(&[
            vec![c(2., 0.), c(1., -1.), c(0., 0.5)],
            vec![c(1., 1.), c(-1., 0.), c(0.3, 0.)],
            vec![c(0., -0.5), c(0.3, 0.), c(0.5, 0.)],
        ]);
        let e = eigh(&m);
        let mut d = CMatrix::zeros(3);
        for i in 0..3 {
            d[(i, i)] = c(e.values[i], 0.0);
        }
        let back = &(&e.vectors * &d) * &e.vectors.adjoint();
        assert!((&back - &m).max_abs() < 1e-12);
        let unit = &e.vectors.adjoint() * &e.vectors;
        assert!((&unit - &CMatrix::identity(3)).max_abs() < 1e-12);
        // trace is preserved
        assert_abs_diff_eq!(e.values.iter().sum::<f64>(), 1.5, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_eigenvalues_cluster() {
        let m = CMatrix::from_real(&[
            vec![1., 0., 0., 0.],
            vec![0., -1., 0., 0.],
            vec![0., 0., 1., 0.],
            vec![0., 0., 0., -1.],
        ]);
        let groups = spectral_projectors(&eigh(&m), EIGEN_GAP);
        assert_eq!(groups.len(), 2);
        assert_eq!(groups[0].multiplicity, 2);
        assert_abs_diff_eq!(groups[0].value, -1.0);
        assert_abs_diff_eq!(groups[1].projector.trace().re, 2.0, epsilon = 1e-14);
    }

    #[test]
    fn symmetric_eigenvalues_known() {
        // [[2,1],[1,2]] has eigenvalues 1 and 3.
        let ev = symmetric_eigenvalues([[2.0, 1.0], [1.0, 2.0]]);
        assert_abs_diff_eq!(ev[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ev[1], 3.0, epsilon = 1e-14);
        // rank-one all-ones 5×5: eigenvalues 0 (x4) and 5
        let ev = symmetric_eigenvalues([[1.0; 5]; 5]);
        assert_abs_diff_eq!(ev[0], 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!(ev[4], 5.0, epsilon = 1e-13);
    }

    #[test]
    fn ql_matches_jacobi_on_random_symmetric() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for trial in 0..2000 {
            let mut a = [[0.0; 5]; 5];
            for i in 0..5 {
                for j in i..5 {
                    let x: f64 = rng.random_range(-1.0..1.0);
                    a[i][j] = x;
                    a[j][i] = x;
                }
            }
            // plant degeneracies now and then
            if trial % 3 == 0 {
                a = [[1.0; 5]; 5];
                a[0][4] = rng.random_range(-1.0..1.0);
                a[4][0] = a[0][4];
            }
            let jac = symmetric_eigenvalues(a);
            let (d, e) = tridiagonalize(a);
            let ql = tridiagonal_eigenvalues(d, e);
            for k in 0..5 {
                assert_abs_diff_eq!(jac[k], ql[k], epsilon = 1e-12);
            }
            assert_abs_diff_eq!(min_eigenvalue(a), jac[0], epsilon = 1e-12);
        }
    }

    #[test]
    fn kron_dimensions_and_entries() {
        let z = CMatrix::from_real(&[vec![1., 0.], vec![0., -1.]]);
        let zi = z.kron(&CMatrix::identity(2));
        assert_eq!(zi.dim(), 4);
        assert_eq!(zi[(2, 2)], c(-1., 0.));
        assert_eq!(zi[(1, 1)], c(1., 0.));
    }
}
