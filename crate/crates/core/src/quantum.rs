//! Finite-dimensional quantum kernel: observables, density matrices,
//! Born-rule expectations, commutators, sequential projective measurement
//! and the two-qubit behavior generator.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::behavior::Behavior;
use crate::error::{Error, Result};
use crate::linalg::{eigh, spectral_projectors, CMatrix, EIGEN_GAP};

pub const MAX_DIM: usize = 8;

/// Entrywise tolerance for Hermiticity and unit-norm checks.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Trace tolerance for density matrices.
pub const TRACE_TOL: f64 = 1e-12;

/// Most negative eigenvalue a density matrix may carry.
pub const EIGEN_FLOOR: f64 = -1e-10;

/// Largest imaginary part of `tr(ρA)` attributed to rounding.
pub const IMAGINARY_TOL: f64 = 1e-9;

/// Default threshold on `max |AB − BA|` for [`compatible`].
pub const COMPATIBLE_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

fn check_dim(n: usize) -> Result<()> {
    if n == 0 || n > MAX_DIM {
        return Err(Error::UnsupportedDimension(n));
    }
    Ok(())
}

fn check_same_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// A Hermitian observable on a space of dimension at most [`MAX_DIM`].
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    m: CMatrix,
}

impl HermitianOperator {
    pub fn new(m: CMatrix) -> Result<Self> {
        check_dim(m.dim())?;
        let deviation = m.hermitian_deviation();
        if deviation > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self { m })
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::new(CMatrix::identity(n))
    }

    pub fn pauli_x() -> Self {
        Self {
            m: CMatrix::from_rows(&[vec![ZERO, ONE], vec![ONE, ZERO]]),
        }
    }

    pub fn pauli_y() -> Self {
        Self {
            m: CMatrix::from_rows(&[vec![ZERO, -I], vec![I, ZERO]]),
        }
    }

    pub fn pauli_z() -> Self {
        Self {
            m: CMatrix::from_rows(&[vec![ONE, ZERO], vec![ZERO, -ONE]]),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.dim()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    /// `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim() * other.dim())?;
        Ok(Self {
            m: self.m.kron(&other.m),
        })
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Vec<f64> {
        eigh(&self.m).values
    }
}

/// A density matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState {
    rho: CMatrix,
}

impl QuantumState {
    /// Validates a density matrix: Hermitian, unit trace, no eigenvalue
    /// below [`EIGEN_FLOOR`].
    pub fn from_density(rho: CMatrix) -> Result<Self> {
        check_dim(rho.dim())?;
        let deviation = rho.hermitian_deviation();
        if deviation > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let lowest = eigh(&rho).values[0];
        if lowest < EIGEN_FLOOR {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {lowest:.3e}"
            )));
        }
        Ok(Self { rho })
    }

    /// `|ψ⟩⟨ψ|` for a normalized amplitude vector.
    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        check_dim(psi.len())?;
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!(
                "state vector has norm {norm}, expected 1"
            )));
        }
        Ok(Self {
            rho: CMatrix::outer(psi),
        })
    }

    /// Pure state from an arbitrary non-zero vector, normalizing it first.
    pub fn pure_normalized(psi: &[Complex64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let psi: Vec<Complex64> = psi.iter().map(|z| z / norm).collect();
        check_dim(psi.len())?;
        Ok(Self {
            rho: CMatrix::outer(&psi),
        })
    }

    /// Computational basis state `|k⟩`.
    pub fn basis(n: usize, k: usize) -> Result<Self> {
        check_dim(n)?;
        if k >= n {
            return Err(Error::InvalidState(format!(
                "basis index {k} out of range for dimension {n}"
            )));
        }
        let mut psi = vec![ZERO; n];
        psi[k] = ONE;
        Self::pure(&psi)
    }

    pub fn maximally_mixed(n: usize) -> Result<Self> {
        check_dim(n)?;
        Ok(Self {
            rho: CMatrix::identity(n).scale_real(1.0 / n as f64),
        })
    }

    pub fn dim(&self) -> usize {
        self.rho.dim()
    }

    pub fn rho(&self) -> &CMatrix {
        &self.rho
    }

    /// `tr(ρ²)`.
    pub fn purity(&self) -> f64 {
        (&self.rho * &self.rho).trace().re
    }

    /// Born weights over the spectral projectors of `obs`, as
    /// `(eigenvalue, probability)` pairs in ascending eigenvalue order.
    pub fn born_weights(&self, obs: &HermitianOperator) -> Result<Vec<(f64, f64)>> {
        let m = ProjectiveMeasurement::new(obs);
        m.probabilities(self)
            .map(|p| m.values().into_iter().zip(p).collect())
    }
}

/// Unit 3-vector selecting a spin measurement axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeasurementDirection {
    x: f64,
    y: f64,
    z: f64,
}

impl MeasurementDirection {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let norm = (x * x + y * y + z * z).sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > HERMITIAN_TOL {
            return Err(Error::NonUnitVector { norm });
        }
        Ok(Self { x, y, z })
    }

    /// Normalizes an arbitrary non-zero vector.
    pub fn normalized(x: f64, y: f64, z: f64) -> Result<Self> {
        let norm = (x * x + y * y + z * z).sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NonUnitVector { norm });
        }
        Ok(Self {
            x: x / norm,
            y: y / norm,
            z: z / norm,
        })
    }

    /// Direction in the x–z plane at angle `theta` (radians) from the z axis.
    pub fn planar(theta: f64) -> Self {
        Self {
            x: theta.sin(),
            y: 0.0,
            z: theta.cos(),
        }
    }

    pub fn planar_degrees(deg: f64) -> Self {
        Self::planar(deg.to_radians())
    }

    pub fn components(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }
}

/// Outcomes of a sequence of dichotomic measurements and the final state.
#[derive(Clone, Debug)]
pub struct OutcomeRecord {
    pub values: Vec<i8>,
    pub post_state: QuantumState,
}

/// `n·σ`.
pub fn spin_observable(n: &MeasurementDirection) -> HermitianOperator {
    let [x, y, z] = n.components();
    HermitianOperator {
        m: CMatrix::from_rows(&[
            vec![Complex64::new(z, 0.0), Complex64::new(x, -y)],
            vec![Complex64::new(x, y), Complex64::new(-z, 0.0)],
        ]),
    }
}

/// `(I + s·n·σ)/2`, the eigenprojector of `n·σ` for outcome `s = ±1`.
fn spin_projector(n: &MeasurementDirection, s: i8) -> CMatrix {
    let s = f64::from(s);
    let [x, y, z] = n.components();
    CMatrix::from_rows(&[
        vec![
            Complex64::new(0.5 * (1.0 + s * z), 0.0),
            Complex64::new(0.5 * s * x, -0.5 * s * y),
        ],
        vec![
            Complex64::new(0.5 * s * x, 0.5 * s * y),
            Complex64::new(0.5 * (1.0 - s * z), 0.0),
        ],
    ])
}

fn real_trace_product(rho: &CMatrix, op: &CMatrix) -> Result<f64> {
    check_same_dim(rho.dim(), op.dim())?;
    // tr(ρA) = Σ_ij ρ_ij A_ji
    let n = rho.dim();
    let mut t = ZERO;
    for i in 0..n {
        for j in 0..n {
            t += rho[(i, j)] * op[(j, i)];
        }
    }
    if t.im.abs() > IMAGINARY_TOL {
        return Err(Error::ImaginaryResidue {
            residue: t.im.abs(),
        });
    }
    Ok(t.re)
}

/// `tr(ρA)`.
pub fn expectation(state: &QuantumState, obs: &HermitianOperator) -> Result<f64> {
    real_trace_product(&state.rho, &obs.m)
}

/// `AB − BA`.
pub fn commutator(a: &HermitianOperator, b: &HermitianOperator) -> Result<CMatrix> {
    check_same_dim(a.dim(), b.dim())?;
    Ok(&(&a.m * &b.m) - &(&b.m * &a.m))
}

/// True iff every entry of `[A, B]` is smaller than `tol` in modulus.
pub fn compatible(a: &HermitianOperator, b: &HermitianOperator, tol: f64) -> Result<bool> {
    Ok(commutator(a, b)?.max_abs() < tol)
}

/// `⟨AB⟩` for a commuting pair.
pub fn joint_expectation(
    state: &QuantumState,
    a: &HermitianOperator,
    b: &HermitianOperator,
) -> Result<f64> {
    check_same_dim(state.dim(), a.dim())?;
    let norm = commutator(a, b)?.max_abs();
    if norm >= COMPATIBLE_TOL {
        return Err(Error::Incompatible { norm });
    }
    real_trace_product(&state.rho, &(&a.m * &b.m))
}

/// A projective measurement built from an observable's spectral projectors.
///
/// Building the decomposition once and reusing it is much cheaper than
/// re-diagonalizing the observable on every shot.
#[derive(Clone, Debug)]
pub struct ProjectiveMeasurement {
    dim: usize,
    outcomes: Vec<(f64, CMatrix)>,
}

/// Result of one projective measurement.
#[derive(Clone, Debug)]
pub struct Measured {
    pub index: usize,
    pub value: f64,
    pub probability: f64,
    pub post_state: QuantumState,
}

impl ProjectiveMeasurement {
    pub fn new(obs: &HermitianOperator) -> Self {
        let groups = spectral_projectors(&eigh(&obs.m), EIGEN_GAP);
        Self {
            dim: obs.dim(),
            outcomes: groups.into_iter().map(|g| (g.value, g.projector)).collect(),
        }
    }

    /// Measurement of a dichotomic observable; fails unless every eigenvalue
    /// is ±1 (within [`EIGEN_GAP`]).
    pub fn dichotomic(obs: &HermitianOperator) -> Result<Self> {
        let mut m = Self::new(obs);
        for (value, _) in m.outcomes.iter_mut() {
            if (*value - 1.0).abs() <= EIGEN_GAP {
                *value = 1.0;
            } else if (*value + 1.0).abs() <= EIGEN_GAP {
                *value = -1.0;
            } else {
                return Err(Error::NotDichotomic { eigenvalue: *value });
            }
        }
        Ok(m)
    }

    pub fn values(&self) -> Vec<f64> {
        self.outcomes.iter().map(|(v, _)| *v).collect()
    }

    pub fn projectors(&self) -> impl Iterator<Item = &CMatrix> {
        self.outcomes.iter().map(|(_, p)| p)
    }

    /// Born probabilities `tr(ρ P_k)`, clamped at zero.
    pub fn probabilities(&self, state: &QuantumState) -> Result<Vec<f64>> {
        check_same_dim(self.dim, state.dim())?;
        self.outcomes
            .iter()
            .map(|(_, p)| real_trace_product(&state.rho, p).map(|x| x.max(0.0)))
            .collect()
    }

    /// Samples one outcome and collapses the state onto its eigenspace.
    ///
    /// The outcome is the first branch whose cumulative probability exceeds
    /// a uniform deviate; zero-probability branches are never chosen.
    pub fn measure<R: Rng + ?Sized>(&self, state: &QuantumState, rng: &mut R) -> Result<Measured> {
        let probs = self.probabilities(state)?;
        let u: f64 = rng.random();
        let mut cumulative = 0.0;
        let mut chosen = None;
        for (k, &p) in probs.iter().enumerate() {
            if p <= 0.0 {
                continue;
            }
            cumulative += p;
            chosen = Some(k);
            if u < cumulative {
                break;
            }
        }
        let index = chosen.ok_or_else(|| {
            Error::InvalidState("every measurement branch has zero probability".into())
        })?;
        let probability = probs[index];
        let proj = &self.outcomes[index].1;
        let collapsed = (&(proj * &state.rho) * proj).scale_real(1.0 / probability);
        let mut rho = collapsed.hermitian_part();
        // renormalize the trace exactly
        let tr = rho.trace().re;
        rho = rho.scale_real(1.0 / tr);
        Ok(Measured {
            index,
            value: self.outcomes[index].0,
            probability,
            post_state: QuantumState { rho },
        })
    }
}

/// Successive projective measurements of dichotomic observables with
/// state collapse between them, driven by an explicit generator.
pub fn measure_sequence_with<R: Rng + ?Sized>(
    state: &QuantumState,
    measurements: &[ProjectiveMeasurement],
    rng: &mut R,
) -> Result<OutcomeRecord> {
    let mut current = state.clone();
    let mut values = Vec::with_capacity(measurements.len());
    for m in measurements {
        let r = m.measure(&current, rng)?;
        values.push(if r.value > 0.0 { 1 } else { -1 });
        current = r.post_state;
    }
    Ok(OutcomeRecord {
        values,
        post_state: current,
    })
}

/// Successive dichotomic measurements, deterministic in `seed`.
pub fn measure_sequence(
    state: &QuantumState,
    observables: &[HermitianOperator],
    seed: u64,
) -> Result<OutcomeRecord> {
    let measurements = observables
        .iter()
        .map(|o| {
            check_same_dim(state.dim(), o.dim())?;
            ProjectiveMeasurement::dichotomic(o)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    measure_sequence_with(state, &measurements, &mut rng)
}

/// `|ψ⁻⟩ = (|01⟩ − |10⟩)/√2`.
pub fn singlet_state() -> QuantumState {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let psi = [ZERO, Complex64::new(h, 0.0), Complex64::new(-h, 0.0), ZERO];
    QuantumState {
        rho: CMatrix::outer(&psi),
    }
}

/// `v·|ψ⁻⟩⟨ψ⁻| + (1 − v)·I/4`.
pub fn werner_state(v: f64) -> Result<QuantumState> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::OutOfRange {
            name: "visibility",
            value: v,
            range: "[0, 1]",
        });
    }
    let singlet = singlet_state();
    let noise = CMatrix::identity(4).scale_real((1.0 - v) / 4.0);
    Ok(QuantumState {
        rho: &singlet.rho.scale_real(v) + &noise,
    })
}

/// `p(a,b|x,y) = tr(ρ · Π_a^{a_x} ⊗ Π_b^{b_y})` for spin measurements along
/// the given directions.
pub fn two_qubit_behavior(
    state: &QuantumState,
    alice: [MeasurementDirection; 2],
    bob: [MeasurementDirection; 2],
) -> Result<Behavior> {
    check_same_dim(4, state.dim())?;
    let mut p = [[[[0.0; 2]; 2]; 2]; 2];
    for (x, dir_a) in alice.iter().enumerate() {
        for (y, dir_b) in bob.iter().enumerate() {
            for (ai, sa) in [1i8, -1].into_iter().enumerate() {
                let pa = spin_projector(dir_a, sa);
                for (bi, sb) in [1i8, -1].into_iter().enumerate() {
                    let joint = pa.kron(&spin_projector(dir_b, sb));
                    p[x][y][ai][bi] = real_trace_product(&state.rho, &joint)?.max(0.0);
                }
            }
        }
    }
    Behavior::new(p)
}

/// Random sampling helpers for property tests, benches and fuzzing.
pub mod random {
    use super::*;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian_complex<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im)
    }

    pub fn unit_vector<R: Rng + ?Sized>(rng: &mut R) -> MeasurementDirection {
        loop {
            let v: [f64; 3] = [
                StandardNormal.sample(rng),
                StandardNormal.sample(rng),
                StandardNormal.sample(rng),
            ];
            if let Ok(d) = MeasurementDirection::normalized(v[0], v[1], v[2]) {
                return d;
            }
        }
    }

    /// Haar-random pure state.
    pub fn pure_state<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<QuantumState> {
        let psi: Vec<Complex64> = (0..n).map(|_| gaussian_complex(rng)).collect();
        QuantumState::pure_normalized(&psi)
    }

    /// Ginibre-distributed mixed state `GG†/tr(GG†)`.
    pub fn mixed_state<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<QuantumState> {
        check_dim(n)?;
        let mut g = CMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                g[(i, j)] = gaussian_complex(rng);
            }
        }
        let rho = &g * &g.adjoint();
        let tr = rho.trace().re;
        Ok(QuantumState {
            rho: rho.scale_real(1.0 / tr).hermitian_part(),
        })
    }

    /// Haar-ish random unitary from Gram–Schmidt on Gaussian columns.
    pub fn unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
        let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(n);
        while cols.len() < n {
            let mut v: Vec<Complex64> = (0..n).map(|_| gaussian_complex(rng)).collect();
            for c in &cols {
                let overlap: Complex64 = c.iter().zip(&v).map(|(ci, vi)| ci.conj() * vi).sum();
                for (vi, ci) in v.iter_mut().zip(c) {
                    *vi -= overlap * ci;
                }
            }
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm > 1e-8 {
                cols.push(v.into_iter().map(|z| z / norm).collect());
            }
        }
        let mut u = CMatrix::zeros(n);
        for (j, c) in cols.iter().enumerate() {
            for i in 0..n {
                u[(i, j)] = c[i];
            }
        }
        u
    }

    /// `U diag(values) U†`.
    pub fn observable_in_basis(u: &CMatrix, values: &[f64]) -> Result<HermitianOperator> {
        let n = u.dim();
        check_same_dim(n, values.len())?;
        let mut d = CMatrix::zeros(n);
        for (i, &v) in values.iter().enumerate() {
            d[(i, i)] = Complex64::new(v, 0.0);
        }
        HermitianOperator::new((&(u * &d) * &u.adjoint()).hermitian_part())
    }

    /// ±1 spectrum with both signs present.
    pub fn dichotomic_spectrum<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
        assert!(n >= 2);
        loop {
            let s: Vec<f64> = (0..n)
                .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
                .collect();
            if s.contains(&1.0) && s.contains(&-1.0) {
                return s;
            }
        }
    }

    /// Random Hermitian matrix with Gaussian entries.
    pub fn hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<HermitianOperator> {
        let mut g = CMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                g[(i, j)] = gaussian_complex(rng);
            }
        }
        HermitianOperator::new(g.hermitian_part())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};

    fn zz() -> HermitianOperator {
        HermitianOperator::pauli_z()
            .kron(&HermitianOperator::pauli_z())
            .unwrap()
    }

    #[test]
    fn spin_observable_axes() {
        let z = spin_observable(&MeasurementDirection::new(0., 0., 1.).unwrap());
        assert_eq!(z, HermitianOperator::pauli_z());
        let x = spin_observable(&MeasurementDirection::new(1., 0., 0.).unwrap());
        assert_eq!(x, HermitianOperator::pauli_x());
        let d = MeasurementDirection::new(FRAC_1_SQRT_2, 0., FRAC_1_SQRT_2).unwrap();
        let ev = spin_observable(&d).eigenvalues();
        assert_abs_diff_eq!(ev[0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ev[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn non_unit_direction_reports_norm() {
        match MeasurementDirection::new(1., 1., 0.) {
            Err(Error::NonUnitVector { norm }) => assert_abs_diff_eq!(norm, 2f64.sqrt()),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn expectation_examples() {
        let zero = QuantumState::basis(2, 0).unwrap();
        assert_abs_diff_eq!(
            expectation(&zero, &HermitianOperator::pauli_z()).unwrap(),
            1.0
        );
        // ⟨0|n·σ|0⟩ = n_z
        let n = MeasurementDirection::new(0.6, 0.0, 0.8).unwrap();
        assert_abs_diff_eq!(
            expectation(&zero, &spin_observable(&n)).unwrap(),
            0.8,
            epsilon = 1e-15
        );
        let err = expectation(&singlet_state(), &HermitianOperator::pauli_z()).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn singlet_correlator_is_minus_dot() {
        let a = MeasurementDirection::planar(0.3);
        let b = MeasurementDirection::new(0.0, 0.6, 0.8).unwrap();
        let ab = spin_observable(&a).kron(&spin_observable(&b)).unwrap();
        assert_abs_diff_eq!(
            expectation(&singlet_state(), &ab).unwrap(),
            -a.dot(&b),
            epsilon = 1e-12
        );
    }

    #[test]
    fn commutator_of_pauli_x_y_is_2i_sigma_z() {
        let c = commutator(&HermitianOperator::pauli_x(), &HermitianOperator::pauli_y()).unwrap();
        let expected = HermitianOperator::pauli_z()
            .matrix()
            .scale(Complex64::new(0.0, 2.0));
        assert!((&c - &expected).max_abs() < 1e-15);
        assert!(!compatible(
            &HermitianOperator::pauli_x(),
            &HermitianOperator::pauli_y(),
            COMPATIBLE_TOL
        )
        .unwrap());
    }

    #[test]
    fn disjoint_factors_and_self_commute() {
        let id = HermitianOperator::identity(2).unwrap();
        let zi = HermitianOperator::pauli_z().kron(&id).unwrap();
        let iz = id.kron(&HermitianOperator::pauli_z()).unwrap();
        assert!(compatible(&zi, &iz, COMPATIBLE_TOL).unwrap());
        assert!(compatible(&zi, &zi, COMPATIBLE_TOL).unwrap());
        assert!(compatible(&zi, &HermitianOperator::pauli_z(), COMPATIBLE_TOL).is_err());
    }

    #[test]
    fn joint_expectation_examples() {
        let id = HermitianOperator::identity(2).unwrap();
        let zi = HermitianOperator::pauli_z().kron(&id).unwrap();
        let iz = id.kron(&HermitianOperator::pauli_z()).unwrap();
        assert_abs_diff_eq!(
            joint_expectation(&singlet_state(), &zi, &iz).unwrap(),
            -1.0,
            epsilon = 1e-15
        );
        let s00 = QuantumState::basis(4, 0).unwrap();
        assert_abs_diff_eq!(joint_expectation(&s00, &zi, &iz).unwrap(), 1.0);
        let id4 = HermitianOperator::identity(4).unwrap();
        let w = werner_state(0.3).unwrap();
        assert_abs_diff_eq!(
            joint_expectation(&w, &id4, &zz()).unwrap(),
            expectation(&w, &zz()).unwrap(),
            epsilon = 1e-15
        );
        let err = joint_expectation(
            &QuantumState::basis(2, 0).unwrap(),
            &HermitianOperator::pauli_x(),
            &HermitianOperator::pauli_y(),
        )
        .unwrap_err();
        match err {
            Error::Incompatible { norm } => assert_abs_diff_eq!(norm, 2.0, epsilon = 1e-15),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn repeated_eigenstate_measurement() {
        let zero = QuantumState::basis(2, 0).unwrap();
        let z = HermitianOperator::pauli_z();
        for seed in 0..20 {
            let r = measure_sequence(&zero, &[z.clone(), z.clone(), z.clone()], seed).unwrap();
            assert_eq!(r.values, vec![1, 1, 1]);
        }
    }

    #[test]
    fn measure_sequence_is_seed_deterministic() {
        let zero = QuantumState::basis(2, 0).unwrap();
        let obs = [
            HermitianOperator::pauli_z(),
            HermitianOperator::pauli_x(),
            HermitianOperator::pauli_z(),
        ];
        let a = measure_sequence(&zero, &obs, 7).unwrap();
        let b = measure_sequence(&zero, &obs, 7).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(a.post_state, b.post_state);
    }

    #[test]
    fn interleaved_incompatible_measurement_randomizes() {
        // P(first = third) = 1/2 for z, x, z on |0⟩.
        let zero = QuantumState::basis(2, 0).unwrap();
        let ms = [
            ProjectiveMeasurement::dichotomic(&HermitianOperator::pauli_z()).unwrap(),
            ProjectiveMeasurement::dichotomic(&HermitianOperator::pauli_x()).unwrap(),
            ProjectiveMeasurement::dichotomic(&HermitianOperator::pauli_z()).unwrap(),
        ];
        let n = 100_000;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let same = (0..n)
            .filter(|_| {
                let r = measure_sequence_with(&zero, &ms, &mut rng).unwrap();
                r.values[0] == r.values[2]
            })
            .count();
        assert!((same as f64 / n as f64 - 0.5).abs() < 0.01);
    }

    #[test]
    fn zero_probability_branch_never_selected() {
        let one = QuantumState::basis(2, 1).unwrap();
        let m = ProjectiveMeasurement::dichotomic(&HermitianOperator::pauli_z()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            assert_eq!(m.measure(&one, &mut rng).unwrap().value, -1.0);
        }
    }

    #[test]
    fn non_dichotomic_rejected() {
        let m = CMatrix::from_real(&[vec![2.0, 0.0], vec![0.0, -1.0]]);
        let obs = HermitianOperator::new(m).unwrap();
        let err = measure_sequence(&QuantumState::basis(2, 0).unwrap(), &[obs], 0).unwrap_err();
        assert!(matches!(err, Error::NotDichotomic { .. }));
    }

    #[test]
    fn non_hermitian_rejected() {
        let m = CMatrix::from_real(&[vec![0.0, 1.0], vec![0.0, 0.0]]);
        assert!(matches!(
            HermitianOperator::new(m),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn state_validation() {
        assert!(
            QuantumState::from_density(CMatrix::from_real(&[vec![0.5, 0.], vec![0., 0.4]]))
                .is_err()
        );
        assert!(
            QuantumState::from_density(CMatrix::from_real(&[vec![1.5, 0.], vec![0., -0.5]]))
                .is_err()
        );
        assert!(QuantumState::from_density(CMatrix::identity(9).scale_real(1.0 / 9.0)).is_err());
        let s = singlet_state();
        assert_abs_diff_eq!(s.purity(), 1.0, epsilon = 1e-12);
        assert!(QuantumState::from_density(s.rho().clone()).is_ok());
    }

    #[test]
    fn werner_examples() {
        let mixed = werner_state(0.0).unwrap();
        for obs in [
            zz(),
            HermitianOperator::pauli_x()
                .kron(&HermitianOperator::identity(2).unwrap())
                .unwrap(),
        ] {
            assert_abs_diff_eq!(expectation(&mixed, &obs).unwrap(), 0.0, epsilon = 1e-15);
        }
        assert_eq!(werner_state(1.0).unwrap(), singlet_state());
        assert_abs_diff_eq!(
            expectation(&werner_state(0.5).unwrap(), &zz()).unwrap(),
            -0.5,
            epsilon = 1e-15
        );
        assert!(werner_state(1.01).is_err());
        assert!(werner_state(-0.1).is_err());
        assert!(QuantumState::from_density(werner_state(0.37).unwrap().rho().clone()).is_ok());
    }

    #[test]
    fn singlet_zz_behavior() {
        let z = MeasurementDirection::planar(0.0);
        let b = two_qubit_behavior(&singlet_state(), [z, z], [z, z]).unwrap();
        for x in 0..2 {
            for y in 0..2 {
                assert_abs_diff_eq!(b.p(x, y, 0, 1), 0.5, epsilon = 1e-15);
                assert_abs_diff_eq!(b.p(x, y, 1, 0), 0.5, epsilon = 1e-15);
                assert_abs_diff_eq!(b.p(x, y, 0, 0), 0.0, epsilon = 1e-15);
                assert_abs_diff_eq!(b.p(x, y, 1, 1), 0.0, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn maximally_mixed_behavior_is_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let dirs = [random::unit_vector(&mut rng), random::unit_vector(&mut rng)];
        let b = two_qubit_behavior(&QuantumState::maximally_mixed(4).unwrap(), dirs, dirs).unwrap();
        for &v in b.table().iter().flatten().flatten().flatten() {
            assert_abs_diff_eq!(v, 0.25, epsilon = 1e-15);
        }
    }

    #[test]
    fn planar_singlet_correlators() {
        let alice = [
            MeasurementDirection::planar(0.0),
            MeasurementDirection::planar(FRAC_PI_2),
        ];
        let bob = [
            MeasurementDirection::planar(FRAC_PI_4),
            MeasurementDirection::planar(3.0 * FRAC_PI_4),
        ];
        let b = two_qubit_behavior(&singlet_state(), alice, bob).unwrap();
        let thetas_a = [0.0, FRAC_PI_2];
        let thetas_b = [FRAC_PI_4, 3.0 * PI / 4.0];
        for x in 0..2 {
            for y in 0..2 {
                let e = b.p(x, y, 0, 0) + b.p(x, y, 1, 1) - b.p(x, y, 0, 1) - b.p(x, y, 1, 0);
                assert_abs_diff_eq!(e, -(thetas_a[x] - thetas_b[y]).cos(), epsilon = 1e-12);
            }
        }
        assert!(two_qubit_behavior(&QuantumState::basis(2, 0).unwrap(), alice, bob).is_err());
    }

    #[test]
    fn born_weights_normalized() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 1..=6 {
            let s = random::mixed_state(n, &mut rng).unwrap();
            let o = random::hermitian(n, &mut rng).unwrap();
            let w = s.born_weights(&o).unwrap();
            assert_abs_diff_eq!(w.iter().map(|(_, p)| p).sum::<f64>(), 1.0, epsilon = 1e-10);
            assert!(w.iter().all(|&(_, p)| p >= 0.0));
        }
    }
}
