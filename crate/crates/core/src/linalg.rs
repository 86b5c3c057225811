//! Dense Hermitian linear algebra.
//!
//! Everything downstream manipulates dense complex square matrices asserted
//! self-adjoint: eigendecomposition, functional calculus on the spectrum,
//! state-weighted 2-norms, and positivity/contraction checks. The central
//! primitive is [`spectral_projection_upper_half`]: the orthogonal projection
//! onto the span of eigenvectors with eigenvalue in the closed interval
//! `[1/2, 1]`, which rounds a positive contraction to the nearest projection
//! in any state 2-norm up to a factor of two (see [`crate::lift`]).

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

use crate::config::Tolerances;
use crate::rng::gaussian;

/// Dense complex matrix carrier used throughout the crate.
pub type CMatrix = DMatrix<Complex64>;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix must be square and nonempty, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix entries must be finite")]
    NonFiniteEntry,
    #[error("matrix is not Hermitian: asymmetry {defect:.3e} exceeds tolerance {tol:.3e}")]
    NonHermitianInput { defect: f64, tol: f64 },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error(
        "matrix is not a positive contraction: spectrum [{min:.6e}, {max:.6e}] leaves [0, 1] by more than {tol:.3e}"
    )]
    NotPositiveContraction { min: f64, max: f64, tol: f64 },
    #[error("eigendecomposition failed: {0}")]
    NumericalFailure(String),
    #[error("density is not positive semidefinite: min eigenvalue {min:.6e} below -{tol:.3e}")]
    NotPositiveSemidefinite { min: f64, tol: f64 },
    #[error("density trace {trace:.12} differs from 1 by more than {tol:.3e}")]
    TraceNotOne { trace: f64, tol: f64 },
}

/// Dense complex square matrix validated to be self-adjoint.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    mat: CMatrix,
}

impl HermitianMatrix {
    /// Validates squareness, finiteness and hermiticity within `tol.herm`.
    /// The entries are stored as given; use [`HermitianMatrix::symmetrized`]
    /// for computed results that should be exactly self-adjoint.
    pub fn new(mat: CMatrix, tol: &Tolerances) -> Result<Self, LinalgError> {
        let (rows, cols) = mat.shape();
        if rows != cols || rows == 0 {
            return Err(LinalgError::NotSquare { rows, cols });
        }
        if mat.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(LinalgError::NonFiniteEntry);
        }
        let mut defect: f64 = 0.0;
        for i in 0..rows {
            for j in i..cols {
                defect = defect.max((mat[(i, j)] - mat[(j, i)].conj()).norm());
            }
        }
        if defect > tol.herm {
            return Err(LinalgError::NonHermitianInput { defect, tol: tol.herm });
        }
        Ok(HermitianMatrix { mat })
    }

    /// Forces exact hermiticity by averaging with the adjoint. Intended for
    /// results that are self-adjoint in exact arithmetic (sums, conjugations,
    /// spectral reconstructions) and only carry rounding asymmetry.
    pub fn symmetrized(mat: CMatrix) -> Self {
        let h = (&mat + mat.adjoint()) * Complex64::new(0.5, 0.0);
        HermitianMatrix { mat: h }
    }

    pub fn identity(dim: usize) -> Self {
        HermitianMatrix { mat: CMatrix::identity(dim, dim) }
    }

    pub fn zeros(dim: usize) -> Self {
        HermitianMatrix { mat: CMatrix::zeros(dim, dim) }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        HermitianMatrix {
            mat: CMatrix::from_fn(n, n, |i, j| {
                if i == j { Complex64::new(diag[i], 0.0) } else { Complex64::new(0.0, 0.0) }
            }),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    /// Entrywise sum; Hermitian by linearity.
    pub fn add(&self, other: &Self) -> Result<Self, LinalgError> {
        self.check_dim(other.dim())?;
        Ok(HermitianMatrix { mat: &self.mat + &other.mat })
    }

    /// Entrywise difference; Hermitian by linearity.
    pub fn sub(&self, other: &Self) -> Result<Self, LinalgError> {
        self.check_dim(other.dim())?;
        Ok(HermitianMatrix { mat: &self.mat - &other.mat })
    }

    /// Real scalar multiple; Hermitian since the scalar is real.
    pub fn scale(&self, s: f64) -> Self {
        HermitianMatrix { mat: &self.mat * Complex64::new(s, 0.0) }
    }

    /// `a^2`, symmetrized against rounding asymmetry.
    pub fn square(&self) -> Self {
        HermitianMatrix::symmetrized(&self.mat * &self.mat)
    }

    /// Two-sided compression `c * a * c` for self-adjoint `c`, symmetrized.
    pub fn compress_by(&self, c: &Self) -> Result<Self, LinalgError> {
        self.check_dim(c.dim())?;
        Ok(HermitianMatrix::symmetrized(&c.mat * &self.mat * &c.mat))
    }

    /// Largest entrywise modulus of the difference.
    pub fn max_entry_distance(&self, other: &Self) -> f64 {
        (&self.mat - &other.mat).iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    fn check_dim(&self, other: usize) -> Result<(), LinalgError> {
        if self.dim() != other {
            return Err(LinalgError::DimensionMismatch { left: self.dim(), right: other });
        }
        Ok(())
    }
}

/// A state against which 2-norms are measured: a positive semidefinite
/// density with unit trace. `phi(x) = trace(density * x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVectorSpec {
    density: HermitianMatrix,
}

impl StateVectorSpec {
    pub fn new(density: HermitianMatrix, tol: &Tolerances) -> Result<Self, LinalgError> {
        let eig = eig_hermitian(&density, tol)?;
        let min = eig.eigenvalues[0];
        if min < -tol.psd {
            return Err(LinalgError::NotPositiveSemidefinite { min, tol: tol.psd });
        }
        let trace = normalized_trace(&density) * density.dim() as f64;
        if (trace - 1.0).abs() > tol.trace {
            return Err(LinalgError::TraceNotOne { trace, tol: tol.trace });
        }
        Ok(StateVectorSpec { density })
    }

    /// The normalized matrix trace: density `I/n`.
    pub fn normalized_trace(dim: usize) -> Self {
        StateVectorSpec { density: HermitianMatrix::identity(dim).scale(1.0 / dim as f64) }
    }

    /// Random faithful state: Haar-conjugated diagonal density with
    /// eigenvalues `0.1 + u_i` (u uniform) normalized to unit trace, so the
    /// smallest eigenvalue stays bounded away from zero.
    pub fn random_faithful<R: Rng>(dim: usize, rng: &mut R) -> Self {
        let raw: Vec<f64> = (0..dim).map(|_| 0.1 + rng.gen::<f64>()).collect();
        let total: f64 = raw.iter().sum();
        let diag: Vec<f64> = raw.iter().map(|v| v / total).collect();
        let u = haar_unitary(dim, rng);
        let d = HermitianMatrix::from_real_diagonal(&diag);
        let density = HermitianMatrix::symmetrized(&u * d.as_matrix() * u.adjoint());
        StateVectorSpec { density }
    }

    pub fn dim(&self) -> usize {
        self.density.dim()
    }

    pub fn density(&self) -> &HermitianMatrix {
        &self.density
    }
}

/// Eigendecomposition of a Hermitian matrix: real eigenvalues ascending,
/// orthonormal eigenvector columns in matching order.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl EigenSystem {
    /// Max entrywise modulus of `V diag(lambda) V* - a`.
    pub fn reconstruction_error(&self, a: &HermitianMatrix) -> f64 {
        let n = self.eigenvalues.len();
        let d = CMatrix::from_fn(n, n, |i, j| {
            if i == j { Complex64::new(self.eigenvalues[i], 0.0) } else { Complex64::default() }
        });
        let rec = &self.eigenvectors * d * self.eigenvectors.adjoint();
        (rec - a.as_matrix()).iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// Eigendecomposition with eigenvalues sorted ascending. Ties keep the order
/// produced by the factorization, which is deterministic for a fixed input.
/// The reconstruction residual is verified against `tol.eig` before
/// returning.
///
/// The tridiagonal QL factorization alone can lose several digits on tightly
/// clustered spectra (projections perturbed at the 1e-2 scale cluster
/// eigenvalues near 0 and 1), so its basis is polished with Jacobi rotation
/// sweeps until the rotated matrix is diagonal to machine precision.
pub fn eig_hermitian(a: &HermitianMatrix, tol: &Tolerances) -> Result<EigenSystem, LinalgError> {
    let n = a.dim();
    let (mut vectors, ql_converged) =
        match nalgebra::SymmetricEigen::try_new(a.as_matrix().clone(), f64::EPSILON, 10_000) {
            Some(sym) => (sym.eigenvectors, true),
            None => (CMatrix::identity(n, n), false),
        };
    let mut rotated = vectors.adjoint() * a.as_matrix() * &vectors;
    let max_sweeps = if ql_converged { 10 } else { 50 };
    if !jacobi_diagonalize(&mut rotated, &mut vectors, max_sweeps) {
        return Err(LinalgError::NumericalFailure(
            "jacobi sweeps did not reach a diagonal matrix".into(),
        ));
    }

    let diag: Vec<f64> = (0..n).map(|i| rotated[(i, i)].re).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).expect("finite eigenvalues"));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let mut eigenvectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &vectors.column(src));
    }

    let system = EigenSystem { eigenvalues, eigenvectors };
    let err = system.reconstruction_error(a);
    if err > tol.eig {
        return Err(LinalgError::NumericalFailure(format!(
            "eigendecomposition residual {err:.3e} exceeds tolerance {:.3e}",
            tol.eig
        )));
    }
    Ok(system)
}

/// Cyclic complex Jacobi sweeps on a Hermitian matrix `b`, accumulating the
/// rotations into `v`. Returns true once every off-diagonal modulus is below
/// a few machine epsilons of the matrix scale.
fn jacobi_diagonalize(b: &mut CMatrix, v: &mut CMatrix, max_sweeps: usize) -> bool {
    let n = b.nrows();
    if n < 2 {
        return true;
    }
    let scale = b.iter().map(|c| c.norm()).fold(0.0f64, f64::max).max(1e-300);
    // Each sweep reintroduces O(n eps) rounding dirt into entries it already
    // killed, so the reachable floor grows with n.
    let stop = 8.0 * n as f64 * f64::EPSILON * scale;
    for _ in 0..=max_sweeps {
        let mut off: f64 = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(b[(p, q)].norm());
            }
        }
        if off <= stop {
            return true;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let g = b[(p, q)];
                let mag = g.norm();
                if mag <= stop * 1e-2 {
                    continue;
                }
                let alpha = b[(p, p)].re;
                let beta = b[(q, q)].re;
                let phase = g / mag;
                let tau = (alpha - beta) / (2.0 * mag);
                let t = if tau == 0.0 {
                    1.0
                } else {
                    tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let cs = Complex64::new(c, 0.0);
                let sp = phase * s;
                // b <- b * J with J = [[c, -s e^{i phi}], [s e^{-i phi}, c]]
                // acting on columns (p, q), then b <- J^* b on the rows, and
                // the same column update accumulates into v.
                for k in 0..n {
                    let bkp = b[(k, p)];
                    let bkq = b[(k, q)];
                    b[(k, p)] = cs * bkp + sp.conj() * bkq;
                    b[(k, q)] = cs * bkq - sp * bkp;
                }
                for k in 0..n {
                    let bpk = b[(p, k)];
                    let bqk = b[(q, k)];
                    b[(p, k)] = cs * bpk + sp * bqk;
                    b[(q, k)] = cs * bqk - sp.conj() * bpk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = cs * vkp + sp.conj() * vkq;
                    v[(k, q)] = cs * vkq - sp * vkp;
                }
            }
        }
    }
    false
}

/// `(1/dim) * sum_i a[i][i]`, with imaginary parts of the diagonal (which are
/// zero for a valid Hermitian matrix up to rounding) discarded.
pub fn normalized_trace(a: &HermitianMatrix) -> f64 {
    let n = a.dim();
    (0..n).map(|i| a.as_matrix()[(i, i)].re).sum::<f64>() / n as f64
}

/// State 2-norm `sqrt(phi(x* x))` of a general square matrix.
pub fn state_two_norm_raw(x: &CMatrix, phi: &StateVectorSpec) -> Result<f64, LinalgError> {
    if x.nrows() != phi.dim() || x.ncols() != phi.dim() {
        return Err(LinalgError::DimensionMismatch { left: x.nrows(), right: phi.dim() });
    }
    let gram = x.adjoint() * x;
    let weighted = phi.density().as_matrix() * gram;
    let val = weighted.trace().re;
    Ok(val.max(0.0).sqrt())
}

/// State 2-norm `sqrt(phi(x* x)) = sqrt(trace(density * x * x))` of a
/// Hermitian matrix.
pub fn state_two_norm(x: &HermitianMatrix, phi: &StateVectorSpec) -> Result<f64, LinalgError> {
    state_two_norm_raw(x.as_matrix(), phi)
}

/// Trace 2-norm `sqrt(tr_n(x* x))` with the normalized trace, i.e. the
/// Frobenius norm divided by `sqrt(dim)`.
pub fn trace_two_norm(x: &CMatrix) -> f64 {
    let sq: f64 = x.iter().map(|c| c.norm_sqr()).sum();
    (sq / x.nrows() as f64).sqrt()
}

/// True iff the whole spectrum lies in `[-tol, 1 + tol]`.
pub fn is_positive_contraction(
    a: &HermitianMatrix,
    tol: f64,
    tols: &Tolerances,
) -> Result<bool, LinalgError> {
    let eig = eig_hermitian(a, tols)?;
    let min = eig.eigenvalues[0];
    let max = *eig.eigenvalues.last().expect("nonempty spectrum");
    Ok(min >= -tol && max <= 1.0 + tol)
}

/// Operator norm of a Hermitian matrix: the largest eigenvalue modulus.
pub fn opnorm_hermitian(a: &HermitianMatrix, tol: &Tolerances) -> Result<f64, LinalgError> {
    let eig = eig_hermitian(a, tol)?;
    Ok(eig.eigenvalues.iter().fold(0.0f64, |m, &v| m.max(v.abs())))
}

/// Operator norm of a general square matrix: `sqrt(lambda_max(m* m))`.
pub fn spectral_norm(m: &CMatrix, tol: &Tolerances) -> Result<f64, LinalgError> {
    let gram = HermitianMatrix::symmetrized(m.adjoint() * m);
    let eig = eig_hermitian(&gram, tol)?;
    Ok(eig.eigenvalues.last().expect("nonempty spectrum").max(0.0).sqrt())
}

/// Spectral projection onto the closed interval `[1/2, 1]`:
/// the sum of `v v*` over eigenvectors with eigenvalue `>= 1/2 - tol.thresh`
/// (an eigenvalue exactly at `1/2` is included). The input must be a positive
/// contraction within `tol.pos`.
pub fn spectral_projection_upper_half(
    a: &HermitianMatrix,
    tol: &Tolerances,
) -> Result<HermitianMatrix, LinalgError> {
    let eig = eig_hermitian(a, tol)?;
    let min = eig.eigenvalues[0];
    let max = *eig.eigenvalues.last().expect("nonempty spectrum");
    if min < -tol.pos || max > 1.0 + tol.pos {
        return Err(LinalgError::NotPositiveContraction { min, max, tol: tol.pos });
    }
    let n = a.dim();
    let selected: Vec<usize> =
        (0..n).filter(|&i| eig.eigenvalues[i] >= 0.5 - tol.thresh).collect();
    if selected.is_empty() {
        return Ok(HermitianMatrix::zeros(n));
    }
    let mut basis = CMatrix::zeros(n, selected.len());
    for (dst, &src) in selected.iter().enumerate() {
        basis.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(HermitianMatrix::symmetrized(&basis * basis.adjoint()))
}

/// Clamps the spectrum into `[lo, hi]` by eigenvalue clamping. Returns the
/// input unchanged when the whole spectrum already lies inside, so inputs
/// that need no correction pass through bit-identically.
pub fn clamp_spectrum(
    a: &HermitianMatrix,
    lo: f64,
    hi: f64,
    tol: &Tolerances,
) -> Result<HermitianMatrix, LinalgError> {
    let eig = eig_hermitian(a, tol)?;
    let min = eig.eigenvalues[0];
    let max = *eig.eigenvalues.last().expect("nonempty spectrum");
    if min >= lo && max <= hi {
        return Ok(a.clone());
    }
    let n = a.dim();
    let d = CMatrix::from_fn(n, n, |i, j| {
        if i == j {
            Complex64::new(eig.eigenvalues[i].clamp(lo, hi), 0.0)
        } else {
            Complex64::default()
        }
    });
    Ok(HermitianMatrix::symmetrized(&eig.eigenvectors * d * eig.eigenvectors.adjoint()))
}

/// Haar-distributed unitary via QR of a complex Gaussian matrix with the
/// phase correction `Q <- Q * diag(r_jj / |r_jj|)`.
pub fn haar_unitary<R: Rng>(dim: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(dim, dim, |_, _| Complex64::new(gaussian(rng), gaussian(rng)));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        let scaled = q.column(j) * phase;
        q.set_column(j, &scaled);
    }
    q
}

/// Gaussian Hermitian matrix: complex Gaussian entries averaged with the
/// adjoint.
pub fn random_hermitian<R: Rng>(dim: usize, rng: &mut R) -> HermitianMatrix {
    let g = CMatrix::from_fn(dim, dim, |_, _| Complex64::new(gaussian(rng), gaussian(rng)));
    HermitianMatrix::symmetrized(g)
}

/// Random Hermitian rescaled to unit operator norm.
pub fn random_unit_norm_hermitian<R: Rng>(
    dim: usize,
    rng: &mut R,
    tol: &Tolerances,
) -> Result<HermitianMatrix, LinalgError> {
    let h = random_hermitian(dim, rng);
    let norm = opnorm_hermitian(&h, tol)?;
    if norm < 1e-300 {
        return Ok(HermitianMatrix::zeros(dim));
    }
    Ok(h.scale(1.0 / norm))
}

/// Random positive contraction: Haar-conjugated diagonal with eigenvalues
/// drawn uniformly from `[0, 1]`.
pub fn random_positive_contraction<R: Rng>(dim: usize, rng: &mut R) -> HermitianMatrix {
    let diag: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
    let u = haar_unitary(dim, rng);
    let d = HermitianMatrix::from_real_diagonal(&diag);
    HermitianMatrix::symmetrized(&u * d.as_matrix() * u.adjoint())
}

/// Block direct sum `a ⊕ b`.
pub fn direct_sum(a: &HermitianMatrix, b: &HermitianMatrix) -> HermitianMatrix {
    let (na, nb) = (a.dim(), b.dim());
    let mat = CMatrix::from_fn(na + nb, na + nb, |i, j| {
        if i < na && j < na {
            a.as_matrix()[(i, j)]
        } else if i >= na && j >= na {
            b.as_matrix()[(i - na, j - na)]
        } else {
            Complex64::default()
        }
    });
    HermitianMatrix { mat }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use approx::assert_abs_diff_eq;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn identity_eigenvalues_are_ones() {
        let a = HermitianMatrix::identity(3);
        let eig = eig_hermitian(&a, &tol()).unwrap();
        for v in eig.eigenvalues {
            assert_abs_diff_eq!(v, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn diagonal_eigenvalues_sorted_ascending() {
        let a = HermitianMatrix::from_real_diagonal(&[0.9, 0.1]);
        let eig = eig_hermitian(&a, &tol()).unwrap();
        assert_abs_diff_eq!(eig.eigenvalues[0], 0.1, epsilon = 1e-14);
        assert_abs_diff_eq!(eig.eigenvalues[1], 0.9, epsilon = 1e-14);
    }

    #[test]
    fn random_hermitian_reconstructs() {
        let mut rng = rng_from_seed(3);
        for dim in [1usize, 2, 5, 16] {
            let a = random_hermitian(dim, &mut rng);
            let eig = eig_hermitian(&a, &tol()).unwrap();
            assert!(eig.reconstruction_error(&a) <= 1e-10);
        }
    }

    #[test]
    fn eigenvectors_are_orthonormal() {
        let mut rng = rng_from_seed(4);
        let a = random_hermitian(8, &mut rng);
        let eig = eig_hermitian(&a, &tol()).unwrap();
        let gram = eig.eigenvectors.adjoint() * &eig.eigenvectors;
        for i in 0..8 {
            for j in 0..8 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((gram[(i, j)] - Complex64::new(want, 0.0)).norm() <= 1e-10);
            }
        }
    }

    #[test]
    fn non_hermitian_input_is_rejected() {
        let m = CMatrix::from_fn(2, 2, |i, j| {
            if i == 0 && j == 1 { Complex64::new(1.0, 0.0) } else { Complex64::default() }
        });
        match HermitianMatrix::new(m, &tol()) {
            Err(LinalgError::NonHermitianInput { .. }) => {}
            other => panic!("expected NonHermitianInput, got {other:?}"),
        }
    }

    #[test]
    fn normalized_trace_examples() {
        for n in [1usize, 2, 7] {
            assert_abs_diff_eq!(normalized_trace(&HermitianMatrix::identity(n)), 1.0);
            assert_abs_diff_eq!(normalized_trace(&HermitianMatrix::zeros(n)), 0.0);
        }
        let a = HermitianMatrix::from_real_diagonal(&[1.0, 0.0]);
        assert_abs_diff_eq!(normalized_trace(&a), 0.5);
    }

    #[test]
    fn state_two_norm_examples() {
        for n in [1usize, 2, 5] {
            let phi = StateVectorSpec::normalized_trace(n);
            let norm = state_two_norm(&HermitianMatrix::identity(n), &phi).unwrap();
            assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-14);
        }
        let phi = StateVectorSpec::normalized_trace(2);
        let x = HermitianMatrix::from_real_diagonal(&[1.0, 0.0]);
        assert_abs_diff_eq!(state_two_norm(&x, &phi).unwrap(), 0.5f64.sqrt(), epsilon = 1e-14);

        // A non-faithful state annihilates the complement of its support.
        let density =
            HermitianMatrix::new(CMatrix::from_fn(2, 2, |i, j| {
                if i == 0 && j == 0 { Complex64::new(1.0, 0.0) } else { Complex64::default() }
            }), &tol())
            .unwrap();
        let phi = StateVectorSpec::new(density, &tol()).unwrap();
        let x = HermitianMatrix::from_real_diagonal(&[0.0, 5.0]);
        assert_abs_diff_eq!(state_two_norm(&x, &phi).unwrap(), 0.0, epsilon = 1e-14);
    }

    /// Independent triple-loop evaluation of `trace(density * x* * x)`, no
    /// shared code with the matrix-product path.
    fn brute_force_state_norm_sq(x: &CMatrix, density: &CMatrix) -> f64 {
        let n = x.nrows();
        let mut total = Complex64::default();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    total += density[(i, j)] * x[(k, j)].conj() * x[(k, i)];
                }
            }
        }
        total.re
    }

    #[test]
    fn state_two_norm_matches_brute_force() {
        let mut rng = rng_from_seed(9);
        for dim in [1usize, 2, 3, 6] {
            let x = random_hermitian(dim, &mut rng);
            let phi = StateVectorSpec::random_faithful(dim, &mut rng);
            let fast = state_two_norm(&x, &phi).unwrap();
            let slow =
                brute_force_state_norm_sq(x.as_matrix(), phi.density().as_matrix()).sqrt();
            assert_abs_diff_eq!(fast, slow, epsilon = 1e-12);
        }
    }

    #[test]
    fn positive_contraction_checks() {
        let t = tol();
        assert!(is_positive_contraction(&HermitianMatrix::identity(3).scale(0.5), 1e-9, &t)
            .unwrap());
        assert!(!is_positive_contraction(
            &HermitianMatrix::from_real_diagonal(&[1.5, 0.0]),
            1e-9,
            &t
        )
        .unwrap());
        assert!(is_positive_contraction(
            &HermitianMatrix::from_real_diagonal(&[-1e-14, 1.0]),
            1e-12,
            &t
        )
        .unwrap());
    }

    #[test]
    fn spectral_projection_half_identity_is_identity() {
        // 1/2 lies inside the closed interval, so I/2 rounds up to I.
        let a = HermitianMatrix::identity(2).scale(0.5);
        let p = spectral_projection_upper_half(&a, &tol()).unwrap();
        assert!(p.max_entry_distance(&HermitianMatrix::identity(2)) <= 1e-12);
    }

    #[test]
    fn spectral_projection_zero_and_diagonal() {
        let p = spectral_projection_upper_half(&HermitianMatrix::zeros(3), &tol()).unwrap();
        assert!(p.max_entry_distance(&HermitianMatrix::zeros(3)) <= 1e-12);

        let a = HermitianMatrix::from_real_diagonal(&[0.9, 0.1]);
        let p = spectral_projection_upper_half(&a, &tol()).unwrap();
        let want = HermitianMatrix::from_real_diagonal(&[1.0, 0.0]);
        assert!(p.max_entry_distance(&want) <= 1e-12);
    }

    #[test]
    fn spectral_projection_rejects_non_contraction() {
        let a = HermitianMatrix::from_real_diagonal(&[1.5, 0.0]);
        match spectral_projection_upper_half(&a, &tol()) {
            Err(LinalgError::NotPositiveContraction { .. }) => {}
            other => panic!("expected NotPositiveContraction, got {other:?}"),
        }
    }

    #[test]
    fn spectral_projection_is_idempotent() {
        let mut rng = rng_from_seed(17);
        for dim in [2usize, 5, 9] {
            let a = random_positive_contraction(dim, &mut rng);
            let p = spectral_projection_upper_half(&a, &tol()).unwrap();
            let pp = spectral_projection_upper_half(&p, &tol()).unwrap();
            assert!(pp.max_entry_distance(&p) <= 1e-10, "dim {dim}");
        }
    }

    #[test]
    fn scalar_rounding_inequality_on_grid() {
        // Pointwise |x - 1_{[1/2,1]}(x)| <= 2|x^2 - x| on a 1e-4 grid of [0,1].
        let thresh = tol().thresh;
        for i in 0..=10_000u32 {
            let x = i as f64 * 1e-4;
            let p = if x >= 0.5 - thresh { 1.0 } else { 0.0 };
            let lhs = (x - p).abs();
            let rhs = 2.0 * (x * x - x).abs();
            assert!(lhs <= rhs + 1e-12, "x = {x}: {lhs} > {rhs}");
        }
    }

    #[test]
    fn matrix_rounding_inequality_random_contractions() {
        let t = tol();
        let mut rng = rng_from_seed(23);
        for dim in [1usize, 2, 3, 4, 8, 16] {
            for _ in 0..20 {
                let a = random_positive_contraction(dim, &mut rng);
                let phi = StateVectorSpec::random_faithful(dim, &mut rng);
                let p = spectral_projection_upper_half(&a, &t).unwrap();
                let dist = state_two_norm(&a.sub(&p).unwrap(), &phi).unwrap();
                let defect = state_two_norm(&a.square().sub(&a).unwrap(), &phi).unwrap();
                assert!(dist <= 2.0 * defect + 1e-10, "dim {dim}: {dist} > 2*{defect}");
            }
        }
    }

    #[test]
    fn half_identity_saturates_the_bound() {
        let t = tol();
        for dim in [1usize, 2, 4, 8] {
            let a = HermitianMatrix::identity(dim).scale(0.5);
            let phi = StateVectorSpec::normalized_trace(dim);
            let p = spectral_projection_upper_half(&a, &t).unwrap();
            let dist = state_two_norm(&a.sub(&p).unwrap(), &phi).unwrap();
            let defect = state_two_norm(&a.square().sub(&a).unwrap(), &phi).unwrap();
            assert_abs_diff_eq!(dist, 0.5, epsilon = 1e-12);
            assert_abs_diff_eq!(2.0 * defect, 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = rng_from_seed(31);
        for dim in [1usize, 3, 7] {
            let u = haar_unitary(dim, &mut rng);
            let gram = u.adjoint() * &u;
            for i in 0..dim {
                for j in 0..dim {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((gram[(i, j)] - Complex64::new(want, 0.0)).norm() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn clamp_spectrum_passes_through_in_range_inputs() {
        let a = HermitianMatrix::from_real_diagonal(&[0.25, 0.75]);
        let clamped = clamp_spectrum(&a, 0.0, 1.0, &tol()).unwrap();
        assert_eq!(a, clamped);

        let b = HermitianMatrix::from_real_diagonal(&[-0.5, 1.5]);
        let clamped = clamp_spectrum(&b, 0.0, 1.0, &tol()).unwrap();
        let want = HermitianMatrix::from_real_diagonal(&[0.0, 1.0]);
        assert!(clamped.max_entry_distance(&want) <= 1e-12);
    }

    #[test]
    fn trace_two_norm_matches_state_norm_under_normalized_trace() {
        let mut rng = rng_from_seed(41);
        let a = random_hermitian(6, &mut rng);
        let phi = StateVectorSpec::normalized_trace(6);
        assert_abs_diff_eq!(
            trace_two_norm(a.as_matrix()),
            state_two_norm(&a, &phi).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn direct_sum_lays_out_blocks() {
        let a = HermitianMatrix::from_real_diagonal(&[1.0]);
        let b = HermitianMatrix::from_real_diagonal(&[2.0, 3.0]);
        let s = direct_sum(&a, &b);
        assert_eq!(s.dim(), 3);
        assert_abs_diff_eq!(s.as_matrix()[(0, 0)].re, 1.0);
        assert_abs_diff_eq!(s.as_matrix()[(2, 2)].re, 3.0);
        assert_abs_diff_eq!(s.as_matrix()[(0, 2)].norm(), 0.0);
    }
}
