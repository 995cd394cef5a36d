//! Dense complex linear algebra: Hermitian eigendecomposition-based PSD
//! square root, rank-deficient PSD Cholesky, Hermitian matrix exponential,
//! and the spectral norm.
//!
//! Dimensions in this crate are small (a handful of levels, dilations at
//! twice that), so everything goes through full eigendecompositions for
//! robustness rather than speed.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type C64 = num_complex::Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Reduced Planck constant in eV·fs, fixing the unit system used
/// throughout: energies in eV, times in fs, rates in fs⁻¹.
pub const HBAR_EV_FS: f64 = 0.658_211_956_9;

/// Default tolerance for symmetry and positivity checks in factorizations.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Outcome of an entrywise Hermitian-symmetry test.
///
/// Passes iff `max_ij |A_ij - conj(A_ji)| <= tolerance`.
#[derive(Debug, Clone, Copy)]
pub struct HermitianCheck {
    pub deviation: f64,
    pub tolerance: f64,
}

impl HermitianCheck {
    pub fn evaluate(matrix: &CMatrix, tolerance: f64) -> Self {
        let mut deviation: f64 = 0.0;
        for i in 0..matrix.nrows() {
            for j in 0..matrix.ncols() {
                let d = (matrix[(i, j)] - matrix[(j, i)].conj()).norm();
                deviation = deviation.max(d);
            }
        }
        HermitianCheck { deviation, tolerance }
    }

    pub fn passes(&self) -> bool {
        self.deviation <= self.tolerance
    }

    pub fn require(&self) -> Result<()> {
        if self.passes() {
            Ok(())
        } else {
            Err(Error::NotHermitian {
                deviation: self.deviation,
                tolerance: self.tolerance,
            })
        }
    }
}

pub fn is_finite_matrix(matrix: &CMatrix) -> bool {
    matrix.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn is_finite_vector(v: &CVector) -> bool {
    v.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Frobenius norm of the difference `a - b`.
pub fn frobenius_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).norm()
}

/// Real part of `tr(a * b)`; for a Hermitian observable `a` and a density
/// matrix `b` this is the expectation value.
pub fn trace_product_re(a: &CMatrix, b: &CMatrix) -> f64 {
    (a * b).trace().re
}

/// Eigendecomposition of a Hermitian matrix: real eigenvalues (ascending
/// is not guaranteed) and a unitary matrix of column eigenvectors.
pub struct HermitianEigen {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: CMatrix,
}

/// Decompose a Hermitian matrix, checking symmetry within `tol` first.
///
/// The matrix is symmetrized as `(A + A^H)/2` before factorization so the
/// backend sees an exactly Hermitian input.
pub fn hermitian_eigen(matrix: &CMatrix, tol: f64) -> Result<HermitianEigen> {
    if !is_finite_matrix(matrix) {
        return Err(Error::NonFinite);
    }
    HermitianCheck::evaluate(matrix, tol).require()?;
    let symmetrized = (matrix + matrix.adjoint()).scale(0.5);
    let eigen = symmetrized.symmetric_eigen();
    Ok(HermitianEigen {
        eigenvalues: eigen.eigenvalues,
        eigenvectors: eigen.eigenvectors,
    })
}

/// Apply a real scalar function to a Hermitian matrix through its
/// eigendecomposition: `V f(Λ) V^H`, re-symmetrized on the way out.
fn hermitian_function(eigen: &HermitianEigen, f: impl Fn(f64) -> f64) -> CMatrix {
    let mapped = CVector::from_iterator(
        eigen.eigenvalues.len(),
        eigen.eigenvalues.iter().map(|&l| C64::new(f(l), 0.0)),
    );
    let out = &eigen.eigenvectors * CMatrix::from_diagonal(&mapped) * eigen.eigenvectors.adjoint();
    (&out + out.adjoint()).scale(0.5)
}

/// Hermitian PSD square root via eigendecomposition.
///
/// Eigenvalues in `[-tol, 0)` are clamped to zero; anything below `-tol`
/// is rejected as not positive semidefinite.
pub fn psd_sqrt(matrix: &CMatrix, tol: f64) -> Result<CMatrix> {
    let eigen = hermitian_eigen(matrix, tol)?;
    if let Some(min) = eigen.eigenvalues.iter().cloned().reduce(f64::min) {
        if min < -tol {
            return Err(Error::NotPsd { value: min, tolerance: tol });
        }
    }
    Ok(hermitian_function(&eigen, |l| l.max(0.0).sqrt()))
}

/// Lower-triangular Cholesky factor of a Hermitian PSD matrix, allowing
/// rank deficiency.
///
/// A pivot in `[-tol, tol]` is taken as exactly zero and its column is
/// left zero (no diagonal jitter), so exactly singular inputs such as
/// `diag(1, 0)` factor to themselves. A pivot below `-tol` is rejected.
pub fn cholesky_psd(matrix: &CMatrix, tol: f64) -> Result<CMatrix> {
    if !is_finite_matrix(matrix) {
        return Err(Error::NonFinite);
    }
    HermitianCheck::evaluate(matrix, tol).require()?;
    let n = matrix.nrows();
    let mut lower = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = matrix[(j, j)].re;
        for k in 0..j {
            d -= lower[(j, k)].norm_sqr();
        }
        if d < -tol {
            return Err(Error::NotPsd { value: d, tolerance: tol });
        }
        if d <= tol {
            continue; // zero pivot: column stays zero
        }
        let pivot = d.sqrt();
        lower[(j, j)] = C64::new(pivot, 0.0);
        for i in (j + 1)..n {
            let mut s = matrix[(i, j)];
            for k in 0..j {
                s -= lower[(i, k)] * lower[(j, k)].conj();
            }
            lower[(i, j)] = s / pivot;
        }
    }
    Ok(lower)
}

/// Unitary propagator `U = exp(-i H dt / hbar)` of a Hermitian generator.
pub fn hermitian_propagator(hamiltonian: &CMatrix, dt: f64, hbar: f64) -> Result<CMatrix> {
    let eigen = hermitian_eigen(hamiltonian, DEFAULT_TOL)?;
    let n = eigen.eigenvalues.len();
    let phases = CVector::from_iterator(
        n,
        eigen.eigenvalues.iter().map(|&l| {
            let phi = -l * dt / hbar;
            C64::new(phi.cos(), phi.sin())
        }),
    );
    Ok(&eigen.eigenvectors * CMatrix::from_diagonal(&phases) * eigen.eigenvectors.adjoint())
}

/// Largest singular value, computed as `sqrt(λ_max(A^H A))`.
pub fn spectral_norm(matrix: &CMatrix) -> Result<f64> {
    if !is_finite_matrix(matrix) {
        return Err(Error::NonFinite);
    }
    let gram = matrix.ad_mul(matrix);
    let eigen = gram.symmetric_eigen();
    let max = eigen.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
    Ok(max.max(0.0).sqrt())
}
