//! Unitary dilation of contraction matrices: defect operators, the 2n×2n
//! block unitary whose top-left block is the contraction, and embedding of
//! state vectors into the dilated space.

use crate::error::{Error, Result};
use crate::linalg::{is_finite_vector, psd_sqrt, spectral_norm, CMatrix, CVector};

/// Slack allowed on the spectral norm of an incoming contraction; drift up
/// to this much above 1 (from Kraus completeness rounding) is absorbed by
/// rescaling.
pub const CONTRACTION_SLACK: f64 = 1e-9;

/// A unitary dilation `U = [[M, D_{M^H}], [D_M, -M^H]]` of a contraction
/// `M`, acting on a space of twice the base dimension.
///
/// If the source arrived with spectral norm slightly above 1 it is
/// rescaled to a strict contraction before dilation; the recorded norm is
/// exposed so callers can fold the square of the scale back into term
/// weights.
#[derive(Debug, Clone)]
pub struct DilatedUnitary {
    matrix: CMatrix,
    base_dim: usize,
    source_norm: f64,
}

impl DilatedUnitary {
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn dim(&self) -> usize {
        2 * self.base_dim
    }

    /// Spectral norm of the source contraction, recorded before any
    /// rescaling.
    pub fn source_norm(&self) -> f64 {
        self.source_norm
    }

    /// Multiplier restoring probabilities of a rescaled source:
    /// `source_norm²` when the source exceeded 1, otherwise 1.
    pub fn weight_correction(&self) -> f64 {
        if self.source_norm > 1.0 {
            self.source_norm * self.source_norm
        } else {
            1.0
        }
    }
}

fn defect_of(m: &CMatrix, tol: f64) -> Result<CMatrix> {
    let gap = CMatrix::identity(m.nrows(), m.ncols()) - m.ad_mul(m);
    psd_sqrt(&gap, tol)
}

/// Defect operator `D_M = sqrt(I - M^H M)` of a contraction.
pub fn defect_operator(m: &CMatrix) -> Result<CMatrix> {
    let norm = spectral_norm(m)?;
    if norm > 1.0 + CONTRACTION_SLACK {
        return Err(Error::NotContraction { norm, tolerance: CONTRACTION_SLACK });
    }
    // Spectral norms in (1, 1 + slack] push the smallest eigenvalue of
    // I - M^H M to about -2*slack; widen the clamp window accordingly.
    defect_of(m, 4.0 * CONTRACTION_SLACK)
}

/// Dilate a contraction into its block unitary.
pub fn dilate(m: &CMatrix) -> Result<DilatedUnitary> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::InvalidArgument { reason: "dilation needs a non-empty square matrix".into() });
    }
    let source_norm = spectral_norm(m)?;
    if source_norm > 1.0 + CONTRACTION_SLACK {
        return Err(Error::NotContraction { norm: source_norm, tolerance: CONTRACTION_SLACK });
    }
    let scaled;
    let contraction = if source_norm > 1.0 {
        scaled = m.unscale(source_norm);
        &scaled
    } else {
        m
    };
    let n = m.nrows();
    let defect = defect_of(contraction, 1e-10)?;
    let adjoint_gap = CMatrix::identity(n, n) - contraction * contraction.adjoint();
    let defect_adjoint = psd_sqrt(&adjoint_gap, 1e-10)?;
    let mut u = CMatrix::zeros(2 * n, 2 * n);
    u.view_mut((0, 0), (n, n)).copy_from(contraction);
    u.view_mut((0, n), (n, n)).copy_from(&defect_adjoint);
    u.view_mut((n, 0), (n, n)).copy_from(&defect);
    u.view_mut((n, n), (n, n)).copy_from(&(-contraction.adjoint()));
    Ok(DilatedUnitary { matrix: u, base_dim: n, source_norm })
}

/// Pad a normalized vector with zeros into the dilated space.
pub fn embed_state(v: &CVector) -> Result<CVector> {
    if !is_finite_vector(v) {
        return Err(Error::NonFinite);
    }
    let norm = v.norm();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::NotNormalized { norm });
    }
    let n = v.len();
    let mut out = CVector::zeros(2 * n);
    out.rows_mut(0, n).copy_from(v);
    Ok(out)
}
