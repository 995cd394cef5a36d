//! Quantum channels in the operator-sum picture: Lindblad models, Kraus
//! sets derived from them (jump operators scaled by `sqrt(rate * dt)` plus
//! a square-root completion operator), and dense channel application.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    self, hermitian_eigen, hermitian_propagator, is_finite_matrix, is_finite_vector, psd_sqrt,
    spectral_norm, C64, CMatrix, CVector, HermitianCheck, DEFAULT_TOL, HBAR_EV_FS,
};

/// Tolerance on `||sum_k M_k^H M_k - I||_F` for a valid Kraus set.
pub const COMPLETENESS_TOL: f64 = 1e-9;

/// Slack allowed on the spectral norm of each Kraus operator.
pub const CONTRACTION_TOL: f64 = 1e-9;

/// One dissipative process: a jump operator and its rate in fs⁻¹.
#[derive(Debug, Clone)]
pub struct Jump {
    pub op: CMatrix,
    pub rate: f64,
}

/// A Lindblad master-equation model: Hermitian Hamiltonian (eV) plus a
/// list of jump processes. The generator is
/// `dρ/dt = -i[H,ρ]/ħ + Σ_k γ_k (L_k ρ L_k^H - ½{L_k^H L_k, ρ})`.
#[derive(Debug, Clone)]
pub struct LindbladModel {
    hamiltonian: CMatrix,
    jumps: Vec<Jump>,
    label: String,
}

impl LindbladModel {
    pub fn new(hamiltonian: CMatrix, jumps: Vec<Jump>) -> Result<Self> {
        Self::with_label(hamiltonian, jumps, String::new())
    }

    pub fn with_label(hamiltonian: CMatrix, jumps: Vec<Jump>, label: String) -> Result<Self> {
        if hamiltonian.nrows() != hamiltonian.ncols() || hamiltonian.nrows() == 0 {
            return Err(Error::InvalidModel { reason: "hamiltonian must be square and non-empty".into() });
        }
        if !is_finite_matrix(&hamiltonian) {
            return Err(Error::NonFinite);
        }
        HermitianCheck::evaluate(&hamiltonian, DEFAULT_TOL).require()?;
        let dim = hamiltonian.nrows();
        for (k, jump) in jumps.iter().enumerate() {
            if jump.op.nrows() != dim || jump.op.ncols() != dim {
                return Err(Error::DimensionMismatch { expected: dim, actual: jump.op.nrows() });
            }
            if !is_finite_matrix(&jump.op) {
                return Err(Error::NonFinite);
            }
            if !(jump.rate >= 0.0 && jump.rate.is_finite()) {
                return Err(Error::InvalidModel { reason: format!("jump {k} has negative or non-finite rate") });
            }
        }
        Ok(LindbladModel { hamiltonian, jumps, label })
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.nrows()
    }

    pub fn hamiltonian(&self) -> &CMatrix {
        &self.hamiltonian
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Parse the JSON wire format (see [`LindbladModelWire`]).
    pub fn from_json_str(text: &str) -> Result<Self> {
        let wire: LindbladModelWire = serde_json::from_str(text)
            .map_err(|e| Error::InvalidModel { reason: format!("json parse: {e}") })?;
        wire.into_model()
    }

    pub fn to_json_string(&self) -> String {
        let wire = LindbladModelWire::from_model(self);
        serde_json::to_string_pretty(&wire).expect("model serialization cannot fail")
    }
}

/// JSON schema for a Lindblad model. Matrices are flattened row-major as
/// `[re, im]` pairs of length `dim * dim`.
#[derive(Debug, Serialize, Deserialize)]
pub struct LindbladModelWire {
    pub dim: usize,
    pub hamiltonian_ev: Vec<[f64; 2]>,
    pub jumps: Vec<JumpWire>,
    #[serde(default)]
    pub label: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct JumpWire {
    pub op: Vec<[f64; 2]>,
    pub rate_per_fs: f64,
}

fn matrix_to_pairs(m: &CMatrix) -> Vec<[f64; 2]> {
    let n = m.nrows();
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            out.push([m[(i, j)].re, m[(i, j)].im]);
        }
    }
    out
}

fn pairs_to_matrix(dim: usize, pairs: &[[f64; 2]], what: &str) -> Result<CMatrix> {
    if pairs.len() != dim * dim {
        return Err(Error::InvalidModel {
            reason: format!("{what} has {} entries, expected {}", pairs.len(), dim * dim),
        });
    }
    let mut m = CMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            let [re, im] = pairs[i * dim + j];
            m[(i, j)] = C64::new(re, im);
        }
    }
    Ok(m)
}

impl LindbladModelWire {
    pub fn from_model(model: &LindbladModel) -> Self {
        LindbladModelWire {
            dim: model.dim(),
            hamiltonian_ev: matrix_to_pairs(model.hamiltonian()),
            jumps: model
                .jumps()
                .iter()
                .map(|j| JumpWire { op: matrix_to_pairs(&j.op), rate_per_fs: j.rate })
                .collect(),
            label: model.label.clone(),
        }
    }

    pub fn into_model(self) -> Result<LindbladModel> {
        let h = pairs_to_matrix(self.dim, &self.hamiltonian_ev, "hamiltonian_ev")?;
        let jumps = self
            .jumps
            .iter()
            .enumerate()
            .map(|(k, j)| {
                Ok(Jump { op: pairs_to_matrix(self.dim, &j.op, &format!("jump {k}"))?, rate: j.rate_per_fs })
            })
            .collect::<Result<Vec<_>>>()?;
        LindbladModel::with_label(h, jumps, self.label)
    }
}

/// An ordered Kraus operator set for one evolution step of length `dt_fs`.
/// Index 0 is the completion operator; the set satisfies the completeness
/// relation `Σ_k M_k^H M_k = I` within [`COMPLETENESS_TOL`].
#[derive(Debug, Clone)]
pub struct KrausSet {
    ops: Vec<CMatrix>,
    dt_fs: f64,
}

impl KrausSet {
    /// Validate completeness and the contraction property of every operator.
    pub fn new(ops: Vec<CMatrix>, dt_fs: f64) -> Result<Self> {
        if ops.is_empty() {
            return Err(Error::InvalidModel { reason: "kraus set must be non-empty".into() });
        }
        let dim = ops[0].nrows();
        for op in &ops {
            if op.nrows() != dim || op.ncols() != dim {
                return Err(Error::DimensionMismatch { expected: dim, actual: op.nrows() });
            }
            if !is_finite_matrix(op) {
                return Err(Error::NonFinite);
            }
            let norm = spectral_norm(op)?;
            if norm > 1.0 + CONTRACTION_TOL {
                return Err(Error::NotContraction { norm, tolerance: CONTRACTION_TOL });
            }
        }
        let set = KrausSet { ops, dt_fs };
        let defect = set.completeness_defect();
        if defect > COMPLETENESS_TOL {
            return Err(Error::InvalidModel {
                reason: format!("kraus completeness defect {defect:.3e} exceeds {COMPLETENESS_TOL:.1e}"),
            });
        }
        Ok(set)
    }

    /// The trivial single-operator identity channel.
    pub fn identity(dim: usize, dt_fs: f64) -> Self {
        KrausSet { ops: vec![CMatrix::identity(dim, dim)], dt_fs }
    }

    pub fn ops(&self) -> &[CMatrix] {
        &self.ops
    }

    pub fn dim(&self) -> usize {
        self.ops[0].nrows()
    }

    pub fn dt_fs(&self) -> f64 {
        self.dt_fs
    }

    /// `||Σ_k M_k^H M_k - I||_F`.
    pub fn completeness_defect(&self) -> f64 {
        let dim = self.dim();
        let mut sum = CMatrix::zeros(dim, dim);
        for op in &self.ops {
            sum += op.ad_mul(op);
        }
        linalg::frobenius_distance(&sum, &CMatrix::identity(dim, dim))
    }
}

/// A density matrix with its validation tolerance: Hermitian, unit trace
/// and positive semidefinite, each within `trace_tol`.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    matrix: CMatrix,
    trace_tol: f64,
}

impl DensityMatrix {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        Self::with_tolerance(matrix, 1e-9)
    }

    pub fn with_tolerance(matrix: CMatrix, trace_tol: f64) -> Result<Self> {
        if !is_finite_matrix(&matrix) {
            return Err(Error::NonFinite);
        }
        HermitianCheck::evaluate(&matrix, trace_tol).require()?;
        let trace = matrix.trace();
        if (trace.re - 1.0).abs() > trace_tol || trace.im.abs() > trace_tol {
            return Err(Error::InvalidModel {
                reason: format!("density matrix trace {trace} is not 1 within {trace_tol:.1e}"),
            });
        }
        let eigen = hermitian_eigen(&matrix, trace_tol)?;
        let min = eigen.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < -trace_tol {
            return Err(Error::NotPsd { value: min, tolerance: trace_tol });
        }
        Ok(DensityMatrix { matrix, trace_tol })
    }

    /// Pure state `|v><v|`.
    pub fn pure(v: &CVector) -> Result<Self> {
        if !is_finite_vector(v) {
            return Err(Error::NonFinite);
        }
        let norm = v.norm();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::NotNormalized { norm });
        }
        let m = v * v.adjoint();
        Self::new(m)
    }

    /// Basis state `|i><i|`.
    pub fn basis_state(dim: usize, index: usize) -> Self {
        let mut m = CMatrix::zeros(dim, dim);
        m[(index, index)] = C64::new(1.0, 0.0);
        DensityMatrix { matrix: m, trace_tol: 1e-9 }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace_tol(&self) -> f64 {
        self.trace_tol
    }

    /// Real parts of the diagonal.
    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.matrix[(i, i)].re).collect()
    }
}

/// A mixed initial state given as weighted pure components.
#[derive(Debug, Clone)]
pub struct InitialEnsemble {
    components: Vec<(f64, CVector)>,
}

impl InitialEnsemble {
    pub fn new(components: Vec<(f64, CVector)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidModel { reason: "ensemble must have at least one component".into() });
        }
        let dim = components[0].1.len();
        let mut total = 0.0;
        for (p, v) in &components {
            if !(*p >= 0.0 && *p <= 1.0) {
                return Err(Error::InvalidProbability { reason: format!("weight {p} outside [0, 1]") });
            }
            if v.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, actual: v.len() });
            }
            if !is_finite_vector(v) {
                return Err(Error::NonFinite);
            }
            let norm = v.norm();
            if (norm - 1.0).abs() > 1e-12 {
                return Err(Error::NotNormalized { norm });
            }
            total += *p;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidProbability { reason: format!("weights sum to {total}, expected 1") });
        }
        Ok(InitialEnsemble { components })
    }

    /// Single pure component.
    pub fn pure(v: CVector) -> Result<Self> {
        Self::new(vec![(1.0, v)])
    }

    /// Pure basis state `|index>`.
    pub fn basis_state(dim: usize, index: usize) -> Self {
        let mut v = CVector::zeros(dim);
        v[index] = C64::new(1.0, 0.0);
        InitialEnsemble { components: vec![(1.0, v)] }
    }

    pub fn components(&self) -> &[(f64, CVector)] {
        &self.components
    }

    pub fn dim(&self) -> usize {
        self.components[0].1.len()
    }
}

/// Build the Kraus set of one Euler step of length `dt` from a Lindblad
/// model: `M_k = sqrt(γ_k dt) L_k` for each jump, with the completion
/// operator `M_0 = sqrt(I - Σ_{k>0} M_k^H M_k)` recomputed by a PSD square
/// root so completeness is exact at every step size. With `apply_coherent`
/// every operator (including the completion) is left-multiplied by
/// `exp(-i H dt / ħ)`.
pub fn kraus_from_lindblad(model: &LindbladModel, dt_fs: f64, apply_coherent: bool) -> Result<KrausSet> {
    if !(dt_fs > 0.0 && dt_fs.is_finite()) {
        return Err(Error::BadStep { reason: format!("dt must be positive and finite, got {dt_fs}") });
    }
    let dim = model.dim();
    let mut ops = Vec::with_capacity(model.jumps().len() + 1);
    let mut gram_sum = CMatrix::zeros(dim, dim);
    for (k, jump) in model.jumps().iter().enumerate() {
        let norm = spectral_norm(&jump.op)?;
        let value = jump.rate * dt_fs * norm * norm;
        if value >= 1.0 {
            return Err(Error::StepTooLarge { index: k, value });
        }
        let m = jump.op.scale((jump.rate * dt_fs).sqrt());
        gram_sum += m.ad_mul(&m);
        ops.push(m);
    }
    let gap = CMatrix::identity(dim, dim) - gram_sum;
    let completion = psd_sqrt(&gap, DEFAULT_TOL)?;
    ops.insert(0, completion);
    if apply_coherent {
        let coherent = hermitian_propagator(model.hamiltonian(), dt_fs, HBAR_EV_FS)?;
        for op in &mut ops {
            *op = &coherent * &*op;
        }
    }
    KrausSet::new(ops, dt_fs)
}

/// Apply the channel once: `ρ -> Σ_k M_k ρ M_k^H`.
pub fn apply_channel(ks: &KrausSet, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if ks.dim() != rho.dim() {
        return Err(Error::DimensionMismatch { expected: ks.dim(), actual: rho.dim() });
    }
    let dim = ks.dim();
    let mut out = CMatrix::zeros(dim, dim);
    for op in ks.ops() {
        let m_rho = op * rho.matrix();
        out += &m_rho * op.adjoint();
    }
    DensityMatrix::with_tolerance(out, rho.trace_tol().max(1e-9))
}

/// Two-level amplitude-damping channel for one step: downward transition
/// probability `p1`, upward `p2`. The operators are
/// `M_0 = diag(sqrt(1-p2), sqrt(1-p1))`, `M_1 = sqrt(p1) |0><1|`,
/// `M_2 = sqrt(p2) |1><0|`; completeness holds exactly.
pub fn damping_channel(p1: f64, p2: f64) -> Result<KrausSet> {
    for (name, p) in [("p1", p1), ("p2", p2)] {
        if !((0.0..1.0).contains(&p) && p.is_finite()) {
            return Err(Error::InvalidProbability { reason: format!("{name} = {p} outside [0, 1)") });
        }
    }
    if p1 + p2 >= 1.0 {
        return Err(Error::InvalidProbability { reason: format!("p1 + p2 = {} must be < 1", p1 + p2) });
    }
    let mut m0 = CMatrix::zeros(2, 2);
    m0[(0, 0)] = C64::new((1.0 - p2).sqrt(), 0.0);
    m0[(1, 1)] = C64::new((1.0 - p1).sqrt(), 0.0);
    let mut m1 = CMatrix::zeros(2, 2);
    m1[(0, 1)] = C64::new(p1.sqrt(), 0.0);
    let mut m2 = CMatrix::zeros(2, 2);
    m2[(1, 0)] = C64::new(p2.sqrt(), 0.0);
    KrausSet::new(vec![m0, m1, m2], 1.0)
}

/// Assemble `ρ = Σ_i p_i |φ_i><φ_i|` from an ensemble.
pub fn pure_state_density(ensemble: &InitialEnsemble) -> DensityMatrix {
    let dim = ensemble.dim();
    let mut m = CMatrix::zeros(dim, dim);
    for (p, v) in ensemble.components() {
        m += (v * v.adjoint()).scale(*p);
    }
    DensityMatrix::with_tolerance(m, 1e-9).expect("ensemble invariants guarantee a valid density matrix")
}
