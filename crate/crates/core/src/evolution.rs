//! Evolution engines over a Kraus set: the iterative operator-sum engine
//! with multi-step product enumeration, norm-threshold pruning and
//! proportionality grouping, and a first-order Euler integrator of the
//! underlying master equation used as the dense classical reference.

use std::collections::HashMap;

use serde::Serialize;

use crate::channels::{apply_channel, DensityMatrix, KrausSet, LindbladModel};
use crate::error::{Error, Result};
use crate::linalg::{spectral_norm, C64, CMatrix, HBAR_EV_FS};

/// Which matrix norm the pruning threshold refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    Frobenius,
    Spectral,
}

/// Pruning and grouping configuration for product enumeration.
///
/// A raw product is dropped when its chosen norm is `<= norm_threshold`;
/// two products are merged into one group when they differ by a complex
/// scalar within `grouping_tol`.
#[derive(Debug, Clone, Copy)]
pub struct PruningPolicy {
    pub norm_threshold: f64,
    pub grouping_tol: f64,
    pub norm_kind: NormKind,
}

impl Default for PruningPolicy {
    fn default() -> Self {
        PruningPolicy { norm_threshold: 0.01, grouping_tol: 1e-9, norm_kind: NormKind::Frobenius }
    }
}

impl PruningPolicy {
    /// Keep every nonzero product, still grouping proportional ones.
    pub fn unpruned() -> Self {
        PruningPolicy { norm_threshold: 0.0, ..Default::default() }
    }

    fn norm(&self, m: &CMatrix) -> f64 {
        match self.norm_kind {
            NormKind::Frobenius => m.norm(),
            NormKind::Spectral => spectral_norm(m).unwrap_or(f64::INFINITY),
        }
    }
}

/// A group of depth-`s` Kraus operator products that differ only by a
/// complex scalar. The group is stored as the first member encountered
/// (`representative`, unnormalized) together with every member's scalar
/// relative to it, so a member is `scalars[i] * representative`. The group
/// contributes `weight() * T ρ T^H` to the evolved state, with
/// `weight() = Σ_i |scalars[i]|²`.
#[derive(Debug, Clone)]
pub struct TermProduct {
    representative: CMatrix,
    scalars: Vec<C64>,
    word: Vec<usize>,
    norm: f64,
    pivot: (usize, usize),
}

impl TermProduct {
    /// The empty product: identity with a single unit member.
    pub fn identity(dim: usize) -> Self {
        let representative = CMatrix::identity(dim, dim);
        let norm = representative.norm();
        TermProduct {
            representative,
            scalars: vec![C64::new(1.0, 0.0)],
            word: Vec::new(),
            norm,
            pivot: (0, 0),
        }
    }

    pub fn representative(&self) -> &CMatrix {
        &self.representative
    }

    /// Accumulated multiplicity `Σ |c|²` over group members.
    pub fn weight(&self) -> f64 {
        self.scalars.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Witness index sequence of the representative, outermost factor
    /// first: the matrix is `ops[word[0]] · ops[word[1]] · ...`.
    pub fn word(&self) -> &[usize] {
        &self.word
    }

    pub fn depth(&self) -> usize {
        self.word.len()
    }

    pub fn scalars(&self) -> &[C64] {
        &self.scalars
    }

    /// Number of raw products folded into this group.
    pub fn member_count(&self) -> usize {
        self.scalars.len()
    }

    /// Chosen norm of the representative, cached at enumeration time.
    pub fn cached_norm(&self) -> f64 {
        self.norm
    }

    pub fn dim(&self) -> usize {
        self.representative.nrows()
    }
}

/// Row of the JSON audit export for a term list.
#[derive(Debug, Serialize)]
pub struct TermExport {
    pub word: Vec<usize>,
    pub weight: f64,
    pub frobenius_norm: f64,
}

/// Flatten a term list into its audit form.
pub fn export_terms(terms: &[TermProduct]) -> Vec<TermExport> {
    terms
        .iter()
        .map(|t| TermExport {
            word: t.word.clone(),
            weight: t.weight(),
            frobenius_norm: t.representative.norm(),
        })
        .collect()
}

/// Total raw products surviving the threshold, counting group members.
pub fn raw_term_count(terms: &[TermProduct]) -> usize {
    terms.iter().map(TermProduct::member_count).sum()
}

const PATTERN_EPS: f64 = 1e-12;

fn zero_pattern(m: &CMatrix) -> Vec<bool> {
    let max = m.iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
    let cutoff = max * PATTERN_EPS;
    m.iter().map(|z| z.norm() > cutoff).collect()
}

fn max_abs_position(m: &CMatrix) -> (usize, usize) {
    let mut best = (0, 0);
    let mut best_val = -1.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let v = m[(i, j)].norm();
            if v > best_val {
                best_val = v;
                best = (i, j);
            }
        }
    }
    best
}

/// One breadth-first expansion level: multiply every kept group by every
/// operator, prune raw members whose norm falls at or below the threshold,
/// and merge proportional products.
fn expand_level(level: &[TermProduct], ops: &[CMatrix], policy: &PruningPolicy) -> Vec<TermProduct> {
    let mut next: Vec<TermProduct> = Vec::new();
    // Buckets of candidate group indices sharing a zero pattern; lookup
    // only, so map iteration order never influences the result.
    let mut buckets: HashMap<Vec<bool>, Vec<usize>> = HashMap::new();
    for group in level {
        for (j, op) in ops.iter().enumerate() {
            let product = op * &group.representative;
            let norm = policy.norm(&product);
            // Raw member k of the parent group extends to a product of
            // norm |c_k| * norm; prune per member so the threshold keeps
            // its raw-term meaning inside groups.
            let survivors: Vec<C64> = group
                .scalars
                .iter()
                .copied()
                .filter(|c| c.norm() * norm > policy.norm_threshold)
                .collect();
            if survivors.is_empty() {
                continue;
            }
            let pattern = zero_pattern(&product);
            let mut merged = false;
            if let Some(indices) = buckets.get(&pattern) {
                for &idx in indices {
                    let candidate = &next[idx];
                    let ratio = product[candidate.pivot] / candidate.representative[candidate.pivot];
                    let residual = (&product - candidate.representative.scale_complex(ratio)).norm();
                    if residual <= policy.grouping_tol {
                        let target = &mut next[idx];
                        target.scalars.extend(survivors.iter().map(|c| c * ratio));
                        merged = true;
                        break;
                    }
                }
            }
            if !merged {
                let mut word = Vec::with_capacity(group.word.len() + 1);
                word.push(j);
                word.extend_from_slice(&group.word);
                let pivot = max_abs_position(&product);
                let idx = next.len();
                next.push(TermProduct { representative: product, scalars: survivors, word, norm, pivot });
                buckets.entry(pattern).or_default().push(idx);
            }
        }
    }
    next
}

trait ScaleComplex {
    fn scale_complex(&self, c: C64) -> CMatrix;
}

impl ScaleComplex for CMatrix {
    fn scale_complex(&self, c: C64) -> CMatrix {
        self.map(|z| z * c)
    }
}

/// Enumerate grouped Kraus products over a heterogeneous step sequence:
/// level `s` multiplies by the operators of `sets[s]` on the left.
/// Returns the surviving groups after each level (index 0 is depth 1).
pub fn enumerate_product_levels(sets: &[&KrausSet], policy: &PruningPolicy) -> Result<Vec<Vec<TermProduct>>> {
    if sets.is_empty() {
        return Err(Error::InvalidArgument { reason: "need at least one kraus set".into() });
    }
    let dim = sets[0].dim();
    for ks in sets {
        if ks.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, actual: ks.dim() });
        }
    }
    let mut levels = Vec::with_capacity(sets.len());
    let mut current = vec![TermProduct::identity(dim)];
    for ks in sets {
        current = expand_level(&current, ks.ops(), policy);
        levels.push(current.clone());
    }
    Ok(levels)
}

/// Grouped products of `steps` applications of the same Kraus set.
pub fn enumerate_products(ks: &KrausSet, steps: usize, policy: &PruningPolicy) -> Vec<TermProduct> {
    assert!(steps >= 1, "enumerate_products requires steps >= 1");
    let sets = vec![ks; steps];
    enumerate_product_levels(&sets, policy)
        .expect("homogeneous sets cannot mismatch")
        .pop()
        .expect("at least one level")
}

/// Dense reference semantics: apply the channel `steps` times.
pub fn evolve_operator_sum(ks: &KrausSet, rho0: &DensityMatrix, steps: usize) -> Result<DensityMatrix> {
    let mut rho = rho0.clone();
    for _ in 0..steps {
        rho = apply_channel(ks, &rho)?;
    }
    Ok(rho)
}

/// Apply the grouped term sum to a density matrix:
/// `Σ_terms weight · T ρ T^H`. Used by tests and audits; the measurement
/// pipeline evaluates the same sum through dilations instead.
pub fn apply_terms(terms: &[TermProduct], rho: &CMatrix) -> CMatrix {
    let dim = rho.nrows();
    let mut out = CMatrix::zeros(dim, dim);
    for term in terms {
        let t_rho = term.representative() * rho;
        out += (&t_rho * term.representative().adjoint()).scale(term.weight());
    }
    out
}

fn lindblad_rhs(model: &LindbladModel, gram_cache: &[CMatrix], rho: &CMatrix) -> CMatrix {
    let h = model.hamiltonian();
    let commutator = h * rho - rho * h;
    let mut out = commutator.scale_complex(C64::new(0.0, -1.0 / HBAR_EV_FS));
    for (jump, gram) in model.jumps().iter().zip(gram_cache) {
        let l_rho = &jump.op * rho;
        let sandwich = &l_rho * jump.op.adjoint();
        let anti = gram * rho + rho * gram;
        out += (sandwich - anti.scale(0.5)).scale(jump.rate);
    }
    out
}

/// Positivity slack granted to Euler trajectory points; the first-order
/// scheme does not preserve positivity exactly.
pub const EULER_POSITIVITY_TOL: f64 = 1e-3;

/// Explicit Euler integration of the Lindblad equation for a fixed number
/// of steps. Returns the trajectory including the initial state.
pub fn evolve_lindblad_euler_steps(
    model: &LindbladModel,
    rho0: &DensityMatrix,
    n_steps: usize,
    dt_fs: f64,
) -> Result<Vec<DensityMatrix>> {
    if !(dt_fs > 0.0 && dt_fs.is_finite()) {
        return Err(Error::BadStep { reason: format!("dt must be positive and finite, got {dt_fs}") });
    }
    if model.dim() != rho0.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), actual: rho0.dim() });
    }
    let gram_cache: Vec<CMatrix> = model.jumps().iter().map(|j| j.op.ad_mul(&j.op)).collect();
    let mut trajectory = Vec::with_capacity(n_steps + 1);
    trajectory.push(rho0.clone());
    let mut rho = rho0.matrix().clone();
    let initial_trace = rho.trace().re;
    for _ in 0..n_steps {
        let rhs = lindblad_rhs(model, &gram_cache, &rho);
        rho += rhs.scale(dt_fs);
        let drift = (rho.trace().re - initial_trace).abs();
        if drift > 1e-10 {
            return Err(Error::BadStep { reason: format!("trace drift {drift:.3e} exceeds 1e-10") });
        }
        trajectory.push(DensityMatrix::with_tolerance(rho.clone(), EULER_POSITIVITY_TOL)?);
    }
    Ok(trajectory)
}

/// Explicit Euler integration over a total time that must be an integer
/// multiple of `dt_fs` (within rounding).
pub fn evolve_lindblad_euler(
    model: &LindbladModel,
    rho0: &DensityMatrix,
    total_t_fs: f64,
    dt_fs: f64,
) -> Result<Vec<DensityMatrix>> {
    if !(dt_fs > 0.0 && dt_fs.is_finite()) {
        return Err(Error::BadStep { reason: format!("dt must be positive and finite, got {dt_fs}") });
    }
    if total_t_fs < dt_fs {
        return Err(Error::BadStep { reason: format!("total time {total_t_fs} is below one step {dt_fs}") });
    }
    let ratio = total_t_fs / dt_fs;
    let n_steps = ratio.round();
    if (ratio - n_steps).abs() > 1e-9 * ratio.max(1.0) {
        return Err(Error::BadStep { reason: format!("total time / dt = {ratio} is not an integer step count") });
    }
    evolve_lindblad_euler_steps(model, rho0, n_steps as usize, dt_fs)
}
