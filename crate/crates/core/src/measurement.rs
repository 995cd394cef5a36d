//! Projection-measurement layer: exact statevector application of dilated
//! unitaries, finite-shot sampling of basis outcomes, reconstruction of
//! density-matrix diagonals from first-half outcome frequencies, and
//! observable expectations through the shift/Cholesky/projection pipeline.

use std::collections::BTreeMap;

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channels::InitialEnsemble;
use crate::dilation::{dilate, embed_state, DilatedUnitary};
use crate::error::{Error, Result};
use crate::evolution::TermProduct;
use crate::linalg::{cholesky_psd, is_finite_vector, spectral_norm, CMatrix, CVector, HermitianCheck};

/// Whether an estimator reads exact squared amplitudes or finite-shot
/// frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorMode {
    Exact,
    Sampled,
}

/// Default number of shots per term for sampled estimators.
pub const DEFAULT_SHOTS: u64 = 9216;

/// Shot counts over the outcomes of one projective measurement.
#[derive(Debug, Clone, Serialize)]
pub struct MeasurementRecord {
    pub seed: u64,
    pub shots: u64,
    pub counts: BTreeMap<usize, u64>,
    #[serde(skip)]
    pub dim: usize,
}

impl MeasurementRecord {
    pub fn count(&self, outcome: usize) -> u64 {
        self.counts.get(&outcome).copied().unwrap_or(0)
    }

    pub fn frequency(&self, outcome: usize) -> f64 {
        self.count(outcome) as f64 / self.shots as f64
    }

    /// Fraction of shots that landed in outcomes `0..limit`.
    pub fn frequency_below(&self, limit: usize) -> f64 {
        let hits: u64 = self.counts.range(..limit).map(|(_, c)| c).sum();
        hits as f64 / self.shots as f64
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("record serialization cannot fail")
    }
}

/// Stable seed derivation for independent sub-streams (one per term, one
/// per ensemble member), so per-term parallelism cannot change results.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Apply a dilated unitary to an embedded state vector.
pub fn simulate_exact(u: &DilatedUnitary, v: &CVector) -> Result<CVector> {
    if v.len() != u.dim() {
        return Err(Error::DimensionMismatch { expected: u.dim(), actual: v.len() });
    }
    if !is_finite_vector(v) {
        return Err(Error::NonFinite);
    }
    let norm = v.norm();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::NotNormalized { norm });
    }
    Ok(u.matrix() * v)
}

/// Draw `shots` independent basis outcomes from `{|state_i|²}` with a
/// seeded deterministic generator.
pub fn sample_counts(state: &CVector, shots: u64, seed: u64) -> Result<MeasurementRecord> {
    if shots == 0 {
        return Err(Error::InvalidArgument { reason: "shots must be positive".into() });
    }
    if !is_finite_vector(state) {
        return Err(Error::NonFinite);
    }
    let norm = state.norm();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::NotNormalized { norm });
    }
    // WeightedIndex samples proportionally to the weights, which
    // renormalizes any residual deviation of the probabilities from 1.
    let probs: Vec<f64> = state.iter().map(|z| z.norm_sqr()).collect();
    let dist = WeightedIndex::new(&probs)
        .map_err(|e| Error::InvalidProbability { reason: format!("bad outcome distribution: {e}") })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = BTreeMap::new();
    for _ in 0..shots {
        let outcome = dist.sample(&mut rng);
        *counts.entry(outcome).or_insert(0) += 1;
    }
    Ok(MeasurementRecord { seed, shots, counts, dim: state.len() })
}

/// First-`n` outcome probabilities of one dilated term applied to one
/// embedded component, exact or sampled.
fn first_block_probabilities(
    dilated: &DilatedUnitary,
    v: &CVector,
    mode: EstimatorMode,
    shots: u64,
    seed: u64,
) -> Result<Vec<f64>> {
    let embedded = embed_state(v)?;
    let out = simulate_exact(dilated, &embedded)?;
    let n = dilated.base_dim();
    match mode {
        EstimatorMode::Exact => Ok((0..n).map(|i| out[i].norm_sqr()).collect()),
        EstimatorMode::Sampled => {
            let record = sample_counts(&out, shots, seed)?;
            Ok((0..n).map(|i| record.frequency(i)).collect())
        }
    }
}

fn check_term_dims(terms: &[TermProduct], dim: usize) -> Result<()> {
    for term in terms {
        if term.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, actual: term.dim() });
        }
    }
    Ok(())
}

/// Estimate the diagonal of the evolved density matrix by dilating every
/// term, applying it to each ensemble component, and accumulating
/// first-half outcome probabilities weighted by ensemble probability and
/// group weight.
pub fn estimate_diagonal(
    terms: &[TermProduct],
    ensemble: &InitialEnsemble,
    shots_per_term: u64,
    seed: u64,
    mode: EstimatorMode,
) -> Result<Vec<f64>> {
    let n = ensemble.dim();
    check_term_dims(terms, n)?;
    let per_term: Vec<Vec<f64>> = terms
        .par_iter()
        .enumerate()
        .map(|(t_idx, term)| -> Result<Vec<f64>> {
            let dilated = dilate(term.representative())?;
            let correction = dilated.weight_correction();
            let term_seed = derive_seed(seed, t_idx as u64);
            let mut acc = vec![0.0; n];
            for (m_idx, (p, v)) in ensemble.components().iter().enumerate() {
                let member_seed = derive_seed(term_seed, m_idx as u64);
                let probs = first_block_probabilities(&dilated, v, mode, shots_per_term, member_seed)?;
                for (a, q) in acc.iter_mut().zip(&probs) {
                    *a += p * term.weight() * correction * q;
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    // Deterministic accumulation order regardless of thread count.
    let mut out = vec![0.0; n];
    for row in per_term {
        for (a, b) in out.iter_mut().zip(&row) {
            *a += b;
        }
    }
    Ok(out)
}

/// An observable prepared for trace evaluation by projection: the shifted
/// matrix `Ã = (A + I·||A||) / (2||A||)` has spectrum in [0, 1] and
/// factors as `Ã = L L^H`; expectation of `Ã` is read off as first-half
/// projection probability and mapped back by `<A> = 2||A|| <Ã> - ||A||`.
#[derive(Debug, Clone)]
pub struct ObservableSpec {
    matrix: CMatrix,
    norm: f64,
    shifted: CMatrix,
    factor: CMatrix,
}

impl ObservableSpec {
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Cached spectral norm `||A||`.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn shifted(&self) -> &CMatrix {
        &self.shifted
    }

    /// Lower-triangular factor with `L L^H = Ã`.
    pub fn factor(&self) -> &CMatrix {
        &self.factor
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Shift and factor a Hermitian observable.
pub fn shift_observable(a: &CMatrix) -> Result<ObservableSpec> {
    HermitianCheck::evaluate(a, 1e-10).require()?;
    let norm = spectral_norm(a)?;
    if norm == 0.0 {
        return Err(Error::ZeroObservable);
    }
    let n = a.nrows();
    let shifted = (a + CMatrix::identity(n, n).scale(norm)).unscale(2.0 * norm);
    let factor = cholesky_psd(&shifted, 1e-10)?;
    Ok(ObservableSpec { matrix: a.clone(), norm, shifted, factor })
}

/// Estimate `<A> = tr(A ρ)` over the evolved state: each term is combined
/// with the observable factor into the single contraction `L^H T`, dilated
/// once, and the probability of landing in the first-half subspace is
/// accumulated into `<Ã>`, then mapped back to the observable's scale.
pub fn estimate_expectation(
    spec: &ObservableSpec,
    terms: &[TermProduct],
    ensemble: &InitialEnsemble,
    shots_per_term: u64,
    seed: u64,
    mode: EstimatorMode,
) -> Result<f64> {
    let n = ensemble.dim();
    if spec.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: spec.dim() });
    }
    check_term_dims(terms, n)?;
    let factor_adjoint = spec.factor().adjoint();
    let per_term: Vec<f64> = terms
        .par_iter()
        .enumerate()
        .map(|(t_idx, term)| -> Result<f64> {
            let combined = &factor_adjoint * term.representative();
            let dilated = dilate(&combined)?;
            let correction = dilated.weight_correction();
            let term_seed = derive_seed(seed, t_idx as u64);
            let mut acc = 0.0;
            for (m_idx, (p, v)) in ensemble.components().iter().enumerate() {
                let member_seed = derive_seed(term_seed, m_idx as u64);
                let embedded = embed_state(v)?;
                let out = simulate_exact(&dilated, &embedded)?;
                let first_half = match mode {
                    EstimatorMode::Exact => (0..n).map(|i| out[i].norm_sqr()).sum::<f64>(),
                    EstimatorMode::Sampled => {
                        sample_counts(&out, shots_per_term, member_seed)?.frequency_below(n)
                    }
                };
                acc += p * term.weight() * correction * first_half;
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let shifted_expectation: f64 = per_term.iter().sum();
    Ok(2.0 * spec.norm() * shifted_expectation - spec.norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::damping_channel;
    use crate::evolution::{enumerate_products, PruningPolicy};
    use crate::linalg::C64;
    use approx::assert_abs_diff_eq;

    fn basis_vector(dim: usize, index: usize) -> CVector {
        let mut v = CVector::zeros(dim);
        v[index] = C64::new(1.0, 0.0);
        v
    }

    #[test]
    fn simulate_exact_identity_passthrough() {
        let u = dilate(&CMatrix::identity(2, 2)).unwrap();
        let v = embed_state(&basis_vector(2, 1)).unwrap();
        let out = simulate_exact(&u, &v).unwrap();
        assert!((&out - &v).norm() < 1e-12);
    }

    #[test]
    fn simulate_exact_first_block_is_source_action() {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 1)] = C64::new(0.6, 0.0);
        m[(1, 1)] = C64::new(0.3, 0.4);
        let u = dilate(&m).unwrap();
        let w = basis_vector(2, 1);
        let out = simulate_exact(&u, &embed_state(&w).unwrap()).unwrap();
        let expected = &m * &w;
        for i in 0..2 {
            assert!((out[i] - expected[i]).norm() < 1e-12);
        }
        assert_abs_diff_eq!(out.norm(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn sampling_concentrated_state_is_deterministic() {
        let state = basis_vector(4, 0);
        let rec = sample_counts(&state, 100, 42).unwrap();
        assert_eq!(rec.count(0), 100);
        assert_eq!(rec.counts.len(), 1);

        let again = sample_counts(&state, 100, 42).unwrap();
        assert_eq!(rec.counts, again.counts);
    }

    #[test]
    fn sampling_balanced_state_stays_within_binomial_band() {
        let amp = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let state = CVector::from_vec(vec![amp, amp]);
        let shots = 9216u64;
        let sigma = (shots as f64 * 0.25).sqrt();
        let mut misses = 0;
        for seed in 0..100 {
            let rec = sample_counts(&state, shots, seed).unwrap();
            let dev = (rec.count(0) as f64 - shots as f64 / 2.0).abs();
            if dev > 3.0 * sigma {
                misses += 1;
            }
        }
        assert!(misses <= 1, "{misses} of 100 seeds fell outside the 3-sigma band");
    }

    #[test]
    fn sampling_rejects_unnormalized_state() {
        let state = CVector::from_vec(vec![C64::new(0.5, 0.0), C64::new(0.5, 0.0)]);
        assert!(matches!(sample_counts(&state, 10, 0), Err(Error::NotNormalized { .. })));
    }

    #[test]
    fn record_json_shape() {
        let rec = sample_counts(&basis_vector(2, 1), 5, 9).unwrap();
        let text = rec.to_json_string();
        assert!(text.contains("\"seed\":9"));
        assert!(text.contains("\"shots\":5"));
        assert!(text.contains("\"counts\":{\"1\":5}"));
    }

    #[test]
    fn diagonal_of_identity_terms_reads_state_weights() {
        let v = CVector::from_vec(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]);
        let ensemble = InitialEnsemble::pure(v).unwrap();
        let terms = vec![TermProduct::identity(2)];
        let diag = estimate_diagonal(&terms, &ensemble, 1, 0, EstimatorMode::Exact).unwrap();
        assert_abs_diff_eq!(diag[0], 0.36, epsilon = 1e-12);
        assert_abs_diff_eq!(diag[1], 0.64, epsilon = 1e-12);
    }

    #[test]
    fn diagonal_of_damping_terms_matches_survival_power() {
        let p = 0.36;
        let ks = damping_channel(p, 0.0).unwrap();
        let steps = 4;
        let terms = enumerate_products(&ks, steps, &PruningPolicy::unpruned());
        let ensemble = InitialEnsemble::basis_state(2, 1);
        let diag = estimate_diagonal(&terms, &ensemble, 1, 0, EstimatorMode::Exact).unwrap();
        assert_abs_diff_eq!(diag[1], (1.0 - p).powi(steps as i32), epsilon = 1e-12);
        assert_abs_diff_eq!(diag[0] + diag[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn shifted_sigma_z_factors_to_projector() {
        let mut sz = CMatrix::zeros(2, 2);
        sz[(0, 0)] = C64::new(1.0, 0.0);
        sz[(1, 1)] = C64::new(-1.0, 0.0);
        let spec = shift_observable(&sz).unwrap();
        assert_abs_diff_eq!(spec.norm(), 1.0, epsilon = 1e-12);
        let mut projector = CMatrix::zeros(2, 2);
        projector[(0, 0)] = C64::new(1.0, 0.0);
        assert!((spec.shifted() - &projector).norm() < 1e-12);
        assert!((spec.factor() - &projector).norm() < 1e-12);
    }

    #[test]
    fn shifted_identity_is_identity() {
        let spec = shift_observable(&CMatrix::identity(3, 3)).unwrap();
        assert!((spec.shifted() - &CMatrix::identity(3, 3)).norm() < 1e-12);
        assert!((spec.factor() - &CMatrix::identity(3, 3)).norm() < 1e-12);
    }

    #[test]
    fn shift_rejects_zero_observable() {
        assert!(matches!(shift_observable(&CMatrix::zeros(2, 2)), Err(Error::ZeroObservable)));
    }

    #[test]
    fn expectation_of_identity_is_one() {
        let v = CVector::from_vec(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]);
        let ensemble = InitialEnsemble::pure(v).unwrap();
        let spec = shift_observable(&CMatrix::identity(2, 2)).unwrap();
        let terms = vec![TermProduct::identity(2)];
        let got = estimate_expectation(&spec, &terms, &ensemble, 1, 0, EstimatorMode::Exact).unwrap();
        assert_abs_diff_eq!(got, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn expectation_of_fmo_energy_on_initial_site() {
        let h = crate::fmo::fmo_hamiltonian();
        let spec = shift_observable(&h).unwrap();
        let ensemble = InitialEnsemble::basis_state(5, 1);
        let terms = vec![TermProduct::identity(5)];
        let got = estimate_expectation(&spec, &terms, &ensemble, 1, 0, EstimatorMode::Exact).unwrap();
        assert_abs_diff_eq!(got, 0.0267, epsilon = 1e-9);
    }

    #[test]
    fn shifted_fmo_energy_spectrum_lies_in_unit_interval() {
        let h = crate::fmo::fmo_hamiltonian();
        let spec = shift_observable(&h).unwrap();
        let eig = crate::linalg::hermitian_eigen(spec.shifted(), 1e-10).unwrap();
        for &l in eig.eigenvalues.iter() {
            assert!(l >= -1e-9 && l <= 1.0 + 1e-9, "eigenvalue {l} outside [0, 1]");
        }
    }

    #[test]
    fn seed_derivation_is_stable_and_spread() {
        let a = derive_seed(7, 0);
        let b = derive_seed(7, 1);
        assert_ne!(a, b);
        assert_eq!(a, derive_seed(7, 0));
    }
}
