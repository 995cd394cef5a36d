//! Seeded random builders shared by the integration suites.

use kraussim::{C64, CMatrix, CVector, Jump, LindbladModel};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_complex(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

pub fn random_matrix(dim: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    CMatrix::from_fn(dim, dim, |_, _| random_complex(rng))
}

pub fn random_hermitian(dim: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let a = random_matrix(dim, rng);
    (&a + a.adjoint()).scale(0.5)
}

/// Random Hermitian PSD matrix of the requested rank, built as a Gram
/// matrix of `rank` random columns.
pub fn random_psd(dim: usize, rank: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let factor = CMatrix::from_fn(dim, rank, |_, _| random_complex(rng));
    (&factor * factor.adjoint()).unscale(rank.max(1) as f64)
}

pub fn random_unit_vector(dim: usize, rng: &mut ChaCha8Rng) -> CVector {
    loop {
        let v = CVector::from_fn(dim, |_, _| random_complex(rng));
        let norm = v.norm();
        if norm > 1e-3 {
            return v.unscale(norm);
        }
    }
}

/// Random contraction: a random matrix rescaled to a spectral norm drawn
/// uniformly from [0, 1].
pub fn random_contraction(dim: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let a = random_matrix(dim, rng);
    let norm = kraussim::spectral_norm(&a).unwrap();
    let target: f64 = rng.gen_range(0.0..1.0);
    if norm == 0.0 {
        return a;
    }
    a.scale(target / norm)
}

/// Random Lindblad model with `n_jumps` dense jump operators and a step
/// `dt` guaranteed to satisfy the Kraus construction precondition. Returns
/// the model and a valid dt.
pub fn random_model(dim: usize, n_jumps: usize, rng: &mut ChaCha8Rng) -> (LindbladModel, f64) {
    let h = random_hermitian(dim, rng);
    let mut jumps = Vec::with_capacity(n_jumps);
    let mut budget = 0.0;
    for _ in 0..n_jumps {
        let op = random_matrix(dim, rng);
        let rate = rng.gen_range(0.01..0.5);
        let norm = kraussim::spectral_norm(&op).unwrap();
        budget += rate * norm * norm;
        jumps.push(Jump { op, rate });
    }
    let dt = 0.5 / budget.max(1e-6);
    (LindbladModel::new(h, jumps).unwrap(), dt)
}
