//! Open quantum dynamics by Kraus operator sums and unitary dilation.
//!
//! The library converts Lindblad master equations into per-step Kraus
//! operator sets, evolves density matrices by iterating the operator sum
//! with norm-threshold pruning and proportionality grouping of multi-step
//! operator products, realizes each product as a unitary dilation acting
//! on embedded state vectors, and recovers populations and observable
//! expectations from exact or finite-shot projection measurements. A
//! five-level exciton-transfer model of the FMO light-harvesting complex
//! is included as a worked experiment, together with a first-order Euler
//! integrator of the master equation that serves as the dense classical
//! reference.

pub mod channels;
pub mod dilation;
pub mod error;
pub mod evolution;
pub mod fmo;
pub mod linalg;
pub mod measurement;

pub use channels::{
    apply_channel, damping_channel, kraus_from_lindblad, pure_state_density, DensityMatrix,
    InitialEnsemble, Jump, KrausSet, LindbladModel, LindbladModelWire,
};
pub use dilation::{defect_operator, dilate, embed_state, DilatedUnitary};
pub use error::{Error, Result};
pub use evolution::{
    enumerate_product_levels, enumerate_products, evolve_lindblad_euler,
    evolve_lindblad_euler_steps, evolve_operator_sum, NormKind, PruningPolicy, TermProduct,
};
pub use fmo::{build_fmo_model, fmo_hamiltonian, fmo_schedule, run_fmo_experiment, FmoParams, FmoRow};
pub use linalg::{
    cholesky_psd, hermitian_propagator, psd_sqrt, spectral_norm, C64, CMatrix, CVector,
    HermitianCheck, DEFAULT_TOL, HBAR_EV_FS,
};
pub use measurement::{
    estimate_diagonal, estimate_expectation, sample_counts, shift_observable, simulate_exact,
    EstimatorMode, MeasurementRecord, ObservableSpec,
};
