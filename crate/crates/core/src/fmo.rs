//! Five-level exciton-transfer model of the FMO functional subsystem:
//! ground state, chromophores 1-3, and an absorbing sink. Packs the
//! Hamiltonian and the seven dissipative processes into a Lindblad model,
//! provides the staggered measurement-time schedule, and drives the
//! end-to-end experiment comparing the dilation pipeline against the
//! Euler reference.

use crate::channels::{kraus_from_lindblad, InitialEnsemble, Jump, LindbladModel};
use crate::error::{Error, Result};
use crate::evolution::{
    enumerate_product_levels, evolve_lindblad_euler_steps, PruningPolicy,
};
use crate::linalg::{trace_product_re, C64, CMatrix, HermitianCheck};
use crate::measurement::{
    derive_seed, estimate_diagonal, estimate_expectation, shift_observable, EstimatorMode,
};

/// Conversion factor from atomic units of time to femtoseconds.
pub const AU_TO_FS: f64 = 0.024_188_84;

/// Number of levels: ground, chromophores 1-3, sink.
pub const FMO_DIM: usize = 5;

/// Grouped term count reported for this model at depth 6 and threshold
/// 0.01; printed next to our own count as a comparison value.
pub const REFERENCE_TERM_COUNT: usize = 679;

/// Euler reference step in atomic units; divides every scheduled offset
/// exactly, so reference states are read off a single trajectory.
const REFERENCE_DT_AU: u64 = 10;

/// Site energies and couplings of the FMO functional subsystem, in eV.
/// Rows and columns 0 (ground) and 4 (sink) are zero: those states only
/// couple through the dissipative processes.
pub fn fmo_hamiltonian() -> CMatrix {
    let rows: [[f64; 5]; 5] = [
        [0.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0267, -0.0129, 0.000632, 0.0],
        [0.0, -0.0129, 0.0273, 0.00404, 0.0],
        [0.0, 0.000632, 0.00404, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.0],
    ];
    CMatrix::from_fn(5, 5, |i, j| C64::new(rows[i][j], 0.0))
}

/// Model parameters: Hamiltonian in eV, process rates in fs⁻¹, and the
/// default evolution step.
#[derive(Debug, Clone)]
pub struct FmoParams {
    pub hamiltonian: CMatrix,
    /// Dephasing rate of each chromophore.
    pub dephasing_rate: f64,
    /// Dissipation rate from each chromophore to the ground state.
    pub dissipation_rate: f64,
    /// Transfer rate from chromophore 3 into the sink.
    pub sink_rate: f64,
    /// Default step between measurement points (2000 atomic units).
    pub dt_fs: f64,
}

impl Default for FmoParams {
    fn default() -> Self {
        FmoParams {
            hamiltonian: fmo_hamiltonian(),
            dephasing_rate: 3.00e-3,
            dissipation_rate: 5.00e-7,
            sink_rate: 6.28e-3,
            dt_fs: 2000.0 * AU_TO_FS,
        }
    }
}

impl FmoParams {
    pub fn validate(&self) -> Result<()> {
        if self.hamiltonian.nrows() != FMO_DIM || self.hamiltonian.ncols() != FMO_DIM {
            return Err(Error::InvalidModel { reason: "hamiltonian must be 5x5".into() });
        }
        HermitianCheck::evaluate(&self.hamiltonian, 1e-10).require()?;
        for i in 0..FMO_DIM {
            for j in 0..FMO_DIM {
                if self.hamiltonian[(i, j)].im.abs() > 1e-12 {
                    return Err(Error::InvalidModel { reason: "hamiltonian must be real symmetric".into() });
                }
                if (i == 0 || i == 4 || j == 0 || j == 4) && self.hamiltonian[(i, j)].norm() > 0.0 {
                    return Err(Error::InvalidModel {
                        reason: "ground and sink rows/columns of the hamiltonian must be zero".into(),
                    });
                }
            }
        }
        for (name, rate) in [
            ("dephasing", self.dephasing_rate),
            ("dissipation", self.dissipation_rate),
            ("sink", self.sink_rate),
        ] {
            if !(rate >= 0.0 && rate.is_finite()) {
                return Err(Error::InvalidModel { reason: format!("{name} rate must be non-negative") });
            }
        }
        if !(self.dt_fs > 0.0 && self.dt_fs.is_finite()) {
            return Err(Error::InvalidModel { reason: "dt_fs must be positive".into() });
        }
        Ok(())
    }

    /// Recover parameters from a generic Lindblad model that carries the
    /// canonical seven processes in order: three dephasing projectors,
    /// three dissipation transitions, one sink transition.
    pub fn from_model(model: &LindbladModel, dt_fs: f64) -> Result<Self> {
        if model.dim() != FMO_DIM {
            return Err(Error::InvalidModel { reason: format!("expected a 5-level model, got {}", model.dim()) });
        }
        if model.jumps().len() != 7 {
            return Err(Error::InvalidModel { reason: format!("expected 7 jumps, got {}", model.jumps().len()) });
        }
        let expected: Vec<CMatrix> = canonical_jump_ops();
        for (k, (jump, want)) in model.jumps().iter().zip(&expected).enumerate() {
            if (&jump.op - want).norm() > 1e-12 {
                return Err(Error::InvalidModel { reason: format!("jump {k} is not the canonical operator") });
            }
        }
        let rates: Vec<f64> = model.jumps().iter().map(|j| j.rate).collect();
        if (rates[0] - rates[1]).abs() > 1e-15 || (rates[0] - rates[2]).abs() > 1e-15 {
            return Err(Error::InvalidModel { reason: "dephasing rates differ across chromophores".into() });
        }
        if (rates[3] - rates[4]).abs() > 1e-15 || (rates[3] - rates[5]).abs() > 1e-15 {
            return Err(Error::InvalidModel { reason: "dissipation rates differ across chromophores".into() });
        }
        let params = FmoParams {
            hamiltonian: model.hamiltonian().clone(),
            dephasing_rate: rates[0],
            dissipation_rate: rates[3],
            sink_rate: rates[6],
            dt_fs,
        };
        params.validate()?;
        Ok(params)
    }
}

fn transition(dim: usize, to: usize, from: usize) -> CMatrix {
    let mut m = CMatrix::zeros(dim, dim);
    m[(to, from)] = C64::new(1.0, 0.0);
    m
}

fn canonical_jump_ops() -> Vec<CMatrix> {
    let mut ops = Vec::with_capacity(7);
    for i in 1..=3 {
        ops.push(transition(FMO_DIM, i, i)); // dephasing projector |i><i|
    }
    for i in 1..=3 {
        ops.push(transition(FMO_DIM, 0, i)); // dissipation |0><i|
    }
    ops.push(transition(FMO_DIM, 4, 3)); // sink |4><3|
    ops
}

/// Assemble the Lindblad model with the seven processes in canonical
/// order: dephasing on chromophores 1-3, dissipation from each to the
/// ground state, and the sink transition from chromophore 3.
pub fn build_fmo_model(params: &FmoParams) -> Result<LindbladModel> {
    params.validate()?;
    let ops = canonical_jump_ops();
    let rates = [
        params.dephasing_rate,
        params.dephasing_rate,
        params.dephasing_rate,
        params.dissipation_rate,
        params.dissipation_rate,
        params.dissipation_rate,
        params.sink_rate,
    ];
    let jumps = ops
        .into_iter()
        .zip(rates)
        .map(|(op, rate)| Jump { op, rate })
        .collect();
    LindbladModel::with_label(params.hamiltonian.clone(), jumps, "fmo".into())
}

/// One staggered measurement group: a short first step followed by five
/// full steps, giving six offsets.
#[derive(Debug, Clone)]
pub struct ScheduleGroup {
    pub first_dt_au: u64,
    pub later_dt_au: u64,
    pub offsets_au: [u64; 6],
}

impl ScheduleGroup {
    pub fn first_dt_fs(&self) -> f64 {
        self.first_dt_au as f64 * AU_TO_FS
    }

    pub fn later_dt_fs(&self) -> f64 {
        self.later_dt_au as f64 * AU_TO_FS
    }

    pub fn offsets_fs(&self) -> [f64; 6] {
        self.offsets_au.map(|au| au as f64 * AU_TO_FS)
    }
}

/// The five measurement groups: group `g` starts at `g * 400` atomic
/// units and advances in steps of 2000, so the union of all offsets is 30
/// points evenly spaced over (0, 12000] atomic units (about 290 fs).
pub fn fmo_schedule() -> Vec<ScheduleGroup> {
    (1..=5u64)
        .map(|g| {
            let first = g * 400;
            let mut offsets = [0u64; 6];
            for (k, slot) in offsets.iter_mut().enumerate() {
                *slot = first + 2000 * k as u64;
            }
            ScheduleGroup { first_dt_au: first, later_dt_au: 2000, offsets_au: offsets }
        })
        .collect()
}

/// One output row of the experiment: pipeline populations and energy next
/// to the Euler reference at the same time.
#[derive(Debug, Clone)]
pub struct FmoRow {
    pub t_fs: f64,
    pub populations: [f64; FMO_DIM],
    pub reference_populations: [f64; FMO_DIM],
    pub energy_ev: f64,
    pub reference_energy_ev: f64,
    pub n_terms: usize,
}

/// Run the full experiment: for every schedule group, build the two Kraus
/// sets (short first step, full later steps), enumerate grouped products
/// level by level at the given threshold, and estimate the five
/// populations and the energy expectation at each offset. The Euler
/// trajectory at a fine step provides the reference columns. Returns the
/// initial-time row followed by the 30 scheduled offsets, ordered by time.
pub fn run_fmo_experiment(
    params: &FmoParams,
    initial_site: usize,
    shots: u64,
    threshold: f64,
    seed: u64,
    mode: EstimatorMode,
) -> Result<Vec<FmoRow>> {
    params.validate()?;
    if !(1..=3).contains(&initial_site) {
        return Err(Error::InvalidArgument {
            reason: format!("initial site must be a chromophore index 1..=3, got {initial_site}"),
        });
    }
    if !(threshold >= 0.0 && threshold.is_finite()) {
        return Err(Error::InvalidArgument { reason: "threshold must be non-negative".into() });
    }
    let model = build_fmo_model(params)?;
    let ensemble = InitialEnsemble::basis_state(FMO_DIM, initial_site);
    let energy_spec = shift_observable(&params.hamiltonian)?;
    let policy = PruningPolicy { norm_threshold: threshold, ..Default::default() };

    let schedule = fmo_schedule();
    let total_au = schedule.iter().flat_map(|g| g.offsets_au).max().unwrap_or(0);
    let ref_steps = (total_au / REFERENCE_DT_AU) as usize;
    let rho0 = crate::channels::DensityMatrix::basis_state(FMO_DIM, initial_site);
    let reference = evolve_lindblad_euler_steps(&model, &rho0, ref_steps, REFERENCE_DT_AU as f64 * AU_TO_FS)?;

    let mut rows = Vec::with_capacity(31);
    let mut initial_pops = [0.0; FMO_DIM];
    initial_pops[initial_site] = 1.0;
    let initial_energy = params.hamiltonian[(initial_site, initial_site)].re;
    rows.push(FmoRow {
        t_fs: 0.0,
        populations: initial_pops,
        reference_populations: initial_pops,
        energy_ev: initial_energy,
        reference_energy_ev: initial_energy,
        n_terms: 1,
    });

    for (g_idx, group) in schedule.iter().enumerate() {
        let ks_first = kraus_from_lindblad(&model, group.first_dt_fs(), true)?;
        let ks_later = kraus_from_lindblad(&model, group.later_dt_fs(), true)?;
        let mut sets = Vec::with_capacity(6);
        sets.push(&ks_first);
        for _ in 0..5 {
            sets.push(&ks_later);
        }
        let levels = enumerate_product_levels(&sets, &policy)?;
        for (k, terms) in levels.iter().enumerate() {
            let offset_au = group.offsets_au[k];
            let point = (g_idx * 6 + k) as u64;
            let pops = estimate_diagonal(terms, &ensemble, shots, derive_seed(seed, 2 * point), mode)?;
            let energy = estimate_expectation(
                &energy_spec,
                terms,
                &ensemble,
                shots,
                derive_seed(seed, 2 * point + 1),
                mode,
            )?;
            let ref_state = &reference[(offset_au / REFERENCE_DT_AU) as usize];
            let ref_pops = ref_state.populations();
            let mut populations = [0.0; FMO_DIM];
            populations.copy_from_slice(&pops);
            let mut reference_populations = [0.0; FMO_DIM];
            reference_populations.copy_from_slice(&ref_pops);
            rows.push(FmoRow {
                t_fs: offset_au as f64 * AU_TO_FS,
                populations,
                reference_populations,
                energy_ev: energy,
                reference_energy_ev: trace_product_re(&params.hamiltonian, ref_state.matrix()),
                n_terms: terms.len(),
            });
        }
    }
    rows.sort_by(|a, b| a.t_fs.partial_cmp(&b.t_fs).expect("times are finite"));
    Ok(rows)
}
