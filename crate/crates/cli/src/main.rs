//! Command-line runner: loads Lindblad models from JSON or the built-in
//! FMO preset, dispatches to the evolution engines and estimators, and
//! writes deterministic CSV/JSON outputs.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use kraussim::evolution::{self, NormKind, PruningPolicy};
use kraussim::fmo::{self, FmoParams, AU_TO_FS, REFERENCE_TERM_COUNT};
use kraussim::measurement::{self, EstimatorMode};
use kraussim::{
    enumerate_product_levels, evolve_operator_sum, kraus_from_lindblad, run_fmo_experiment,
    shift_observable, DensityMatrix, InitialEnsemble, LindbladModel,
};

const PRESET_FMO: &str = "fmo-default";

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Lib(#[from] kraussim::Error),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("model not found: {0}")]
    ModelNotFound(String),
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    fn code(&self) -> &'static str {
        match self {
            CliError::Lib(e) => e.code(),
            CliError::Config(_) => "cli.config_invalid",
            CliError::ModelNotFound(_) => "cli.model_not_found",
            CliError::Io { .. } => "cli.io",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Exact,
    Sampled,
}

impl Mode {
    fn to_estimator(self) -> EstimatorMode {
        match self {
            Mode::Exact => EstimatorMode::Exact,
            Mode::Sampled => EstimatorMode::Sampled,
        }
    }

    fn label(self) -> &'static str {
        match self {
            Mode::Exact => "exact",
            Mode::Sampled => "sampled",
        }
    }
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Path to a Lindblad model JSON file.
    #[arg(long, conflicts_with = "preset")]
    model: Option<PathBuf>,
    /// Built-in model preset (`fmo-default`).
    #[arg(long)]
    preset: Option<String>,
    /// Output file; stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct StepArgs {
    /// Evolution step in femtoseconds.
    #[arg(long, conflicts_with = "dt_au")]
    dt_fs: Option<f64>,
    /// Evolution step in atomic units (converted at 0.02418884 fs/a.u.).
    #[arg(long)]
    dt_au: Option<f64>,
}

impl StepArgs {
    fn resolve(&self, default_au: f64) -> f64 {
        match (self.dt_fs, self.dt_au) {
            (Some(fs), _) => fs,
            (None, Some(au)) => au * AU_TO_FS,
            (None, None) => default_au * AU_TO_FS,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "kraussim", version, about = "Open quantum dynamics via Kraus operator sums and unitary dilation")]
struct Cli {
    /// JSON run configuration; replaces the subcommand and its flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Iterate the operator-sum channel and print populations per step.
    Evolve(EvolveArgs),
    /// Integrate the master equation with the Euler method.
    Reference(ReferenceArgs),
    /// Run the staggered-schedule FMO experiment with reference columns.
    Fmo(FmoArgs),
    /// Enumerate grouped operator products and report term counts.
    Terms(TermsArgs),
    /// Evaluate the energy observable along the evolution.
    Expectation(ExpectationArgs),
}

#[derive(Debug, Args)]
struct EvolveArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    step: StepArgs,
    /// Number of channel applications.
    #[arg(long, default_value_t = 6)]
    steps: usize,
    /// Basis state carrying the initial excitation.
    #[arg(long, default_value_t = 1)]
    initial_site: usize,
    /// Skip the coherent factor exp(-iH dt/hbar) on the Kraus operators.
    #[arg(long)]
    no_coherent: bool,
}

#[derive(Debug, Args)]
struct ReferenceArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Integrator step in femtoseconds (default 10 a.u.).
    #[arg(long, default_value_t = 10.0 * AU_TO_FS)]
    dt_fs: f64,
    /// Total integration time in femtoseconds (default 12000 a.u.).
    #[arg(long, default_value_t = 12000.0 * AU_TO_FS)]
    total_t_fs: f64,
    #[arg(long, default_value_t = 1)]
    initial_site: usize,
}

#[derive(Debug, Args)]
struct FmoArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    step: StepArgs,
    #[arg(long, default_value_t = measurement::DEFAULT_SHOTS)]
    shots: u64,
    #[arg(long, default_value_t = 0.01)]
    threshold: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Mode::Exact)]
    mode: Mode,
    #[arg(long, default_value_t = 1)]
    initial_site: usize,
}

#[derive(Debug, Args)]
struct TermsArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    step: StepArgs,
    #[arg(long, default_value_t = 6)]
    steps: usize,
    #[arg(long, default_value_t = 0.01)]
    threshold: f64,
    #[arg(long)]
    no_coherent: bool,
}

#[derive(Debug, Args)]
struct ExpectationArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    step: StepArgs,
    #[arg(long, default_value_t = 6)]
    steps: usize,
    #[arg(long, default_value_t = 0.01)]
    threshold: f64,
    #[arg(long, default_value_t = measurement::DEFAULT_SHOTS)]
    shots: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Mode::Exact)]
    mode: Mode,
    #[arg(long, default_value_t = 1)]
    initial_site: usize,
    #[arg(long)]
    no_coherent: bool,
}

/// JSON wrapper mirroring the flag surface, for `--config` runs.
#[derive(Debug, Deserialize)]
struct RunConfig {
    model: String,
    command: String,
    dt_fs: Option<f64>,
    dt_au: Option<f64>,
    total_t_fs: Option<f64>,
    steps: Option<usize>,
    shots: Option<u64>,
    threshold: Option<f64>,
    seed: Option<u64>,
    mode: Option<String>,
    output: Option<PathBuf>,
    initial_site: Option<usize>,
    no_coherent: Option<bool>,
}

fn main() {
    if let Ok(threads) = std::env::var("SIM_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error code={} message=\"{}\"", e.code(), e);
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let command = match (cli.config, cli.command) {
        (Some(path), None) => command_from_config(&path)?,
        (None, Some(cmd)) => cmd,
        (Some(_), Some(_)) => {
            return Err(CliError::Config("pass either --config or a subcommand, not both".into()))
        }
        (None, None) => return Err(CliError::Config("missing subcommand (try --help)".into())),
    };
    match command {
        Command::Evolve(args) => cmd_evolve(args),
        Command::Reference(args) => cmd_reference(args),
        Command::Fmo(args) => cmd_fmo(args),
        Command::Terms(args) => cmd_terms(args),
        Command::Expectation(args) => cmd_expectation(args),
    }
}

fn command_from_config(path: &Path) -> Result<Command, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
    let cfg: RunConfig =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("config parse: {e}")))?;
    let model = model_args_from_config(&cfg)?;
    let step = StepArgs { dt_fs: cfg.dt_fs, dt_au: cfg.dt_au };
    let mode = match cfg.mode.as_deref() {
        None | Some("exact") => Mode::Exact,
        Some("sampled") => Mode::Sampled,
        Some(other) => return Err(CliError::Config(format!("unknown mode {other:?}"))),
    };
    let command = match cfg.command.as_str() {
        "evolve" => Command::Evolve(EvolveArgs {
            model,
            step,
            steps: cfg.steps.unwrap_or(6),
            initial_site: cfg.initial_site.unwrap_or(1),
            no_coherent: cfg.no_coherent.unwrap_or(false),
        }),
        "reference" => Command::Reference(ReferenceArgs {
            model,
            dt_fs: cfg.dt_fs.or(cfg.dt_au.map(|au| au * AU_TO_FS)).unwrap_or(10.0 * AU_TO_FS),
            total_t_fs: cfg.total_t_fs.unwrap_or(12000.0 * AU_TO_FS),
            initial_site: cfg.initial_site.unwrap_or(1),
        }),
        "fmo" => Command::Fmo(FmoArgs {
            model,
            step,
            shots: cfg.shots.unwrap_or(measurement::DEFAULT_SHOTS),
            threshold: cfg.threshold.unwrap_or(0.01),
            seed: cfg.seed.unwrap_or(0),
            mode,
            initial_site: cfg.initial_site.unwrap_or(1),
        }),
        "terms" => Command::Terms(TermsArgs {
            model,
            step,
            steps: cfg.steps.unwrap_or(6),
            threshold: cfg.threshold.unwrap_or(0.01),
            no_coherent: cfg.no_coherent.unwrap_or(false),
        }),
        "expectation" => Command::Expectation(ExpectationArgs {
            model,
            step,
            steps: cfg.steps.unwrap_or(6),
            threshold: cfg.threshold.unwrap_or(0.01),
            shots: cfg.shots.unwrap_or(measurement::DEFAULT_SHOTS),
            seed: cfg.seed.unwrap_or(0),
            mode,
            initial_site: cfg.initial_site.unwrap_or(1),
            no_coherent: cfg.no_coherent.unwrap_or(false),
        }),
        other => return Err(CliError::Config(format!("unknown command {other:?}"))),
    };
    Ok(command)
}

fn model_args_from_config(cfg: &RunConfig) -> Result<ModelArgs, CliError> {
    let args = if cfg.model == PRESET_FMO {
        ModelArgs { model: None, preset: Some(cfg.model.clone()), output: cfg.output.clone() }
    } else {
        ModelArgs { model: Some(PathBuf::from(&cfg.model)), preset: None, output: cfg.output.clone() }
    };
    Ok(args)
}

/// Resolve the model source into a Lindblad model plus a display label.
fn load_model(args: &ModelArgs) -> Result<(LindbladModel, String), CliError> {
    match (&args.model, &args.preset) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)
                .map_err(|_| CliError::ModelNotFound(path.display().to_string()))?;
            let model = LindbladModel::from_json_str(&text)?;
            let label =
                if model.label().is_empty() { path.display().to_string() } else { model.label().to_string() };
            Ok((model, label))
        }
        (None, Some(name)) if name == PRESET_FMO => {
            let model = fmo::build_fmo_model(&FmoParams::default())?;
            Ok((model, PRESET_FMO.to_string()))
        }
        (None, Some(name)) => Err(CliError::ModelNotFound(format!("unknown preset {name:?}"))),
        (None, None) => {
            let model = fmo::build_fmo_model(&FmoParams::default())?;
            Ok((model, PRESET_FMO.to_string()))
        }
        (Some(_), Some(_)) => Err(CliError::Config("pass --model or --preset, not both".into())),
    }
}

fn check_site(dim: usize, site: usize) -> Result<(), CliError> {
    if site >= dim {
        return Err(CliError::Config(format!("initial site {site} outside 0..{dim}")));
    }
    Ok(())
}

fn write_output(path: Option<&Path>, content: &str) -> Result<(), CliError> {
    match path {
        None => {
            print!("{content}");
            Ok(())
        }
        Some(p) => {
            let dir = match p.parent() {
                Some(d) if !d.as_os_str().is_empty() => d,
                _ => Path::new("."),
            };
            let io_err = |source| CliError::Io { path: p.display().to_string(), source };
            let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
            tmp.write_all(content.as_bytes()).map_err(io_err)?;
            tmp.persist(p).map_err(|e| io_err(e.error))?;
            Ok(())
        }
    }
}

fn population_csv(dim: usize, rows: &[(usize, f64, Vec<f64>)]) -> String {
    let mut out = String::from("step,t_fs");
    for i in 0..dim {
        let _ = write!(out, ",pop{i}");
    }
    out.push('\n');
    for (step, t, pops) in rows {
        let _ = write!(out, "{step},{t}");
        for p in pops {
            let _ = write!(out, ",{p}");
        }
        out.push('\n');
    }
    out
}

fn cmd_evolve(args: EvolveArgs) -> Result<(), CliError> {
    let (model, _) = load_model(&args.model)?;
    check_site(model.dim(), args.initial_site)?;
    let dt = args.step.resolve(2000.0);
    let ks = kraus_from_lindblad(&model, dt, !args.no_coherent)?;
    let mut rho = DensityMatrix::basis_state(model.dim(), args.initial_site);
    let mut rows = Vec::with_capacity(args.steps + 1);
    rows.push((0usize, 0.0, rho.populations()));
    for step in 1..=args.steps {
        rho = evolve_operator_sum(&ks, &rho, 1)?;
        rows.push((step, step as f64 * dt, rho.populations()));
    }
    write_output(args.model.output.as_deref(), &population_csv(model.dim(), &rows))
}

fn cmd_reference(args: ReferenceArgs) -> Result<(), CliError> {
    let (model, _) = load_model(&args.model)?;
    check_site(model.dim(), args.initial_site)?;
    let rho0 = DensityMatrix::basis_state(model.dim(), args.initial_site);
    let trajectory = kraussim::evolve_lindblad_euler(&model, &rho0, args.total_t_fs, args.dt_fs)?;
    let rows: Vec<(usize, f64, Vec<f64>)> = trajectory
        .iter()
        .enumerate()
        .map(|(step, rho)| (step, step as f64 * args.dt_fs, rho.populations()))
        .collect();
    write_output(args.model.output.as_deref(), &population_csv(model.dim(), &rows))
}

fn cmd_fmo(args: FmoArgs) -> Result<(), CliError> {
    let dt = args.step.resolve(2000.0);
    let params = match (&args.model.model, &args.model.preset) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)
                .map_err(|_| CliError::ModelNotFound(path.display().to_string()))?;
            let model = LindbladModel::from_json_str(&text)?;
            FmoParams::from_model(&model, dt)?
        }
        (None, Some(name)) if name != PRESET_FMO => {
            return Err(CliError::ModelNotFound(format!("unknown preset {name:?}")))
        }
        _ => FmoParams { dt_fs: dt, ..FmoParams::default() },
    };
    let rows = run_fmo_experiment(
        &params,
        args.initial_site,
        args.shots,
        args.threshold,
        args.seed,
        args.mode.to_estimator(),
    )?;
    let mut out = String::from(
        "t_fs,pop0,pop1,pop2,pop3,pop4,pop_ref0,pop_ref1,pop_ref2,pop_ref3,pop_ref4,energy_ev,energy_ref_ev,n_terms,mode,seed\n",
    );
    for row in &rows {
        let _ = write!(out, "{}", row.t_fs);
        for p in row.populations {
            let _ = write!(out, ",{p}");
        }
        for p in row.reference_populations {
            let _ = write!(out, ",{p}");
        }
        let _ = writeln!(
            out,
            ",{},{},{},{},{}",
            row.energy_ev,
            row.reference_energy_ev,
            row.n_terms,
            args.mode.label(),
            args.seed
        );
    }
    write_output(args.model.output.as_deref(), &out)
}

#[derive(Debug, Serialize)]
struct TermsReport {
    model: String,
    steps: usize,
    dt_fs: f64,
    threshold: f64,
    norm_kind: NormKind,
    coherent: bool,
    grouped_term_count: usize,
    raw_term_count_post_threshold: usize,
    raw_term_count_unpruned: Option<u128>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reference_term_count: Option<usize>,
    terms: Vec<evolution::TermExport>,
}

fn cmd_terms(args: TermsArgs) -> Result<(), CliError> {
    let (model, label) = load_model(&args.model)?;
    let dt = args.step.resolve(2000.0);
    let ks = kraus_from_lindblad(&model, dt, !args.no_coherent)?;
    let policy = PruningPolicy { norm_threshold: args.threshold, ..Default::default() };
    if args.steps == 0 {
        return Err(CliError::Config("steps must be at least 1".into()));
    }
    let terms = evolution::enumerate_products(&ks, args.steps, &policy);
    let reference_term_count = (label == PRESET_FMO && args.steps == 6 && args.threshold == 0.01)
        .then_some(REFERENCE_TERM_COUNT);
    let report = TermsReport {
        model: label,
        steps: args.steps,
        dt_fs: dt,
        threshold: args.threshold,
        norm_kind: policy.norm_kind,
        coherent: !args.no_coherent,
        grouped_term_count: terms.len(),
        raw_term_count_post_threshold: evolution::raw_term_count(&terms),
        raw_term_count_unpruned: (ks.ops().len() as u128).checked_pow(args.steps as u32),
        reference_term_count,
        terms: evolution::export_terms(&terms),
    };
    let mut text = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::Config(format!("report serialization: {e}")))?;
    text.push('\n');
    write_output(args.model.output.as_deref(), &text)
}

fn cmd_expectation(args: ExpectationArgs) -> Result<(), CliError> {
    let (model, _) = load_model(&args.model)?;
    check_site(model.dim(), args.initial_site)?;
    if args.steps == 0 {
        return Err(CliError::Config("steps must be at least 1".into()));
    }
    let dt = args.step.resolve(2000.0);
    let ks = kraus_from_lindblad(&model, dt, !args.no_coherent)?;
    let policy = PruningPolicy { norm_threshold: args.threshold, ..Default::default() };
    let sets = vec![&ks; args.steps];
    let levels = enumerate_product_levels(&sets, &policy)?;
    let spec = shift_observable(model.hamiltonian())?;
    let ensemble = InitialEnsemble::basis_state(model.dim(), args.initial_site);
    let mode = args.mode.to_estimator();
    let mut out = String::from("step,t_fs,energy_ev,n_terms\n");
    let initial = model.hamiltonian()[(args.initial_site, args.initial_site)].re;
    let _ = writeln!(out, "0,0,{initial},1");
    for (k, terms) in levels.iter().enumerate() {
        let seed = kraussim::measurement::derive_seed(args.seed, k as u64);
        let energy =
            kraussim::estimate_expectation(&spec, terms, &ensemble, args.shots, seed, mode)?;
        let _ = writeln!(out, "{},{},{},{}", k + 1, (k + 1) as f64 * dt, energy, terms.len());
    }
    write_output(args.model.output.as_deref(), &out)
}
