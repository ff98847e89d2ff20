mod output;

use std::f64::consts::LN_2;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use output::{manifest_path_for, resolve, to_csv, to_json, RunManifest, OUT_DIR_ENV};
use wormhole::circuits::standard_teleportation;
use wormhole::noise::{run_experiment, StateSummary};
use wormhole::protocols::{black_hole_side_entropy, measurement_free_teleport, tfd_state};
use wormhole::qstate::{LabeledState, StateVector, SIX_STATE_LABELS};
use wormhole::variational::optimize;
use wormhole::{
    Beta, Error, ExperimentConfig, NoiseConfig, OptimizationTrace, OptimizerConfig, TfdSpec,
};

#[derive(Parser)]
#[command(
    name = "wormhole",
    version,
    about = "Measurement-free teleportation through recycled EPR pairs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Teleport one qubit and report fidelities and the exchanged qubit's state.
    Teleport(TeleportArgs),
    /// Repeated finite-shot runs with tomography under pseudo-pure noise.
    Experiment(ExperimentArgs),
    /// Search an RY ansatz for the N-pair operator.
    Varsearch(VarsearchArgs),
    /// Build a thermofield double state and its one-sided entropy.
    Tfd(TfdArgs),
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Protocol {
    MeasurementFree,
    Standard,
}

#[derive(Args, Serialize)]
struct TeleportArgs {
    /// One of 0, 1, plus, minus, left, right.
    #[arg(long, conflicts_with_all = ["theta", "phi"], required_unless_present = "theta")]
    state: Option<String>,
    /// Bloch polar angle in radians (with --phi).
    #[arg(long, requires = "phi", allow_negative_numbers = true)]
    theta: Option<f64>,
    #[arg(long, requires = "theta", allow_negative_numbers = true)]
    phi: Option<f64>,
    #[arg(long, value_enum, default_value = "measurement-free")]
    protocol: Protocol,
    /// Seed for the measurement outcomes of the standard protocol.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report path; stdout when omitted. Relative paths go under $WORMHOLE_OUT_DIR if set.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct ExperimentArgs {
    /// Weight of the maximally mixed component.
    #[arg(long, default_value_t = 0.0)]
    eps: f64,
    /// Per-shot readout bit-flip probability.
    #[arg(long, default_value_t = 0.0)]
    readout_flip: f64,
    #[arg(long, default_value_t = 12)]
    runs: usize,
    /// Shots per measurement basis.
    #[arg(long, default_value_t = 8192)]
    shots: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated state labels.
    #[arg(long, value_delimiter = ',', default_values_t = SIX_STATE_LABELS.map(String::from))]
    states: Vec<String>,
    /// Output directory.
    #[arg(long, env = OUT_DIR_ENV, default_value = ".")]
    out: PathBuf,
    /// Also write the series behind the fidelity bar chart.
    #[arg(long)]
    plot_data: bool,
}

#[derive(Args, Serialize)]
struct VarsearchArgs {
    /// Number of EPR pairs (at least 2).
    #[arg(long)]
    n: usize,
    /// Ansatz repetitions; 3 for N=2, else 2.
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long, default_value_t = 5)]
    restarts: usize,
    /// Cost evaluations per restart.
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, env = OUT_DIR_ENV, default_value = ".")]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct TfdArgs {
    /// Comma-separated one-sided energies; length must be a power of two.
    #[arg(
        long,
        value_delimiter = ',',
        required = true,
        allow_negative_numbers = true
    )]
    energies: Vec<f64>,
    /// Inverse temperature: a non-negative number or `inf`.
    #[arg(long)]
    beta: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Io(PathBuf, io::Error),
    Numerical(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(..) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Io(p, e) => write!(f, "{}: {e}", p.display()),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NotUnitary { .. }
            | Error::NotNormalized { .. }
            | Error::InvalidDensityMatrix(_)
            | Error::NotPsd { .. }
            | Error::ResourceDamaged { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |e| CliError::Io(path.to_path_buf(), e)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Teleport(a) => teleport(a),
        Command::Experiment(a) => experiment(a),
        Command::Varsearch(a) => varsearch(a),
        Command::Tfd(a) => tfd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

/// JSON to `--out` (with a sibling manifest) or to stdout.
fn emit_single<T: Serialize, C: Serialize>(
    command: &str,
    seed: Option<u64>,
    args: &C,
    out: Option<&Path>,
    value: &T,
    started: Instant,
) -> CliResult<()> {
    let bytes = to_json(value);
    match out {
        None => io::stdout()
            .write_all(&bytes)
            .map_err(io_err(Path::new("<stdout>"))),
        Some(path) => {
            let path = resolve(path);
            let mut manifest = RunManifest::new(command, seed, args);
            manifest.emit(path.clone(), &bytes).map_err(io_err(&path))?;
            let mpath = manifest_path_for(&path);
            manifest
                .finish(&mpath, started.elapsed())
                .map_err(io_err(&mpath))
        }
    }
}

fn teleport(args: TeleportArgs) -> CliResult<()> {
    let started = Instant::now();
    let psi = match (&args.state, args.theta, args.phi) {
        (Some(label), _, _) => LabeledState::from_label(label)?.state,
        (None, Some(theta), Some(phi)) => {
            if !theta.is_finite() || !phi.is_finite() {
                return Err(CliError::Usage("Bloch angles must be finite".into()));
            }
            StateVector::from_bloch(theta, phi)
        }
        _ => {
            return Err(CliError::Usage(
                "give --state or both --theta and --phi".into(),
            ))
        }
    };
    let (report, seed) = match args.protocol {
        Protocol::MeasurementFree => (measurement_free_teleport(&psi)?, None),
        Protocol::Standard => (standard_teleportation(&psi, args.seed)?, Some(args.seed)),
    };
    emit_single(
        "teleport",
        seed,
        &args,
        args.out.as_deref(),
        &report,
        started,
    )
}

#[derive(Serialize)]
struct PlotPoint<'a> {
    series: &'a str,
    state_label: &'a str,
    value: f64,
    error: f64,
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    state_label: &'a str,
    output_fidelity: f64,
    output_fidelity_sem: f64,
    hawking_fidelity: f64,
    hawking_fidelity_sem: f64,
    hawking_entropy_over_ln2: f64,
    hawking_entropy_over_ln2_sem: f64,
}

impl<'a> From<&'a StateSummary> for SummaryRow<'a> {
    fn from(s: &'a StateSummary) -> Self {
        Self {
            state_label: &s.state_label,
            output_fidelity: s.output_fidelity.mean,
            output_fidelity_sem: s.output_fidelity.sem,
            hawking_fidelity: s.hawking_fidelity.mean,
            hawking_fidelity_sem: s.hawking_fidelity.sem,
            hawking_entropy_over_ln2: s.hawking_entropy_over_ln2.mean,
            hawking_entropy_over_ln2_sem: s.hawking_entropy_over_ln2.sem,
        }
    }
}

fn experiment(args: ExperimentArgs) -> CliResult<()> {
    let started = Instant::now();
    let noise = NoiseConfig::new(args.eps, args.readout_flip)?;
    let cfg = ExperimentConfig {
        runs: args.runs,
        shots: args.shots,
        rng_seed: args.seed,
        state_set: args.states.clone(),
    };
    let report = run_experiment(&cfg, &noise)?;

    let dir = &args.out;
    let mut manifest = RunManifest::new("experiment", Some(args.seed), &args);
    let csv_err = |p: &Path| CliError::Io(p.to_path_buf(), io::Error::other("CSV encoding failed"));

    let path = dir.join("experiment.json");
    manifest
        .emit(path.clone(), &to_json(&report))
        .map_err(io_err(&path))?;

    let path = dir.join("experiment_runs.csv");
    let bytes = to_csv(&report.records).map_err(|_| csv_err(&path))?;
    manifest.emit(path.clone(), &bytes).map_err(io_err(&path))?;

    let rows: Vec<SummaryRow> = report.summary.iter().map(SummaryRow::from).collect();
    let path = dir.join("experiment_summary.csv");
    let bytes = to_csv(&rows).map_err(|_| csv_err(&path))?;
    manifest.emit(path.clone(), &bytes).map_err(io_err(&path))?;

    if args.plot_data {
        let mut points = Vec::new();
        for s in &report.summary {
            for (series, m) in [
                ("output_fidelity", s.output_fidelity),
                ("hawking_fidelity", s.hawking_fidelity),
            ] {
                points.push(PlotPoint {
                    series,
                    state_label: &s.state_label,
                    value: m.mean,
                    error: m.sem,
                });
            }
        }
        let path = dir.join("fidelity_plot.csv");
        let bytes = to_csv(&points).map_err(|_| csv_err(&path))?;
        manifest.emit(path.clone(), &bytes).map_err(io_err(&path))?;
    }

    println!(
        "{:<8} {:>22} {:>22} {:>22}",
        "state", "F_out", "F_hawking", "S_hawking/ln2"
    );
    for s in &report.summary {
        let cell = |m: wormhole::noise::MeanSem| format!("{:.5} ± {:.5}", m.mean, m.sem);
        println!(
            "{:<8} {:>22} {:>22} {:>22}",
            s.state_label,
            cell(s.output_fidelity),
            cell(s.hawking_fidelity),
            cell(s.hawking_entropy_over_ln2)
        );
    }
    let mpath = dir.join("manifest.json");
    manifest
        .finish(&mpath, started.elapsed())
        .map_err(io_err(&mpath))
}

#[derive(Serialize)]
struct CostRow {
    restart: usize,
    iteration: usize,
    cost: f64,
}

#[derive(Serialize)]
struct RestartRow {
    restart: usize,
    cost: f64,
    fidelity: f64,
    entropy_over_ln2: f64,
    entropy_over_ln2_sem: f64,
    evaluations: usize,
}

fn restart_rows(trace: &OptimizationTrace) -> Vec<RestartRow> {
    trace
        .runs
        .iter()
        .map(|r| RestartRow {
            restart: r.restart,
            cost: r.best_cost,
            fidelity: r.final_fidelity,
            entropy_over_ln2: r.final_entropy_over_ln2.mean,
            entropy_over_ln2_sem: r.final_entropy_over_ln2.sem,
            evaluations: r.costs.len(),
        })
        .collect()
}

fn varsearch(args: VarsearchArgs) -> CliResult<()> {
    let started = Instant::now();
    if args.n < 2 {
        return Err(CliError::Usage(format!(
            "--n must be at least 2, got {}",
            args.n
        )));
    }
    let reps = args.reps.unwrap_or(if args.n == 2 { 3 } else { 2 });
    let cfg = OptimizerConfig {
        max_iters: args.max_iters,
        restarts: args.restarts,
        rng_seed: args.seed,
        ..OptimizerConfig::default()
    };
    let trace = optimize(args.n, reps, &cfg)?;

    let dir = &args.out;
    let mut manifest = RunManifest::new("varsearch", Some(args.seed), &args);
    let csv_err = |p: &Path| CliError::Io(p.to_path_buf(), io::Error::other("CSV encoding failed"));

    let path = dir.join("varsearch_trace.json");
    manifest
        .emit(path.clone(), &to_json(&trace))
        .map_err(io_err(&path))?;

    let costs: Vec<CostRow> = trace
        .runs
        .iter()
        .flat_map(|r| {
            r.costs
                .iter()
                .enumerate()
                .map(move |(iteration, &cost)| CostRow {
                    restart: r.restart,
                    iteration,
                    cost,
                })
        })
        .collect();
    let path = dir.join("varsearch_costs.csv");
    let bytes = to_csv(&costs).map_err(|_| csv_err(&path))?;
    manifest.emit(path.clone(), &bytes).map_err(io_err(&path))?;

    let rows = restart_rows(&trace);
    let path = dir.join("varsearch_summary.csv");
    let bytes = to_csv(&rows).map_err(|_| csv_err(&path))?;
    manifest.emit(path.clone(), &bytes).map_err(io_err(&path))?;

    println!(
        "N={} reps={} ({} angles)",
        args.n,
        reps,
        trace.best_thetas.len()
    );
    println!(
        "{:<8} {:>12} {:>12} {:>14}",
        "restart", "cost", "fidelity", "S/ln2"
    );
    for r in &rows {
        println!(
            "{:<8} {:>12.3e} {:>12.7} {:>14.7}",
            r.restart, r.cost, r.fidelity, r.entropy_over_ln2
        );
    }
    println!(
        "best restart {} with cost {:.3e}",
        trace.best_restart, trace.best_cost
    );
    let mpath = dir.join("manifest.json");
    manifest
        .finish(&mpath, started.elapsed())
        .map_err(io_err(&mpath))
}

#[derive(Serialize)]
struct TfdDump {
    energies: Vec<f64>,
    beta: Beta,
    side_qubits: usize,
    /// `[re, im]`, side A on the leading wires.
    amplitudes: Vec<[f64; 2]>,
    a_side_entropy_nats: f64,
    a_side_entropy_over_ln2: f64,
}

fn tfd(args: TfdArgs) -> CliResult<()> {
    let started = Instant::now();
    let beta = Beta::parse(&args.beta)?;
    let spec = TfdSpec::new(args.energies.clone(), beta)?;
    let state = tfd_state(&spec)?;
    let n = spec.side_qubits();
    let s = black_hole_side_entropy(&state, n)?;
    let dump = TfdDump {
        energies: args.energies.clone(),
        beta,
        side_qubits: n,
        amplitudes: state.amplitudes().iter().map(|z| [z.re, z.im]).collect(),
        a_side_entropy_nats: s,
        a_side_entropy_over_ln2: s / LN_2,
    };
    emit_single("tfd", None, &args, args.out.as_deref(), &dump, started)
}
