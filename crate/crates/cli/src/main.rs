//! `txcap`: outage bounds, simulation, capacity and figure datasets from the
//! command line.

mod config;
mod validate;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use txcap_core::analysis::{
    asymptotic_constants, outage_bounds, outage_lower, outage_upper_quadrature, solve_capacity,
    AsymptoticConstants,
};
use txcap_core::experiments::{
    build_id, render_figure, run_fig1, run_fig2, run_fig3, simulated_capacity, write_figure,
    GridPoint,
};
use txcap_core::simulator::{estimate_outage, substream, truncation_check, TruncationCheck};
use txcap_core::{
    CapacityMethod, CapacityResult, DerivedConstants, Error, ExperimentSpec, FigureId, Mode, Model,
    NetworkParams, OutageEstimate, SimConfig,
};

use config::ConfigFile;

#[derive(Parser)]
#[command(
    name = "txcap",
    version,
    about = "Transmission capacity of ad hoc networks with zero-forcing receivers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lower and upper outage bounds with the small-density constants.
    Bounds(Common),
    /// Monte Carlo outage estimate.
    Simulate(Common),
    /// Largest density meeting an outage constraint.
    Capacity {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long, value_enum, default_value = "lower")]
        method: MethodArg,
    },
    /// Figure datasets as CSV.
    Figures {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        id: Option<FigureId>,
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Runs the invariant checks and reports each one.
    Validate(Common),
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Flat `key = value` file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    d: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Antennas per node.
    #[arg(long = "L")]
    antennas: Option<u32>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Substream count. Results depend on it, so pin it for reproducibility.
    #[arg(long)]
    streams: Option<u32>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    mode: Option<Mode>,
    /// Output file (or directory for `figures`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Lower,
    Upper,
    Simulation,
}

enum Failure {
    Usage(String),
    /// Failed checks or i/o.
    Failed(String),
    Numerical(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Failed(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Failed(m) | Failure::Numerical(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let numerical = e.is_numerical() || matches!(e, Error::NoCrossing { .. } | Error::Pole(_));
        if numerical {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Failed(format!("i/o error: {e}"))
    }
}

type Outcome = Result<(), Failure>;

fn default_streams() -> u32 {
    std::thread::available_parallelism().map_or(1, |n| n.get() as u32)
}

/// Builds the effective spec: figure defaults, then the config file, then
/// flags.
fn resolve(common: &Common, figure: Option<FigureId>) -> Result<ExperimentSpec, Failure> {
    let file = match &common.config {
        Some(path) => ConfigFile::read(path).map_err(|e| Failure::Usage(format!("config: {e}")))?,
        None => ConfigFile::default(),
    };
    let id = match figure {
        Some(id) => id,
        None => match file.get("figure_id") {
            Some(v) => v.parse()?,
            None => FigureId::Fig1,
        },
    };
    let mut spec = ExperimentSpec::new(id);
    spec.sim.stream_count = default_streams();
    file.apply(&mut spec)
        .map_err(|e| Failure::Usage(format!("config: {e}")))?;
    spec.figure_id = id;

    let b = &mut spec.base;
    b.lambda = common.lambda.unwrap_or(b.lambda);
    b.d = common.d.unwrap_or(b.d);
    b.alpha = common.alpha.unwrap_or(b.alpha);
    b.theta = common.theta.unwrap_or(b.theta);
    b.beta = common.beta.unwrap_or(b.beta);
    if let Some(l) = common.antennas {
        b.antennas = l;
        spec.antennas = vec![l];
    }
    let s = &mut spec.sim;
    s.trials = common.trials.unwrap_or(s.trials);
    s.seed = common.seed.unwrap_or(s.seed);
    s.stream_count = common.streams.unwrap_or(s.stream_count);
    s.region_radius = common.radius.unwrap_or(s.region_radius);
    if let Some(m) = common.mode {
        s.mode = m;
        spec.modes = vec![m];
    }
    if common.out.is_some() {
        spec.output = common.out.clone();
    }
    spec.base.validate()?;
    spec.sim.validate(&spec.base)?;
    Ok(spec)
}

fn require_json(common: &Common) -> Outcome {
    match common.format {
        Some(Format::Csv) => Err(Failure::Usage("this command only writes json".into())),
        _ => Ok(()),
    }
}

fn emit_json<T: Serialize>(value: &T, out: Option<&Path>) -> Outcome {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| Failure::Usage(e.to_string()))?;
    text.push('\n');
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

#[derive(Serialize)]
struct BoundsOutput {
    version: String,
    params: NetworkParams,
    derived: DerivedConstants,
    seed: u64,
    upper_samples: usize,
    pout_lower: f64,
    pout_upper: f64,
    pout_upper_stderr: f64,
    kappa1: Option<f64>,
    kappa2: Option<f64>,
    kappa3: Option<f64>,
    asymptotic_note: Option<String>,
}

fn bounds(common: &Common) -> Outcome {
    require_json(common)?;
    let spec = resolve(common, None)?;
    let model = Model::new(spec.base)?;
    let mut rng = substream(spec.sim.seed, 0);
    let b = outage_bounds(&model, &spec.quadrature, spec.upper_samples, &mut rng)?;
    let (kappas, note): (Option<AsymptoticConstants>, _) = match asymptotic_constants(&model) {
        Ok(k) => (Some(k), None),
        Err(e) if e.is_numerical() => (None, Some(e.to_string())),
        Err(e) => return Err(e.into()),
    };
    emit_json(
        &BoundsOutput {
            version: build_id(),
            params: model.params,
            derived: model.consts,
            seed: spec.sim.seed,
            upper_samples: spec.upper_samples,
            pout_lower: b.lower,
            pout_upper: b.upper,
            pout_upper_stderr: b.upper_std_error,
            kappa1: kappas.map(|k| k.kappa1),
            kappa2: kappas.map(|k| k.kappa2),
            kappa3: kappas.and_then(|k| k.kappa3),
            asymptotic_note: note,
        },
        common.out.as_deref(),
    )
}

#[derive(Serialize)]
struct SimulateOutput {
    version: String,
    params: NetworkParams,
    config: SimConfig,
    truncation: TruncationCheck,
    estimate: OutageEstimate,
}

fn simulate(common: &Common) -> Outcome {
    require_json(common)?;
    let spec = resolve(common, None)?;
    let model = Model::new(spec.base)?;
    let truncation = truncation_check(&model.params, spec.sim.region_radius);
    if !truncation.ok {
        eprintln!(
            "warning: region radius {} leaves a tail interference mean {:.3e} above {:.3e}",
            spec.sim.region_radius, truncation.tail_mean, truncation.threshold
        );
    }
    let estimate = estimate_outage(&model, &spec.sim)?;
    emit_json(
        &SimulateOutput {
            version: build_id(),
            params: model.params,
            config: spec.sim,
            truncation,
            estimate,
        },
        common.out.as_deref(),
    )
}

#[derive(Serialize)]
struct CapacityOutput {
    version: String,
    params: NetworkParams,
    seed: u64,
    result: CapacityResult,
    /// Simulated outage curve the result was read from.
    grid: Option<Vec<GridPoint>>,
}

fn capacity(common: &Common, epsilon: Option<f64>, method: MethodArg) -> Outcome {
    require_json(common)?;
    let spec = resolve(common, None)?;
    let epsilon = epsilon
        .or_else(|| spec.epsilons.first().copied())
        .unwrap_or(0.1);
    let params = spec.base;
    let quad = spec.quadrature;
    let hint = asymptotic_constants(&Model::new(params)?)
        .map(|k| (epsilon / k.kappa1).powf(1.0 / params.antennas as f64))
        .ok()
        .filter(|h| h.is_finite() && *h > 0.0)
        .unwrap_or(0.01);
    let (result, grid) = match method {
        MethodArg::Lower => {
            let curve = |l: f64| outage_lower(&Model::new(params.with_lambda(l))?, &quad);
            (
                solve_capacity(epsilon, curve, hint, CapacityMethod::LowerBound)?,
                None,
            )
        }
        MethodArg::Upper => {
            let curve =
                |l: f64| outage_upper_quadrature(&Model::new(params.with_lambda(l))?, &quad);
            (
                solve_capacity(epsilon, curve, hint, CapacityMethod::UpperBound)?,
                None,
            )
        }
        MethodArg::Simulation => {
            let s = simulated_capacity(&spec, &params, epsilon)?;
            (s.result, Some(s.grid))
        }
    };
    emit_json(
        &CapacityOutput {
            version: build_id(),
            params,
            seed: spec.sim.seed,
            result,
            grid,
        },
        common.out.as_deref(),
    )
}

#[derive(Serialize)]
struct FigureJson<'a, R: Serialize> {
    version: String,
    spec: &'a ExperimentSpec,
    rows: Vec<R>,
}

fn figures(common: &Common, id: Option<FigureId>, epsilon: Option<f64>) -> Outcome {
    let mut spec = resolve(common, id)?;
    if let Some(e) = epsilon {
        spec.epsilons = vec![e];
    }
    spec.validate()?;
    let name = spec.figure_id.to_string();
    let dir = spec.output.clone();
    match common.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let csv = render_figure(&spec)?;
            match dir {
                Some(dir) => {
                    let path = dir.join(format!("{name}.csv"));
                    write_figure(&spec, &csv, &path)?;
                    eprintln!("wrote {}", path.display());
                }
                None => std::io::stdout().write_all(csv.as_bytes())?,
            }
            Ok(())
        }
        Format::Json => {
            let path = dir.map(|d| {
                let _ = std::fs::create_dir_all(&d);
                d.join(format!("{name}.json"))
            });
            let version = build_id();
            match spec.figure_id {
                FigureId::Fig1 | FigureId::Custom => {
                    let rows = run_fig1(&spec)?;
                    emit_json(
                        &FigureJson {
                            version,
                            spec: &spec,
                            rows,
                        },
                        path.as_deref(),
                    )
                }
                FigureId::Fig2 => {
                    let rows = run_fig2(&spec)?.rows;
                    emit_json(
                        &FigureJson {
                            version,
                            spec: &spec,
                            rows,
                        },
                        path.as_deref(),
                    )
                }
                FigureId::Fig3 => {
                    let rows = run_fig3(&spec)?.rows;
                    emit_json(
                        &FigureJson {
                            version,
                            spec: &spec,
                            rows,
                        },
                        path.as_deref(),
                    )
                }
            }
        }
    }
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Bounds(c) => bounds(&c),
        Command::Simulate(c) => simulate(&c),
        Command::Capacity {
            common,
            epsilon,
            method,
        } => capacity(&common, epsilon, method),
        Command::Figures {
            common,
            id,
            epsilon,
        } => figures(&common, id, epsilon),
        Command::Validate(c) => {
            require_json(&c)?;
            let spec = resolve(&c, None)?;
            let report = validate::run_checks(&spec)?;
            emit_json(&report, c.out.as_deref())?;
            if report.all_pass {
                Ok(())
            } else {
                let failed: Vec<&str> = report
                    .checks
                    .iter()
                    .filter(|c| !c.pass)
                    .map(|c| c.name)
                    .collect();
                Err(Failure::Failed(format!(
                    "failed checks: {}",
                    failed.join(", ")
                )))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}
