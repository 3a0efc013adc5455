//! Figure datasets: outage bounds against simulation, capacity against
//! antenna count, and capacity against the small-density envelopes.
//!
//! Densities live on a fixed logarithmic grid with twelve points per decade,
//! `λ_k = 10^{k/12}`. Every simulated grid point gets its own seed derived
//! from the base seed and the point's coordinates, so any row can be rerun
//! alone.

mod inversion;
pub mod output;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

pub use inversion::{invert_simulated_curve, isotonic_fit};
pub use output::{build_id, Cell, CsvRow, FIG1_HEADER, FIG2_HEADER, FIG3_HEADER};

use crate::analysis::{
    asymptotic_constants, outage_bounds, outage_lower, outage_upper, solve_capacity,
    AsymptoticConstants, CapacityMethod, CapacityResult, Regime,
};
use crate::error::{Error, Result};
use crate::model::{Model, NetworkParams};
use crate::simulator::{
    estimate_outage, minimum_radius, substream, Mode, OutageEstimate, SimConfig,
};
use crate::special_math::QuadratureSpec;

pub const POINTS_PER_DECADE: f64 = 12.0;
/// Extra grid points a capacity search may add before giving up.
const MAX_GRID_EXTENSIONS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FigureId {
    Fig1,
    Fig2,
    Fig3,
    Custom,
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FigureId::Fig1 => "fig1",
            FigureId::Fig2 => "fig2",
            FigureId::Fig3 => "fig3",
            FigureId::Custom => "custom",
        })
    }
}

impl FromStr for FigureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig1" => Ok(FigureId::Fig1),
            "fig2" => Ok(FigureId::Fig2),
            "fig3" => Ok(FigureId::Fig3),
            "custom" => Ok(FigureId::Custom),
            other => Err(Error::invalid(
                "figure_id",
                format!("unknown figure `{other}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSpec {
    pub figure_id: FigureId,
    pub base: NetworkParams,
    pub sim: SimConfig,
    /// Explicit density sweep for bound comparisons. Empty selects a grid
    /// from the bounds.
    pub lambdas: Vec<f64>,
    pub antennas: Vec<u32>,
    pub epsilons: Vec<f64>,
    /// Simulation modes for bound comparisons.
    pub modes: Vec<Mode>,
    /// Trials per point in channel mode, which costs far more per trial.
    pub channel_trials: u64,
    /// Capacity searches size each point for about this many outages at the
    /// target level.
    pub target_events: u64,
    pub min_trials: u64,
    pub max_trials: u64,
    /// Use the smallest disk meeting the truncation rule at each point (never
    /// below `10 d`) instead of `sim.region_radius`.
    pub auto_radius: bool,
    pub upper_samples: usize,
    pub quadrature: QuadratureSpec,
    pub output: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn new(figure_id: FigureId) -> Self {
        let base = NetworkParams::default();
        let mut spec = Self {
            figure_id,
            base,
            sim: SimConfig::for_params(&base),
            lambdas: Vec::new(),
            antennas: vec![2, 4],
            epsilons: vec![0.1, 0.01, 0.001],
            modes: vec![Mode::Effective, Mode::Channel],
            channel_trials: 2_000,
            target_events: 1_000,
            min_trials: 10_000,
            max_trials: 20_000_000,
            auto_radius: false,
            upper_samples: 100_000,
            quadrature: QuadratureSpec::default(),
            output: None,
        };
        match figure_id {
            FigureId::Fig1 | FigureId::Custom => {}
            FigureId::Fig2 => spec.antennas = (1..=8).collect(),
            FigureId::Fig3 => {
                spec.antennas = vec![2, 3, 4];
                spec.epsilons = (0..=8).map(|k| 10f64.powf(-5.0 + 0.5 * k as f64)).collect();
            }
        }
        spec
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        self.sim.validate(&self.base)?;
        self.quadrature.validate()?;
        if self.antennas.is_empty() || self.antennas.contains(&0) {
            return Err(Error::invalid(
                "antennas",
                "need a non-empty list of counts >= 1",
            ));
        }
        if self.epsilons.is_empty() || self.epsilons.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
            return Err(Error::invalid(
                "epsilons",
                "need a non-empty list inside (0, 1)",
            ));
        }
        if self.lambdas.iter().any(|&l| !(l > 0.0 && l.is_finite()))
            || self.lambdas.windows(2).any(|w| !(w[0] < w[1]))
        {
            return Err(Error::invalid(
                "lambdas",
                "must be positive and strictly increasing",
            ));
        }
        if self.modes.is_empty() {
            return Err(Error::invalid("modes", "need at least one mode"));
        }
        if !(self.min_trials >= crate::simulator::MIN_TRIALS && self.min_trials <= self.max_trials)
        {
            return Err(Error::invalid(
                "min_trials",
                "need 100 <= min_trials <= max_trials",
            ));
        }
        if self.channel_trials < crate::simulator::MIN_TRIALS {
            return Err(Error::invalid("channel_trials", "must be >= 100"));
        }
        if self.target_events == 0 {
            return Err(Error::invalid("target_events", "must be >= 1"));
        }
        Ok(())
    }

    fn radius_for(&self, params: &NetworkParams) -> f64 {
        if self.auto_radius {
            minimum_radius(params).max(10.0 * params.d)
        } else {
            self.sim.region_radius
        }
    }

    fn trials_for(&self, epsilon: f64) -> u64 {
        let wanted = (self.target_events as f64 / epsilon).ceil() as u64;
        wanted.clamp(self.min_trials, self.max_trials)
    }
}

/// Density of grid index `k`.
pub fn grid_lambda(k: i64) -> f64 {
    10f64.powf(k as f64 / POINTS_PER_DECADE)
}

/// Grid indices covering `[lo, hi]`, one step of margin on each side.
pub fn grid_indices(lo: f64, hi: f64) -> std::ops::RangeInclusive<i64> {
    let a = (POINTS_PER_DECADE * lo.log10()).floor() as i64;
    let b = (POINTS_PER_DECADE * hi.log10()).ceil() as i64;
    a..=b.max(a)
}

/// Mixes the base seed with point coordinates (splitmix64 finalizer).
pub fn point_seed(seed: u64, coords: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    coords.iter().fold(mix(seed), |acc, &c| mix(acc ^ mix(c)))
}

/// Density at which the lower bound reaches `epsilon`. Simulated outage
/// is at least the lower bound, so the simulated crossing lies below this.
pub fn lower_bound_crossing(
    params: &NetworkParams,
    epsilon: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let hint = Model::new(*params)
        .and_then(|m| asymptotic_constants(&m))
        .map(|k| (epsilon / k.kappa1).powf(1.0 / params.antennas as f64))
        .ok()
        .filter(|h| h.is_finite() && *h > 0.0)
        .unwrap_or(0.01);
    let curve = |lambda: f64| outage_lower(&Model::new(params.with_lambda(lambda))?, quad);
    Ok(solve_capacity(epsilon, curve, hint, CapacityMethod::LowerBound)?.lambda_eps)
}

/// One simulated point of an outage curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridPoint {
    pub lambda: f64,
    pub radius: f64,
    pub estimate: OutageEstimate,
}

/// Simulated capacity at one outage level with the grid it was read from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulatedCapacity {
    pub result: CapacityResult,
    pub grid: Vec<GridPoint>,
}

/// Simulates the outage curve of `params` on the density grid around the
/// crossing of `epsilon`, widening the grid until the crossing is bracketed,
/// and inverts it.
pub fn simulated_capacity(
    spec: &ExperimentSpec,
    params: &NetworkParams,
    epsilon: f64,
) -> Result<SimulatedCapacity> {
    let start = lower_bound_crossing(params, epsilon, &spec.quadrature)?;
    let top = (POINTS_PER_DECADE * start.log10()).ceil() as i64;
    let trials = spec.trials_for(epsilon);
    let simulate = |k: i64| -> Result<GridPoint> {
        let p = params.with_lambda(grid_lambda(k));
        let radius = spec.radius_for(&p);
        let config = SimConfig {
            region_radius: radius,
            trials,
            seed: point_seed(
                spec.sim.seed,
                &[u64::from(p.antennas), k as u64, epsilon.to_bits()],
            ),
            ..spec.sim
        };
        Ok(GridPoint {
            lambda: p.lambda,
            radius,
            estimate: estimate_outage(&Model::new(p)?, &config)?,
        })
    };

    let mut grid = std::collections::VecDeque::new();
    for k in top - 2..=top {
        grid.push_back((k, simulate(k)?));
    }
    for _ in 0..MAX_GRID_EXTENSIONS {
        let values: Vec<f64> = grid.iter().map(|(_, g)| g.estimate.p_hat).collect();
        let weights: Vec<f64> = grid.iter().map(|(_, g)| g.estimate.trials as f64).collect();
        let fit = isotonic_fit(&values, &weights);
        if fit[0] >= epsilon {
            let k = grid.front().expect("grid is never empty").0 - 1;
            grid.push_front((k, simulate(k)?));
        } else if fit[fit.len() - 1] < epsilon {
            let k = grid.back().expect("grid is never empty").0 + 1;
            grid.push_back((k, simulate(k)?));
        } else {
            break;
        }
    }
    let grid: Vec<GridPoint> = grid.into_iter().map(|(_, g)| g).collect();
    let points: Vec<(f64, OutageEstimate)> = grid.iter().map(|g| (g.lambda, g.estimate)).collect();
    let result = invert_simulated_curve(&points, epsilon)?;
    Ok(SimulatedCapacity { result, grid })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacityCurve {
    pub antennas: u32,
    pub method: CapacityMethod,
    /// One entry per outage level, in increasing `ε`.
    pub points: Vec<CapacityResult>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fig1Row {
    pub lambda: f64,
    pub antennas: u32,
    pub alpha: f64,
    pub theta: f64,
    pub beta: f64,
    pub d: f64,
    pub radius: f64,
    pub trials: u64,
    pub seed: u64,
    pub mode: Mode,
    pub pout_sim: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub pout_lower_bound: f64,
    pub pout_upper_bound: f64,
    pub upper_bound_stderr: f64,
}

impl CsvRow for Fig1Row {
    fn cells(&self) -> Vec<Cell> {
        vec![
            Cell::Real(self.lambda),
            Cell::Int(self.antennas.into()),
            Cell::Real(self.alpha),
            Cell::Real(self.theta),
            Cell::Real(self.beta),
            Cell::Real(self.d),
            Cell::Real(self.radius),
            Cell::Int(self.trials),
            Cell::Int(self.seed),
            Cell::Text(self.mode.to_string()),
            Cell::Real(self.pout_sim),
            Cell::Real(self.ci_low),
            Cell::Real(self.ci_high),
            Cell::Real(self.pout_lower_bound),
            Cell::Real(self.pout_upper_bound),
            Cell::Real(self.upper_bound_stderr),
        ]
    }
}

/// Densities used for antenna count `antennas` in a bound comparison.
pub fn fig1_lambdas(spec: &ExperimentSpec, antennas: u32) -> Result<Vec<f64>> {
    if !spec.lambdas.is_empty() {
        return Ok(spec.lambdas.clone());
    }
    // Simulated outage lies between the bounds, so the grid runs from the
    // first point with P^U <= 1e-3 up to the first with P^L >= 0.3.
    let params = spec.base.with_antennas(antennas);
    let quad = &spec.quadrature;
    let samples = spec.upper_samples.min(20_000);
    let upper = |k: i64| -> Result<f64> {
        let model = Model::new(params.with_lambda(grid_lambda(k)))?;
        Ok(outage_upper(&model, quad, samples, &mut substream(0, 0))?.value)
    };
    let mut lo =
        (POINTS_PER_DECADE * lower_bound_crossing(&params, 1e-3, quad)?.log10()).floor() as i64;
    for _ in 0..MAX_GRID_EXTENSIONS {
        if upper(lo)? <= 1e-3 {
            break;
        }
        lo -= 1;
    }
    let hi = (POINTS_PER_DECADE * lower_bound_crossing(&params, 0.3, quad)?.log10()).ceil() as i64;
    Ok((lo..=hi.max(lo)).map(grid_lambda).collect())
}

pub fn run_fig1(spec: &ExperimentSpec) -> Result<Vec<Fig1Row>> {
    spec.validate()?;
    let mut rows = Vec::new();
    for &antennas in &spec.antennas {
        for (k, lambda) in fig1_lambdas(spec, antennas)?.into_iter().enumerate() {
            let params = spec.base.with_antennas(antennas).with_lambda(lambda);
            let model = Model::new(params)?;
            let radius = spec.radius_for(&params);
            let seed = point_seed(spec.sim.seed, &[1, u64::from(antennas), k as u64]);
            let mut rng = substream(seed, u64::MAX);
            let bounds = outage_bounds(&model, &spec.quadrature, spec.upper_samples, &mut rng)?;
            for &mode in &spec.modes {
                let trials = match mode {
                    Mode::Effective => spec.sim.trials,
                    Mode::Channel => spec.channel_trials,
                };
                let config = SimConfig {
                    mode,
                    region_radius: radius,
                    trials,
                    seed,
                    stream_count: spec.sim.stream_count,
                };
                let est = estimate_outage(&model, &config)?;
                rows.push(Fig1Row {
                    lambda,
                    antennas,
                    alpha: params.alpha,
                    theta: params.theta,
                    beta: params.beta,
                    d: params.d,
                    radius,
                    trials,
                    seed,
                    mode,
                    pout_sim: est.p_hat,
                    ci_low: est.ci_low,
                    ci_high: est.ci_high,
                    pout_lower_bound: bounds.lower,
                    pout_upper_bound: bounds.upper,
                    upper_bound_stderr: bounds.upper_std_error,
                });
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fig2Row {
    pub antennas: u32,
    pub epsilon: f64,
    pub lambda_eps: f64,
    pub capacity: f64,
    /// `capacity − interval low`
    pub capacity_err_low: f64,
    /// `interval high − capacity`
    pub capacity_err_high: f64,
    pub alpha: f64,
    pub theta: f64,
    pub beta: f64,
    pub d: f64,
    pub seed: u64,
}

impl CsvRow for Fig2Row {
    fn cells(&self) -> Vec<Cell> {
        vec![
            Cell::Int(self.antennas.into()),
            Cell::Real(self.epsilon),
            Cell::Real(self.lambda_eps),
            Cell::Real(self.capacity),
            Cell::Real(self.capacity_err_low),
            Cell::Real(self.capacity_err_high),
            Cell::Real(self.alpha),
            Cell::Real(self.theta),
            Cell::Real(self.beta),
            Cell::Real(self.d),
            Cell::Int(self.seed),
        ]
    }
}

fn error_bars(r: &CapacityResult) -> (f64, f64) {
    r.capacity_interval
        .map_or((0.0, 0.0), |(lo, hi)| (r.capacity - lo, hi - r.capacity))
}

fn sorted_epsilons(spec: &ExperimentSpec) -> Vec<f64> {
    let mut e = spec.epsilons.clone();
    e.sort_by(f64::total_cmp);
    e.dedup();
    e
}

fn simulated_curves(spec: &ExperimentSpec) -> Result<Vec<(CapacityCurve, Vec<SimulatedCapacity>)>> {
    spec.validate()?;
    let epsilons = sorted_epsilons(spec);
    spec.antennas
        .iter()
        .map(|&antennas| {
            let params = spec.base.with_antennas(antennas);
            let sims = epsilons
                .iter()
                .map(|&eps| simulated_capacity(spec, &params, eps))
                .collect::<Result<Vec<_>>>()?;
            let curve = CapacityCurve {
                antennas,
                method: CapacityMethod::Simulation,
                points: sims.iter().map(|s| s.result).collect(),
            };
            Ok((curve, sims))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fig2Output {
    pub rows: Vec<Fig2Row>,
    pub curves: Vec<CapacityCurve>,
}

pub fn run_fig2(spec: &ExperimentSpec) -> Result<Fig2Output> {
    let mut rows = Vec::new();
    let mut curves = Vec::new();
    for (curve, _) in simulated_curves(spec)? {
        for r in &curve.points {
            let (lo, hi) = error_bars(r);
            rows.push(Fig2Row {
                antennas: curve.antennas,
                epsilon: r.epsilon,
                lambda_eps: r.lambda_eps,
                capacity: r.capacity,
                capacity_err_low: lo,
                capacity_err_high: hi,
                alpha: spec.base.alpha,
                theta: spec.base.theta,
                beta: spec.base.beta,
                d: spec.base.d,
                seed: spec.sim.seed,
            });
        }
        curves.push(curve);
    }
    Ok(Fig2Output { rows, curves })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fig3Row {
    pub antennas: u32,
    pub epsilon: f64,
    pub capacity_sim: f64,
    pub capacity_err_low: f64,
    pub capacity_err_high: f64,
    pub asym_low: f64,
    pub asym_high: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub kappa3: Option<f64>,
}

impl CsvRow for Fig3Row {
    fn cells(&self) -> Vec<Cell> {
        vec![
            Cell::Int(self.antennas.into()),
            Cell::Real(self.epsilon),
            Cell::Real(self.capacity_sim),
            Cell::Real(self.capacity_err_low),
            Cell::Real(self.capacity_err_high),
            Cell::Real(self.asym_low),
            Cell::Real(self.asym_high),
            Cell::Real(self.kappa1),
            Cell::Real(self.kappa2),
            self.kappa3.map_or(Cell::Blank, Cell::Real),
        ]
    }
}

/// Capacity envelope `(low, high)` at outage level `epsilon` implied by the
/// small-density outage asymptotes.
pub fn capacity_envelope(
    kappas: &AsymptoticConstants,
    antennas: u32,
    alpha: f64,
    epsilon: f64,
) -> Result<(f64, f64)> {
    let l = antennas as f64;
    let scale = 1.0 - epsilon;
    // outage ≥ κ1 λ^L caps the density
    let high = scale * (epsilon / kappas.kappa1).powf(1.0 / l);
    let low = match (kappas.regime, kappas.kappa3) {
        (Regime::LLeAlpha, _) => {
            scale * (epsilon / (kappas.kappa1 * (1.0 + kappas.kappa2))).powf(1.0 / l)
        }
        (Regime::LGtAlpha, Some(k3)) => scale * (epsilon / k3).powf(1.0 / alpha),
        (Regime::LGtAlpha, None) => {
            return Err(Error::invalid("kappa3", "required when L > alpha"))
        }
    };
    Ok((low, high))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fig3Output {
    pub rows: Vec<Fig3Row>,
    pub curves: Vec<CapacityCurve>,
}

pub fn run_fig3(spec: &ExperimentSpec) -> Result<Fig3Output> {
    let mut rows = Vec::new();
    let mut curves = Vec::new();
    for (curve, _) in simulated_curves(spec)? {
        let params = spec.base.with_antennas(curve.antennas);
        let kappas = asymptotic_constants(&Model::new(params)?)?;
        for r in &curve.points {
            let (lo, hi) = error_bars(r);
            let (asym_low, asym_high) =
                capacity_envelope(&kappas, curve.antennas, params.alpha, r.epsilon)?;
            rows.push(Fig3Row {
                antennas: curve.antennas,
                epsilon: r.epsilon,
                capacity_sim: r.capacity,
                capacity_err_low: lo,
                capacity_err_high: hi,
                asym_low,
                asym_high,
                kappa1: kappas.kappa1,
                kappa2: kappas.kappa2,
                kappa3: kappas.kappa3,
            });
        }
        curves.push(curve);
    }
    Ok(Fig3Output { rows, curves })
}

/// Provenance written next to every dataset.
#[derive(Debug, Clone, Serialize)]
pub struct DatasetMeta<'a> {
    pub build_id: String,
    pub seed_derivation: &'static str,
    pub spec: &'a ExperimentSpec,
}

/// Runs the figure named by `spec.figure_id` and returns its CSV text.
/// `custom` runs the bound comparison over the spec's own grid.
pub fn render_figure(spec: &ExperimentSpec) -> Result<String> {
    Ok(match spec.figure_id {
        FigureId::Fig1 | FigureId::Custom => output::render_csv(FIG1_HEADER, &run_fig1(spec)?),
        FigureId::Fig2 => output::render_csv(FIG2_HEADER, &run_fig2(spec)?.rows),
        FigureId::Fig3 => output::render_csv(FIG3_HEADER, &run_fig3(spec)?.rows),
    })
}

/// Writes `csv` to `path` with a `.meta.json` sidecar describing `spec`.
pub fn write_figure(spec: &ExperimentSpec, csv: &str, path: &Path) -> std::io::Result<()> {
    let meta = DatasetMeta {
        build_id: build_id(),
        seed_derivation:
            "splitmix64 fold of (seed, coordinates); substream i = ChaCha8(seed) stream i",
        spec,
    };
    output::write_dataset(path, csv, &meta)
}
