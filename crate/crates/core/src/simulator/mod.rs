//! Monte Carlo simulation of the Poisson network.
//!
//! Two modes share the same typical-link model: `channel` draws explicit
//! `L×L` Rayleigh matrices and builds the zero-forcing receive beamformer;
//! `effective` draws the scalar interference marks directly.
//!
//! Trials are split over `stream_count` substreams. Substream `i` is a
//! ChaCha8 generator keyed by `(seed, i)`, so results depend on
//! `(seed, trials, stream_count)` only, not on how many worker threads run
//! them.

mod campbell;
mod ppp;
mod trial;
pub mod zf;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

pub use campbell::{campbell_stats, exceedance_counts, CampbellStats};
pub use ppp::sample_ppp;
pub use trial::{run_trial, ChannelTrial, EffectiveTrial, TrialRecord};
pub use zf::{zf_receive_beamformer, ZfBeamformer};

use crate::error::{Error, Result};
use crate::model::{Model, NetworkParams};
use crate::stats::wilson_interval;

/// Minimum number of trials accepted by [`estimate_outage`].
pub const MIN_TRIALS: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Channel,
    Effective,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Channel => "channel",
            Mode::Effective => "effective",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "channel" => Ok(Mode::Channel),
            "effective" => Ok(Mode::Effective),
            other => Err(Error::invalid("mode", format!("unknown mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    pub mode: Mode,
    pub region_radius: f64,
    pub trials: u64,
    pub seed: u64,
    pub stream_count: u32,
}

impl SimConfig {
    /// Effective mode, radius `100 d`, 10⁵ trials over 8 substreams.
    pub fn for_params(params: &NetworkParams) -> Self {
        Self {
            mode: Mode::Effective,
            region_radius: 100.0 * params.d,
            trials: 100_000,
            seed: 0,
            stream_count: 8,
        }
    }

    pub fn validate(&self, params: &NetworkParams) -> Result<()> {
        if !(self.region_radius >= 10.0 * params.d) || !self.region_radius.is_finite() {
            return Err(Error::invalid(
                "region_radius",
                format!(
                    "must be >= 10 d = {}, got {}",
                    10.0 * params.d,
                    self.region_radius
                ),
            ));
        }
        if self.trials < 1 {
            return Err(Error::invalid("trials", "must be >= 1"));
        }
        if self.stream_count < 1 {
            return Err(Error::invalid("stream_count", "must be >= 1"));
        }
        Ok(())
    }
}

/// Random stream for substream `index` of a run seeded with `seed`.
pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Number of trials assigned to each substream.
pub fn partition_trials(trials: u64, streams: u32) -> Vec<u64> {
    let s = streams as u64;
    (0..s)
        .map(|i| trials / s + u64::from(i < trials % s))
        .collect()
}

/// Runs `work(rng, trials_in_stream)` on every substream in parallel and
/// returns the per-stream results in stream order.
pub fn map_substreams<T, F>(seed: u64, trials: u64, streams: u32, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, u64) -> T + Sync,
{
    partition_trials(trials, streams)
        .into_par_iter()
        .enumerate()
        .map(|(i, n)| {
            let mut rng = substream(seed, i as u64);
            work(&mut rng, n)
        })
        .collect()
}

/// Simulated outage probability with a 95% Wilson interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutageEstimate {
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub outages: u64,
    pub trials: u64,
    pub seed: u64,
    pub stream_count: u32,
    pub mode: Mode,
}

impl OutageEstimate {
    pub fn from_counts(outages: u64, config: &SimConfig) -> Self {
        let (ci_low, ci_high) = wilson_interval(outages, config.trials);
        Self {
            p_hat: outages as f64 / config.trials as f64,
            ci_low,
            ci_high,
            outages,
            trials: config.trials,
            seed: config.seed,
            stream_count: config.stream_count,
            mode: config.mode,
        }
    }
}

pub fn estimate_outage(model: &Model, config: &SimConfig) -> Result<OutageEstimate> {
    config.validate(&model.params)?;
    if config.trials < MIN_TRIALS {
        return Err(Error::invalid(
            "trials",
            format!("at least {MIN_TRIALS} required, got {}", config.trials),
        ));
    }
    let radius = config.region_radius;
    let counts: Vec<Result<u64>> =
        map_substreams(config.seed, config.trials, config.stream_count, |rng, n| {
            let mut outages = 0;
            for _ in 0..n {
                let outage = match config.mode {
                    Mode::Effective => trial::effective_trial(rng, model, radius, false).outage,
                    Mode::Channel => trial::channel_trial(rng, model, radius, false)?.outage,
                };
                outages += u64::from(outage);
            }
            Ok(outages)
        });
    let outages = counts.into_iter().sum::<Result<u64>>()?;
    Ok(OutageEstimate::from_counts(outages, config))
}

/// Uncanceled-interference statistics pooled over channel-level trials.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelDiagnostics {
    /// Worst `canceled residual / total channel power` over all trials.
    pub max_residual_ratio: f64,
    /// One post-cancellation mark `|v₀† G_n f_n|²` per trial that had an
    /// uncanceled interferer, taken at a uniformly random uncanceled index.
    pub marks: Vec<f64>,
    pub trials: u64,
}

pub fn channel_diagnostics(model: &Model, config: &SimConfig) -> Result<ChannelDiagnostics> {
    use rand::Rng;
    config.validate(&model.params)?;
    let radius = config.region_radius;
    let parts: Vec<Result<(f64, Vec<f64>)>> =
        map_substreams(config.seed, config.trials, config.stream_count, |rng, n| {
            let mut worst: f64 = 0.0;
            let mut marks = Vec::with_capacity(n as usize);
            for _ in 0..n {
                let t = trial::channel_trial(rng, model, radius, false)?;
                if t.total_channel_power > 0.0 {
                    worst = worst.max(t.canceled_residual / t.total_channel_power);
                }
                if !t.post_cancellation_marks.is_empty() {
                    let pick = rng.random_range(0..t.post_cancellation_marks.len());
                    marks.push(t.post_cancellation_marks[pick]);
                }
            }
            Ok((worst, marks))
        });
    let mut diag = ChannelDiagnostics {
        max_residual_ratio: 0.0,
        marks: Vec::new(),
        trials: config.trials,
    };
    for part in parts {
        let (worst, marks) = part?;
        diag.max_residual_ratio = diag.max_residual_ratio.max(worst);
        diag.marks.extend(marks);
    }
    Ok(diag)
}

/// Primary interference power (largest uncanceled mark) of each effective-mode
/// realization.
pub fn primary_samples(model: &Model, config: &SimConfig) -> Result<Vec<f64>> {
    config.validate(&model.params)?;
    let radius = config.region_radius;
    let parts = map_substreams(config.seed, config.trials, config.stream_count, |rng, n| {
        (0..n)
            .map(|_| trial::effective_trial(rng, model, radius, false).primary)
            .collect::<Vec<_>>()
    });
    Ok(parts.into_iter().flatten().collect())
}

/// Truncation check for the finite simulation disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncationCheck {
    /// Mean interference from beyond the disk, `2πλR^{2−α}/(α−2)`.
    pub tail_mean: f64,
    /// `10⁻³ d^{−α} θ^{−1} E[W]`.
    pub threshold: f64,
    pub ok: bool,
}

pub fn truncation_check(params: &NetworkParams, radius: f64) -> TruncationCheck {
    let alpha = params.alpha;
    let tail_mean = 2.0 * PI * params.lambda * radius.powf(2.0 - alpha) / (alpha - 2.0);
    let mean_w = params.gain_floor() + 1.0;
    let threshold = 1e-3 * params.d.powf(-alpha) / params.theta * mean_w;
    TruncationCheck {
        tail_mean,
        threshold,
        ok: tail_mean <= threshold,
    }
}

/// Smallest disk radius meeting the truncation rule at `params`.
pub fn minimum_radius(params: &NetworkParams) -> f64 {
    let check = truncation_check(params, 1.0);
    // the tail mean scales as R^{2 − α}
    (check.tail_mean / check.threshold).powf(1.0 / (params.alpha - 2.0))
}
