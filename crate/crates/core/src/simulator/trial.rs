//! Single-snapshot network trials at channel level and at effective level.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson, StandardNormal};
use serde::Serialize;

use super::zf::{inner, norm, standard_basis, zf_receive_beamformer};
use super::{Mode, SimConfig};
use crate::error::Result;
use crate::model::Model;

/// `r^{-α}` evaluated from `r²`, with an integer fast path.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PathLoss {
    half_alpha: f64,
    int_power: Option<i32>,
}

impl PathLoss {
    pub(crate) fn new(alpha: f64) -> Self {
        let half_alpha = alpha / 2.0;
        let int_power =
            (half_alpha.fract() == 0.0 && half_alpha <= 16.0).then_some(half_alpha as i32);
        Self {
            half_alpha,
            int_power,
        }
    }

    #[inline]
    pub(crate) fn at_squared_distance(&self, r2: f64) -> f64 {
        match self.int_power {
            Some(k) => r2.powi(-k),
            None => r2.powf(-self.half_alpha),
        }
    }
}

/// Draws the number of points of a Poisson process with the given mean.
pub(crate) fn poisson_count<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let n: f64 = Poisson::new(mean)
        .expect("positive finite mean")
        .sample(rng);
    n as u64
}

/// Squared distance of a point uniform on the disk of radius `radius`.
#[inline]
pub(crate) fn uniform_disk_r2<R: Rng + ?Sized>(rng: &mut R, radius: f64) -> f64 {
    // 1 - U lies in (0, 1], so no point sits exactly at the origin
    radius * radius * (1.0 - rng.random::<f64>())
}

fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
}

/// Keeps the `k` largest values seen and accumulates everything else.
#[derive(Debug, Clone)]
pub(crate) struct TopK {
    top: Vec<f64>,
    k: usize,
    pub(crate) rest_sum: f64,
    pub(crate) rest_max: f64,
}

impl TopK {
    pub(crate) fn new(k: usize) -> Self {
        Self {
            top: Vec::with_capacity(k),
            k,
            rest_sum: 0.0,
            rest_max: 0.0,
        }
    }

    #[inline]
    pub(crate) fn push(&mut self, value: f64) {
        let spill = if self.top.len() < self.k {
            self.top.push(value);
            None
        } else if self.k > 0 && value > self.top[self.k - 1] {
            let out = self.top[self.k - 1];
            self.top[self.k - 1] = value;
            Some(out)
        } else {
            Some(value)
        };
        // restore descending order
        let mut i = self.top.len();
        while i > 1 && self.top[i - 1] > self.top[i - 2] {
            self.top.swap(i - 1, i - 2);
            i -= 1;
        }
        if let Some(v) = spill {
            self.rest_sum += v;
            if v > self.rest_max {
                self.rest_max = v;
            }
        }
    }
}

fn outage_from(signal: f64, interference: f64, theta: f64) -> (f64, bool) {
    if interference > 0.0 {
        let sir = signal / interference;
        (sir, sir <= theta)
    } else {
        (f64::INFINITY, false)
    }
}

/// Effective-model trial: scalar marks `I_n = r_n^{-α} ρ_n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectiveTrial {
    pub distances: Vec<f64>,
    pub marks: Vec<f64>,
    pub interference_powers: Vec<f64>,
    /// Number of interferers removed by cancellation.
    pub canceled: usize,
    /// Largest uncanceled interference power (zero if none).
    pub primary: f64,
    /// Aggregate uncanceled interference.
    pub interference: f64,
    pub typical_gain: f64,
    pub sir: f64,
    pub outage: bool,
}

/// Channel-level trial with explicit MIMO matrices and beamformers.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTrial {
    pub interferer_positions: Vec<[f64; 2]>,
    /// Row-major `L×L` fading matrices, one per interferer. Empty unless recorded.
    pub channel_matrices: Vec<Vec<Complex64>>,
    /// Fading matrix of the typical link (row-major). Empty unless recorded.
    pub typical_channel: Vec<Complex64>,
    pub transmit_beamformers: Vec<Vec<Complex64>>,
    pub typical_transmit_beamformer: Vec<Complex64>,
    pub receive_beamformer: Vec<Complex64>,
    /// Effective channels `h_n = r_n^{-α/2} G_n f_n`.
    pub effective_channels: Vec<Vec<Complex64>>,
    /// Indices (into the interferer lists) of the canceled interferers.
    pub canceled: Vec<usize>,
    /// `|v₀† G_n f_n|²` for every uncanceled interferer.
    pub post_cancellation_marks: Vec<f64>,
    /// Interference left over from canceled interferers.
    pub canceled_residual: f64,
    /// `Σ_n ‖h_n‖²` over all interferers.
    pub total_channel_power: f64,
    /// Largest uncanceled post-beamforming interference power.
    pub primary: f64,
    pub interference: f64,
    pub typical_gain: f64,
    pub sir: f64,
    pub outage: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrialRecord {
    Channel(ChannelTrial),
    Effective(EffectiveTrial),
}

impl TrialRecord {
    pub fn outage(&self) -> bool {
        match self {
            TrialRecord::Channel(t) => t.outage,
            TrialRecord::Effective(t) => t.outage,
        }
    }

    pub fn sir(&self) -> f64 {
        match self {
            TrialRecord::Channel(t) => t.sir,
            TrialRecord::Effective(t) => t.sir,
        }
    }

    pub fn primary(&self) -> f64 {
        match self {
            TrialRecord::Channel(t) => t.primary,
            TrialRecord::Effective(t) => t.primary,
        }
    }
}

/// Runs one trial and keeps the full record.
pub fn run_trial<R: Rng + ?Sized>(
    rng: &mut R,
    model: &Model,
    config: &SimConfig,
) -> Result<TrialRecord> {
    config.validate(&model.params)?;
    Ok(match config.mode {
        Mode::Effective => {
            TrialRecord::Effective(effective_trial(rng, model, config.region_radius, true))
        }
        Mode::Channel => {
            TrialRecord::Channel(channel_trial(rng, model, config.region_radius, true)?)
        }
    })
}

pub(crate) fn effective_trial<R: Rng + ?Sized>(
    rng: &mut R,
    model: &Model,
    radius: f64,
    record: bool,
) -> EffectiveTrial {
    let p = &model.params;
    let loss = PathLoss::new(p.alpha);
    let w = model.sample_w(rng);
    let signal = w * p.d.powf(-p.alpha);
    let n = poisson_count(rng, p.lambda * PI * radius * radius);

    let k = (p.antennas as usize).saturating_sub(1);
    let mut top = TopK::new(k);
    let cap = if record { n as usize } else { 0 };
    let mut distances = Vec::with_capacity(cap);
    let mut marks = Vec::with_capacity(cap);
    let mut powers = Vec::with_capacity(cap);
    for _ in 0..n {
        let r2 = uniform_disk_r2(rng, radius);
        let rho: f64 = rng.sample(Exp1);
        let power = rho * loss.at_squared_distance(r2);
        top.push(power);
        if record {
            distances.push(r2.sqrt());
            marks.push(rho);
            powers.push(power);
        }
    }
    let (sir, outage) = outage_from(signal, top.rest_sum, p.theta);
    EffectiveTrial {
        distances,
        marks,
        interference_powers: powers,
        canceled: k.min(n as usize),
        primary: top.rest_max,
        interference: top.rest_sum,
        typical_gain: w,
        sir,
        outage,
    }
}

pub(crate) fn channel_trial<R: Rng + ?Sized>(
    rng: &mut R,
    model: &Model,
    radius: f64,
    record: bool,
) -> Result<ChannelTrial> {
    let p = &model.params;
    let dim = p.antennas as usize;
    let loss = PathLoss::new(p.alpha);
    let w = model.sample_w(rng);
    let signal = w * p.d.powf(-p.alpha);
    let n = poisson_count(rng, p.lambda * PI * radius * radius) as usize;

    let mut positions = Vec::with_capacity(n);
    let mut matrices = Vec::new();
    let mut transmit = Vec::new();
    let mut fading_gains: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    let mut effective: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    for _ in 0..n {
        let r2 = uniform_disk_r2(rng, radius);
        let angle = 2.0 * PI * rng.random::<f64>();
        let r = r2.sqrt();
        positions.push([r * angle.cos(), r * angle.sin()]);

        let g: Vec<Complex64> = (0..dim * dim).map(|_| complex_normal(rng)).collect();
        let mut f: Vec<Complex64> = (0..dim).map(|_| complex_normal(rng)).collect();
        let fnorm = norm(&f);
        f.iter_mut().for_each(|z| *z /= fnorm);

        let gf: Vec<Complex64> = (0..dim)
            .map(|row| (0..dim).map(|col| g[row * dim + col] * f[col]).sum())
            .collect();
        let amplitude = loss.at_squared_distance(r2).sqrt();
        effective.push(gf.iter().map(|z| z * amplitude).collect());
        fading_gains.push(gf);
        if record {
            matrices.push(g);
            transmit.push(f);
        }
    }

    // Typical link: fixed first-basis transmit beamformer. Its fading matrix
    // is drawn for the record only; the link gain comes from `W`.
    let mut typical_transmit = vec![Complex64::new(0.0, 0.0); dim];
    typical_transmit[0] = Complex64::new(1.0, 0.0);
    let typical_channel: Vec<Complex64> = (0..dim * dim).map(|_| complex_normal(rng)).collect();

    let norms: Vec<f64> = effective.iter().map(|h| norm(h)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));
    let k = (dim - 1).min(n);
    let canceled: Vec<usize> = order[..k].to_vec();
    let canceled_refs: Vec<&[Complex64]> =
        canceled.iter().map(|&i| effective[i].as_slice()).collect();
    let zf = zf_receive_beamformer(&canceled_refs, &standard_basis(dim))?;
    let v = zf.vector;

    let mut residual = 0.0;
    for &i in &canceled {
        residual += inner(&v, &effective[i]).norm_sqr();
    }
    let mut interference = 0.0;
    let mut primary: f64 = 0.0;
    let mut post_marks = Vec::with_capacity(n - k);
    for &i in &order[k..] {
        let power = inner(&v, &effective[i]).norm_sqr();
        interference += power;
        primary = primary.max(power);
        post_marks.push(inner(&v, &fading_gains[i]).norm_sqr());
    }
    let total_channel_power = norms.iter().map(|x| x * x).sum();
    let (sir, outage) = outage_from(signal, interference, p.theta);

    Ok(ChannelTrial {
        interferer_positions: positions,
        channel_matrices: matrices,
        typical_channel: if record { typical_channel } else { Vec::new() },
        transmit_beamformers: transmit,
        typical_transmit_beamformer: typical_transmit,
        receive_beamformer: v,
        effective_channels: if record { effective } else { Vec::new() },
        canceled,
        post_cancellation_marks: post_marks,
        canceled_residual: residual,
        total_channel_power,
        primary,
        interference,
        typical_gain: w,
        sir,
        outage,
    })
}
