//! Self-checks run by `txcap validate` at the configured parameters.

use std::f64::consts::PI;

use serde::Serialize;
use txcap_core::analysis::{asymptotic_constants, outage_bounds, outage_lower};
use txcap_core::experiments::build_id;
use txcap_core::simulator::{campbell_stats, estimate_outage, substream};
use txcap_core::stats::{ks_critical_value, ks_distance, ols_slope};
use txcap_core::{Error, ExperimentSpec, Model, NetworkParams, Result};

const SAMPLER_DRAWS: usize = 20_000;
const CAMPBELL_REALIZATIONS: usize = 10_000;
const KS_SIGNIFICANCE: f64 = 1e-3;
/// Campbell z-score limit. Two comparisons per run, so 4σ keeps false alarms rare.
const Z_LIMIT: f64 = 4.0;

#[derive(Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub version: String,
    pub params: NetworkParams,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub all_pass: bool,
}

fn sampler_check(model: &Model, seed: u64) -> Result<Check> {
    let mut rng = substream(seed, 1);
    let mut draws: Vec<f64> = (0..SAMPLER_DRAWS)
        .map(|_| model.sample_g(&mut rng))
        .collect();
    let cdf = |g: f64| model.cdf_primary(g).unwrap_or(f64::NAN);
    let d = ks_distance(&mut draws, cdf);
    let critical = ks_critical_value(SAMPLER_DRAWS, KS_SIGNIFICANCE);
    Ok(Check {
        name: "primary_sampler_ks",
        pass: d < critical,
        detail: format!("KS distance {d:.4}, critical {critical:.4}"),
    })
}

fn campbell_check(model: &Model, seed: u64) -> Result<Check> {
    // condition at the median of G so the truncated sum is neither empty nor everything
    let mut rng = substream(seed, 2);
    let mut g: Vec<f64> = (0..1001).map(|_| model.sample_g(&mut rng)).collect();
    g.sort_by(f64::total_cmp);
    let g = g[500];
    let (mean, var) = model.secondary_moments(g)?;
    // disk large enough that the missing tail is under 0.1% of the conditional mean
    let p = &model.params;
    let tail_radius =
        (2.0 * PI * p.lambda / ((p.alpha - 2.0) * 1e-3 * mean)).powf(1.0 / (p.alpha - 2.0));
    let radius = tail_radius.max(100.0 * p.d);
    let s = campbell_stats(model, g, CAMPBELL_REALIZATIONS, &mut rng, radius)?;
    let zm = (s.moments.mean - mean) / s.moments.mean_std_error;
    let zv = (s.moments.variance - var) / s.moments.variance_std_error;
    Ok(Check {
        name: "secondary_moments",
        pass: zm.abs() <= Z_LIMIT && zv.abs() <= Z_LIMIT,
        detail: format!("g={g:.4e}: z_mean={zm:+.2}, z_var={zv:+.2}"),
    })
}

fn sandwich_check(model: &Model, spec: &ExperimentSpec) -> Result<Check> {
    let mut rng = substream(spec.sim.seed, 3);
    let b = outage_bounds(model, &spec.quadrature, spec.upper_samples, &mut rng)?;
    let est = estimate_outage(model, &spec.sim)?;
    let slack = 3.0 * b.upper_std_error;
    Ok(Check {
        name: "bound_sandwich",
        pass: b.lower <= est.ci_high && est.ci_low <= b.upper + slack,
        detail: format!(
            "lower {:.4e}, simulated {:.4e} [{:.4e}, {:.4e}], upper {:.4e} ± {:.1e}",
            b.lower, est.p_hat, est.ci_low, est.ci_high, b.upper, b.upper_std_error
        ),
    })
}

fn slope_check(model: &Model, spec: &ExperimentSpec) -> Result<Check> {
    let l = model.params.antennas as f64;
    let kappa1 = asymptotic_constants(model)?.kappa1;
    let mut x = Vec::new();
    let mut y = Vec::new();
    for target in [1e-7, 1e-8, 1e-9] {
        let lambda = (target / kappa1).powf(1.0 / l);
        let p = outage_lower(
            &Model::new(model.params.with_lambda(lambda))?,
            &spec.quadrature,
        )?;
        x.push(lambda.ln());
        y.push(p.ln());
    }
    let slope = ols_slope(&x, &y).unwrap_or(f64::NAN);
    Ok(Check {
        name: "lower_bound_slope",
        pass: (slope - l).abs() <= 0.02 * l,
        detail: format!("log-log slope {slope:.4}, expected {l}"),
    })
}

pub fn run_checks(spec: &ExperimentSpec) -> Result<Report> {
    if spec.base.lambda <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "lambda",
            reason: "validate needs a positive density".into(),
        });
    }
    let model = Model::new(spec.base)?;
    let seed = spec.sim.seed;
    let checks = vec![
        sampler_check(&model, seed)?,
        campbell_check(&model, seed)?,
        sandwich_check(&model, spec)?,
        slope_check(&model, spec)?,
    ];
    let all_pass = checks.iter().all(|c| c.pass);
    Ok(Report {
        version: build_id(),
        params: model.params,
        seed,
        checks,
        all_pass,
    })
}
