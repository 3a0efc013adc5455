//! Small statistics helpers shared by the simulator, experiments and tests.

use serde::Serialize;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// 95% Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let low = if successes == 0 {
        0.0
    } else {
        (center - half).clamp(0.0, p)
    };
    let high = if successes == trials {
        1.0
    } else {
        (center + half).clamp(p, 1.0)
    };
    (low, high)
}

/// Empirical mean and variance with large-sample standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleMoments {
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    pub mean_std_error: f64,
    pub variance_std_error: f64,
}

impl SampleMoments {
    pub fn from_slice(values: &[f64]) -> Self {
        let n = values.len();
        if n < 2 {
            let mean = values.first().copied().unwrap_or(f64::NAN);
            return Self {
                count: n,
                mean,
                variance: f64::NAN,
                mean_std_error: f64::NAN,
                variance_std_error: f64::NAN,
            };
        }
        let nf = n as f64;
        let mean = values.iter().sum::<f64>() / nf;
        let (m2, m4) = values.iter().fold((0.0, 0.0), |(m2, m4), &v| {
            let c = v - mean;
            let c2 = c * c;
            (m2 + c2, m4 + c2 * c2)
        });
        let variance = m2 / (nf - 1.0);
        let central4 = m4 / nf;
        let biased_var = m2 / nf;
        Self {
            count: n,
            mean,
            variance,
            mean_std_error: (variance / nf).sqrt(),
            variance_std_error: ((central4 - biased_var * biased_var).max(0.0) / nf).sqrt(),
        }
    }
}

/// Kolmogorov–Smirnov distance between a sample and a continuous CDF.
/// Sorts `samples` in place.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &mut [f64], cdf: F) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic critical value of the one-sample KS statistic at the given
/// significance level.
pub fn ks_critical_value(n: usize, significance: f64) -> f64 {
    (-(significance / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

/// Ordinary least-squares slope of `y` on `x`. `None` when `x` has no spread.
pub fn ols_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len().min(y.len());
    if n < 2 {
        return None;
    }
    let mx = x[..n].iter().sum::<f64>() / n as f64;
    let my = y[..n].iter().sum::<f64>() / n as f64;
    let sxx: f64 = x[..n].iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x[..n]
        .iter()
        .zip(&y[..n])
        .map(|(a, b)| (a - mx) * (b - my))
        .sum();
    if sxx <= f64::EPSILON * mx.abs().max(1.0) * n as f64 {
        None
    } else {
        Some(sxy / sxx)
    }
}
