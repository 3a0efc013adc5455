//! Outage-probability bounds, small-density asymptotics and capacity
//! inversion.
//!
//! Throughout, `B = W / (d^α θ)` is the largest interference power the
//! typical link tolerates without outage.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::Model;
use crate::special_math::{
    gamma_fn, integrate_semi_infinite, reg_lower_gamma, upper_gamma_general, QuadratureSpec,
};
use crate::stats::ols_slope;

/// Minimum Monte Carlo sample count accepted by [`outage_upper`].
pub const MIN_UPPER_SAMPLES: usize = 10_000;

/// How the two sides of the outage bound were evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundsDetail {
    pub quadrature: QuadratureSpec,
    pub mc_samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutageBounds {
    pub lower: f64,
    pub upper: f64,
    pub upper_std_error: f64,
    pub method_detail: BoundsDetail,
}

/// Lower bound: probability that the strongest uncanceled interferer alone
/// causes outage, `E[P(L, c2 λ W^{-δ})]`.
pub fn outage_lower(model: &Model, quad: &QuadratureSpec) -> Result<f64> {
    let p = &model.params;
    let scale = model.consts.c2 * p.lambda;
    if scale == 0.0 {
        return Ok(0.0);
    }
    let order = p.antennas as f64;
    let delta = model.consts.delta;
    let floor = p.gain_floor();
    let integrand = |t: f64| {
        let x = scale * (floor + t).powf(-delta);
        reg_lower_gamma(order, x).unwrap_or(f64::NAN) * (-t).exp()
    };
    let q = integrate_semi_infinite(integrand, 0.0, quad)?;
    Ok(q.value.clamp(0.0, 1.0))
}

/// Chebyshev term `min(Var / (B − G − E)², 1)` for a realized `(B, G)` with
/// `G < B`; one when the denominator is not positive.
fn chebyshev_term(model: &Model, b: f64, g: f64) -> f64 {
    if g <= 0.0 {
        return 0.0;
    }
    let (mean, variance) = model.secondary_moments(g).expect("g > 0 checked above");
    let margin = b - g - mean;
    if margin <= 0.0 {
        1.0
    } else {
        (variance / (margin * margin)).min(1.0)
    }
}

/// Monte Carlo estimate of the upper bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UpperEstimate {
    pub value: f64,
    pub std_error: f64,
    pub lower: f64,
    pub samples: usize,
}

/// Upper bound `P^L + E[1{G < B} min(Var/(B − G − E)², 1)]`.
///
/// The primary-only term is taken from [`outage_lower`]; the Chebyshev
/// correction is averaged over exact draws of `(W, G)`.
pub fn outage_upper<R: Rng + ?Sized>(
    model: &Model,
    quad: &QuadratureSpec,
    mc_samples: usize,
    rng: &mut R,
) -> Result<UpperEstimate> {
    if mc_samples < MIN_UPPER_SAMPLES {
        return Err(Error::invalid(
            "mc_samples",
            format!("at least {MIN_UPPER_SAMPLES} required, got {mc_samples}"),
        ));
    }
    let lower = outage_lower(model, quad)?;
    if model.params.lambda == 0.0 {
        return Ok(UpperEstimate {
            value: 0.0,
            std_error: 0.0,
            lower,
            samples: mc_samples,
        });
    }
    let tolerance = model.params.d.powf(model.params.alpha) * model.params.theta;
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..mc_samples {
        let b = model.sample_w(rng) / tolerance;
        let g = model.sample_g(rng);
        let term = if g < b {
            chebyshev_term(model, b, g)
        } else {
            0.0
        };
        sum += term;
        sum_sq += term * term;
    }
    let n = mc_samples as f64;
    let mean = sum / n;
    let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok(UpperEstimate {
        value: (lower + mean).min(1.0),
        std_error: (var / n).sqrt(),
        lower,
        samples: mc_samples,
    })
}

/// Upper bound by nested quadrature: outer over `W`, inner over `G` in the
/// Gamma variable `X = c1 λ G^{-δ}`. Slow; used to verify [`outage_upper`].
pub fn outage_upper_quadrature(model: &Model, quad: &QuadratureSpec) -> Result<f64> {
    let lower = outage_lower(model, quad)?;
    let p = &model.params;
    if p.lambda == 0.0 {
        return Ok(0.0);
    }
    let tolerance = p.d.powf(p.alpha) * p.theta;
    let floor = p.gain_floor();
    let order = p.antennas as f64;
    let log_norm = crate::special_math::ln_gamma(order)?;
    let scale = model.consts.c1 * p.lambda;
    let inv_delta = 1.0 / model.consts.delta;

    let inner = |b: f64| -> Result<f64> {
        let x_b = scale * b.powf(-model.consts.delta);
        let f = |x: f64| {
            if x <= 0.0 {
                return 0.0;
            }
            let g = (scale / x).powf(inv_delta);
            let density = ((order - 1.0) * x.ln() - x - log_norm).exp();
            density * chebyshev_term(model, b, g)
        };
        Ok(integrate_semi_infinite(f, x_b, quad)?.value)
    };
    let outer = |t: f64| {
        let b = (floor + t) / tolerance;
        inner(b).unwrap_or(f64::NAN) * (-t).exp()
    };
    let correction = integrate_semi_infinite(outer, 0.0, quad)?.value;
    Ok((lower + correction).min(1.0))
}

/// Both bounds with the evaluation settings recorded.
pub fn outage_bounds<R: Rng + ?Sized>(
    model: &Model,
    quad: &QuadratureSpec,
    mc_samples: usize,
    rng: &mut R,
) -> Result<OutageBounds> {
    let upper = outage_upper(model, quad, mc_samples, rng)?;
    Ok(OutageBounds {
        lower: upper.lower,
        upper: upper.value.max(upper.lower),
        upper_std_error: upper.std_error,
        method_detail: BoundsDetail {
            quadrature: *quad,
            mc_samples,
        },
    })
}

/// `E[B^{-order}] = (d^α θ)^{order} Γ(1 − order, βd^α) / P_t`.
pub fn moment_w_neg(model: &Model, order: f64) -> Result<f64> {
    let p = &model.params;
    let floor = p.gain_floor();
    let shape = 1.0 - order;
    let w_moment = if floor > 0.0 {
        upper_gamma_general(shape, floor)? / model.consts.p_t
    } else if shape > 0.0 {
        gamma_fn(shape)?
    } else {
        return Err(Error::Divergence(format!(
            "E[W^-{order}] is infinite when beta = 0"
        )));
    };
    Ok((p.d.powf(p.alpha) * p.theta).powf(order) * w_moment)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `L ≤ α`: outage scales as `λ^L` on both sides.
    LLeAlpha,
    /// `L > α`: the upper side scales as `λ^α`.
    LGtAlpha,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticConstants {
    pub kappa1: f64,
    pub kappa2: f64,
    pub kappa3: Option<f64>,
    pub regime: Regime,
}

pub fn asymptotic_constants(model: &Model) -> Result<AsymptoticConstants> {
    let p = &model.params;
    let c = &model.consts;
    let l = p.antennas as f64;
    let alpha = p.alpha;
    let floor = p.gain_floor();

    let w_moment = match moment_w_neg(model, c.delta * l) {
        Ok(m) => m / (p.d.powf(alpha) * p.theta).powf(c.delta * l),
        Err(Error::Divergence(_)) => {
            return Err(Error::Divergence(format!(
                "kappa1 needs beta > 0 when 1 - delta*L = {} <= 0",
                1.0 - c.delta * l
            )))
        }
        Err(e) => return Err(e),
    };
    let kappa1 = w_moment * c.c2.powf(l) / gamma_fn(l + 1.0)?;
    let kappa2 = 2f64.powf(c.delta * l) / l * (alpha / (alpha - 2.0) - 2f64.powf(-c.delta));

    let (regime, kappa3) = if l <= alpha {
        (Regime::LLeAlpha, None)
    } else {
        if floor <= 0.0 {
            return Err(Error::Divergence(
                "kappa3 needs beta > 0 (Gamma(-1, 0) diverges)".into(),
            ));
        }
        let shape = l - alpha + 1.0;
        if shape <= 0.0 && shape.fract() == 0.0 {
            return Err(Error::Pole(shape));
        }
        let k3 = 8.0 * c.c2.powf(alpha) * upper_gamma_general(-1.0, floor)? * gamma_fn(shape)?
            / ((alpha - 2.0) * c.p_t * gamma_fn(l)?);
        (Regime::LGtAlpha, Some(k3))
    };
    Ok(AsymptoticConstants {
        kappa1,
        kappa2,
        kappa3,
        regime,
    })
}

/// Small-density outage envelope `(lo, hi)` at density `lambda`, clamped to `[0, 1]`.
pub fn asymptotic_outage_bounds(
    kappas: &AsymptoticConstants,
    antennas: u32,
    alpha: f64,
    lambda: f64,
) -> Result<(f64, f64)> {
    if !(lambda > 0.0) {
        return Err(Error::Domain {
            what: "lambda_query must be > 0",
            value: lambda,
        });
    }
    let l = antennas as f64;
    let lo = kappas.kappa1 * lambda.powf(l);
    let hi = match (kappas.regime, kappas.kappa3) {
        (Regime::LLeAlpha, _) => kappas.kappa1 * (1.0 + kappas.kappa2) * lambda.powf(l),
        (Regime::LGtAlpha, Some(k3)) => k3 * lambda.powf(alpha),
        (Regime::LGtAlpha, None) => {
            return Err(Error::invalid("kappa3", "required when L > alpha"))
        }
    };
    Ok((lo.clamp(0.0, 1.0), hi.clamp(0.0, 1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CapacityMethod {
    LowerBound,
    UpperBound,
    Simulation,
    Asymptotic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CapacityResult {
    pub epsilon: f64,
    pub lambda_eps: f64,
    pub capacity: f64,
    pub method: CapacityMethod,
    /// Capacity range implied by the input uncertainty, when known.
    pub capacity_interval: Option<(f64, f64)>,
}

impl CapacityResult {
    pub fn new(epsilon: f64, lambda_eps: f64, method: CapacityMethod) -> Self {
        Self {
            epsilon,
            lambda_eps,
            capacity: (1.0 - epsilon) * lambda_eps,
            method,
            capacity_interval: None,
        }
    }
}

const MAX_BRACKET_STEPS: usize = 400;
const MAX_BISECTIONS: usize = 300;

/// Finds `λ_ε` with `P(λ_ε) = ε` for a nondecreasing outage curve by
/// doubling/halving from `bracket_hint` and then bisecting.
pub fn solve_capacity<F>(
    epsilon: f64,
    outage_curve: F,
    bracket_hint: f64,
    method: CapacityMethod,
) -> Result<CapacityResult>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Domain {
            what: "epsilon must lie in (0, 1)",
            value: epsilon,
        });
    }
    if !(bracket_hint > 0.0 && bracket_hint.is_finite()) {
        return Err(Error::Domain {
            what: "bracket_hint must be > 0",
            value: bracket_hint,
        });
    }

    let mut lo = bracket_hint;
    let mut hi = bracket_hint;
    let mut p_lo = outage_curve(lo)?;
    let mut p_hi = p_lo;
    let mut steps = 0;
    while p_hi < epsilon {
        lo = hi;
        p_lo = p_hi;
        hi *= 2.0;
        p_hi = outage_curve(hi)?;
        steps += 1;
        if steps > MAX_BRACKET_STEPS || !hi.is_finite() {
            return Err(Error::Bracket {
                target: epsilon,
                low: bracket_hint,
                high: hi,
                low_value: outage_curve(bracket_hint)?,
                high_value: p_hi,
            });
        }
    }
    while p_lo > epsilon {
        hi = lo;
        p_hi = p_lo;
        lo *= 0.5;
        p_lo = outage_curve(lo)?;
        steps += 1;
        if steps > MAX_BRACKET_STEPS || lo == 0.0 {
            return Err(Error::Bracket {
                target: epsilon,
                low: lo,
                high: bracket_hint,
                low_value: p_lo,
                high_value: outage_curve(bracket_hint)?,
            });
        }
    }

    let tolerance = 1e-6 * epsilon;
    let mut best = if (p_lo - epsilon).abs() <= (p_hi - epsilon).abs() {
        (lo, p_lo)
    } else {
        (hi, p_hi)
    };
    for _ in 0..MAX_BISECTIONS {
        if (best.1 - epsilon).abs() <= tolerance && hi / lo - 1.0 <= 1e-12 {
            break;
        }
        let mid = (lo * hi).sqrt();
        if !(mid > lo && mid < hi) {
            break;
        }
        let p_mid = outage_curve(mid)?;
        if (p_mid - epsilon).abs() <= (best.1 - epsilon).abs() {
            best = (mid, p_mid);
        }
        if p_mid < epsilon {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if (best.1 - epsilon).abs() > tolerance {
        return Err(Error::Bracket {
            target: epsilon,
            low: lo,
            high: hi,
            low_value: outage_curve(lo)?,
            high_value: outage_curve(hi)?,
        });
    }
    Ok(CapacityResult::new(epsilon, best.0, method))
}

/// Log-log slope of capacity against the outage constraint.
pub fn capacity_sensitivity(curve: &[(f64, f64)]) -> Result<f64> {
    if curve.len() < 3 {
        return Err(Error::Degenerate(format!(
            "need at least 3 points, got {}",
            curve.len()
        )));
    }
    if curve.iter().any(|&(e, c)| !(e > 0.0 && c > 0.0)) {
        return Err(Error::Degenerate("all points must be positive".into()));
    }
    let x: Vec<f64> = curve.iter().map(|p| p.0.ln()).collect();
    let y: Vec<f64> = curve.iter().map(|p| p.1.ln()).collect();
    ols_slope(&x, &y).ok_or_else(|| Error::Degenerate("identical epsilon values".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::NetworkParams;
    use crate::special_math::integrate_semi_infinite;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model(lambda: f64, alpha: f64, beta: f64, l: u32) -> Model {
        Model::new(NetworkParams::new(lambda, 1.0, alpha, 1.0, beta, l).unwrap()).unwrap()
    }

    #[test]
    fn lower_bound_limits() {
        let q = QuadratureSpec::default();
        assert!(outage_lower(&model(1e-15, 4.0, 0.05, 2), &q).unwrap() <= 1e-12);
        assert!(outage_lower(&model(1e9, 4.0, 0.05, 2), &q).unwrap() >= 1.0 - 1e-9);
        assert_eq!(outage_lower(&model(0.0, 4.0, 0.05, 2), &q).unwrap(), 0.0);
    }

    #[test]
    fn lower_bound_monotone() {
        let q = QuadratureSpec::default();
        let mut prev = 0.0;
        for k in 0..20 {
            let lam = 1e-3 * 1.5f64.powi(k);
            let v = outage_lower(&model(lam, 4.0, 0.05, 2), &q).unwrap();
            assert!(v > prev);
            prev = v;
        }
        let a = outage_lower(&model(0.02, 4.0, 0.05, 2), &q).unwrap();
        let b = outage_lower(&model(0.02, 4.0, 0.05, 3), &q).unwrap();
        assert!(b < a);
    }

    #[test]
    fn lower_bound_with_zero_beta_converges() {
        let q = QuadratureSpec::default();
        let v = outage_lower(&model(0.01, 4.0, 0.0, 2), &q).unwrap();
        assert!(v > 0.0 && v < 0.1);
    }

    #[test]
    fn upper_requires_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let q = QuadratureSpec::default();
        assert!(outage_upper(&model(0.01, 4.0, 0.05, 2), &q, 100, &mut rng).is_err());
    }

    #[test]
    fn upper_limits() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q = QuadratureSpec::default();
        let u = outage_upper(&model(0.0, 4.0, 0.05, 2), &q, 10_000, &mut rng).unwrap();
        assert_eq!(u.value, 0.0);
        let m = Model::new(NetworkParams::new(0.01, 1.0, 4.0, 1e15, 0.05, 2).unwrap()).unwrap();
        let u = outage_upper(&m, &q, 10_000, &mut rng).unwrap();
        assert!(u.value > 1.0 - 1e-6);
    }

    #[test]
    fn moment_examples() {
        let m = model(0.01, 4.0, 0.0, 1);
        // δL = 0.5 < 1 with β = 0
        let v = moment_w_neg(&m, 0.5).unwrap();
        assert!((v - gamma_fn(0.5).unwrap()).abs() < 1e-14);
        assert!(matches!(moment_w_neg(&m, 1.0), Err(Error::Divergence(_))));

        let m = model(0.01, 4.0, 0.05, 2);
        let pt = (-0.05f64).exp();
        let v = moment_w_neg(&m, 1.0).unwrap();
        assert!((v - upper_gamma_general(0.0, 0.05).unwrap() / pt).abs() < 1e-13);
        let v2 = moment_w_neg(&m, 2.0).unwrap();
        assert!((v2 - upper_gamma_general(-1.0, 0.05).unwrap() / pt).abs() < 1e-12);
    }

    #[test]
    fn moments_match_direct_integration() {
        let spec = QuadratureSpec::default();
        for &(beta, theta, d) in &[(0.05, 1.0, 1.0), (0.3, 2.0, 1.5), (0.01, 0.5, 0.7)] {
            let m = Model::new(NetworkParams::new(0.01, d, 4.0, theta, beta, 2).unwrap()).unwrap();
            let floor = m.params.gain_floor();
            let scale = d.powf(4.0) * theta;
            for &order in &[0.5, 1.0, 1.5, 2.0] {
                let direct = integrate_semi_infinite(
                    |t| (scale / (floor + t)).powf(order) * (-t).exp(),
                    0.0,
                    &spec,
                )
                .unwrap()
                .value;
                let closed = moment_w_neg(&m, order).unwrap();
                assert!(
                    (closed - direct).abs() <= 1e-8 * direct,
                    "order {order}: {closed} vs {direct}"
                );
            }
        }
    }

    #[test]
    fn kappa_examples() {
        let k = asymptotic_constants(&model(0.01, 4.0, 0.05, 2)).unwrap();
        assert!((k.kappa2 - (2.0 - 0.5f64.sqrt())).abs() < 1e-12);
        assert_eq!(k.regime, Regime::LLeAlpha);
        assert!(k.kappa3.is_none());

        let m = model(0.01, 4.0, 0.05, 2);
        let composed = moment_w_neg(&m, 1.0).unwrap() * m.consts.c1.powi(2) / 2.0;
        assert!((k.kappa1 - composed).abs() <= 1e-9 * composed);

        assert_eq!(
            asymptotic_constants(&model(0.01, 4.0, 0.05, 4))
                .unwrap()
                .regime,
            Regime::LLeAlpha
        );
        let k = asymptotic_constants(&model(0.01, 3.0, 0.05, 4)).unwrap();
        assert_eq!(k.regime, Regime::LGtAlpha);
        assert!(k.kappa3.unwrap() > 0.0);
    }

    #[test]
    fn kappa_rejects_zero_beta_when_divergent() {
        assert!(matches!(
            asymptotic_constants(&model(0.01, 4.0, 0.0, 2)),
            Err(Error::Divergence(_))
        ));
        assert!(asymptotic_constants(&model(0.01, 4.0, 0.0, 1)).is_ok());
        assert!(matches!(
            asymptotic_constants(&model(0.01, 3.0, 0.0, 1)),
            Ok(AsymptoticConstants {
                regime: Regime::LLeAlpha,
                ..
            })
        ));
    }

    #[test]
    fn asymptotic_bounds_power_law() {
        let k = asymptotic_constants(&model(0.01, 4.0, 0.05, 2)).unwrap();
        let (lo1, hi1) = asymptotic_outage_bounds(&k, 2, 4.0, 1e-3).unwrap();
        let (lo2, hi2) = asymptotic_outage_bounds(&k, 2, 4.0, 5e-4).unwrap();
        assert!((lo2 / lo1 - 0.25).abs() < 1e-12);
        assert!((hi2 / hi1 - 0.25).abs() < 1e-12);
        assert!((hi1 / lo1 - (1.0 + k.kappa2)).abs() < 1e-12);
        assert!(asymptotic_outage_bounds(&k, 2, 4.0, 0.0).is_err());
        let (lo, hi) = asymptotic_outage_bounds(&k, 2, 4.0, 1e6).unwrap();
        assert_eq!((lo, hi), (1.0, 1.0));
    }

    #[test]
    fn solve_power_law() {
        let r = solve_capacity(
            0.1,
            |l| Ok((10.0 * l * l).min(1.0)),
            1.0,
            CapacityMethod::Asymptotic,
        )
        .unwrap();
        assert!((r.lambda_eps - 0.1).abs() < 1e-9);
        assert!((r.capacity - 0.09).abs() < 1e-9);
        assert_eq!(r.capacity, (1.0 - r.epsilon) * r.lambda_eps);
        let r2 = solve_capacity(
            0.1,
            |l| Ok((10.0 * l * l).min(1.0)),
            1e-6,
            CapacityMethod::Asymptotic,
        )
        .unwrap();
        assert!((r2.lambda_eps - 0.1).abs() < 1e-9);
    }

    #[test]
    fn solve_reports_missing_crossing() {
        let err = solve_capacity(0.5, |_| Ok(0.1), 1.0, CapacityMethod::LowerBound).unwrap_err();
        assert!(matches!(err, Error::Bracket { .. }));
        assert!(solve_capacity(0.0, |_| Ok(0.1), 1.0, CapacityMethod::LowerBound).is_err());
        assert!(solve_capacity(1.0, |_| Ok(0.1), 1.0, CapacityMethod::LowerBound).is_err());
    }

    #[test]
    fn sensitivity_examples() {
        let pts: Vec<(f64, f64)> = [1e-5, 1e-4, 1e-3, 1e-2, 1e-1]
            .iter()
            .map(|&e: &f64| (e, 3.0 * e.powf(0.25)))
            .collect();
        assert!((capacity_sensitivity(&pts).unwrap() - 0.25).abs() < 1e-12);
        let flat = [(1e-3, 2.0), (1e-2, 2.0), (1e-1, 2.0)];
        assert!(capacity_sensitivity(&flat).unwrap().abs() < 1e-12);
        assert!(capacity_sensitivity(&[(0.1, 1.0), (0.1, 2.0), (0.1, 3.0)]).is_err());
        assert!(capacity_sensitivity(&[(0.1, 1.0), (0.2, 2.0)]).is_err());
        assert!(capacity_sensitivity(&[(0.1, 1.0), (0.2, -2.0), (0.3, 1.0)]).is_err());
    }
}
