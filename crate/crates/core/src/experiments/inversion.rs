//! Capacity from a noisy simulated outage curve.

use crate::analysis::{CapacityMethod, CapacityResult};
use crate::error::{Error, Result};
use crate::simulator::OutageEstimate;

/// Weighted pool-adjacent-violators fit: the nondecreasing sequence closest
/// to `values` in weighted least squares.
pub fn isotonic_fit(values: &[f64], weights: &[f64]) -> Vec<f64> {
    assert_eq!(values.len(), weights.len());
    // blocks of (mean, weight, length)
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(values.len());
    for (&v, &w) in values.iter().zip(weights) {
        blocks.push((v, w, 1));
        while blocks.len() > 1 {
            let (m2, w2, n2) = blocks[blocks.len() - 1];
            let (m1, w1, n1) = blocks[blocks.len() - 2];
            if m1 <= m2 {
                break;
            }
            let w = w1 + w2;
            let m = if w > 0.0 {
                (m1 * w1 + m2 * w2) / w
            } else {
                0.5 * (m1 + m2)
            };
            blocks.truncate(blocks.len() - 2);
            blocks.push((m, w, n1 + n2));
        }
    }
    blocks
        .into_iter()
        .flat_map(|(m, _, n)| std::iter::repeat_n(m, n))
        .collect()
}

/// Density at which a nondecreasing piecewise curve through `(lambdas, p)`
/// reaches `target`. Interpolates `ln p` against `ln λ` when both ends are
/// positive and `p` against `ln λ` otherwise. `None` outside the range.
fn crossing(lambdas: &[f64], p: &[f64], target: f64) -> Option<f64> {
    let first = *p.first()?;
    if target < first || target > *p.last()? {
        return None;
    }
    if target == first {
        // the left end of a flat stretch at the target
        return Some(lambdas[0]);
    }
    let i = p.iter().position(|&v| v >= target)?;
    let (x0, x1) = (lambdas[i - 1].ln(), lambdas[i].ln());
    let (y0, y1) = (p[i - 1], p[i]);
    let t = if y0 > 0.0 {
        (target.ln() - y0.ln()) / (y1.ln() - y0.ln())
    } else {
        (target - y0) / (y1 - y0)
    };
    Some((x0 + t * (x1 - x0)).exp())
}

/// Inverts a simulated outage curve at `epsilon`.
///
/// The estimates are made monotone by trial-weighted isotonic regression and
/// `λ_ε` is read off by log-log interpolation between the two bracketing grid
/// points. The capacity interval comes from inverting the isotonic fits of
/// the Wilson bounds; where those do not cross inside the grid the interval
/// is cut at the grid edge.
pub fn invert_simulated_curve(
    points: &[(f64, OutageEstimate)],
    epsilon: f64,
) -> Result<CapacityResult> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Domain {
            what: "epsilon must lie in (0, 1)",
            value: epsilon,
        });
    }
    if points.len() < 2 {
        return Err(Error::Degenerate(format!(
            "need at least 2 grid points, got {}",
            points.len()
        )));
    }
    if points.windows(2).any(|w| !(w[0].0 < w[1].0)) || !(points[0].0 > 0.0) {
        return Err(Error::invalid(
            "lambda grid",
            "must be positive and strictly increasing",
        ));
    }
    let lambdas: Vec<f64> = points.iter().map(|p| p.0).collect();
    let weights: Vec<f64> = points.iter().map(|p| p.1.trials as f64).collect();
    let column = |f: fn(&OutageEstimate) -> f64| -> Vec<f64> {
        isotonic_fit(
            &points.iter().map(|p| f(&p.1)).collect::<Vec<_>>(),
            &weights,
        )
    };
    let fit = column(|e| e.p_hat);

    let (min, max) = (fit[0], fit[fit.len() - 1]);
    if !(min < epsilon && epsilon <= max) {
        return Err(Error::NoCrossing {
            target: epsilon,
            min,
            max,
        });
    }
    let lambda_eps = crossing(&lambdas, &fit, epsilon).ok_or(Error::NoCrossing {
        target: epsilon,
        min,
        max,
    })?;

    let lo_fit = column(|e| e.ci_low);
    let hi_fit = column(|e| e.ci_high);
    let first = lambdas[0];
    let last = lambdas[lambdas.len() - 1];
    // a pessimistic curve crosses earlier
    let lambda_lo = crossing(&lambdas, &hi_fit, epsilon)
        .unwrap_or(first)
        .min(lambda_eps);
    let lambda_hi = crossing(&lambdas, &lo_fit, epsilon)
        .unwrap_or(last)
        .max(lambda_eps);

    let mut result = CapacityResult::new(epsilon, lambda_eps, CapacityMethod::Simulation);
    result.capacity_interval = Some(((1.0 - epsilon) * lambda_lo, (1.0 - epsilon) * lambda_hi));
    Ok(result)
}
