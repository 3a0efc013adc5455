//! Shot-noise statistics of the secondary process: interferers whose
//! effective power falls below a conditioning level `g`.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::Exp1;
use serde::Serialize;

use super::trial::{poisson_count, uniform_disk_r2, PathLoss};
use super::truncation_check;
use crate::error::{Error, Result};
use crate::model::Model;
use crate::stats::SampleMoments;

pub const MIN_REALIZATIONS: usize = 1_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CampbellStats {
    pub g: f64,
    pub moments: SampleMoments,
    /// False when the disk radius violates the truncation rule; the moments
    /// are still returned.
    pub truncation_ok: bool,
}

fn check_level(g: f64) -> Result<()> {
    if !(g > 0.0) || !g.is_finite() {
        return Err(Error::Domain {
            what: "conditioning level g",
            value: g,
        });
    }
    Ok(())
}

/// Empirical moments of `Σ I_n 1{I_n < g}` over `realizations` independent
/// networks on the disk of radius `radius`.
pub fn campbell_stats<R: Rng + ?Sized>(
    model: &Model,
    g: f64,
    realizations: usize,
    rng: &mut R,
    radius: f64,
) -> Result<CampbellStats> {
    check_level(g)?;
    if realizations < MIN_REALIZATIONS {
        return Err(Error::invalid(
            "realizations",
            format!("at least {MIN_REALIZATIONS} required, got {realizations}"),
        ));
    }
    let p = &model.params;
    let loss = PathLoss::new(p.alpha);
    let mean_count = p.lambda * PI * radius * radius;
    let sums: Vec<f64> = (0..realizations)
        .map(|_| {
            let n = poisson_count(rng, mean_count);
            let mut sum = 0.0;
            for _ in 0..n {
                let r2 = uniform_disk_r2(rng, radius);
                let rho: f64 = rng.sample(Exp1);
                let power = rho * loss.at_squared_distance(r2);
                if power < g {
                    sum += power;
                }
            }
            sum
        })
        .collect();
    Ok(CampbellStats {
        g,
        moments: SampleMoments::from_slice(&sums),
        truncation_ok: truncation_check(p, radius).ok,
    })
}

/// Per-realization counts of interferers with `I_n ≥ g`.
pub fn exceedance_counts<R: Rng + ?Sized>(
    model: &Model,
    g: f64,
    realizations: usize,
    rng: &mut R,
    radius: f64,
) -> Result<Vec<u64>> {
    check_level(g)?;
    let p = &model.params;
    let loss = PathLoss::new(p.alpha);
    let mean_count = p.lambda * PI * radius * radius;
    Ok((0..realizations)
        .map(|_| {
            let n = poisson_count(rng, mean_count);
            (0..n)
                .filter(|_| {
                    let r2 = uniform_disk_r2(rng, radius);
                    let rho: f64 = rng.sample(Exp1);
                    rho * loss.at_squared_distance(r2) >= g
                })
                .count() as u64
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::NetworkParams;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model() -> Model {
        Model::new(NetworkParams::default()).unwrap()
    }

    #[test]
    fn tiny_level_has_vanishing_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = campbell_stats(&model(), 1e-12, 1_000, &mut rng, 100.0).unwrap();
        assert!(s.moments.mean < 1e-9);
    }

    #[test]
    fn mean_matches_closed_form() {
        let m = model();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = campbell_stats(&m, 1.0, 10_000, &mut rng, 100.0).unwrap();
        let (mean, var) = m.secondary_moments(1.0).unwrap();
        assert!(s.truncation_ok);
        assert!((s.moments.mean - mean).abs() <= 3.0 * s.moments.mean_std_error);
        assert!((s.moments.variance - var).abs() <= 3.0 * s.moments.variance_std_error);
    }

    #[test]
    fn bad_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(campbell_stats(&model(), 0.0, 1_000, &mut rng, 100.0).is_err());
        assert!(campbell_stats(&model(), 1.0, 10, &mut rng, 100.0).is_err());
    }

    #[test]
    fn exceedances_are_poisson() {
        let m = model();
        let g = 1e-3;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let counts = exceedance_counts(&m, g, 10_000, &mut rng, 100.0).unwrap();
        let xs: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
        let s = SampleMoments::from_slice(&xs);
        let mu = m.marked_density_mu(g).unwrap();
        assert!((s.mean - mu).abs() <= 3.0 * s.mean_std_error);
        let fano = s.variance / s.mean;
        assert!((0.95..=1.05).contains(&fano), "fano {fano}");
    }
}
