//! Homogeneous Poisson point process on a disk centered at the origin.

use std::f64::consts::PI;

use rand::Rng;

use super::trial::{poisson_count, uniform_disk_r2};

/// Points of a PPP with the given density on the disk of radius `radius`.
pub fn sample_ppp<R: Rng + ?Sized>(rng: &mut R, density: f64, radius: f64) -> Vec<[f64; 2]> {
    let n = poisson_count(rng, density * PI * radius * radius);
    (0..n)
        .map(|_| {
            let r = uniform_disk_r2(rng, radius).sqrt();
            let angle = 2.0 * PI * rng.random::<f64>();
            [r * angle.cos(), r * angle.sin()]
        })
        .collect()
}
