//! Zero-forcing receive beamformer.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Inputs whose residual after orthogonalization falls below this fraction of
/// their norm are treated as linearly dependent.
pub const DEPENDENCE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct ZfBeamformer {
    /// Unit-norm combining vector.
    pub vector: Vec<Complex64>,
    /// Indices of input channels dropped as numerically dependent.
    pub dropped: Vec<usize>,
}

pub fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `a† b`
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Removes the components of `v` along the orthonormal set `basis`. Two
/// passes of modified Gram–Schmidt.
fn project_out(v: &mut [Complex64], basis: &[Vec<Complex64>]) {
    for _ in 0..2 {
        for q in basis {
            let c = inner(q, v);
            for (x, qi) in v.iter_mut().zip(q) {
                *x -= c * qi;
            }
        }
    }
}

/// The standard basis of `C^dim`, the fixed tie-break order used by the
/// simulator.
pub fn standard_basis(dim: usize) -> Vec<Vec<Complex64>> {
    (0..dim)
        .map(|i| {
            let mut e = vec![Complex64::new(0.0, 0.0); dim];
            e[i] = Complex64::new(1.0, 0.0);
            e
        })
        .collect()
}

/// Unit vector orthogonal to every channel in `channels`.
///
/// The channels are orthonormalized (dependent ones are dropped and
/// reported), then each vector of `tie_break_basis` is projected onto the
/// orthogonal complement in order until one leaves a non-negligible
/// residual. The result depends only on the inputs.
pub fn zf_receive_beamformer(
    channels: &[&[Complex64]],
    tie_break_basis: &[Vec<Complex64>],
) -> Result<ZfBeamformer> {
    let dim = tie_break_basis
        .first()
        .map(Vec::len)
        .ok_or_else(|| Error::Degenerate("empty tie-break basis".into()))?;
    if channels.len() >= dim {
        return Err(Error::Degenerate(format!(
            "cannot null {} channels with {dim} antennas",
            channels.len()
        )));
    }

    let mut ortho: Vec<Vec<Complex64>> = Vec::with_capacity(channels.len());
    let mut dropped = Vec::new();
    for (idx, h) in channels.iter().enumerate() {
        if h.len() != dim {
            return Err(Error::Degenerate(format!(
                "channel {idx} has length {}, expected {dim}",
                h.len()
            )));
        }
        let scale = norm(h);
        let mut r = h.to_vec();
        project_out(&mut r, &ortho);
        let rn = norm(&r);
        if scale == 0.0 || rn <= DEPENDENCE_TOLERANCE * scale {
            dropped.push(idx);
            continue;
        }
        r.iter_mut().for_each(|x| *x /= rn);
        ortho.push(r);
    }

    for b in tie_break_basis {
        let mut r = b.clone();
        project_out(&mut r, &ortho);
        let rn = norm(&r);
        if rn > DEPENDENCE_TOLERANCE * norm(b) {
            r.iter_mut().for_each(|x| *x /= rn);
            return Ok(ZfBeamformer { vector: r, dropped });
        }
    }
    Err(Error::Degenerate(
        "tie-break basis lies inside the span of the channels".into(),
    ))
}
