//! Network parameters, derived constants and the closed-form laws of the
//! effective interference model.
//!
//! `lambda` is always the density of *active* transmitters. The area-scale
//! constant `c1 = πΓ(1+δ)` therefore carries no transmission-probability
//! factor.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::Exp1;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::special_math::{gamma_fn, reg_upper_gamma};

/// Physical parameters of the network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NetworkParams {
    /// Active transmitter density (nodes per unit area). Zero is an empty network.
    pub lambda: f64,
    /// Transmitter–receiver separation.
    pub d: f64,
    /// Path-loss exponent, strictly greater than 2.
    pub alpha: f64,
    /// SIR decoding threshold (linear).
    pub theta: f64,
    /// Opportunistic channel-gain threshold.
    pub beta: f64,
    /// Antennas per node.
    #[serde(rename = "L")]
    pub antennas: u32,
}

impl Default for NetworkParams {
    fn default() -> Self {
        let d = 1.0;
        let alpha = 4.0;
        Self {
            lambda: 0.01,
            d,
            alpha,
            theta: 1.0,
            beta: Self::beta_for_activation(0.95, d, alpha),
            antennas: 2,
        }
    }
}

impl NetworkParams {
    pub fn new(
        lambda: f64,
        d: f64,
        alpha: f64,
        theta: f64,
        beta: f64,
        antennas: u32,
    ) -> Result<Self> {
        let p = Self {
            lambda,
            d,
            alpha,
            theta,
            beta,
            antennas,
        };
        p.validate()?;
        Ok(p)
    }

    /// The gain threshold that yields transmission probability `p_t`.
    pub fn beta_for_activation(p_t: f64, d: f64, alpha: f64) -> f64 {
        -p_t.ln() * d.powf(-alpha)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid(
                "lambda",
                format!("must be finite and >= 0, got {}", self.lambda),
            ));
        }
        if !(self.d > 0.0 && self.d.is_finite()) {
            return Err(Error::invalid("d", format!("must be > 0, got {}", self.d)));
        }
        if !(self.alpha > 2.0 && self.alpha.is_finite()) {
            return Err(Error::invalid(
                "alpha",
                format!("must be > 2, got {}", self.alpha),
            ));
        }
        if !(self.theta > 0.0 && self.theta.is_finite()) {
            return Err(Error::invalid(
                "theta",
                format!("must be > 0, got {}", self.theta),
            ));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::invalid(
                "beta",
                format!("must be >= 0, got {}", self.beta),
            ));
        }
        if self.antennas < 1 {
            return Err(Error::invalid("L", "must be >= 1"));
        }
        Ok(())
    }

    pub fn with_lambda(self, lambda: f64) -> Self {
        Self { lambda, ..self }
    }

    pub fn with_antennas(self, antennas: u32) -> Self {
        Self { antennas, ..self }
    }

    /// Shift `β d^α` of the typical-link gain law.
    pub fn gain_floor(&self) -> f64 {
        self.beta * self.d.powf(self.alpha)
    }
}

/// Constants computed once from [`NetworkParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedConstants {
    pub delta: f64,
    pub p_t: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
}

pub fn derive_constants(params: &NetworkParams) -> Result<DerivedConstants> {
    params.validate()?;
    let alpha = params.alpha;
    let delta = 2.0 / alpha;
    let gamma_term = gamma_fn(1.0 + delta)?;
    let c1 = PI * gamma_term;
    Ok(DerivedConstants {
        delta,
        p_t: (-params.gain_floor()).exp(),
        c1,
        c2: c1 * params.theta.powf(delta) * params.d * params.d,
        c3: 2.0 * c1 / (alpha - 2.0),
        c4: c1 / (alpha - 1.0),
    })
}

/// Validated parameters bundled with their derived constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Model {
    pub params: NetworkParams,
    pub consts: DerivedConstants,
}

impl Model {
    pub fn new(params: NetworkParams) -> Result<Self> {
        Ok(Self {
            consts: derive_constants(&params)?,
            params,
        })
    }

    fn check_level(g: f64) -> Result<()> {
        if g > 0.0 {
            Ok(())
        } else {
            Err(Error::Domain {
                what: "interference level must be > 0",
                value: g,
            })
        }
    }

    /// Draws the typical link's gain `W = βd^α + E`, `E ~ Exp(1)`.
    pub fn sample_w<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let e: f64 = rng.sample(Exp1);
        self.params.gain_floor() + e
    }

    /// Draws the primary interference power `G = (c1 λ / X)^{1/δ}` with
    /// `X ~ Gamma(L, 1)`. Returns zero for an empty network.
    pub fn sample_g<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let x: f64 = (0..self.params.antennas)
            .map(|_| rng.sample::<f64, _>(Exp1))
            .sum();
        self.primary_from_gamma(x)
    }

    /// The deterministic map `X ↦ (c1 λ / X)^{1/δ}` used by [`Self::sample_g`].
    pub fn primary_from_gamma(&self, x: f64) -> f64 {
        (self.consts.c1 * self.params.lambda / x).powf(1.0 / self.consts.delta)
    }

    /// Mean number of interferers with interference power at least `g`.
    pub fn marked_density_mu(&self, g: f64) -> Result<f64> {
        Self::check_level(g)?;
        Ok(self.consts.c1 * self.params.lambda * g.powf(-self.consts.delta))
    }

    /// `Pr(G ≤ g)`: probability that fewer than `L` interferers have power ≥ `g`.
    pub fn cdf_primary(&self, g: f64) -> Result<f64> {
        Self::check_level(g)?;
        let x = self.marked_density_mu(g)?;
        if x == 0.0 {
            return Ok(1.0);
        }
        reg_upper_gamma(self.params.antennas as f64, x)
    }

    /// Density of the primary interference power.
    pub fn pdf_primary(&self, g: f64) -> Result<f64> {
        Self::check_level(g)?;
        let l = self.params.antennas as f64;
        let delta = self.consts.delta;
        let scale = self.consts.c1 * self.params.lambda;
        if scale == 0.0 {
            return Ok(0.0);
        }
        let x = scale * g.powf(-delta);
        // δ x^L e^{-x} / (g Γ(L))
        let log_density = delta.ln() + l * x.ln() - x - g.ln() - crate::special_math::ln_gamma(l)?;
        Ok(log_density.exp())
    }

    /// Mean and variance of the secondary interference conditioned on `G = g`.
    pub fn secondary_moments(&self, g: f64) -> Result<(f64, f64)> {
        Self::check_level(g)?;
        let lambda = self.params.lambda;
        let delta = self.consts.delta;
        Ok((
            self.consts.c3 * lambda * g.powf(1.0 - delta),
            self.consts.c4 * lambda * g.powf(2.0 - delta),
        ))
    }
}
