//! Loss-limited excitation exchange and single-excitation transport.
//!
//! Losses enter through the no-jump Hamiltonian `U - (i/2) Gamma_eff`, with
//! `Gamma_eff = gamma cos^2 theta + kappa_p sin^2 theta` for an atom whose
//! bound state carries photon fraction `sin^2 theta`.

mod evolve;
mod exchange;

pub use evolve::{
    evolve_single_excitation, evolve_single_excitation_with, light_cone_front, IntegratorOptions,
    Trajectory,
};
pub use exchange::{
    cooperativity, cooperativity_at_length, collective_dissipator, dissipator_coefficients,
    dissipator_ratio, exchange_error_at, exchange_simulate, optimize_exchange, ExchangeResult,
    ScanPoint, EXCHANGE_SCAN_POINTS,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Loss channels of one atom.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossModel {
    /// Photon loss rate of the guided mode (rad/s).
    pub kappa_p: f64,
    /// Free-space emission rate (rad/s).
    pub gamma: f64,
    /// Bound-state mixing angle.
    pub theta: f64,
}

impl LossModel {
    pub fn new(kappa_p: f64, gamma: f64, theta: f64) -> Result<Self> {
        ensure_finite("kappa_p", kappa_p)?;
        ensure_finite("gamma", gamma)?;
        ensure_finite("theta", theta)?;
        if kappa_p < 0.0 || gamma < 0.0 {
            return Err(Error::invalid("loss rates must be non-negative"));
        }
        Ok(LossModel { kappa_p, gamma, theta })
    }

    pub fn lossless() -> Self {
        LossModel { kappa_p: 0.0, gamma: 0.0, theta: 0.0 }
    }

    pub fn with_theta(&self, theta: f64) -> Self {
        LossModel { theta, ..*self }
    }

    /// `gamma cos^2 theta + kappa_p sin^2 theta`.
    pub fn gamma_eff(&self) -> f64 {
        let (s, c) = self.theta.sin_cos();
        self.gamma * c * c + self.kappa_p * s * s
    }

    /// Per-atom rates for atoms with individual mixing angles.
    pub fn site_rates(&self, thetas: &[f64]) -> Vec<f64> {
        thetas.iter().map(|&t| self.with_theta(t).gamma_eff()).collect()
    }
}

/// Single-excitation amplitudes at a given time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeState {
    pub amplitudes: Vec<Complex64>,
    pub time: f64,
}

impl AmplitudeState {
    /// Excitation localized on `site` at `t = 0`.
    pub fn localized(n: usize, site: usize) -> Result<Self> {
        if site >= n {
            return Err(Error::invalid(format!("site {site} outside a chain of {n}")));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); n];
        amplitudes[site] = Complex64::new(1.0, 0.0);
        Ok(AmplitudeState { amplitudes, time: 0.0 })
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }
}
