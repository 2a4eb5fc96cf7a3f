//! Unit conversions. Internally every frequency is angular.

use std::f64::consts::TAU;

/// Ordinary frequency (Hz) to angular frequency (rad/s).
#[inline]
pub fn hz_to_rad(f: f64) -> f64 {
    TAU * f
}

/// Angular frequency (rad/s) to ordinary frequency (Hz).
#[inline]
pub fn rad_to_hz(w: f64) -> f64 {
    w / TAU
}

/// Unit system a run is expressed in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitSystem {
    /// Frequencies in Hz on input (rad/s internally), lengths in meters.
    Si,
    /// Frequencies in units of the band-edge frequency, lengths in units of
    /// the lattice constant.
    Dimensionless,
}
