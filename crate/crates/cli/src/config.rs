//! Run configuration: one JSON document, validated on load.
//!
//! Frequencies are ordinary frequencies in Hz under `"units": "si"` and
//! multiples of `omega_b` under `"units": "dimensionless"`; lengths are in
//! metres or lattice constants respectively. Positions and separations are
//! always in lattice constants.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use phcqed::band_model::{AtomCoupling, BandEdge};
use phcqed::units::UnitSystem;

use crate::error::CliError;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub units: Option<UnitSystem>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band: Option<BandConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<CouplingConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atoms: Option<AtomsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drives: Option<Vec<DriveConfig>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub losses: Option<LossConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disorder: Option<DisorderConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound_state: Option<BoundStateParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interactions: Option<InteractionParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub powerlaw: Option<PowerLawParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exchange: Option<ExchangeParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evolve: Option<EvolveParams>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_b: Option<f64>,
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    /// Band-edge wavevector; defaults to the zone boundary `pi / a`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k0: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detuning: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_cell: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bloch_amplitude: Option<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlochKind {
    /// `cos(k0 z)`.
    #[default]
    StandingWave,
    /// Unit Bloch factor everywhere.
    Flat,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomsConfig {
    /// Explicit positions in lattice constants.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positions: Option<Vec<f64>>,
    /// Regular chain used when `positions` is absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing_cells: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bloch: Option<BlochKind>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveConfig {
    pub omega: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_prime: Option<f64>,
    pub delta_l: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_p: Option<f64>,
    /// Alternative to `kappa_p`: fixes `kappa_p = gbar_c^2 / (C gamma)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cooperativity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisorderConfig {
    pub r: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_b: Option<f64>,
    pub epsilon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_cells: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<GridConfig>,
}

/// Logarithmic or linear grid `[min, max]` with `points` samples.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundStateParams {
    /// Grid of `Delta / beta`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InteractionParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detunings: Option<Vec<f64>>,
    /// Largest separation in lattice constants.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_separation: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerLawParams {
    pub eta: f64,
    pub z_min: f64,
    pub z_max: f64,
    pub n_drives: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_starts: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExchangeParams {
    /// Separation of the two atoms in lattice constants.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub separation: Option<f64>,
    /// Trajectory samples over `[0, 2 tau]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_site: Option<usize>,
    /// Final time in units of `1 / max |U_jl|`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// Population threshold defining the light-cone front.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub front_threshold: Option<f64>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))
    }

    /// Canonical form: pretty JSON with fixed field order and shortest
    /// round-trip floats, newline-terminated.
    pub fn to_canonical_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    /// Sections present in `over` replace those of `self`.
    pub fn overlay(self, over: RunConfig) -> RunConfig {
        RunConfig {
            units: over.units.or(self.units),
            seed: over.seed.or(self.seed),
            band: over.band.or(self.band),
            coupling: over.coupling.or(self.coupling),
            atoms: over.atoms.or(self.atoms),
            drives: over.drives.or(self.drives),
            losses: over.losses.or(self.losses),
            disorder: over.disorder.or(self.disorder),
            bound_state: over.bound_state.or(self.bound_state),
            interactions: over.interactions.or(self.interactions),
            powerlaw: over.powerlaw.or(self.powerlaw),
            exchange: over.exchange.or(self.exchange),
            evolve: over.evolve.or(self.evolve),
        }
    }

    pub fn unit_system(&self) -> UnitSystem {
        self.units.unwrap_or(UnitSystem::Si)
    }

    /// Multiplier from configured frequencies to rad/s (or to `omega_b`).
    pub fn freq_scale(&self) -> f64 {
        match self.unit_system() {
            UnitSystem::Si => 2.0 * PI,
            UnitSystem::Dimensionless => 1.0,
        }
    }

    pub fn band_edge(&self) -> Result<BandEdge, CliError> {
        let b = self.band.as_ref().ok_or_else(|| CliError::Config("missing `band` section".into()))?;
        let (omega_b, a) = match self.unit_system() {
            UnitSystem::Si => (
                b.omega_b.ok_or_else(|| CliError::Config("band.omega_b (Hz) is required in si units".into()))? * 2.0 * PI,
                b.a.ok_or_else(|| CliError::Config("band.a (m) is required in si units".into()))?,
            ),
            UnitSystem::Dimensionless => {
                for (name, v) in [("band.omega_b", b.omega_b), ("band.a", b.a)] {
                    if v.is_some_and(|v| v != 1.0) {
                        return Err(CliError::Config(format!("{name} must be 1 in dimensionless units")));
                    }
                }
                (1.0, 1.0)
            }
        };
        let k0 = b.k0.unwrap_or(PI / a);
        Ok(BandEdge::new(omega_b, b.alpha, k0, a)?)
    }

    /// Coupling with the configured detuning, or `fallback_detuning` (rad/s)
    /// when none is set.
    pub fn atom_coupling(&self, band: &BandEdge, fallback_detuning: Option<f64>) -> Result<AtomCoupling, CliError> {
        let c = self
            .coupling
            .as_ref()
            .ok_or_else(|| CliError::Config("missing `coupling` section".into()))?;
        let f = self.freq_scale();
        let detuning = match (c.detuning, fallback_detuning) {
            (Some(d), _) => d * f,
            (None, Some(d)) => d,
            (None, None) => return Err(CliError::Config("coupling.detuning is required".into())),
        };
        let mut builder = AtomCoupling::builder(detuning, c.gamma.unwrap_or(0.0) * f)
            .bloch_amplitude(c.bloch_amplitude.unwrap_or(1.0));
        if let Some(b) = c.beta {
            builder = builder.beta(b * f);
        }
        if let Some(g) = c.g_cell {
            builder = builder.g_cell(g * f);
        }
        Ok(builder.build(band)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_json(r#"{"band": {"alpha": 1.0, "curvature": 2}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"colour": 1}"#).is_err());
    }

    #[test]
    fn canonical_form_round_trips() {
        let text = r#"{"units":"si","band":{"omega_b":333e12,"alpha":10.6,"a":3.71e-7},
            "coupling":{"detuning":4e11,"gamma":5e6,"g_cell":1.22e10},
            "disorder":{"r":2,"epsilon":0.001,"sweep":{"min":1e-4,"max":1e-2,"points":9}}}"#;
        let cfg = RunConfig::from_json(text).unwrap();
        let once = cfg.to_canonical_json();
        let again = RunConfig::from_json(&once).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.to_canonical_json(), once);
    }

    #[test]
    fn dimensionless_band_is_unit_scaled() {
        let cfg = RunConfig::from_json(r#"{"units":"dimensionless","band":{"alpha":0.2}}"#).unwrap();
        let band = cfg.band_edge().unwrap();
        assert_eq!((band.omega_b, band.a), (1.0, 1.0));
        assert!((band.k0 - PI).abs() < 1e-15);
        let bad = RunConfig::from_json(r#"{"units":"dimensionless","band":{"alpha":0.2,"a":2}}"#).unwrap();
        assert!(bad.band_edge().is_err());
    }

    #[test]
    fn si_requires_dimensions() {
        let cfg = RunConfig::from_json(r#"{"band":{"alpha":10.6}}"#).unwrap();
        assert!(matches!(cfg.band_edge(), Err(CliError::Config(_))));
    }

    #[test]
    fn overlay_replaces_sections() {
        let base = RunConfig::from_json(r#"{"seed":1,"band":{"alpha":1.0}}"#).unwrap();
        let over = RunConfig::from_json(r#"{"seed":2}"#).unwrap();
        let merged = base.overlay(over);
        assert_eq!(merged.seed, Some(2));
        assert_eq!(merged.band.unwrap().alpha, 1.0);
    }
}
