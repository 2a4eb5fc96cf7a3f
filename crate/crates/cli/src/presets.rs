//! Bundled configurations.

use std::f64::consts::PI;

use phcqed::units::UnitSystem;

use crate::config::*;

pub const NAMES: [&str; 4] = ["apcw", "fig2", "fig4", "localization"];

/// Short description of each preset, in the order of [`NAMES`].
pub fn describe(name: &str) -> Option<&'static str> {
    Some(match name {
        "apcw" => "alligator photonic-crystal waveguide near its 333 THz band edge, Cs-like atoms",
        "fig2" => "dimensionless bound-state sweep with beta = 4.75e-7 omega_b",
        "fig4" => "two-drive exponential fit to z^(-1/4) on [1, 50] with alpha = 0.2",
        "localization" => "quarter-wave dielectric stack with r = 2 and weak thickness disorder",
        _ => return None,
    })
}

pub fn get(name: &str) -> Option<RunConfig> {
    Some(match name {
        "apcw" => apcw(),
        "fig2" => fig2(),
        "fig4" => fig4(),
        "localization" => localization(),
        _ => return None,
    })
}

fn apcw() -> RunConfig {
    RunConfig {
        units: Some(UnitSystem::Si),
        band: Some(BandConfig { omega_b: Some(333e12), alpha: 10.6, a: Some(371e-9), k0: None }),
        coupling: Some(CouplingConfig {
            detuning: Some(400e9),
            gamma: Some(5e6),
            g_cell: Some(12.2e9),
            ..Default::default()
        }),
        atoms: Some(AtomsConfig {
            count: Some(41),
            spacing_cells: Some(1),
            bloch: Some(BlochKind::StandingWave),
            ..Default::default()
        }),
        // Q = 2e5
        losses: Some(LossConfig { kappa_p: Some(333e12 / 2e5), ..Default::default() }),
        interactions: Some(InteractionParams {
            detunings: Some(vec![400e9, 800e9, 1300e9, 2800e9]),
            max_separation: Some(55),
        }),
        exchange: Some(ExchangeParams { separation: Some(0.0), samples: Some(201) }),
        evolve: Some(EvolveParams {
            initial_site: Some(20),
            duration: Some(20.0),
            samples: Some(101),
            front_threshold: Some(1e-3),
        }),
        ..Default::default()
    }
}

fn fig2() -> RunConfig {
    RunConfig {
        units: Some(UnitSystem::Dimensionless),
        band: Some(BandConfig { alpha: 10.6, ..Default::default() }),
        coupling: Some(CouplingConfig { beta: Some(4.75e-7), gamma: Some(0.0), ..Default::default() }),
        bound_state: Some(BoundStateParams { grid: Some(GridConfig { min: -10.0, max: 10.0, points: 401 }) }),
        ..Default::default()
    }
}

fn fig4() -> RunConfig {
    RunConfig {
        units: Some(UnitSystem::Dimensionless),
        band: Some(BandConfig { alpha: 0.2, ..Default::default() }),
        powerlaw: Some(PowerLawParams { eta: 0.25, z_min: 1.0, z_max: 50.0, n_drives: 2, ..Default::default() }),
        ..Default::default()
    }
}

fn localization() -> RunConfig {
    RunConfig {
        seed: Some(1),
        disorder: Some(DisorderConfig {
            r: 2.0,
            phi_b: Some(PI / 2.0),
            epsilon: 1e-3,
            n_cells: Some(10_000),
            n_trials: Some(200),
            sweep: Some(GridConfig { min: 1e-4, max: 1e-2, points: 9 }),
        }),
        ..Default::default()
    }
}
