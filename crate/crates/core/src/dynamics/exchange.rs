use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{AmplitudeState, LossModel, Trajectory};
use crate::band_model::{effective_cavity, AtomCoupling, BandEdge};
use crate::error::{ensure_finite, Error, Result};
use crate::interactions::CouplingMatrix;
use crate::par::{self, Exec};

/// Points in the coarse detuning scan of [`optimize_exchange`].
pub const EXCHANGE_SCAN_POINTS: usize = 400;
const SCAN_LO: f64 = 0.5;
const SCAN_HI: f64 = 1e6;

/// Optimized two-atom exchange.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExchangeResult {
    /// Exchange time `pi / (2 |U12|)` (s).
    pub tau: f64,
    /// `1 - P_2(tau)`.
    pub error: f64,
    /// Atomic detuning minimizing the error (rad/s).
    pub optimal_detuning: f64,
    pub u12: f64,
    pub gamma_eff: f64,
    pub theta: f64,
    /// `gbar_c^2 / (kappa_p gamma)` at the reference cloud length.
    pub cooperativity: f64,
    #[serde(skip)]
    pub scan: Vec<ScanPoint>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub detuning: f64,
    pub error: f64,
}

/// Populations of two atoms exchanging one excitation through `u12` while
/// both decay at `losses.gamma_eff()`.
///
/// Starting on atom 1, `P_1 = cos^2(|U12| t) e^{-Gamma t}` and
/// `P_2 = sin^2(|U12| t) e^{-Gamma t}`; diagonal shifts are common to both
/// atoms and only contribute a phase.
pub fn exchange_simulate(u12: Complex64, losses: &LossModel, times: &[f64]) -> Result<Trajectory> {
    ensure_finite("U12", u12.norm())?;
    if u12.norm() == 0.0 {
        return Err(Error::invalid("U12 = 0: the atoms do not exchange"));
    }
    let w = u12.norm();
    let phase = -Complex64::i() * u12.conj() / w;
    let gamma = losses.gamma_eff();
    let states = times
        .iter()
        .map(|&t| {
            let decay = (-0.5 * gamma * t).exp();
            let (s, c) = (w * t).sin_cos();
            AmplitudeState {
                amplitudes: vec![Complex64::new(c * decay, 0.0), phase * (s * decay)],
                time: t,
            }
        })
        .collect();
    Ok(Trajectory { states })
}

/// `C = gbar_c^2 / (kappa_p gamma)`.
pub fn cooperativity(gbar_c: f64, kappa_p: f64, gamma: f64) -> Result<f64> {
    for (name, v) in [("gbar_c", gbar_c), ("kappa_p", kappa_p), ("gamma", gamma)] {
        ensure_finite(name, v)?;
    }
    if kappa_p <= 0.0 || gamma <= 0.0 {
        return Err(Error::invalid("cooperativity needs kappa_p > 0 and gamma > 0"));
    }
    Ok(gbar_c * gbar_c / (kappa_p * gamma))
}

/// `C_L = lambda C_lambda / L`.
pub fn cooperativity_at_length(c_lambda: f64, length: f64, lambda: f64) -> Result<f64> {
    for (name, v) in [("C_lambda", c_lambda), ("L", length), ("lambda", lambda)] {
        ensure_finite(name, v)?;
    }
    if length <= 0.0 || lambda <= 0.0 {
        return Err(Error::invalid("lengths must be positive"));
    }
    Ok(lambda * c_lambda / length)
}

/// Collective-dissipator strength relative to the coherent exchange, `kappa / (4 Delta)`.
pub fn dissipator_ratio(kappa: f64, detuning: f64) -> Result<f64> {
    ensure_finite("kappa", kappa)?;
    ensure_finite("Delta", detuning)?;
    if detuning <= 0.0 {
        return Err(Error::invalid("dissipator ratio needs Delta > 0"));
    }
    Ok(kappa / (4.0 * detuning))
}

/// `(g_c^2 / (2 Delta), g_c^2 kappa / (8 Delta^2))`: coherent and dissipative
/// coefficients of the eliminated photon cloud.
pub fn dissipator_coefficients(g_c: f64, kappa: f64, detuning: f64) -> (f64, f64) {
    let g2 = g_c * g_c;
    (g2 / (2.0 * detuning), g2 * kappa / (8.0 * detuning * detuning))
}

/// Rates of the collective photon-loss dissipator `sum_jl D_jl sigma_ge^l rho sigma_eg^j`:
/// `D = U kappa / (4 Delta)`.
pub fn collective_dissipator(u: &CouplingMatrix, kappa: f64, detuning: f64) -> Result<DMatrix<Complex64>> {
    ensure_finite("kappa", kappa)?;
    ensure_finite("Delta", detuning)?;
    if detuning == 0.0 {
        return Err(Error::invalid("Delta must be non-zero"));
    }
    let r = kappa / (4.0 * detuning);
    Ok(u.values.map(|v| v * r))
}

/// Exchange between two atoms at `separation` with the cloud length pinned
/// to `l_ref`: the curvature is rescaled so that `L(Delta) = l_ref`, which
/// keeps `gbar_c` fixed while the bound state is solved exactly.
///
/// Returns `(error, tau, U12, Gamma_eff, theta)`.
pub fn exchange_error_at(
    band: &BandEdge,
    coupling: &AtomCoupling,
    kappa_p: f64,
    l_ref: f64,
    separation: f64,
    detuning: f64,
) -> Result<(f64, f64, f64, f64, f64)> {
    let alpha = detuning * (band.k0 * l_ref).powi(2) / band.omega_b;
    let scaled = band.with_alpha(alpha)?;
    let atom = AtomCoupling::builder(detuning, coupling.gamma)
        .g_cell(coupling.g_cell)
        .bloch_amplitude(coupling.bloch_amplitude)
        .build(&scaled)?;
    let state = effective_cavity(&scaled, &atom)?;
    let gbar = atom.gbar_c(&scaled, l_ref);
    let u12 = gbar * gbar / (2.0 * detuning) * (-separation.abs() / l_ref).exp();
    let losses = LossModel { kappa_p, gamma: coupling.gamma, theta: state.theta };
    let gamma_eff = losses.gamma_eff();
    let tau = PI / (2.0 * u12.abs());
    Ok((1.0 - (-gamma_eff * tau).exp(), tau, u12, gamma_eff, state.theta))
}

/// Minimizes the two-atom exchange error over the atomic detuning.
///
/// `coupling.detuning` fixes the reference cloud length `L(Delta)` and with
/// it `gbar_c`; the scan covers `|Delta| / gbar_c` in `[0.5, 1e6]` on a log
/// grid, refined by golden-section search around the best grid point.
/// `losses.theta` is ignored because the mixing angle follows from each
/// scanned detuning.
pub fn optimize_exchange(
    band: &BandEdge,
    coupling: &AtomCoupling,
    losses: &LossModel,
    separation: f64,
) -> Result<ExchangeResult> {
    ensure_finite("separation", separation)?;
    let l_ref = band.decay_length(coupling.detuning)?;
    let gbar = coupling.gbar_c(band, l_ref);
    let c = cooperativity(gbar, losses.kappa_p, coupling.gamma)?;
    let sign = coupling.detuning.signum();
    let at = |x: f64| {
        exchange_error_at(band, coupling, losses.kappa_p, l_ref, separation, sign * gbar * x)
    };

    let (lo, hi) = (SCAN_LO.ln(), SCAN_HI.ln());
    let n = EXCHANGE_SCAN_POINTS;
    let xs: Vec<f64> = (0..n)
        .map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp())
        .collect();
    let errors = par::map_slice(Exec::default(), &xs, |&x| at(x).map(|r| r.0))
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
    let scan: Vec<ScanPoint> = xs
        .iter()
        .zip(&errors)
        .map(|(&x, &error)| ScanPoint { detuning: sign * gbar * x, error })
        .collect();
    let best = errors
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .ok_or_else(|| Error::numerical("empty scan"))?;
    if best == 0 || best == n - 1 {
        return Err(Error::NoMinimum {
            lo: sign * gbar * SCAN_LO,
            hi: sign * gbar * SCAN_HI,
            at: scan[best].detuning,
        });
    }

    let f = |u: f64| at(u.exp()).map(|r| r.0).unwrap_or(f64::INFINITY);
    let x_opt = golden_section(f, xs[best - 1].ln(), xs[best + 1].ln(), 1e-10).exp();
    let (error, tau, u12, gamma_eff, theta) = at(x_opt)?;
    let bound = 2.0 * PI / c.sqrt();
    if error > bound {
        return Err(Error::numerical(format!(
            "optimized exchange error {error:.4e} exceeds 2 pi / sqrt(C) = {bound:.4e}"
        )));
    }
    Ok(ExchangeResult {
        tau,
        error,
        optimal_detuning: sign * gbar * x_opt,
        u12,
        gamma_eff,
        theta,
        cooperativity: c,
        scan,
    })
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}
