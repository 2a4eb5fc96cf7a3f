//! Single-atom bound state at a quadratic band edge and its effective-cavity
//! description.
//!
//! Near the edge the guided-mode dispersion is
//! `omega_k = omega_b * (1 - alpha * (k - k0)^2 / k0^2)`. A positive `alpha`
//! describes the top of a band (a *lower* band edge, gap above); a negative
//! `alpha` the bottom of a band (an *upper* edge, gap below). Upper-edge
//! quantities are obtained by mirroring all detunings, so `delta` and `Delta`
//! carry the sign of `alpha` throughout.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::par::{self, Exec};

/// `sqrt(delta / (alpha omega_b))` below this counts as inside the
/// effective-mass regime.
pub const VALIDITY_THRESHOLD: f64 = 0.1;

/// Relative mismatch tolerated between a user supplied `beta` and the one
/// implied by `g_cell`.
pub const COUPLING_CONSISTENCY_TOL: f64 = 1e-6;

/// Which side of the gap the band edge bounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeKind {
    /// Band below, gap above (`alpha > 0`).
    Lower,
    /// Band above, gap below (`alpha < 0`).
    Upper,
}

impl EdgeKind {
    /// +1 for a lower edge, -1 for an upper edge.
    pub fn sign(self) -> f64 {
        match self {
            EdgeKind::Lower => 1.0,
            EdgeKind::Upper => -1.0,
        }
    }
}

/// Quadratic expansion of a band around its edge.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandEdge {
    /// Band-edge angular frequency (rad/s).
    pub omega_b: f64,
    /// Dimensionless curvature; its sign selects the edge kind.
    pub alpha: f64,
    /// Band-edge wavevector (rad/m).
    pub k0: f64,
    /// Lattice constant (m).
    pub a: f64,
}

impl BandEdge {
    pub fn new(omega_b: f64, alpha: f64, k0: f64, a: f64) -> Result<Self> {
        for (name, v) in [("omega_b", omega_b), ("alpha", alpha), ("k0", k0), ("a", a)] {
            ensure_finite(name, v)?;
        }
        if omega_b <= 0.0 {
            return Err(Error::invalid(format!("omega_b must be positive, got {omega_b}")));
        }
        if alpha == 0.0 {
            return Err(Error::invalid("alpha must be non-zero"));
        }
        if k0 <= 0.0 {
            return Err(Error::invalid(format!("k0 must be positive, got {k0}")));
        }
        if a <= 0.0 {
            return Err(Error::invalid(format!("lattice constant must be positive, got {a}")));
        }
        Ok(BandEdge { omega_b, alpha, k0, a })
    }

    /// Edge at the Brillouin-zone boundary, `k0 = pi / a`.
    pub fn zone_boundary(omega_b: f64, alpha: f64, a: f64) -> Result<Self> {
        Self::new(omega_b, alpha, PI / a, a)
    }

    pub fn kind(&self) -> EdgeKind {
        if self.alpha > 0.0 {
            EdgeKind::Lower
        } else {
            EdgeKind::Upper
        }
    }

    /// Same band with a different curvature.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(self.omega_b, alpha, self.k0, self.a)
    }

    /// `alpha * omega_b / k0^2`, the coefficient of `(k - k0)^2`.
    pub fn curvature_coefficient(&self) -> f64 {
        self.alpha * self.omega_b / (self.k0 * self.k0)
    }

    /// Quadratic dispersion `omega_k`.
    pub fn frequency(&self, k: f64) -> f64 {
        let q = (k - self.k0) / self.k0;
        self.omega_b * (1.0 - self.alpha * q * q)
    }

    /// True when a detuning from `omega_b` lies in the gap of this edge.
    pub fn in_gap(&self, detuning: f64) -> bool {
        detuning * self.alpha > 0.0
    }

    /// Evanescent decay length at an in-gap detuning from the edge.
    pub fn decay_length(&self, detuning: f64) -> Result<f64> {
        decay_length(self, detuning)
    }
}

/// Coupling of one atom to the band.
///
/// `beta` and `g_cell` are two parametrizations of the same dipole coupling;
/// build through [`AtomCoupling::builder`] so they stay consistent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomCoupling {
    /// Coupling scale `beta` (rad/s).
    pub beta: f64,
    /// Atomic detuning `Delta = omega_a - omega_b` (rad/s).
    pub detuning: f64,
    /// Free-space emission rate (rad/s).
    pub gamma: f64,
    /// Coupling of a band-edge mode normalized to one unit cell (rad/s).
    pub g_cell: f64,
    /// `|u_k0|` at the atom.
    pub bloch_amplitude: f64,
}

/// Builder for [`AtomCoupling`]; supply `beta`, `g_cell`, or both.
#[derive(Clone, Copy, Debug)]
pub struct CouplingBuilder {
    detuning: f64,
    gamma: f64,
    beta: Option<f64>,
    g_cell: Option<f64>,
    bloch_amplitude: f64,
}

impl CouplingBuilder {
    pub fn beta(mut self, beta: f64) -> Self {
        self.beta = Some(beta);
        self
    }

    pub fn g_cell(mut self, g_cell: f64) -> Self {
        self.g_cell = Some(g_cell);
        self
    }

    pub fn bloch_amplitude(mut self, u: f64) -> Self {
        self.bloch_amplitude = u;
        self
    }

    pub fn build(self, band: &BandEdge) -> Result<AtomCoupling> {
        ensure_finite("Delta", self.detuning)?;
        ensure_finite("gamma", self.gamma)?;
        ensure_finite("bloch amplitude", self.bloch_amplitude)?;
        if self.gamma < 0.0 {
            return Err(Error::invalid(format!("gamma must be >= 0, got {}", self.gamma)));
        }
        if self.bloch_amplitude <= 0.0 {
            return Err(Error::invalid("bloch amplitude must be positive"));
        }
        let u = self.bloch_amplitude;
        let (beta, g_cell) = match (self.beta, self.g_cell) {
            (None, None) => return Err(Error::invalid("one of beta or g_cell is required")),
            (Some(b), None) => {
                check_beta(b)?;
                (b, g_cell_from_beta(band, b, u))
            }
            (None, Some(g)) => {
                check_g_cell(g)?;
                (beta_from_g_cell(band, g, u), g)
            }
            (Some(b), Some(g)) => {
                check_beta(b)?;
                check_g_cell(g)?;
                let implied = beta_from_g_cell(band, g, u);
                let mismatch = ((b - implied) / implied).abs();
                if mismatch > COUPLING_CONSISTENCY_TOL {
                    return Err(Error::invalid(format!(
                        "beta = {b:.9e} disagrees with g_cell (implies {implied:.9e}); relative mismatch {mismatch:.2e}"
                    )));
                }
                (b, g)
            }
        };
        Ok(AtomCoupling {
            beta,
            detuning: self.detuning,
            gamma: self.gamma,
            g_cell,
            bloch_amplitude: u,
        })
    }
}

fn check_beta(b: f64) -> Result<()> {
    ensure_finite("beta", b)?;
    if b <= 0.0 {
        return Err(Error::invalid(format!("beta must be positive, got {b}")));
    }
    Ok(())
}

fn check_g_cell(g: f64) -> Result<()> {
    ensure_finite("g_cell", g)?;
    if g <= 0.0 {
        return Err(Error::invalid(format!("g_cell must be positive to derive beta, got {g}")));
    }
    Ok(())
}

impl AtomCoupling {
    pub fn builder(detuning: f64, gamma: f64) -> CouplingBuilder {
        CouplingBuilder {
            detuning,
            gamma,
            beta: None,
            g_cell: None,
            bloch_amplitude: 1.0,
        }
    }

    /// Same atom at another detuning.
    pub fn with_detuning(&self, detuning: f64) -> Self {
        AtomCoupling { detuning, ..*self }
    }

    /// Continuum coupling `g` (units rad/s * sqrt(m)).
    pub fn g(&self, band: &BandEdge) -> f64 {
        self.g_cell * (band.a / (2.0 * PI)).sqrt()
    }

    /// Effective cavity coupling for a photon cloud of length `l`.
    pub fn gbar_c(&self, band: &BandEdge, l: f64) -> f64 {
        self.g_cell * (band.a / l).sqrt()
    }
}

/// `beta = (pi g^2 |u|^2 k0 / sqrt(4 |alpha| omega_b))^(2/3)` with
/// `g = g_cell sqrt(a / 2pi)`.
pub fn beta_from_g_cell(band: &BandEdge, g_cell: f64, bloch_amplitude: f64) -> f64 {
    let g2 = g_cell * g_cell * band.a / (2.0 * PI);
    let x = PI * g2 * bloch_amplitude.powi(2) * band.k0
        / (4.0 * band.alpha.abs() * band.omega_b).sqrt();
    x.powf(2.0 / 3.0)
}

/// Inverse of [`beta_from_g_cell`].
pub fn g_cell_from_beta(band: &BandEdge, beta: f64, bloch_amplitude: f64) -> f64 {
    let g2 = beta.powf(1.5) * (4.0 * band.alpha.abs() * band.omega_b).sqrt()
        / (PI * bloch_amplitude.powi(2) * band.k0);
    (g2 * 2.0 * PI / band.a).sqrt()
}

/// Bound-state record: the atom dressed by its photon cloud, seen as an
/// effective cavity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundState {
    /// `omega - omega_b`; lies in the gap, so it carries the sign of `alpha`.
    pub delta: f64,
    /// Photon-cloud decay length (m).
    pub decay_length: f64,
    /// Mixing angle; `cos^2` is the atomic population.
    pub theta: f64,
    pub cos_theta: f64,
    pub sin_theta: f64,
    /// Effective atom-cavity coupling (rad/s).
    pub gbar_c: f64,
    /// Effective cavity frequency `omega_b - delta`.
    pub omega_c_eff: f64,
    /// Effective atom-cavity detuning `Delta + delta`.
    pub detuning_c_eff: f64,
    /// `sqrt(delta / (alpha omega_b))`; small means the quadratic expansion holds.
    pub validity: f64,
}

impl BoundState {
    /// Atomic excited-state population.
    pub fn excited_population(&self) -> f64 {
        self.cos_theta * self.cos_theta
    }

    /// Photonic population.
    pub fn photon_population(&self) -> f64 {
        self.sin_theta * self.sin_theta
    }

    pub fn is_valid(&self) -> bool {
        self.validity < VALIDITY_THRESHOLD
    }
}

/// Root of `x^3 - d x - 2 = 0` with `x = sqrt(delta / beta)` and
/// `d = Delta / beta`, from the trigonometric/hyperbolic form of the
/// depressed cubic. Returns `delta / beta`.
pub fn scaled_root_explicit(d: f64) -> f64 {
    let x = if d > 0.0 {
        let m = 2.0 * (d / 3.0).sqrt();
        let c = (27.0 / (d * d * d)).sqrt();
        if c <= 1.0 {
            m * (c.acos() / 3.0).cos()
        } else {
            m * (c.acosh() / 3.0).cosh()
        }
    } else if d < 0.0 {
        let m = 2.0 * (-d / 3.0).sqrt();
        let c = (-27.0 / (d * d * d)).sqrt();
        m * (c.asinh() / 3.0).sinh()
    } else {
        2f64.cbrt()
    };
    x * x
}

/// Same root by bisection on `x^3 - d x - 2` over a guaranteed bracket.
pub fn scaled_root_bracketed(d: f64) -> f64 {
    let f = |x: f64| x * (x * x - d) - 2.0;
    let mut lo = 0.0_f64;
    let mut hi = d.max(0.0).sqrt() + 2f64.cbrt();
    debug_assert!(f(hi) >= 0.0);
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x = if f(hi).abs() < f(lo).abs() { hi } else { lo };
    x * x
}

/// Backward error of a lower-edge root: with `x = sqrt(delta / beta)` and
/// `d = Delta / beta`, `|x^3 - d x - 2| / (x^3 + |d| x + 2)`.
pub fn root_residual(delta: f64, detuning: f64, beta: f64) -> f64 {
    let x = (delta / beta).sqrt();
    let d = detuning / beta;
    (x * x * x - d * x - 2.0).abs() / (x * x * x + d.abs() * x + 2.0)
}

/// Bound-state detuning `delta = omega - omega_b` for one atom.
///
/// For a lower edge this is the positive root of
/// `(delta - Delta) sqrt(delta) = 2 beta^(3/2)`. For an upper edge the root
/// is mirrored: `delta(Delta) = -root(-Delta)`.
pub fn solve_delta(band: &BandEdge, coupling: &AtomCoupling) -> Result<f64> {
    ensure_finite("Delta", coupling.detuning)?;
    ensure_finite("beta", coupling.beta)?;
    if coupling.beta <= 0.0 {
        return Err(Error::invalid("beta must be positive"));
    }
    let sign = band.kind().sign();
    let beta = coupling.beta;
    let d = sign * coupling.detuning / beta;
    let explicit = scaled_root_explicit(d);
    let numeric = scaled_root_bracketed(d);
    let gap = ((explicit - numeric) / numeric).abs();
    if !explicit.is_finite() || gap > 1e-10 {
        return Err(Error::numerical(format!(
            "explicit ({explicit:e}) and bracketed ({numeric:e}) roots disagree at Delta/beta = {d:e}"
        )));
    }
    Ok(sign * beta * explicit)
}

/// `(cos theta, sin theta)` of the dressed state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MixingAngles {
    pub cos_theta: f64,
    pub sin_theta: f64,
}

impl MixingAngles {
    pub fn theta(&self) -> f64 {
        self.sin_theta.atan2(self.cos_theta)
    }
}

pub fn mixing_angles(delta: f64, beta: f64) -> Result<MixingAngles> {
    ensure_finite("delta", delta)?;
    ensure_finite("beta", beta)?;
    if delta == 0.0 || beta <= 0.0 {
        return Err(Error::invalid("mixing angles need delta != 0 and beta > 0"));
    }
    let r = (beta / delta.abs()).powf(1.5);
    Ok(MixingAngles {
        cos_theta: (1.0 + r).recip().sqrt(),
        sin_theta: (1.0 + r.recip()).recip().sqrt(),
    })
}

/// `L = sqrt(alpha omega_b / delta) / k0`.
pub fn decay_length(band: &BandEdge, delta: f64) -> Result<f64> {
    ensure_finite("delta", delta)?;
    let radicand = band.alpha * band.omega_b / delta;
    if !radicand.is_finite() || radicand <= 0.0 {
        return Err(Error::invalid(format!(
            "detuning {delta:e} is not inside the gap of an edge with alpha = {}",
            band.alpha
        )));
    }
    Ok(radicand.sqrt() / band.k0)
}

/// Solves the bound state and maps it onto an effective cavity.
pub fn effective_cavity(band: &BandEdge, coupling: &AtomCoupling) -> Result<BoundState> {
    let delta = solve_delta(band, coupling)?;
    let l = decay_length(band, delta)?;
    let angles = mixing_angles(delta, coupling.beta)?;
    Ok(BoundState {
        delta,
        decay_length: l,
        theta: angles.theta(),
        cos_theta: angles.cos_theta,
        sin_theta: angles.sin_theta,
        gbar_c: coupling.gbar_c(band, l),
        omega_c_eff: band.omega_b - delta,
        detuning_c_eff: coupling.detuning + delta,
        validity: (delta / (band.alpha * band.omega_b)).sqrt(),
    })
}

/// [`effective_cavity`] over a list of atomic detunings, in input order.
pub fn sweep_detuning(
    band: &BandEdge,
    coupling: &AtomCoupling,
    detunings: &[f64],
    exec: Exec,
) -> Result<Vec<BoundState>> {
    par::map_slice(exec, detunings, |&d| effective_cavity(band, &coupling.with_detuning(d)))
        .into_iter()
        .collect()
}

/// Bloch factor `E_k0(z)` of the band-edge mode.
pub trait BlochFunction {
    fn value(&self, z: f64) -> Complex64;
}

impl<F: Fn(f64) -> Complex64> BlochFunction for F {
    fn value(&self, z: f64) -> Complex64 {
        self(z)
    }
}

/// Standing wave `cos(k0 z)`: unit modulus at lattice sites with sign
/// `(-1)^(z/a)` when `k0 = pi / a`.
#[derive(Clone, Copy, Debug)]
pub struct StandingWave {
    pub k0: f64,
}

impl BlochFunction for StandingWave {
    fn value(&self, z: f64) -> Complex64 {
        Complex64::new((self.k0 * z).cos(), 0.0)
    }
}

/// Photonic mode function `sqrt(2 pi / L) exp(-|z| / L) E_k0(z)` of the cloud
/// around an atom at the origin.
pub fn photon_mode_profile(state: &BoundState, bloch: &impl BlochFunction, z: f64) -> Complex64 {
    let l = state.decay_length;
    bloch.value(z) * ((2.0 * PI / l).sqrt() * (-z.abs() / l).exp())
}

/// Normalized photonic weight `|c_k|^2`: a squared Lorentzian in `k` centered
/// on `k0` whose amplitude half-width is `sqrt(delta / (alpha omega_b)) k0`.
/// Integrates to one over the real line.
pub fn mode_weights(state: &BoundState, band: &BandEdge, k: f64) -> f64 {
    let d = state.delta.abs();
    let c = band.curvature_coefficient().abs();
    let q = k - band.k0;
    let denom = d + c * q * q;
    2.0 * d.powf(1.5) * c.sqrt() / PI / (denom * denom)
}
