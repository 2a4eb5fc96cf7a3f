//! Disorder-limited localization near a band edge of a dielectric stack.
//!
//! Two routes: the analytic weak-disorder result through the Kronig-Penney
//! mapping, `xi / a = 2 Gamma(1/6) / (6^{1/3} sqrt(pi)) sigma^{-2/3}`, and a
//! Monte-Carlo transfer-matrix estimate of the Lyapunov exponent.

use std::f64::consts::PI;
use std::fmt;

use log::{info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{ensure_finite, Error, Result};
use crate::par::{self, Exec};
use crate::special::gamma;

/// Layers between renormalizations of the propagated field.
pub const RENORMALIZE_EVERY: usize = 32;
/// Disorder draws are clipped at this many standard deviations.
pub const CLIP_SIGMAS: f64 = 4.0;
/// Above this `epsilon` the weak-disorder expansion is flagged.
pub const EPSILON_WARNING: f64 = 0.05;

/// Estimator convention recorded with every Monte-Carlo result.
pub const CONVENTION: &str = "amplitude: xi = n_cells / <ln |psi_N| - ln |psi_0|>";

/// Alternating high/low-index stack, two layers per unit cell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DielectricStack {
    /// Index ratio `n_h / n_l`.
    pub r: f64,
    /// Phase length of each layer at the band edge (rad).
    pub phi_b: f64,
    /// Standard deviation of the fractional phase disorder.
    pub epsilon: f64,
    pub n_cells: usize,
    pub seed: u64,
}

impl DielectricStack {
    pub fn new(r: f64, phi_b: f64, epsilon: f64, n_cells: usize, seed: u64) -> Result<Self> {
        let s = DielectricStack { r, phi_b, epsilon, n_cells, seed };
        s.validate()?;
        Ok(s)
    }

    /// Quarter-wave stack.
    pub fn quarter_wave(r: f64, epsilon: f64, n_cells: usize, seed: u64) -> Result<Self> {
        Self::new(r, PI / 2.0, epsilon, n_cells, seed)
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        DielectricStack { epsilon, ..*self }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("r", self.r)?;
        ensure_finite("phi_b", self.phi_b)?;
        ensure_finite("epsilon", self.epsilon)?;
        if self.r <= 0.0 {
            return Err(Error::invalid("index ratio r must be positive"));
        }
        if !(self.phi_b > 0.0 && self.phi_b < PI) {
            return Err(Error::invalid("phi_b must lie in (0, pi)"));
        }
        if self.epsilon < 0.0 {
            return Err(Error::invalid("epsilon must be non-negative"));
        }
        if self.n_cells == 0 {
            return Err(Error::invalid("n_cells must be positive"));
        }
        if self.epsilon > EPSILON_WARNING {
            warn!("epsilon = {} is outside the weak-disorder regime", self.epsilon);
        }
        Ok(())
    }
}

/// A localization length that may be infinite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Xi {
    Finite(f64),
    Unbounded,
}

impl Xi {
    pub fn value(&self) -> Option<f64> {
        match self {
            Xi::Finite(v) => Some(*v),
            Xi::Unbounded => None,
        }
    }
}

impl fmt::Display for Xi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Xi::Finite(v) => write!(f, "{v}"),
            Xi::Unbounded => f.write_str("unbounded"),
        }
    }
}

impl Serialize for Xi {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Xi::Finite(v) => s.serialize_f64(*v),
            Xi::Unbounded => s.serialize_str("unbounded"),
        }
    }
}

impl<'de> Deserialize<'de> for Xi {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Xi::Finite(v)),
            Raw::Text(t) if t == "unbounded" => Ok(Xi::Unbounded),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("expected a number or \"unbounded\", got {t:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizationResult {
    pub epsilon: f64,
    pub sigma: f64,
    /// Units of the lattice constant.
    pub xi_analytic: Xi,
    pub xi_mc: Xi,
    pub xi_mc_stderr: f64,
    pub n_cells: usize,
    pub n_trials: usize,
    /// Common layer phase at the clean band edge used for the transfer matrices.
    pub edge_phase: f64,
    pub convention: String,
}

/// Coefficients of the linear map from layer disorder onto the
/// Kronig-Penney delta strengths `beta_n` and separations `alpha_n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KpMap {
    /// `beta_n = beta_coeff * epsilon_h`.
    pub beta_coeff: f64,
    /// `alpha_n = alpha_coeff_l * epsilon_l + alpha_coeff_h * epsilon_h`.
    pub alpha_coeff_l: f64,
    pub alpha_coeff_h: f64,
    /// Principal branch of `sin^2 phi_KP = 4 r / (1 + r)^2`, in `(0, pi/2]`.
    pub phi_kp: f64,
    pub sin2_phi_kp: f64,
}

/// Matches the stack onto a Kronig-Penney crystal with equal band edges.
pub fn kp_map(stack: &DielectricStack) -> Result<KpMap> {
    stack.validate()?;
    let r = stack.r;
    let sin2 = 4.0 * r / ((1.0 + r) * (1.0 + r));
    if r == 1.0 {
        warn!("r = 1: sin^2 phi_KP = 1 and the stack has no index contrast");
    }
    let phi_kp = sin2.min(1.0).sqrt().asin();
    // Index ratios only enter through r; take n_l = 1.
    let (nh, nl) = (r, 1.0);
    Ok(KpMap {
        beta_coeff: stack.phi_b * (nh - nl) / (2.0 * (nh * nl).sqrt()),
        alpha_coeff_l: stack.phi_b / phi_kp,
        alpha_coeff_h: stack.phi_b * nh * nl / (phi_kp * (nh * nh - nh * nl + nl * nl)),
        phi_kp,
        sin2_phi_kp: sin2,
    })
}

/// `sigma = 2 phi_b eps sqrt(2 (r^2+1)(r-1)^2 / (r (r+1)^2) + r (r-1)^2 / (r^2-r+1)^2)`.
pub fn sigma_of(stack: &DielectricStack) -> f64 {
    let r = stack.r;
    let d2 = (r - 1.0) * (r - 1.0);
    let bracket = 2.0 * (r * r + 1.0) * d2 / (r * (r + 1.0) * (r + 1.0))
        + r * d2 / ((r * r - r + 1.0) * (r * r - r + 1.0));
    2.0 * stack.phi_b * bracket.sqrt() * stack.epsilon
}

/// `2 Gamma(1/6) / (6^{1/3} sqrt(pi))`.
pub fn xi_prefactor() -> f64 {
    2.0 * gamma(1.0 / 6.0) / (6f64.cbrt() * PI.sqrt())
}

/// Band-edge localization length in units of `a`.
pub fn xi_analytic(sigma: f64) -> Result<Xi> {
    ensure_finite("sigma", sigma)?;
    if sigma < 0.0 {
        return Err(Error::invalid("sigma must be non-negative"));
    }
    if sigma == 0.0 {
        return Ok(Xi::Unbounded);
    }
    Ok(Xi::Finite(xi_prefactor() * sigma.powf(-2.0 / 3.0)))
}

/// Characteristic matrix of one layer with index `n` and phase `phi`,
/// acting on the tangential fields `(E, H)`.
#[inline]
pub fn layer_matrix(n: f64, phi: f64) -> [[f64; 2]; 2] {
    let (s, c) = phi.sin_cos();
    [[c, s / n], [-n * s, c]]
}

fn mul(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

/// Half trace of the clean unit-cell matrix at common layer phase `phi`;
/// `|h| <= 1` inside a band.
pub fn half_trace(r: f64, phi: f64) -> f64 {
    let m = mul(layer_matrix(1.0, phi), layer_matrix(r, phi));
    0.5 * (m[0][0] + m[1][1])
}

/// Layer phase at the band edge nearest `phi_b` on the low-frequency side
/// of the gap (searching downward from a gap, upward from a band).
pub fn band_edge_phase(r: f64, phi_b: f64) -> Result<f64> {
    let outside = |phi: f64| half_trace(r, phi).abs() > 1.0;
    let start_in_gap = outside(phi_b);
    let step = phi_b / 2000.0;
    let dir = if start_in_gap { -1.0 } else { 1.0 };
    let mut prev = phi_b;
    let mut next = phi_b;
    loop {
        next += dir * step;
        if next <= 0.0 || next >= 2.0 * PI {
            return Err(Error::numerical(format!("no band edge near phi_b = {phi_b} for r = {r}")));
        }
        if outside(next) != start_in_gap {
            break;
        }
        prev = next;
    }
    // Bisect keeping `band` inside the band.
    let (mut band, mut gap) = if start_in_gap { (next, prev) } else { (prev, next) };
    for _ in 0..200 {
        let mid = 0.5 * (band + gap);
        if mid == band || mid == gap {
            break;
        }
        if outside(mid) {
            gap = mid;
        } else {
            band = mid;
        }
    }
    Ok(band)
}

fn trial_log_growth(stack: &DielectricStack, phi_e: f64, trial: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(stack.seed);
    rng.set_stream(trial);
    let eps = stack.epsilon;
    let mut draw = || -> f64 {
        let x: f64 = StandardNormal.sample(&mut rng);
        eps * x.clamp(-CLIP_SIGMAS, CLIP_SIGMAS)
    };
    let mut v = [1.0_f64, 0.0];
    let mut log_growth = 0.0;
    let mut layers = 0usize;
    for _ in 0..stack.n_cells {
        for n in [stack.r, 1.0] {
            let m = layer_matrix(n, phi_e * (1.0 + draw()));
            v = [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]];
            layers += 1;
            if layers.is_multiple_of(RENORMALIZE_EVERY) {
                let norm = v[0].hypot(v[1]);
                if !norm.is_finite() || norm == 0.0 {
                    return Err(Error::numerical("field overflow despite renormalization"));
                }
                log_growth += norm.ln();
                v = [v[0] / norm, v[1] / norm];
            }
        }
    }
    let norm = v[0].hypot(v[1]);
    if !norm.is_finite() || norm == 0.0 {
        return Err(Error::numerical("field overflow despite renormalization"));
    }
    Ok(log_growth + norm.ln())
}

/// Monte-Carlo localization length from `n_trials` independent stacks.
pub fn lyapunov_mc(stack: &DielectricStack, n_trials: usize) -> Result<LocalizationResult> {
    lyapunov_mc_with(stack, n_trials, Exec::default())
}

pub fn lyapunov_mc_with(stack: &DielectricStack, n_trials: usize, exec: Exec) -> Result<LocalizationResult> {
    stack.validate()?;
    if n_trials < 2 {
        return Err(Error::invalid("need at least two trials for an error estimate"));
    }
    let phi_e = band_edge_phase(stack.r, stack.phi_b)?;
    if (phi_e - stack.phi_b).abs() > 1e-12 {
        info!("clean band edge at layer phase {phi_e:.6} (phi_b = {:.6})", stack.phi_b);
    }
    let growth = par::map_indexed(exec, n_trials, |t| trial_log_growth(stack, phi_e, t as u64))
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
    let cells = stack.n_cells as f64;
    let rates: Vec<f64> = growth.iter().map(|g| g / cells).collect();
    let nt = n_trials as f64;
    let mean = rates.iter().sum::<f64>() / nt;
    let var = rates.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (nt - 1.0);
    let stderr_rate = (var / nt).sqrt();

    let sigma = sigma_of(stack);
    let unbounded = stack.epsilon == 0.0 || mean * cells <= 2.0 * cells.ln();
    let (xi_mc, xi_mc_stderr) = if unbounded {
        (Xi::Unbounded, 0.0)
    } else {
        (Xi::Finite(1.0 / mean), stderr_rate / (mean * mean))
    };
    Ok(LocalizationResult {
        epsilon: stack.epsilon,
        sigma,
        xi_analytic: xi_analytic(sigma)?,
        xi_mc,
        xi_mc_stderr,
        n_cells: stack.n_cells,
        n_trials,
        edge_phase: phi_e,
        convention: CONVENTION.to_string(),
    })
}

/// [`lyapunov_mc`] over a list of disorder strengths, in input order.
pub fn disorder_sweep(stack: &DielectricStack, epsilons: &[f64], n_trials: usize) -> Result<Vec<LocalizationResult>> {
    epsilons
        .iter()
        .map(|&e| lyapunov_mc(&stack.with_epsilon(e), n_trials))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn stack(eps: f64) -> DielectricStack {
        DielectricStack::quarter_wave(2.0, eps, 2000, 7).unwrap()
    }

    #[test]
    fn kp_map_examples() {
        let m = kp_map(&stack(1e-3)).unwrap();
        assert!((m.sin2_phi_kp - 8.0 / 9.0).abs() < 1e-15);
        assert!((m.beta_coeff - 0.5554).abs() < 1e-4);
        let flat = kp_map(&DielectricStack::quarter_wave(1.0, 1e-3, 10, 0).unwrap()).unwrap();
        assert_eq!(flat.beta_coeff, 0.0);
        assert!((flat.phi_kp - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn sigma_examples() {
        assert_eq!(sigma_of(&DielectricStack::quarter_wave(1.0, 0.1, 10, 0).unwrap()), 0.0);
        let s = sigma_of(&stack(1.0));
        assert!((s - PI * (7.0f64 / 9.0).sqrt()).abs() < 1e-14);
        assert!((s - 2.7708).abs() < 3e-4, "{s}");
        assert!((sigma_of(&stack(1e-3)) - 1e-3 * s).abs() < 1e-17);
    }

    #[test]
    fn xi_examples() {
        assert!((xi_prefactor() - 3.4566).abs() < 1e-4);
        let xi = xi_analytic(sigma_of(&stack(1e-3))).unwrap().value().unwrap();
        assert!((xi - 175.2).abs() < 0.1, "{xi}");
        assert_eq!(xi_analytic(0.0).unwrap(), Xi::Unbounded);
        assert!(xi_analytic(-1.0).is_err());
        let a = xi_analytic(1e-3).unwrap().value().unwrap();
        let b = xi_analytic(8e-3).unwrap().value().unwrap();
        assert!((b / a - 0.25).abs() < 1e-14);
    }

    #[test]
    fn edge_of_quarter_wave_stack() {
        let phi = band_edge_phase(2.0, PI / 2.0).unwrap();
        let want = (8.0f64 / 9.0).sqrt().asin();
        assert!((phi - want).abs() < 1e-12, "{phi} vs {want}");
        let from_band = band_edge_phase(2.0, 1.0).unwrap();
        assert!((from_band - want).abs() < 1e-12);
    }

    #[test]
    fn layer_matrices_are_unimodular() {
        for (n, phi) in [(1.0, 0.3), (2.0, 1.231), (3.5, 2.9), (1.45, 7.0)] {
            let m = layer_matrix(n, phi);
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            assert!((det - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn clean_stack_is_unbounded() {
        let r = lyapunov_mc(&stack(0.0), 4).unwrap();
        assert_eq!(r.xi_mc, Xi::Unbounded);
        assert_eq!(r.xi_analytic, Xi::Unbounded);
        let json = serde_json::to_string(&r.xi_mc).unwrap();
        assert_eq!(json, "\"unbounded\"");
    }

    #[test]
    fn deterministic_across_workers() {
        let s = stack(3e-3);
        let a = lyapunov_mc_with(&s, 16, Exec::Sequential).unwrap();
        let b = lyapunov_mc_with(&s, 16, Exec::Parallel).unwrap();
        assert_eq!(a, b);
        let other = lyapunov_mc_with(&DielectricStack { seed: 8, ..s }, 16, Exec::Parallel).unwrap();
        assert_ne!(a.xi_mc, other.xi_mc);
    }

    #[test]
    fn strong_disorder_localizes() {
        let r = lyapunov_mc(&stack(1e-2), 32).unwrap();
        let xi = r.xi_mc.value().unwrap();
        assert!(xi > 0.0 && xi < 2000.0);
        assert!(r.xi_mc_stderr > 0.0);
        assert_eq!(r.convention, CONVENTION);
    }

    #[test]
    fn rejects_bad_stacks() {
        assert!(DielectricStack::new(0.0, 1.0, 0.0, 10, 0).is_err());
        assert!(DielectricStack::new(2.0, PI, 0.0, 10, 0).is_err());
        assert!(DielectricStack::new(2.0, 1.0, -1e-3, 10, 0).is_err());
        assert!(DielectricStack::new(2.0, 1.0, 1e-3, 0, 0).is_err());
        assert!(lyapunov_mc(&stack(1e-3), 1).is_err());
    }

    proptest! {
        #[test]
        fn sigma_is_linear(r in 0.2f64..5.0, phi in 0.1f64..3.0, eps in 0.0f64..0.01, k in 0.0f64..10.0) {
            let s = DielectricStack { r, phi_b: phi, epsilon: eps, n_cells: 1, seed: 0 };
            let scaled = sigma_of(&s.with_epsilon(k * eps));
            prop_assert!((scaled - k * sigma_of(&s)).abs() <= 1e-14 * scaled.abs().max(1e-300));
        }

        #[test]
        fn xi_slope_is_two_thirds(s1 in 1e-5f64..1e-1, ratio in 1.5f64..100.0) {
            let a = xi_analytic(s1).unwrap().value().unwrap();
            let b = xi_analytic(s1 * ratio).unwrap().value().unwrap();
            let slope = (b / a).ln() / ratio.ln();
            prop_assert!((slope + 2.0 / 3.0).abs() < 1e-12);
        }
    }
}
