use std::f64::consts::PI;

use log::warn;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{fill_hermitian, CouplingMatrix, MatrixKind};
use crate::band_model::{AtomCoupling, BandEdge, BlochFunction, StandingWave};
use crate::error::{Error, Result};
use crate::par::Exec;
use crate::special::bessel_k0;

/// Atoms along a 1D crystal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomArray {
    /// Positions along the crystal axis (m, or units of `a`).
    pub positions: Vec<f64>,
    /// `E_k0(z_j)` at each atom.
    pub bloch_values: Vec<Complex64>,
    /// Free-space linewidth used to normalize reported rates (rad/s).
    pub gamma: f64,
}

impl AtomArray {
    pub fn new(positions: Vec<f64>, bloch_values: Vec<Complex64>, gamma: f64) -> Result<Self> {
        if positions.len() != bloch_values.len() {
            return Err(Error::invalid(format!(
                "{} positions but {} Bloch values",
                positions.len(),
                bloch_values.len()
            )));
        }
        if positions.iter().any(|z| !z.is_finite()) {
            return Err(Error::invalid("atom positions must be finite"));
        }
        if bloch_values.iter().any(|e| !e.re.is_finite() || !e.im.is_finite()) {
            return Err(Error::invalid("Bloch values must be finite"));
        }
        if gamma.is_nan() || gamma < 0.0 {
            return Err(Error::invalid("gamma must be >= 0"));
        }
        Ok(AtomArray { positions, bloch_values, gamma })
    }

    /// Bloch values sampled from `bloch` at each position.
    pub fn sampled(positions: Vec<f64>, bloch: &impl BlochFunction, gamma: f64) -> Result<Self> {
        let values = positions.iter().map(|&z| bloch.value(z)).collect();
        Self::new(positions, values, gamma)
    }

    /// `n` atoms on lattice sites `0, spacing, 2 spacing, ...` (multiples of
    /// `band.a`) with the standing-wave Bloch factor.
    pub fn chain(band: &BandEdge, n: usize, spacing_cells: usize, gamma: f64) -> Result<Self> {
        let positions = (0..n).map(|j| (j * spacing_cells) as f64 * band.a).collect();
        Self::sampled(positions, &StandingWave { k0: band.k0 }, gamma)
    }

    /// Atoms with unit Bloch factor, i.e. `f = exp(-|z_j - z_l| / L)`.
    pub fn flat(positions: Vec<f64>, gamma: f64) -> Result<Self> {
        let values = vec![Complex64::new(1.0, 0.0); positions.len()];
        Self::new(positions, values, gamma)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Atoms on a 2D crystal surface.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomArray2d {
    pub positions: Vec<[f64; 2]>,
    pub bloch_values: Vec<Complex64>,
    pub gamma: f64,
}

impl AtomArray2d {
    pub fn new(positions: Vec<[f64; 2]>, bloch_values: Vec<Complex64>, gamma: f64) -> Result<Self> {
        if positions.len() != bloch_values.len() {
            return Err(Error::invalid("positions and Bloch values differ in length"));
        }
        if positions.iter().flatten().any(|z| !z.is_finite()) {
            return Err(Error::invalid("atom positions must be finite"));
        }
        if bloch_values.iter().any(|e| !e.re.is_finite() || !e.im.is_finite()) {
            return Err(Error::invalid("Bloch values must be finite"));
        }
        Ok(AtomArray2d { positions, bloch_values, gamma })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Spatial factor `f(z_j, z_l) = exp(-|z_j - z_l| / L) E_j E_l^*`.
#[inline]
pub fn exponential_factor(zj: f64, zl: f64, l: f64, ej: Complex64, el: Complex64) -> Complex64 {
    ej * el.conj() * (-(zj - zl).abs() / l).exp()
}

/// 2D spatial factor `(2 / pi) K0(r / L)` for unit Bloch factors.
#[inline]
pub fn two_d_factor(r: f64, l: f64) -> f64 {
    2.0 / PI * bessel_k0(r / l)
}

pub(crate) fn checked_in_gap(band: &BandEdge, detuning: f64, what: &str) -> Result<f64> {
    if !detuning.is_finite() || !band.in_gap(detuning) {
        return Err(Error::invalid(format!(
            "{what} = {detuning:e} lies inside the band of an edge with alpha = {}",
            band.alpha
        )));
    }
    band.decay_length(detuning)
}

/// Two-level atoms near a 1D band edge, dispersive regime:
/// `U_jl = gbar_c^2 / (2 Delta) f(z_j, z_l)` with `L = L(Delta)`.
///
/// The sign follows `Delta`, so atoms near an upper edge (`alpha < 0`,
/// `Delta < 0`) interact with the opposite sign.
pub fn coupling_matrix_1d(
    atoms: &AtomArray,
    band: &BandEdge,
    coupling: &AtomCoupling,
) -> Result<CouplingMatrix> {
    coupling_matrix_1d_with(atoms, band, coupling, Exec::default())
}

pub fn coupling_matrix_1d_with(
    atoms: &AtomArray,
    band: &BandEdge,
    coupling: &AtomCoupling,
    exec: Exec,
) -> Result<CouplingMatrix> {
    let detuning = coupling.detuning;
    let l = checked_in_gap(band, detuning, "Delta")?;
    if detuning.abs() < 10.0 * coupling.beta {
        warn!(
            "|Delta| / beta = {:.3} < 10: the photon cloud is not weakly populated",
            detuning.abs() / coupling.beta
        );
    }
    let gbar = coupling.gbar_c(band, l);
    let prefactor = gbar * gbar / (2.0 * detuning);
    let values = fill_hermitian(atoms.len(), exec, |j, k| {
        prefactor
            * exponential_factor(
                atoms.positions[j],
                atoms.positions[k],
                l,
                atoms.bloch_values[j],
                atoms.bloch_values[k],
            )
    });
    Ok(CouplingMatrix { values, kind: MatrixKind::TwoLevel1d })
}

/// Two-level atoms near an isotropic 2D band edge:
/// `U_jl = gbar_c^2 / (2 Delta) (2 / pi) K0(r_jl / L) E_j E_l^*`.
///
/// In 2D the cloud area scales as `L^2`, so `gbar_c = g_cell a / L`. The
/// on-site term diverges logarithmically; diagonal entries are evaluated at
/// the cutoff `r = a / 2`.
pub fn coupling_matrix_2d(
    atoms: &AtomArray2d,
    band: &BandEdge,
    coupling: &AtomCoupling,
) -> Result<CouplingMatrix> {
    let detuning = coupling.detuning;
    let l = checked_in_gap(band, detuning, "Delta")?;
    let n = atoms.len();
    for j in 0..n {
        for k in (j + 1)..n {
            if atoms.positions[j] == atoms.positions[k] {
                return Err(Error::invalid(format!("atoms {j} and {k} share a position")));
            }
        }
    }
    let gbar = coupling.g_cell * band.a / l;
    let prefactor = gbar * gbar / (2.0 * detuning);
    let r_min = 0.5 * band.a;
    let values = fill_hermitian(n, Exec::default(), |j, k| {
        let [xj, yj] = atoms.positions[j];
        let [xk, yk] = atoms.positions[k];
        let r = if j == k { r_min } else { (xj - xk).hypot(yj - yk) };
        atoms.bloch_values[j] * atoms.bloch_values[k].conj() * (prefactor * two_d_factor(r, l))
    });
    Ok(CouplingMatrix { values, kind: MatrixKind::TwoLevel2d })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::hz_to_rad;

    fn apcw() -> (BandEdge, AtomCoupling) {
        let band = BandEdge::zone_boundary(hz_to_rad(333e12), 10.6, 371e-9).unwrap();
        let c = AtomCoupling::builder(hz_to_rad(400e9), hz_to_rad(5e6))
            .g_cell(hz_to_rad(12.2e9))
            .build(&band)
            .unwrap();
        (band, c)
    }

    #[test]
    fn diagonal_and_one_decay_length() {
        let (band, c) = apcw();
        let l = band.decay_length(c.detuning).unwrap();
        let atoms = AtomArray::flat(vec![0.0, l], c.gamma).unwrap();
        let u = coupling_matrix_1d(&atoms, &band, &c).unwrap();
        let g = c.gbar_c(&band, l);
        let diag = g * g / (2.0 * c.detuning);
        assert!((u.get(0, 0).re - diag).abs() < 1e-12 * diag);
        assert!((u.get(0, 1).re - diag * (-1f64).exp()).abs() < 1e-12 * diag);
        assert_eq!(u.kind, MatrixKind::TwoLevel1d);
    }

    #[test]
    fn apcw_ten_cells() {
        let (band, c) = apcw();
        let atoms = AtomArray::chain(&band, 2, 10, c.gamma).unwrap();
        let u = coupling_matrix_1d(&atoms, &band, &c).unwrap();
        let ratio = u.get(0, 1).norm() / c.gamma;
        assert!((ratio - 0.89).abs() < 0.005, "{ratio}");
        let khz = u.get(0, 1).norm() / (2.0 * PI) / 1e6;
        assert!((khz - 4.45).abs() < 0.01, "{khz}");
    }

    #[test]
    fn in_band_detuning_rejected() {
        let (band, c) = apcw();
        let atoms = AtomArray::flat(vec![0.0], c.gamma).unwrap();
        let bad = c.with_detuning(-hz_to_rad(100e9));
        assert!(matches!(coupling_matrix_1d(&atoms, &band, &bad), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn sign_flips_for_upper_edge() {
        let (band, c) = apcw();
        let upper = band.with_alpha(-band.alpha).unwrap();
        let cu = c.with_detuning(-c.detuning);
        let atoms = AtomArray::chain(&band, 5, 3, c.gamma).unwrap();
        let lo = coupling_matrix_1d(&atoms, &band, &c).unwrap();
        let up = coupling_matrix_1d(&atoms, &upper, &cu).unwrap();
        assert_eq!(lo.values, -up.values);
    }

    #[test]
    fn two_d_factor_values() {
        assert!((two_d_factor(1.0, 1.0) - 0.268_00).abs() < 1e-4);
        // large-separation asymptote
        let x: f64 = 60.0;
        let asym = 2.0 / PI * (-x).exp() * (PI / (2.0 * x)).sqrt();
        assert!((two_d_factor(x, 1.0) / asym - 1.0).abs() < 3e-3);
        // small separation: logarithmic growth with slope -2/pi per e-fold
        let r = 0.01_f64;
        let slope = (two_d_factor(r, 1.0) - two_d_factor(r / 2.0, 1.0)) / 2f64.ln();
        assert!((slope / (-2.0 / PI) - 1.0).abs() < 0.05);
        let series = -(2.0 / PI) * ((r / 2.0).ln() + 0.577_215_664_901_532_9);
        assert!((two_d_factor(r, 1.0) / series - 1.0).abs() < 1e-4);
    }

    #[test]
    fn two_d_matrix() {
        let band = BandEdge::zone_boundary(1.0, 1.0, 1.0).unwrap();
        let c = AtomCoupling::builder(1e-3, 0.0).beta(1e-5).build(&band).unwrap();
        let one = Complex64::new(1.0, 0.0);
        let atoms =
            AtomArray2d::new(vec![[0.0, 0.0], [3.0, 4.0], [-2.0, 1.0]], vec![one; 3], 0.0).unwrap();
        let u = coupling_matrix_2d(&atoms, &band, &c).unwrap();
        let l = band.decay_length(1e-3).unwrap();
        let g = c.g_cell * band.a / l;
        let pre = g * g / 2e-3;
        assert!((u.get(0, 1).re - pre * two_d_factor(5.0, l)).abs() < 1e-12 * pre);
        assert!((u.get(2, 2).re - pre * two_d_factor(0.5, l)).abs() < 1e-12 * pre);
        assert_eq!(u.hermiticity_defect(), 0.0);

        let dup = AtomArray2d::new(vec![[1.0, 1.0], [1.0, 1.0]], vec![one; 2], 0.0).unwrap();
        assert!(coupling_matrix_2d(&dup, &band, &c).is_err());
    }

    #[test]
    fn parallel_build_is_bit_identical() {
        let (band, c) = apcw();
        let atoms = AtomArray::chain(&band, 200, 1, c.gamma).unwrap();
        let a = coupling_matrix_1d_with(&atoms, &band, &c, Exec::Sequential).unwrap();
        let b = coupling_matrix_1d_with(&atoms, &band, &c, Exec::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mismatched_array_rejected() {
        assert!(AtomArray::new(vec![0.0, 1.0], vec![Complex64::new(1.0, 0.0)], 0.0).is_err());
        assert!(AtomArray::new(vec![f64::NAN], vec![Complex64::new(1.0, 0.0)], 0.0).is_err());
    }
}
