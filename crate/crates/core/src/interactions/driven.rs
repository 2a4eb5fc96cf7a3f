use log::warn;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::kernel::{checked_in_gap, exponential_factor, AtomArray};
use super::{fill_hermitian, CouplingMatrix, MatrixKind, PowerLawFit};
use crate::band_model::{AtomCoupling, BandEdge};
use crate::error::{ensure_finite, Error, Result};
use crate::par::Exec;

/// `|Omega / delta_L|` above which the adiabatic elimination is flagged.
pub const DRIVE_RATIO_WARNING: f64 = 0.3;

/// Raman drive on the uncoupled transition.
///
/// `omega` drives `|s>-|e>`; `omega_prime` drives `|g>-|e'>` with relative
/// phase `phi` (zero for a Λ scheme). `detuning_l = delta_l + omega_a - omega_b`
/// is the band-edge detuning that sets the photon-cloud length.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriveField {
    pub omega: f64,
    pub omega_prime: f64,
    pub delta_l: f64,
    pub detuning_l: f64,
    pub phi: f64,
}

impl DriveField {
    /// Λ-scheme drive with laser detuning `delta_l` on an atom detuned by
    /// `atom_detuning` from the band edge.
    pub fn lambda(omega: f64, delta_l: f64, atom_detuning: f64) -> Self {
        DriveField {
            omega,
            omega_prime: 0.0,
            delta_l,
            detuning_l: delta_l + atom_detuning,
            phi: 0.0,
        }
    }

    /// Four-level drive: a second pump of equal amplitude with phase `phi`.
    pub fn four_level(omega: f64, delta_l: f64, atom_detuning: f64, phi: f64) -> Self {
        DriveField {
            omega_prime: omega,
            phi,
            ..Self::lambda(omega, delta_l, atom_detuning)
        }
    }

    /// Drive chosen by its band-edge detuning `detuning_l`.
    pub fn with_band_detuning(omega: f64, detuning_l: f64, atom_detuning: f64) -> Self {
        Self::lambda(omega, detuning_l - atom_detuning, atom_detuning)
    }

    /// `Omega' / Omega` as a complex ratio.
    pub fn amplitude_ratio(&self) -> Complex64 {
        Complex64::from_polar(self.omega_prime / self.omega, self.phi)
    }

    fn validate(&self, atom_detuning: f64) -> Result<()> {
        for (name, v) in [
            ("Omega", self.omega),
            ("Omega'", self.omega_prime),
            ("delta_L", self.delta_l),
            ("Delta_L", self.detuning_l),
            ("phi", self.phi),
        ] {
            ensure_finite(name, v)?;
        }
        if self.delta_l == 0.0 {
            return Err(Error::invalid("drive detuning delta_L must be non-zero"));
        }
        if self.omega <= 0.0 {
            return Err(Error::invalid("drive amplitude Omega must be positive"));
        }
        if self.omega_prime < 0.0 {
            return Err(Error::invalid("Omega' is a magnitude; put its phase in phi"));
        }
        let scale = self.detuning_l.abs().max(self.delta_l.abs()).max(atom_detuning.abs());
        if (self.detuning_l - self.delta_l - atom_detuning).abs() > 1e-9 * scale {
            return Err(Error::invalid(format!(
                "Delta_L = {:e} is not delta_L + Delta = {:e}",
                self.detuning_l,
                self.delta_l + atom_detuning
            )));
        }
        let ratio = (self.omega / self.delta_l).abs();
        if ratio > DRIVE_RATIO_WARNING {
            warn!("|Omega / delta_L| = {ratio:.3} exceeds {DRIVE_RATIO_WARNING}; weak-drive elimination is unreliable");
        }
        Ok(())
    }
}

/// `S_j = (Omega'/Omega) sigma_sg + sigma_gs`, the operator whose bilinears
/// `S_j^dagger S_l` the driven matrix multiplies.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpinOperator {
    /// Coefficient of `sigma_sg`.
    pub raising: Complex64,
}

impl SpinOperator {
    /// `(c_x, c_y)` with `S = c_x sigma_x + c_y sigma_y`, spin-1/2 convention
    /// `sigma_x = (sigma_gs + sigma_sg) / 2`.
    ///
    /// Only meaningful for `|Omega'| = |Omega|`.
    pub fn xy_coefficients(&self) -> (f64, f64) {
        spin_rotation_from_phase(self.raising.arg())
    }
}

fn spin_rotation_from_phase(phi: f64) -> (f64, f64) {
    (2.0 * (phi / 2.0).cos(), -2.0 * (phi / 2.0).sin())
}

/// Spin axis selected by the drive phase for `Omega' = Omega e^{i phi}`:
/// returns `(2 cos(phi/2), -2 sin(phi/2))`, the `sigma_x` and `sigma_y`
/// coefficients of `S`.
pub fn spin_rotation(drive: &DriveField) -> (f64, f64) {
    spin_rotation_from_phase(drive.phi)
}

/// Result of eliminating the excited states and photons under a drive.
#[derive(Clone, Debug, PartialEq)]
pub struct DrivenCoupling {
    pub matrix: CouplingMatrix,
    pub spin: SpinOperator,
    /// Raman-narrowed linewidth of `|s>`, `|Omega|^2 gamma / delta_L^2`.
    pub gamma_tilde: f64,
    /// Raman-narrowed linewidth of `|g>`, `|Omega'|^2 gamma / delta_L^2`.
    pub gamma_tilde_prime: f64,
    /// Cavity coupling `gbar_c` at `L(Delta_L)`.
    pub gbar_c: f64,
    pub decay_length: f64,
    /// `|Omega|^2 / delta_L^2`.
    pub drive_factor: f64,
}

impl DrivenCoupling {
    /// Coefficient of `sigma_x^j sigma_x^l f` in the transverse Ising form,
    /// `2 |Omega|^2 gbar_c^2 / (Delta_L delta_L^2)`.
    pub fn ising_coefficient(&self, detuning_l: f64) -> f64 {
        2.0 * self.drive_factor * self.gbar_c * self.gbar_c / detuning_l
    }

    /// Cooperativity of the Raman-dressed system: the effective coupling
    /// `(Omega / delta_L) gbar_c` against photon loss and the narrowed
    /// linewidth. Independent of the drive strength.
    pub fn cooperativity(&self, kappa_p: f64) -> f64 {
        let g_eff2 = self.drive_factor * self.gbar_c * self.gbar_c;
        g_eff2 / (kappa_p * self.gamma_tilde)
    }
}

/// Raman-driven Λ or four-level atoms:
/// `U_jl = (|Omega|^2 / delta_L^2) gbar_c^2 / (2 Delta_L) f(z_j, z_l)` with
/// `L = L(Delta_L)`, multiplying `S_j^dagger S_l`.
pub fn driven_coupling_matrix(
    atoms: &AtomArray,
    band: &BandEdge,
    coupling: &AtomCoupling,
    drive: &DriveField,
) -> Result<DrivenCoupling> {
    drive.validate(coupling.detuning)?;
    let detuning_l = drive.detuning_l;
    let l = checked_in_gap(band, detuning_l, "Delta_L")?;
    let gbar = coupling.gbar_c(band, l);
    let drive_factor = (drive.omega / drive.delta_l).powi(2);
    let prefactor = drive_factor * gbar * gbar / (2.0 * detuning_l);
    let values = fill_hermitian(atoms.len(), Exec::default(), |j, k| {
        prefactor
            * exponential_factor(
                atoms.positions[j],
                atoms.positions[k],
                l,
                atoms.bloch_values[j],
                atoms.bloch_values[k],
            )
    });
    let kind = if drive.omega_prime == 0.0 {
        MatrixKind::LambdaDriven
    } else {
        MatrixKind::FourLevel
    };
    Ok(DrivenCoupling {
        matrix: CouplingMatrix { values, kind },
        spin: SpinOperator { raising: drive.amplitude_ratio() },
        gamma_tilde: drive_factor * coupling.gamma,
        gamma_tilde_prime: (drive.omega_prime / drive.delta_l).powi(2) * coupling.gamma,
        gbar_c: gbar,
        decay_length: l,
        drive_factor,
    })
}

/// Element-wise sum of the per-drive matrices; adiabatic elimination is
/// additive over drive fields.
pub fn multi_drive_sum(
    atoms: &AtomArray,
    band: &BandEdge,
    coupling: &AtomCoupling,
    drives: &[DriveField],
) -> Result<CouplingMatrix> {
    if drives.is_empty() {
        return Err(Error::invalid("at least one drive is required"));
    }
    for (i, a) in drives.iter().enumerate() {
        for b in &drives[i + 1..] {
            if a.delta_l == b.delta_l {
                return Err(Error::invalid(format!(
                    "two drives share delta_L = {:e}; merge them into one field",
                    a.delta_l
                )));
            }
        }
    }
    let mut total = driven_coupling_matrix(atoms, band, coupling, &drives[0])?.matrix.values;
    for d in &drives[1..] {
        total += driven_coupling_matrix(atoms, band, coupling, d)?.matrix.values;
    }
    Ok(CouplingMatrix { values: total, kind: MatrixKind::MultiDrive })
}

/// Λ drives realizing a fitted exponential sum: drive `i` sits at band
/// detuning `fit.detunings[i]` and its amplitude is chosen so that the summed
/// coupling between unit-Bloch atoms at separation `z` equals
/// `scale * sum_i w_i exp(-s_i z / a)`.
pub fn drives_for_profile(
    band: &BandEdge,
    coupling: &AtomCoupling,
    fit: &PowerLawFit,
    scale: f64,
) -> Result<Vec<DriveField>> {
    if !(scale.is_finite() && scale != 0.0) {
        return Err(Error::invalid("profile scale must be finite and non-zero"));
    }
    fit.weights
        .iter()
        .zip(&fit.detunings)
        .map(|(&w, &detuning_l)| {
            let l = checked_in_gap(band, detuning_l, "Delta_L")?;
            let gbar = coupling.gbar_c(band, l);
            let delta_l = detuning_l - coupling.detuning;
            if delta_l == 0.0 {
                return Err(Error::invalid("drive would be resonant with the atom"));
            }
            let factor = scale * w * 2.0 * detuning_l / (gbar * gbar);
            if factor <= 0.0 {
                return Err(Error::invalid(format!(
                    "weight {w:e} has the wrong sign for an edge with alpha = {}",
                    band.alpha
                )));
            }
            Ok(DriveField::lambda(delta_l.abs() * factor.sqrt(), delta_l, coupling.detuning))
        })
        .collect()
}

/// Pair potential from a weak off-resonant drive at `omega_l`:
/// `U = |Omega|^2 gbar_c^2 f / (2 (omega_L - omega_b) (omega_L - omega_a)^2)`
/// with `L` evaluated at `omega_L - omega_b`.
pub fn mechanical_potential(
    atoms: &AtomArray,
    band: &BandEdge,
    coupling: &AtomCoupling,
    omega_l: f64,
    omega: f64,
) -> Result<CouplingMatrix> {
    ensure_finite("omega_L", omega_l)?;
    ensure_finite("Omega", omega)?;
    let omega_a = band.omega_b + coupling.detuning;
    let atom_detuning = omega_l - omega_a;
    if atom_detuning == 0.0 {
        return Err(Error::invalid("drive is resonant with the atom (omega_L = omega_a)"));
    }
    let edge_detuning = omega_l - band.omega_b;
    let l = checked_in_gap(band, edge_detuning, "omega_L - omega_b")?;
    let off = omega.abs().max(coupling.gamma);
    if atom_detuning.abs() < 10.0 * off {
        warn!(
            "|omega_L - omega_a| = {:e} is not large against Omega, gamma = {off:e}",
            atom_detuning.abs()
        );
    }
    let gbar = coupling.gbar_c(band, l);
    let prefactor = omega * omega * gbar * gbar / (2.0 * edge_detuning * atom_detuning * atom_detuning);
    let values = fill_hermitian(atoms.len(), Exec::default(), |j, k| {
        prefactor
            * exponential_factor(
                atoms.positions[j],
                atoms.positions[k],
                l,
                atoms.bloch_values[j],
                atoms.bloch_values[k],
            )
    });
    Ok(CouplingMatrix { values, kind: MatrixKind::Mechanical })
}
