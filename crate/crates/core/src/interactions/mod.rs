//! Effective spin-exchange matrices mediated by band-edge photon clouds.
//!
//! Every builder returns a [`CouplingMatrix`] `U` such that the effective
//! Hamiltonian reads `H = hbar * sum_{j,l} U_jl S_j^+ S_l^-` for the relevant
//! spin operators. Entries are independent closed-form evaluations, so the
//! parallel and sequential builds are bit-identical.

mod driven;
mod kernel;
mod powerlaw;

pub use driven::{
    driven_coupling_matrix, drives_for_profile, mechanical_potential, multi_drive_sum,
    spin_rotation, DriveField, DrivenCoupling, SpinOperator, DRIVE_RATIO_WARNING,
};
pub use kernel::{
    coupling_matrix_1d, coupling_matrix_1d_with, coupling_matrix_2d, exponential_factor,
    two_d_factor, AtomArray, AtomArray2d,
};
pub use powerlaw::{
    detuning_to_rate, power_law_designer, rate_to_detuning, PowerLawFit, PowerLawSpec,
};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::par::{self, Exec};

/// Physical origin of a coupling matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixKind {
    TwoLevel1d,
    TwoLevel2d,
    LambdaDriven,
    FourLevel,
    MultiDrive,
    Mechanical,
}

/// `N x N` Hermitian matrix of exchange rates (rad/s).
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingMatrix {
    pub values: DMatrix<Complex64>,
    pub kind: MatrixKind,
}

impl CouplingMatrix {
    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    pub fn get(&self, j: usize, l: usize) -> Complex64 {
        self.values[(j, l)]
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `max |U - U^dagger| / max |U|`, zero for an exactly Hermitian matrix.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.len();
        let mut worst = 0.0_f64;
        for j in 0..n {
            for l in 0..n {
                worst = worst.max((self.values[(j, l)] - self.values[(l, j)].conj()).norm());
            }
        }
        let scale = self.max_abs();
        if scale == 0.0 {
            0.0
        } else {
            worst / scale
        }
    }

    /// Hermitian part as a real matrix, when the imaginary parts vanish.
    pub fn real_part(&self) -> DMatrix<f64> {
        self.values.map(|v| v.re)
    }

    pub fn scale(&self, factor: f64) -> Self {
        CouplingMatrix {
            values: self.values.map(|v| v * factor),
            kind: self.kind,
        }
    }
}

/// Builds a Hermitian matrix row by row; entries below the diagonal are the
/// conjugates of the mirrored entries and the diagonal is forced real.
pub(crate) fn fill_hermitian<F>(n: usize, exec: Exec, entry: F) -> DMatrix<Complex64>
where
    F: Fn(usize, usize) -> Complex64 + Sync + Send,
{
    let mut buf = vec![Complex64::new(0.0, 0.0); n * n];
    par::for_each_chunk(exec, &mut buf, n.max(1), |j, row| {
        for (l, v) in row.iter_mut().enumerate() {
            *v = match l.cmp(&j) {
                std::cmp::Ordering::Less => entry(l, j).conj(),
                std::cmp::Ordering::Equal => Complex64::new(entry(j, j).re, 0.0),
                std::cmp::Ordering::Greater => entry(j, l),
            };
        }
    });
    DMatrix::from_row_slice(n, n, &buf)
}
