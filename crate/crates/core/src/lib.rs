//! Atoms coupled to the band edge of a photonic crystal.
//!
//! A single two-level atom whose transition sits near a quadratic band edge
//! binds a localized photon cloud. That cloud behaves like a cavity mode that
//! follows the atom, and other atoms inside its decay length exchange
//! excitations through it. This crate provides:
//!
//! * [`band_model`]: the bound-state root, mixing angles, decay length and the
//!   mapping onto an effective Jaynes-Cummings cavity.
//! * [`interactions`]: spin-exchange matrices for 1D and 2D band edges, Raman
//!   driven Λ and four-level schemes, multi-drive sums, power-law synthesis
//!   from exponentials and the mechanical pair potential.
//! * [`dynamics`]: loss-limited excitation exchange, detuning optimization,
//!   cooperativity bookkeeping and single-excitation evolution.
//! * [`disorder`]: band-edge localization lengths from the Kronig-Penney
//!   mapping, cross-checked by transfer-matrix Monte Carlo.
//!
//! All frequencies are angular (rad/s) and all lengths are in meters, unless
//! the caller works in reduced units (`omega_b = 1`, `a = 1`), which every
//! routine supports because the formulas are scale covariant.

pub mod band_model;
pub mod disorder;
pub mod dynamics;
mod error;
pub mod interactions;
pub mod par;
pub mod special;
pub mod units;

pub use error::{Error, Result};
