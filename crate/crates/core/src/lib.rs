//! Monte Carlo simulation of continuous dynamical decoupling for a driven
//! two-level spin.
//!
//! The spin is propagated in the first rotating frame under a drive of Rabi
//! frequency Ω1, optionally phase- or amplitude-modulated at Ω1 so that a
//! second, weaker drive Ω2 = αΩ1/2 appears in the dressed basis. Spin-bath
//! noise and drive-amplitude fluctuations are Ornstein–Uhlenbeck processes
//! and the nitrogen hyperfine triplet enters as a static detuning drawn once
//! per trajectory.
//!
//! Units: configuration is in MHz and µs. Internally every Hamiltonian
//! coefficient is an angular frequency in rad/µs.

pub mod analysis;
pub mod cli;
pub mod drive;
pub mod error;
pub mod evolve;
pub mod noise;
pub mod rng;
pub mod spin;

pub use error::{Error, FitError, Result};

use std::f64::consts::TAU;

/// Converts an ordinary frequency in MHz to an angular frequency in rad/µs.
#[inline]
pub fn mhz_to_angular(mhz: f64) -> f64 {
    TAU * mhz
}
