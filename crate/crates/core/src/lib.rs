//! Periodic operator evolution (POE) diagnostics.
//!
//! A periodically driven system with cycle unitary `U` obeys
//! `S_n = <rho0|F^n|rho0> >= 0` with `F = (1 - (U_L + U_L^dagger)/2)/2`, and
//! `S_n` decays exponentially at the rate of the largest visible eigenvalue of
//! `F`. Incoherent noise or a drifting drive breaks these signatures; this crate
//! simulates drives, builds `S_n` from recurrence records and tests them.

pub mod circuits;
pub mod diagnostics;
pub mod error;
#[cfg(feature = "cli")]
pub mod io;
pub mod liouville;
pub mod noise;
pub mod poe;
pub mod random;
pub mod spectral;
