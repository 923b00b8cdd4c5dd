//! Quantum performance limits of covert target detection.
//!
//! Gaussian-state Chernoff quantities with a truncated-Fock oracle, photon
//! number statistics and their generating functions under thermal loss,
//! fidelity and error-probability bounds under covertness, KKT extremal
//! probes, and TMSV / coherent-state benchmarks.
//!
//! Quadratures follow the vacuum-variance-1/2 convention throughout.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bounds;
pub mod covert_opt;
pub mod error;
pub mod gaussian;
pub mod numerics;
pub mod photon_stats;
pub mod probes;
pub mod scenario;

pub use error::{Error, Result};
pub use scenario::ScenarioParams;
