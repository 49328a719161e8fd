//! Simulation of a logical qubit encoded in a harmonic oscillator as a comb of
//! Gaussian quadrature peaks, together with the single-qubit-coupled protocol
//! that prepares such states.
//!
//! The crate is organised around two state representations:
//!
//! - [`comb::GaussianComb`] — an exact, analytic superposition of equal-width
//!   Gaussians in one quadrature. All protocol algebra (Hadamards, conditional
//!   displacements, measurement collapse) is closed over this form.
//! - [`grid::GridState`] — complex amplitudes sampled on a uniform grid, with
//!   an FFT-based quadrature transform. Used for densities, moments, error
//!   integrals and the two-mode recovery simulation.
//!
//! The remaining modules build on these: [`protocol`] runs the iterative
//! preparation (post-selected, exhaustively enumerated, or Monte Carlo
//! sampled), [`analysis`] computes misidentification probabilities and their
//! closed-form bounds, [`recovery`] simulates shift-error syndrome extraction
//! with a SUM gate on a two-mode grid, and [`schedule`] lowers a protocol
//! configuration to an abstract ion-trap pulse sequence.
//!
//! Batch entry points (branch enumeration, Monte Carlo runs, recovery trials,
//! parameter sweeps, grid evaluation) run data-parallel under the default
//! `parallel` feature and fall back to sequential loops without it.

pub mod analysis;
pub mod comb;
pub mod error;
pub mod grid;
pub mod io;
pub mod lattice;
mod par;
pub mod protocol;
pub mod recovery;
pub mod schedule;

pub use comb::{GaussianComb, Quadrature};
pub use error::{Error, Result};
pub use grid::GridState;
pub use lattice::{IdealLattice, LogicalBit};
pub use protocol::{Mode, OutcomeRecord, ProtocolConfig, QubitOscState};
pub use recovery::{AncillaSource, RecoveryConfig, Syndrome, TrialResult};
pub use schedule::{PulseKind, PulseOp, PulseSchedule};

/// Half the position spacing of the self-dual code lattice, `sqrt(pi/2)`.
///
/// With this value the position peaks (spacing `2*alpha`) and momentum peaks
/// (spacing `pi/alpha`) of the encoded states share the same lattice constant.
pub fn self_dual_alpha() -> f64 {
    (std::f64::consts::PI / 2.0).sqrt()
}
