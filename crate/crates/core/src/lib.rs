//! Dynamical photon blockade in a bosonic Josephson junction.
//!
//! Two tunnel-coupled Kerr modes start in weak coherent states, so the
//! state lives in the manifold of at most two quanta. The crate evolves the
//! amplitude equations of that manifold under a time-dependent coupling,
//! evaluates mode-1 second-order correlations, and searches couplings
//! written as the antiderivative of a truncated harmonic series that empty
//! the `|20>` amplitude at a chosen time while `0 <= J <= J_max`.
//!
//! Times are measured in units of `1/kappa` and rates in units of `kappa`.

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod optimizer;
pub mod oracle;
pub mod waveform;

pub use dynamics::{
    g2_equal_time, g2_two_time, make_initial, population_n1, Amplitudes, InitialState,
    ManifoldTrajectory, OnePhotonVector, ReducedState, SystemParams, TwoPhotonVector,
};
pub use error::{Error, Result};
pub use optimizer::{OptimizationProblem, OptimizationReport};
pub use waveform::{Constant, Coupling, HarmonicCoupling, Staircase};
