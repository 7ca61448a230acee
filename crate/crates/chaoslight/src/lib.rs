//! Simulation engine for chaotic-light interferometry.
//!
//! The crate models a pseudo-thermal source (filtered chaotic light from two
//! points of an extended emitter) feeding a beamsplitter interferometer, and
//! computes second-order correlation observables three independent ways:
//!
//! * closed-form Gaussian-moment expansions of the classical field theory
//!   ([`correlators::classical_term_ledger`], [`correlators::gamma2_gaussian_moment`]),
//! * direct Monte Carlo sampling of correlated stochastic fields
//!   ([`correlators::classical_mc`], [`field`]),
//! * two-photon effective-wavefunction amplitudes
//!   ([`correlators::g2_quantum_point`], [`correlators::rc_from_g2_integral`]).
//!
//! [`bench`] wires the three engines to experiment-shaped configuration files
//! (source geometry, spectral filter, fiber-tip scan) and provides dip fitting.

pub mod bench;
pub mod coherence;
pub mod correlators;
pub mod error;
pub mod field;
pub(crate) mod quad;
pub mod spectral;

pub use error::{Error, Result};
