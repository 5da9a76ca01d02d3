//! Simulation of two atomic ensembles entangled by a quantum nondemolition
//! (QND) measurement of light, under optical phase diffusion, photon
//! loss/gain and atomic dephasing.
//!
//! The crate is organised bottom-up:
//!
//! - [`special`]: log-domain combinatorics and the Laguerre kernel used by the
//!   closed-form channel solutions.
//! - [`spin`]: Schwinger-boson spin operators, spin coherent states and Fock
//!   basis rotations on the symmetric `(N+1)`-dimensional sector.
//! - [`qnd`]: the post-measurement conditional atomic state, outcome
//!   probabilities, approximations and a small interferometer oracle.
//! - [`channels`]: closed-form conditional density matrices for each
//!   decoherence channel, the Kraus families and a truncated-Fock oracle.
//! - [`metrics`]: variances, basis distributions, logarithmic negativity,
//!   squeezing/entanglement/steering criteria and Bell-CHSH.
//! - [`sweep`], [`figures`], [`cache`], [`table`], [`selfcheck`]: the
//!   machinery behind the `qnd` command-line tool.
//!
//! Joint Fock labels `(k1, k2)` are flattened as `k1 * (N + 1) + k2`
//! everywhere (see [`spin::joint_index`]).

pub mod cache;
pub mod channels;
mod error;
pub mod figures;
pub mod metrics;
pub mod qnd;
pub mod selfcheck;
pub mod special;
pub mod spin;
pub mod sweep;
pub mod table;

pub use channels::{apply_channel, AtomicDensityMatrix, ChannelSpec};
pub use error::{Error, Result};
pub use qnd::{conditional_state, SystemConfig};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
