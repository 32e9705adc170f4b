//! Simulation and certification harness for a discord-based test of
//! entangling two-qubit gates.
//!
//! A client who can only prepare separable (but discordant) two-qubit states
//! and apply single-qubit Pauli encodings challenges a server to recover the
//! encoded two bits. Any information rate above the incoherent limit `I_c`
//! certifies that the server holds an entangling gate; for qubits the gap
//! between the best quantum rate `I_q` and `I_c` equals the discord of the
//! resource state.
//!
//! Modules, bottom-up:
//! - [`qlin`]: small dense complex linear algebra.
//! - [`qstate`]: density matrices, Bell states, the resource state, noise and encodings.
//! - [`correlations`]: entropy, mutual information, classical correlation, discord, Holevo.
//! - [`optics`]: two-photon Fock-space model of the PPBS controlled-Z gate.
//! - [`protocol`]: Alice's sampler, Bob's strategies and closed-form rates.
//! - [`estimate`]: plug-in mutual information, bootstrap errors and the verdict.

pub mod correlations;
pub mod error;
pub mod estimate;
pub mod optics;
pub mod protocol;
pub mod qlin;
pub mod qstate;
pub mod rng;
mod simplex;

pub use error::{Error, Result};
