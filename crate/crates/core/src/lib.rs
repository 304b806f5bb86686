//! Exact quantum circuit simulation with cost governed by how many two-qubit
//! gates straddle each line of the circuit.
//!
//! Three interchangeable backends share one circuit model:
//!
//! * [`mps`]: open-boundary matrix product states kept in Schmidt form.
//! * [`tensornet`]: the doubled (bra/ket) tensor network of the circuit,
//!   contracted one line at a time.
//! * [`dense`]: a plain statevector, used as the reference.
//!
//! [`transform`] computes the per-line gate-crossing profile, folds
//! one-qubit gates into their neighbours and lowers long-range gates onto
//! adjacent lines. [`engine`] ties it together for the `tnqsim` tool.

pub mod circuit;
pub mod dense;
pub mod engine;
pub mod error;
pub mod mps;
pub mod numerics;
pub mod tensornet;
pub mod transform;

pub use circuit::{emit_circuit, parse_circuit, Circuit, Instruction, Op};
pub use error::{Error, Result};
pub use mps::MpsState;
pub use numerics::{ComplexMatrix, ComplexVector};
pub use transform::{cost_estimate, d_profile, lower_to_adjacent, reduce, DProfile, Stage};
