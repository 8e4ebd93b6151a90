//! Simulation core for a quantum LSTM whose memory is an ancilla register
//! entangled with (and disentangled from) an input register each time step.
//!
//! The crate is organized bottom-up:
//!
//! * [`linalg`] — dense statevectors, unitaries, density matrices, partial
//!   traces and a Hermitian eigensolver (big-endian qubit order, max 12
//!   qubits);
//! * [`ansatz`] — parameterized layered rotation + ring-CNOT circuits;
//! * [`entanglement`] — von Neumann entropy, Schmidt decompositions,
//!   fidelity, entangling/disentangling power estimation and the induced
//!   Kraus channel on the ancilla;
//! * [`cell`] — the recurrent cell: encode, entangle, disentangle, read out,
//!   and compress the ancilla into the next hidden state;
//! * [`data`] — noisy-sine generation, CSV ingestion, scaling and windowing;
//! * [`train`] — losses, parameter-shift/finite-difference gradients and the
//!   optimizer loop.

pub mod ansatz;
pub mod cell;
pub mod data;
pub mod entanglement;
pub mod error;
pub mod io;
pub mod linalg;
pub mod train;

pub use error::{Error, Result};
pub use num_complex::Complex64;
