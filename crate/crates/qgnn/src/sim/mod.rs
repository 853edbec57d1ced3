//! Statevector engine: registers, gates, circuits, post-selection, sampling.

mod circuit;
mod gate;
mod layout;
mod state;

pub use circuit::Circuit;
pub use gate::{value_controls, GateOp, OpKind, MAX_DENSE_DIM, UNITARY_TOL, unitary_tol};
pub use layout::{max_qubits, RegisterLayout, DEFAULT_MAX_QUBITS};
pub use state::{fidelity, StateVector, NORM_TOL, POSTSELECT_FLOOR};
