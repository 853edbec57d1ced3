//! Desk-scale statevector simulation of quantum graph neural network circuits.
//!
//! The crate builds the circuits for graph convolution (vanilla, simplified
//! and polynomial-filter variants), graph attention and message passing,
//! runs them on a dense simulator, and checks the post-selected states
//! against exact classical references. A resource estimator evaluates the
//! leading-order depth and qubit formulas for large scenarios.
//!
//! The simulator core ([`sim`], [`linalg`]) is generic over the real scalar;
//! the pipelines above it are written for `f64`.

pub mod block_encoding;
pub mod classical;
pub mod encode;
pub mod error;
pub mod fixtures;
pub mod graph;
pub mod linalg;
pub mod qgat;
pub mod qgcn;
pub mod qmpnn;
pub mod resources;
pub mod scalar;
pub mod sim;
pub mod sparse;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::Real;

/// Complex `f64`, the amplitude type of every pipeline.
pub type C64 = num_complex::Complex<f64>;
/// Dense complex `f64` matrix.
pub type CMatrix = linalg::Matrix<f64>;
pub type Matrix32 = linalg::Matrix<f32>;
pub type State = sim::StateVector<f64>;
pub type State32 = sim::StateVector<f32>;
pub type Circ = sim::Circuit<f64>;
pub type Circuit32 = sim::Circuit<f32>;
pub type Gate = sim::GateOp<f64>;
pub type Gate32 = sim::GateOp<f32>;
