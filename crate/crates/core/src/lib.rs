pub mod error;
pub mod experiment;
pub mod grover;
pub mod kernel;
pub mod learn;
pub mod pattern;
pub mod ledger;
pub mod seed;
pub mod selftest;
pub mod sim;
pub mod stats;
pub mod svm;

pub use error::{Error, Result, MAX_QUBITS};
pub use ledger::{QueryCounter, QueryLedger};
pub use sim::{Circuit, Gate, GateKind, StateVector};
