//! Measurement-free quantum teleportation that recycles its entanglement.
//!
//! Two EPR pairs (the infinite-temperature thermofield double of a two-qubit
//! "black hole") carry a qubit from sender to receiver. The sender applies a
//! three-qubit unitary `V`, hands a single maximally mixed qubit to the
//! receiver, and the receiver applies the same `V`. No measurement happens,
//! and the EPR pairs come back intact up to a wire swap.
//!
//! Modules:
//! - [`qstate`]: dense statevectors and density matrices.
//! - [`circuits`]: gates, circuits with mid-circuit measurement, reference protocols.
//! - [`protocols`]: the measurement-free protocol, recycling, TFD states.
//! - [`noise`]: pseudo-pure noise, shot sampling, tomography, synthetic experiments.
//! - [`variational`]: the `R_Y` ansatz, the protocol cost function, COBYLA search.

pub mod circuits;
pub mod error;
pub mod noise;
pub mod protocols;
pub mod qstate;
pub mod variational;

pub use circuits::{Circuit, Gate, GateKind, MeasurementRecord, Step};
pub use error::{Error, Result};
pub use noise::{ExperimentConfig, ExperimentReport, NoiseConfig, TomographyResult};
pub use protocols::{Beta, ProtocolReport, TfdSpec};
pub use qstate::{DensityMatrix, HermitianDecomposition, StateVector};
pub use variational::{AnsatzSpec, OptimizationTrace, OptimizerConfig};
