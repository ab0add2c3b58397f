//! Numerical engine for predicting and classifying drive-induced unwanted
//! state transitions in driven superconducting circuits.
//!
//! The pipeline: diagonalize the circuit ([`circuit`]), parametrize the
//! drive ([`drive`]), compute Floquet modes over amplitude sweeps
//! ([`floquet`]), track branches and swaps ([`tracking`]), reduce sweeps to
//! hybridization landscapes ([`hybridization`]), and attribute/classify
//! measured features against a spurious-mode registry ([`environment`],
//! [`classify`]).

pub mod circuit;
pub mod classify;
pub mod drive;
pub mod environment;
pub mod fit;
pub mod floquet;
pub mod hybridization;
pub mod linalg;
pub mod tracking;

pub use circuit::{CircuitSpec, MeasuredLevels, ResonatorSpec, Spectrum, StateLabel};
pub use drive::{Amplitude, DriveSpec, ResonanceLine};
pub use floquet::{FloquetSet, ModeTable};
pub use tracking::{BranchSet, SwapEvent};
