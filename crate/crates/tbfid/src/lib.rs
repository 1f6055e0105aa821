//! Fidelities of time-bin GHZ and linear cluster states emitted by a
//! periodically driven quantum emitter.
//!
//! Each error channel has its own module:
//!
//! - [`kernel`]: non-spin-mixing errors (Overhauser noise, phonon dephasing)
//! - [`excitation`]: emission during the drive pulse and off-resonant excitation
//! - [`branching`]: decay into the diagonal transition and photon loss
//!
//! [`sweep`] combines them, and [`oracle`] enumerates the protocol state
//! directly to check the analytic formulas at small photon numbers.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod branching;
pub mod cli;
pub mod error;
pub mod excitation;
pub mod kernel;
pub mod model;
pub mod oracle;
pub mod sweep;

pub use error::{Error, Result};
pub use model::{
    BranchingParams, CollectionParams, DetectionProbs, EmitterParams, FidelityReport, TargetKind,
    TargetState, C64,
};
