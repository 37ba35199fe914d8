//! Exact simulation and verification of nonlocal quantum measurements built
//! from local operations and preshared entanglement.
//!
//! The crate simulates small qubit registers exactly (no sampling error):
//! a [`protocol::Protocol`] lists which party owns which register, which
//! entangled resources they share, and the ordered local steps each party
//! performs; the [`engine`] enumerates every measurement branch with its
//! exact probability and post state. On top of that sit the shipped
//! [`protocols`], checkers that compare a protocol against the measurement
//! it claims to implement, and a numerical search for new protocols.

pub mod basis;
pub mod density;
pub mod engine;
pub mod error;
pub mod ops;
pub mod protocol;
pub mod protocols;
pub mod report;
pub mod scenario;
pub mod search;
pub mod serial;
pub mod state;
pub mod tol;
pub mod verify;

pub use basis::MeasurementBasis;
pub use density::DensityMatrix;
pub use engine::{enumerate_branches, result_distribution, Branch, BranchSet};
pub use error::{Error, Result};
pub use ops::UnitaryOp;
pub use protocol::{Protocol, Violation};
pub use scenario::SorkinScenario;
pub use state::StateVector;
pub use verify::{Verdict, VerificationReport, Witness};
