//! Numeric tolerances used across the crate.
//!
//! Three tiers: construction-time checks on operators and bases, state-level
//! normalization checks, and assertion-level equality used by the verifiers.
//! Branch enumeration prunes below `PRUNE` and is otherwise exact.

/// Operator-level construction checks (unitarity, idempotence, orthonormality).
pub const CONSTRUCT: f64 = 1e-10;

/// State norm, Hermiticity and trace checks.
pub const STATE: f64 = 1e-12;

/// Assertion-level equality for distributions, reduced states and verifier gates.
pub const EQUALITY: f64 = 1e-9;

/// Eigenvalue floor when checking positive semidefiniteness.
pub const PSD_FLOOR: f64 = -1e-10;

/// Branch probabilities below this are pruned and recorded.
pub const PRUNE: f64 = 1e-14;
