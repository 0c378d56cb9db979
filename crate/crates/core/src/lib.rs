//! Numerical toolkit for nonlocal operators and far-field asymptotics of the
//! Monge-Ampere equation `det(D^2 v) = f` on R^n.
//!
//! The crate has four user-facing layers:
//!
//! * [`fields`] — closed-form scalar fields on R^n with decay metadata and
//!   sampled Holder-seminorm estimation.
//! * [`fracops`] — principal-value fractional Laplacian, Riesz potential,
//!   bilinear remainder and related singular-integral quadrature. The radial
//!   fast path uses an exact angular reduction in dimension 3; a brute-force
//!   3-D quadrature serves as its independent oracle.
//! * [`decaylab`] — dyadic decay-exponent fitting and the checker suite for
//!   the quantitative decay/growth/commutation claims the toolkit verifies.
//! * [`masolver`] — exact radial solutions of `det(D^2 v) = f`, asymptotic
//!   expansion extraction, and the nonlocal bootstrap replay.
//!
//! [`experiments`] binds everything into reproducible, file-writing runs and
//! backs the `fraclab` command-line binary.

pub mod decaylab;
pub mod experiments;
pub mod fields;
pub mod fracops;
pub mod interp;
pub mod linalg;
pub mod masolver;
pub mod quad;

/// Toolkit version embedded in reports and output files.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
