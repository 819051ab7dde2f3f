//! Exact combinatorics of finite projective spaces over GF(q).
//!
//! The crate builds and verifies partitions of (F_qP^n)^k into product sets
//! confined to powers of (k-1)-flats, counts dependent tuples exactly,
//! checks the structural lemmas that make those partitions tight at desk
//! scale, and simulates the hyperplane-query game in which n hidden points
//! must be captured by an (n-1)-flat.
//!
//! Modules:
//! - [`gfq`] — table-driven GF(q) arithmetic, q ≤ 64;
//! - [`projgeom`] — points, flats, span, dependence, quotients;
//! - [`partition`] — product partitions: constructions, verification,
//!   canonicalization, and factor splitting;
//! - [`dependence`] — dependent-tuple counting and the incidence lemmas;
//! - [`dspan`] — the query game: oracle, solver, decision traces, and the
//!   induced leaf partition;
//! - [`cli`] — the command-line experiment harness.

pub mod cli;
pub mod dependence;
pub mod dspan;
pub mod error;
pub mod gfq;
mod linalg;
pub mod partition;
pub mod pointset;
pub mod projgeom;

pub use error::{Error, Result};
