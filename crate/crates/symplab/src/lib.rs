//! symplab: a computational laboratory for symplectic map families.
//!
//! The crate provides:
//! - a zoo of explicitly-defined symplectic maps with exact and
//!   finite-difference Jacobians and symplecticity verification ([`map`]);
//! - Diophantine arithmetic, the homological equation with small divisors,
//!   inductive normalization of generating functions, remainder truncation,
//!   and the shear-to-rotation linear construction ([`normal_form`]);
//! - periodic-point censuses, Lyapunov spectra, periodic-spot detection,
//!   and renormalized-iteration distances ([`census`]);
//! - empirical measures, exact and entropic Kantorovich–Wasserstein
//!   distances, and emergence estimation ([`measure`], [`transport`]);
//! - the explicit high-emergence construction on `T^n x [0,1]^n`:
//!   target boxes, a verified coloring map, a measure rearrangement, and
//!   the conjugated twist experiment ([`construction`]);
//! - the homoclinic local model and its rescaling towards Henon-like
//!   limit maps ([`renorm`]);
//! - plain-text configuration and report formats shared with the CLI
//!   ([`config`]).

pub mod acceptance;
pub mod census;
pub mod config;
pub mod construction;
pub mod map;
pub mod measure;
pub mod normal_form;
pub mod point;
pub mod poly;
pub mod renorm;
pub mod transport;

pub use map::{check_symplectic, evaluate, iterate_orbit, jacobian, MapDefinition, MapError};
pub use point::{Chart, PhasePoint};
pub use poly::Poly;

/// Version string embedded in every output record header.
pub const ARTIFACT_VERSION: &str = concat!("symplab ", env!("CARGO_PKG_VERSION"));
