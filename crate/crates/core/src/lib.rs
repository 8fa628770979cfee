//! Real-space topological index numerics for two-dimensional
//! time-reversal-invariant tight-binding insulators.
//!
//! The crate builds finite truncations of ℤ² lattice models (Wallace,
//! Haldane, parity-broken, Kane–Mele and its layered trivial partner),
//! computes Fermi projections with dense Hermitian eigensolvers, and
//! evaluates the Fu–Kane–Mele Z₂ index and the Chern index by
//! flux-insertion Fredholm methods: singular-value counting of
//! `P·L·P + P⊥`, Kramers pairing of the defect spectrum, and a resolvent
//! contour-trace route with explicit error bounds. The `interface` module
//! runs the companion experiments: gap filling at an interface between
//! phases with different indices, the finite-strip counterexample, and
//! the Neumann-series invertibility certificate.

pub mod error;
pub mod interface;
pub mod lattice;
pub mod linalg;
pub mod models;
pub mod operator;
pub mod spectral;
pub mod z2index;

pub use error::CoreError;
pub use lattice::{build_lattice, indicator_operator, Axis, BoundaryMode, LatticeGeometry, Region, Site};
pub use operator::HermitianOperator;

/// Complex scalar used throughout (re-exported so callers need not depend
/// on the linear-algebra backend directly).
pub type Complex = num_complex::Complex64;
