//! fraclab: a desk-scale numerical laboratory for fractional Laplacians.
//!
//! The crate provides the periodic spectral calculus on a truncated box
//! (fractional Laplacians, heat flow, mollification), the heat-semigroup /
//! Mellin-side machinery with its meromorphic continuation and residue
//! analysis, spherical mean transforms with a support-theorem decision
//! procedure, the end-to-end disentanglement pipeline, and forward/inverse
//! solvers for fractional polyharmonic exterior-value problems
//! (Dirichlet-to-Neumann data, Runge approximation, potential recovery,
//! principal-symbol extraction).
//!
//! All numerics are generic over the scalar type through [`Scalar`];
//! `f64` aliases for the main types live at the crate root.

pub mod calderon;
pub mod decay;
pub mod error;
pub mod exponents;
pub mod field;
pub mod fz;
pub mod gamma;
pub mod grid;
pub mod heat;
pub mod linalg;
pub mod pipeline;
pub mod quadrature;
pub mod region;
pub mod residues;
pub mod scalar;
pub mod scenario;
pub mod spectral;
pub mod sphere;
pub mod util;

pub use error::{Error, Result};
pub use scalar::{Scalar, C};

/// Concrete `f64` aliases for the main domain types.
pub type Grid64 = grid::GridSpec<f64>;
pub type Field64 = field::Field<f64>;
pub type FieldSpec64 = field::FieldSpec<f64>;
pub type Region64 = region::RegionSpec<f64>;
pub type SetSpec64 = region::SetSpec<f64>;
pub type Exponents64 = exponents::ExponentConfig<f64>;
pub type Scenario64 = scenario::Scenario<f64>;
pub type C64 = num_complex::Complex<f64>;
