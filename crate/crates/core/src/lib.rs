//! Numerical verification toolkit for the Kähler geometry of the lognormal
//! statistical manifold's tangent bundle: Fisher metric, Dombrowski lift,
//! Kähler functions, Hamiltonian flows of Jacobi-algebra observables and a
//! Schrödinger-type evolution of an exponential wavefunction.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dombrowski;
pub mod error;
pub mod fd;
pub mod jacobi;
pub mod kahler_functions;
pub mod manifold;
pub mod quadrature;
pub mod report;
pub mod schrodinger;

pub use dombrowski::{Chart, KahlerStructure, TangentState};
pub use error::{Error, Result};
pub use jacobi::{Generator, JacobiElement, SpectralCurve};
pub use manifold::{DualPoint, NaturalPoint};
pub use quadrature::QuadratureSpec;
pub use report::{Status, Verdict};
pub use schrodinger::{ConventionFlags, LogGrid, SchrodingerParams, XiSource};
