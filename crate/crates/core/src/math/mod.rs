//! Hand-rolled linear algebra primitives sized for this crate's needs.

pub mod dense;
pub mod mat3;
pub mod vec3;

pub use dense::{cholesky_solve, damped_solve, SquareMat};
pub use mat3::{symmetric_eigen_3x3, Mat3};
pub use vec3::Vec3;
