//! Plane wave discontinuous Galerkin discretization of the 2D Helmholtz
//! impedance problem on convex polygonal meshes, with tools to study the
//! conditioning of the plane wave basis and of the global system.

pub mod analytic;
pub mod assembly;
pub mod conditioning;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod linalg;
pub mod mesh;
pub mod orthogonalization;
pub mod planewave;
pub mod quadrature;
pub mod solvers;

pub use error::{Error, Result};
