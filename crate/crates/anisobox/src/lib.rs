//! Constant-time space-variant elliptical filtering with four-directional
//! box splines.
//!
//! The library approximates per-pixel anisotropic Gaussian filtering with
//! box-spline kernels whose convolution can be evaluated in O(1) per pixel
//! from four nested running sums, independent of kernel size. It includes
//! two accuracy/coverage improvements: two-stage filtering via covariance
//! splitting, and a dual direction basis that extends the reachable
//! elongations across all orientations.

pub mod engine;
pub mod error;
pub mod io;
pub mod kernel;
pub mod pipeline;
pub mod raster;
pub mod shape;
pub mod solver;
pub mod tables;

pub use error::{Error, Result};
pub use raster::{EdgePolicy, Raster};
pub use shape::{Basis, Covariance, ScaleVector, ShapeParams};
