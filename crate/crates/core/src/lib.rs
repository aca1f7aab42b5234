//! Curvature algebra, model hypersurfaces, discrete operators and time
//! integration for the r-mean curvature flow `∂X/∂t = σ_r N`.

pub mod error;
pub mod catalog;
pub mod flow;
pub mod gapcheck;
pub mod operators;
pub mod symfun;

pub use error::{Error, Result};
