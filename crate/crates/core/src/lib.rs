//! Numerical laboratory for curvature-dimension conditions, displacement
//! interpolation and Sobolev calculus on finite metric measure spaces.

// `!(x > 0.0)` style guards are deliberate: NaN must take the error branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod curvature;
pub mod curves;
pub mod error;
pub mod generators;
pub mod interpolation;
pub mod io;
pub mod report;
pub mod sobolev;
pub mod space;
pub mod transport;

pub use error::{Error, Result};
pub use space::{Edge, FiniteMetricMeasureSpace, RealFunction};
