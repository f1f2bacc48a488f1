//! Numerical laboratory for minimal graphs in `M × ℝ` over Riemannian chart
//! metrics.

// `!(a < b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod barrier;
pub mod corpus;
pub mod discrete;
pub mod error;
pub mod estimates;
pub mod geometry;
pub mod mesh;
pub mod metric;
pub mod oracle;
pub mod solver;
pub mod stencil;

pub use error::{Error, Result};
pub use mesh::{Mesh, ScalarField};
pub use metric::{ChartMetric, CurvatureBounds, Warp};
