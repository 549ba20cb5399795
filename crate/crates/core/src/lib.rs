//! Distances between positive semidefinite matrices of different sizes and ranks.
//!
//! A PSD matrix is treated as a subspace (its range) together with a positive
//! definite operator on that subspace. Two such objects are compared through a
//! Grassmann distance between the ranges and a divergence between the fiber
//! representations, extended across dimensions by optimizing over ellipsoid
//! containment sets.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod divergence;
pub mod error;
pub mod geodistance;
pub mod geometry;
pub mod grassmann;
pub mod io;
pub mod linalg;
pub mod optim;
pub mod pointset;
pub mod qp;
pub mod scalar;
pub mod unitary;

pub use divergence::{divergence, BoundTransform, DivergenceKind, FiberDivergence};
pub use error::{Error, Result};
pub use geodistance::{gd, gd_faithful, pairwise_gram, EvalMode, GdOptions, GdResult, HausdorffMode, MetricSpec};
pub use grassmann::{grassmann_distance, GrassmannMetric};
pub use linalg::{PsdMatrix, Subspace, Tolerances};
pub use pointset::{PointSetValue, Side};
pub use scalar::{Field, Scalar};
