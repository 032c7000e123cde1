//! Diameter-at-breast-height (DBH) estimation from forest point clouds.
//!
//! The pipeline filters terrain with a morphological ground filter, segments
//! trunk points into stems, and measures each stem with three models: a
//! RANSAC cylinder, a least-squares ellipse and a stack of convex-hull slices
//! that emulates a girth tape. Synthetic forests with exact girth truth and
//! inventory metrics (bias, RMSE, standard deviation) close the loop.

pub mod cloud;
pub mod ground;
pub mod segment;
pub mod synth;
pub mod metrics;
pub mod pipeline;
pub mod trunk;
