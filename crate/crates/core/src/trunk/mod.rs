//! Trunk modeling: cylinder, ellipse and convex-hull-slice fits around
//! breast height, fused into one diameter per stem.

mod cylinder;
mod ellipse;
mod estimate;
mod hull;
mod slice;

pub use cylinder::{ransac_cylinder, CylinderModel, RansacConfig};
pub use ellipse::{ls_ellipse, EllipseModel};
pub use estimate::{breast_height_section, estimate_dbh, Coverage, DbhConfig, DbhEstimate, DbhMethod, DetectionOnly};
pub use hull::{convex_hull, hull_dbh, HullPolygon};
pub use slice::{
    axis_from_normals, crop_breast_height, denoise_slice, derive_min_pts, orient_slice, project_along_axis,
    slice_bound, slice_index, slice_trunk, TrunkSlice, BREAST_HEIGHT, CROP_HIGH, CROP_LOW,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FitError {
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("degenerate hull: {0}")]
    DegenerateHull(String),
    #[error("no model: {0}")]
    NoModel(String),
    #[error("invalid argument: {0}")]
    Argument(String),
}
