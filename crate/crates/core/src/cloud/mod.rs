//! Point-cloud data model, file I/O and spatial queries.

mod kdtree;
mod ply;
mod xyz;

use std::fmt;
use std::path::{Path, PathBuf};

pub use kdtree::KdTree;

/// World point in meters.
pub type Point3 = nalgebra::Point3<f64>;

#[derive(Debug, thiserror::Error)]
pub enum CloudError {
    #[error("{path}: parse error at byte {offset}: {message}")]
    Parse {
        path: PathBuf,
        offset: u64,
        message: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("color list has {colors} entries for {points} points")]
    ColorLength { points: usize, colors: usize },
    #[error("invalid argument: {0}")]
    Argument(String),
}

impl CloudError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CloudError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Ordered list of points with optional per-point RGB.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    points: Vec<Point3>,
    colors: Option<Vec<[u8; 3]>>,
}

impl PointCloud {
    pub fn new(points: Vec<Point3>) -> Self {
        PointCloud {
            points,
            colors: None,
        }
    }

    pub fn with_colors(points: Vec<Point3>, colors: Vec<[u8; 3]>) -> Result<Self, CloudError> {
        if colors.len() != points.len() {
            return Err(CloudError::ColorLength {
                points: points.len(),
                colors: colors.len(),
            });
        }
        Ok(PointCloud {
            points,
            colors: Some(colors),
        })
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn colors(&self) -> Option<&[[u8; 3]]> {
        self.colors.as_deref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// New cloud holding the given indices, in the given order.
    pub fn select(&self, indices: &[usize]) -> PointCloud {
        PointCloud {
            points: indices.iter().map(|&i| self.points[i]).collect(),
            colors: self
                .colors
                .as_ref()
                .map(|c| indices.iter().map(|&i| c[i]).collect()),
        }
    }

    /// Concatenates two clouds. Colors survive only if both sides carry them.
    pub fn extend(&mut self, other: &PointCloud) {
        self.colors = match (self.colors.take(), other.colors.as_ref()) {
            (Some(mut a), Some(b)) => {
                a.extend_from_slice(b);
                Some(a)
            }
            _ => None,
        };
        self.points.extend_from_slice(&other.points);
    }

    /// Axis-aligned xy bounds `(min_x, min_y, max_x, max_y)`; `None` for an empty cloud.
    pub fn xy_bounds(&self) -> Option<(f64, f64, f64, f64)> {
        let first = self.points.first()?;
        let mut b = (first.x, first.y, first.x, first.y);
        for p in &self.points[1..] {
            b.0 = b.0.min(p.x);
            b.1 = b.1.min(p.y);
            b.2 = b.2.max(p.x);
            b.3 = b.3.max(p.y);
        }
        Some(b)
    }
}

impl FromIterator<Point3> for PointCloud {
    fn from_iter<I: IntoIterator<Item = Point3>>(iter: I) -> Self {
        PointCloud::new(iter.into_iter().collect())
    }
}

/// On-disk encodings understood by [`read_point_cloud`] / [`write_point_cloud`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloudFormat {
    /// PLY; read accepts ascii and binary little endian, write emits binary float64.
    Ply,
    /// PLY written as ascii text.
    PlyAscii,
    /// Whitespace separated `x y z` lines, `#` comments.
    XyzText,
}

impl CloudFormat {
    /// Guesses the format from a file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "ply" => Some(CloudFormat::Ply),
            "xyz" | "txt" => Some(CloudFormat::XyzText),
            _ => None,
        }
    }
}

impl fmt::Display for CloudFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CloudFormat::Ply => "ply",
            CloudFormat::PlyAscii => "ply-ascii",
            CloudFormat::XyzText => "xyz-text",
        })
    }
}

/// Result of reading a cloud file.
#[derive(Debug, Clone)]
pub struct LoadedCloud {
    pub cloud: PointCloud,
    /// Records dropped because a coordinate was NaN or infinite.
    pub skipped_non_finite: usize,
}

pub fn read_point_cloud(path: &Path, format: CloudFormat) -> Result<LoadedCloud, CloudError> {
    let bytes = std::fs::read(path).map_err(|e| CloudError::io(path, e))?;
    let loaded = match format {
        CloudFormat::Ply | CloudFormat::PlyAscii => ply::parse(&bytes),
        CloudFormat::XyzText => xyz::parse(&bytes),
    }
    .map_err(|(offset, message)| CloudError::Parse {
        path: path.to_path_buf(),
        offset,
        message,
    })?;
    if loaded.skipped_non_finite > 0 {
        log::warn!(
            "{}: skipped {} records with non-finite coordinates",
            path.display(),
            loaded.skipped_non_finite
        );
    }
    Ok(loaded)
}

pub fn write_point_cloud(
    cloud: &PointCloud,
    path: &Path,
    format: CloudFormat,
) -> Result<(), CloudError> {
    let bytes = match format {
        CloudFormat::Ply => ply::encode_binary(cloud),
        CloudFormat::PlyAscii => ply::encode_ascii(cloud),
        CloudFormat::XyzText => xyz::encode(cloud),
    };
    std::fs::write(path, bytes).map_err(|e| CloudError::io(path, e))
}

/// Immutable k-d tree over the points of a cloud.
#[derive(Debug, Clone)]
pub struct SpatialIndex {
    tree: KdTree<3>,
}

impl SpatialIndex {
    pub fn build(cloud: &PointCloud) -> Self {
        let coords = cloud.points().iter().map(|p| [p.x, p.y, p.z]).collect();
        SpatialIndex {
            tree: KdTree::build(coords),
        }
    }

    pub fn len(&self) -> usize {
        self.tree.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tree.is_empty()
    }

    /// Indices within Euclidean distance `r` (inclusive) of `query`, ascending.
    pub fn radius_search(&self, query: &Point3, r: f64) -> Result<Vec<usize>, CloudError> {
        self.tree.radius_search(&[query.x, query.y, query.z], r)
    }

    /// The `k` nearest indices ordered by distance, ties by lower index.
    pub fn knn(&self, query: &Point3, k: usize) -> Result<Vec<usize>, CloudError> {
        self.tree.knn(&[query.x, query.y, query.z], k)
    }
}

pub fn build_spatial_index(cloud: &PointCloud) -> SpatialIndex {
    SpatialIndex::build(cloud)
}
