//! Point cloud ingestion, affine transforms and voxel-lattice resampling.
//!
//! The rendered geometry is never the raw cloud. Every transform re-runs the
//! whole pipeline (transform, bin, mean-filter) and produces a fresh
//! [`VoxelLattice`] that downstream code treats as immutable.

mod io;
mod lattice;
mod transform;

pub use io::{load_cloud, load_cloud_path, CloudFormat};
pub use lattice::{
    active_voxel_count, query_points_in_sphere, resample_to_lattice, ActiveVoxel, LatticeConfig,
    VoxelIndex, VoxelLattice,
};
pub use transform::{apply_transform, AffineTransform, TransformOp};

use crate::geom::{Aabb, Point3};

#[derive(Debug, thiserror::Error)]
pub enum CloudError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("point cloud contains no points")]
    EmptyCloud,
    #[error("no points fall inside the lattice ({discarded} discarded)")]
    EmptyLattice { discarded: usize },
    #[error("invalid lattice config: {0}")]
    InvalidLattice(String),
    #[error("invalid transform: {0}")]
    InvalidTransform(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Immutable set of 3D points with cached bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Point3>,
    bounds: Aabb,
}

impl PointCloud {
    /// Builds a cloud, rejecting empty input and non-finite coordinates.
    pub fn new(points: Vec<Point3>) -> Result<Self, CloudError> {
        if let Some(i) = points.iter().position(|p| !crate::geom::is_finite_point(p)) {
            return Err(CloudError::Parse {
                line: i + 1,
                message: "non-finite coordinate".into(),
            });
        }
        let bounds = Aabb::from_points(&points).ok_or(CloudError::EmptyCloud)?;
        Ok(Self { points, bounds })
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn bounds(&self) -> Aabb {
        self.bounds
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds_contain_every_point() {
        let cloud = PointCloud::new(vec![
            Point3::new(1.0, -2.0, 0.5),
            Point3::new(-1.0, 3.0, 0.0),
            Point3::new(0.0, 0.0, 4.0),
        ])
        .unwrap();
        let bb = cloud.bounds();
        assert!(cloud.points().iter().all(|p| bb.contains(p)));
        assert_eq!(bb.min, Point3::new(-1.0, -2.0, 0.0));
        assert_eq!(bb.max, Point3::new(1.0, 3.0, 4.0));
    }

    #[test]
    fn empty_is_rejected() {
        assert!(matches!(PointCloud::new(vec![]), Err(CloudError::EmptyCloud)));
    }
}
