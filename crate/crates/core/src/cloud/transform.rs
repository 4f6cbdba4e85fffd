use serde::{Deserialize, Serialize};

use super::{CloudError, PointCloud};
use crate::geom::{Mat3, Point3, Vec3};

/// `x ↦ linear · x + translation`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineTransform {
    pub linear: Mat3,
    pub translation: Vec3,
}

const ORTHONORMAL_TOL: f64 = 1e-9;

impl Default for AffineTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl AffineTransform {
    pub fn identity() -> Self {
        Self {
            linear: Mat3::identity(),
            translation: Vec3::zeros(),
        }
    }

    /// Diagonal scaling; every factor must be positive and finite.
    pub fn scaling(factors: Vec3) -> Result<Self, CloudError> {
        if factors.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
            return Err(CloudError::InvalidTransform(format!(
                "scale factors must be positive and finite, got {:?}",
                factors.as_slice()
            )));
        }
        Ok(Self {
            linear: Mat3::from_diagonal(&factors),
            translation: Vec3::zeros(),
        })
    }

    pub fn uniform_scaling(s: f64) -> Result<Self, CloudError> {
        Self::scaling(Vec3::repeat(s))
    }

    /// Rotation by `angle` radians about `axis` (need not be unit length).
    pub fn rotation(axis: Vec3, angle: f64) -> Result<Self, CloudError> {
        let axis = nalgebra::Unit::try_new(axis, 1e-12).ok_or_else(|| {
            CloudError::InvalidTransform("rotation axis must be non-zero".into())
        })?;
        if !angle.is_finite() {
            return Err(CloudError::InvalidTransform("rotation angle must be finite".into()));
        }
        Ok(Self {
            linear: *nalgebra::Rotation3::from_axis_angle(&axis, angle).matrix(),
            translation: Vec3::zeros(),
        })
    }

    pub fn translation(offset: Vec3) -> Result<Self, CloudError> {
        if !crate::geom::is_finite_vec(&offset) {
            return Err(CloudError::InvalidTransform("translation must be finite".into()));
        }
        Ok(Self {
            linear: Mat3::identity(),
            translation: offset,
        })
    }

    pub fn apply(&self, p: &Point3) -> Point3 {
        Point3::from(self.linear * p.coords + self.translation)
    }

    /// The transform that applies `self` first, then `next`.
    pub fn then(&self, next: &AffineTransform) -> AffineTransform {
        AffineTransform {
            linear: next.linear * self.linear,
            translation: next.linear * self.translation + next.translation,
        }
    }

    pub fn inverse(&self) -> Option<AffineTransform> {
        let inv = self.linear.try_inverse()?;
        Some(AffineTransform {
            linear: inv,
            translation: -(inv * self.translation),
        })
    }

    /// ‖Tᵀ T − I‖ within tolerance.
    pub fn is_orthonormal(&self) -> bool {
        (self.linear.transpose() * self.linear - Mat3::identity()).norm() <= ORTHONORMAL_TOL
    }

    pub fn is_positive_diagonal(&self) -> bool {
        (0..3).all(|r| {
            (0..3).all(|c| {
                if r == c {
                    self.linear[(r, c)] > 0.0
                } else {
                    self.linear[(r, c)] == 0.0
                }
            })
        })
    }

    /// Finite entries and a non-singular linear part.
    pub fn validate(&self) -> Result<(), CloudError> {
        if self.linear.iter().any(|v| !v.is_finite()) || !crate::geom::is_finite_vec(&self.translation)
        {
            return Err(CloudError::InvalidTransform("entries must be finite".into()));
        }
        if self.linear.determinant().abs() < 1e-12 {
            return Err(CloudError::InvalidTransform("linear part is singular".into()));
        }
        Ok(())
    }
}

/// One step of a transform pipeline, as written in config files and sent by
/// viewers. Pipelines apply left to right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum TransformOp {
    Scale { factors: [f64; 3] },
    Rotate { axis: [f64; 3], angle_deg: f64 },
    Translate { offset_m: [f64; 3] },
}

impl TransformOp {
    pub fn to_affine(&self) -> Result<AffineTransform, CloudError> {
        match self {
            TransformOp::Scale { factors } => AffineTransform::scaling(Vec3::from(*factors)),
            TransformOp::Rotate { axis, angle_deg } => {
                AffineTransform::rotation(Vec3::from(*axis), angle_deg.to_radians())
            }
            TransformOp::Translate { offset_m } => AffineTransform::translation(Vec3::from(*offset_m)),
        }
    }

    /// Collapses a pipeline into one affine map.
    pub fn compose(ops: &[TransformOp]) -> Result<AffineTransform, CloudError> {
        ops.iter()
            .try_fold(AffineTransform::identity(), |acc, op| Ok(acc.then(&op.to_affine()?)))
    }
}

/// Returns a new cloud with every point mapped through `t`.
pub fn apply_transform(cloud: &PointCloud, t: &AffineTransform) -> Result<PointCloud, CloudError> {
    t.validate()?;
    let points = cloud.points().iter().map(|p| t.apply(p)).collect();
    PointCloud::new(points)
}
