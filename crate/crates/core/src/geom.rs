//! Small geometry vocabulary shared by every module.

/// Position in workspace coordinates, meters.
pub type Point3 = nalgebra::Point3<f64>;
/// Free vector (displacement, normal, force).
pub type Vec3 = nalgebra::Vector3<f64>;
/// 3×3 linear part of an affine map.
pub type Mat3 = nalgebra::Matrix3<f64>;

/// True when all three components are finite.
pub fn is_finite_point(p: &Point3) -> bool {
    p.coords.iter().all(|c| c.is_finite())
}

pub fn is_finite_vec(v: &Vec3) -> bool {
    v.iter().all(|c| c.is_finite())
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Aabb {
    pub min: Point3,
    pub max: Point3,
}

impl Aabb {
    /// Bounds of a non-empty point set. Returns `None` for an empty iterator.
    pub fn from_points<'a, I>(points: I) -> Option<Self>
    where
        I: IntoIterator<Item = &'a Point3>,
    {
        let mut it = points.into_iter();
        let first = *it.next()?;
        let mut bb = Aabb { min: first, max: first };
        for p in it {
            for axis in 0..3 {
                bb.min[axis] = bb.min[axis].min(p[axis]);
                bb.max[axis] = bb.max[axis].max(p[axis]);
            }
        }
        Some(bb)
    }

    pub fn contains(&self, p: &Point3) -> bool {
        (0..3).all(|a| self.min[a] <= p[a] && p[a] <= self.max[a])
    }

    pub fn center(&self) -> Point3 {
        nalgebra::center(&self.min, &self.max)
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }
}
