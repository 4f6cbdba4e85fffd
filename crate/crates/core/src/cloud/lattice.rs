use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use super::{CloudError, PointCloud};
use crate::geom::{Aabb, Point3, Vec3};

/// Integer voxel coordinates `(ix, iy, iz)`.
pub type VoxelIndex = [u32; 3];

/// Regular grid placement. Voxel `(0,0,0)` has its min corner at `origin`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeConfig {
    pub dims: [u32; 3],
    pub spacing: f64,
    pub origin: Point3,
}

impl Default for LatticeConfig {
    /// 300³ voxels spanning the unit cube centred on the origin.
    fn default() -> Self {
        Self {
            dims: [300, 300, 300],
            spacing: 1.0 / 300.0,
            origin: Point3::new(-0.5, -0.5, -0.5),
        }
    }
}

impl LatticeConfig {
    /// A `dims`³ lattice whose world box is the cube of edge `edge` centred at `center`.
    pub fn cube(center: Point3, edge: f64, dims: u32) -> Self {
        Self {
            dims: [dims; 3],
            spacing: edge / dims as f64,
            origin: center - Vec3::repeat(edge / 2.0),
        }
    }

    pub fn validate(&self) -> Result<(), CloudError> {
        if self.dims.contains(&0) {
            return Err(CloudError::InvalidLattice("dims must all be >= 1".into()));
        }
        if !(self.spacing.is_finite() && self.spacing > 0.0) {
            return Err(CloudError::InvalidLattice("spacing must be positive".into()));
        }
        if !crate::geom::is_finite_point(&self.origin) {
            return Err(CloudError::InvalidLattice("origin must be finite".into()));
        }
        Ok(())
    }

    /// World-space box covered by the whole lattice.
    pub fn world_box(&self) -> Aabb {
        let max = Point3::from(Vec3::from_fn(|a, _| {
            self.origin[a] + self.dims[a] as f64 * self.spacing
        }));
        Aabb { min: self.origin, max }
    }

    /// Closed world-space box of one voxel.
    pub fn voxel_box(&self, idx: VoxelIndex) -> Aabb {
        let lo = |a: usize, i: u32| self.origin[a] + i as f64 * self.spacing;
        Aabb {
            min: Point3::new(lo(0, idx[0]), lo(1, idx[1]), lo(2, idx[2])),
            max: Point3::new(lo(0, idx[0] + 1), lo(1, idx[1] + 1), lo(2, idx[2] + 1)),
        }
    }

    fn axis_lo(&self, axis: usize, i: i64) -> f64 {
        self.origin[axis] + i as f64 * self.spacing
    }

    /// Unclamped integer cell along one axis, consistent with [`Self::voxel_box`].
    fn axis_cell(&self, axis: usize, v: f64) -> i64 {
        let mut i = ((v - self.origin[axis]) / self.spacing).floor() as i64;
        // repair the rare off-by-one between the division and the box edges
        if v < self.axis_lo(axis, i) {
            i -= 1;
        } else if v > self.axis_lo(axis, i + 1) {
            i += 1;
        }
        i
    }

    /// Voxel containing `p`, or `None` when `p` lies outside the lattice.
    /// A point exactly on a max face of the lattice goes to the last voxel.
    pub fn voxel_of(&self, p: &Point3) -> Option<VoxelIndex> {
        let mut idx = [0u32; 3];
        for a in 0..3 {
            let v = p[a];
            let mut i = self.axis_cell(a, v);
            let n = self.dims[a] as i64;
            if i == n && v <= self.axis_lo(a, n) {
                i = n - 1;
            }
            if i < 0 || i >= n {
                return None;
            }
            idx[a] = i as u32;
        }
        Some(idx)
    }

    /// Inclusive voxel index range along `axis` overlapping `[lo, hi]`, clipped to the lattice.
    fn axis_range(&self, axis: usize, lo: f64, hi: f64) -> Option<(u32, u32)> {
        let n = self.dims[axis] as i64;
        let a = self.axis_cell(axis, lo).max(0);
        let b = self.axis_cell(axis, hi).min(n - 1);
        if a > b || a >= n || b < 0 {
            None
        } else {
            Some((a as u32, b as u32))
        }
    }
}

/// One occupied voxel: the mean of the points binned into it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActiveVoxel {
    pub index: VoxelIndex,
    pub mean: Point3,
    pub count: u32,
}

/// Sparse mean-filtered resampling of a cloud.
///
/// Voxels are stored sorted by index, so iteration order (and every result
/// derived from it) is deterministic.
#[derive(Debug, Clone)]
pub struct VoxelLattice {
    config: LatticeConfig,
    voxels: Vec<ActiveVoxel>,
    lookup: FxHashMap<VoxelIndex, u32>,
    discarded: usize,
}

impl VoxelLattice {
    /// A lattice with no active voxels.
    pub fn empty(config: LatticeConfig) -> Self {
        Self {
            config,
            voxels: Vec::new(),
            lookup: FxHashMap::default(),
            discarded: 0,
        }
    }

    pub fn config(&self) -> &LatticeConfig {
        &self.config
    }

    pub fn voxels(&self) -> &[ActiveVoxel] {
        &self.voxels
    }

    pub fn get(&self, idx: VoxelIndex) -> Option<&ActiveVoxel> {
        self.lookup.get(&idx).map(|&i| &self.voxels[i as usize])
    }

    /// Points that fell outside the lattice box during resampling.
    pub fn discarded(&self) -> usize {
        self.discarded
    }

    pub fn len(&self) -> usize {
        self.voxels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.voxels.is_empty()
    }

    /// Total number of input points represented by the active voxels.
    pub fn represented_points(&self) -> usize {
        self.voxels.iter().map(|v| v.count as usize).sum()
    }

    /// Every `stride`-th mean, for previews. `stride` of 0 is treated as 1.
    pub fn decimated_means(&self, stride: usize) -> impl Iterator<Item = Point3> + '_ {
        self.voxels.iter().step_by(stride.max(1)).map(|v| v.mean)
    }

    /// Calls `f` with every mean strictly closer than `radius` to `center`.
    ///
    /// Only voxels overlapping the sphere are visited: columns whose xy
    /// rectangle misses the sphere are skipped and the z range of each
    /// column is cut to the sphere's chord.
    pub fn for_each_in_sphere<F: FnMut(&Point3)>(&self, center: &Point3, radius: f64, mut f: F) {
        if self.voxels.is_empty() || !(radius > 0.0) {
            return;
        }
        let cfg = &self.config;
        let r2 = radius * radius;
        let Some((x0, x1)) = cfg.axis_range(0, center.x - radius, center.x + radius) else {
            return;
        };
        let Some((y0, y1)) = cfg.axis_range(1, center.y - radius, center.y + radius) else {
            return;
        };
        let gap = |axis: usize, i: u32| -> f64 {
            let lo = cfg.axis_lo(axis, i as i64);
            let hi = cfg.axis_lo(axis, i as i64 + 1);
            let c = center[axis];
            if c < lo {
                lo - c
            } else if c > hi {
                c - hi
            } else {
                0.0
            }
        };
        for ix in x0..=x1 {
            let gx = gap(0, ix);
            let gx2 = gx * gx;
            if gx2 >= r2 {
                continue;
            }
            for iy in y0..=y1 {
                let gy = gap(1, iy);
                let gxy2 = gx2 + gy * gy;
                if gxy2 >= r2 {
                    continue;
                }
                let half = (r2 - gxy2).sqrt();
                let Some((z0, z1)) = cfg.axis_range(2, center.z - half, center.z + half) else {
                    continue;
                };
                for iz in z0..=z1 {
                    if let Some(&slot) = self.lookup.get(&[ix, iy, iz]) {
                        let mean = &self.voxels[slot as usize].mean;
                        if (mean - center).norm_squared() < r2 {
                            f(mean);
                        }
                    }
                }
            }
        }
    }

    /// Up to `k` means nearest to `center` within `max_radius`, nearest first.
    ///
    /// Searches voxel shells of growing Chebyshev radius around the voxel
    /// containing `center` and stops once the k-th best candidate is closer
    /// than anything an unvisited shell could hold.
    pub fn nearest_means(&self, center: &Point3, k: usize, max_radius: f64) -> Vec<Point3> {
        if k == 0 || self.voxels.is_empty() || !(max_radius > 0.0) {
            return Vec::new();
        }
        let cfg = &self.config;
        let s = cfg.spacing;
        let c = [
            cfg.axis_cell(0, center.x),
            cfg.axis_cell(1, center.y),
            cfg.axis_cell(2, center.z),
        ];
        let dims = cfg.dims.map(|d| d as i64);
        let max_r2 = max_radius * max_radius;
        let max_shell = (max_radius / s).ceil() as i64 + 1;
        // (distance², voxel slot); slot order breaks ties deterministically
        let mut found: Vec<(f64, u32)> = Vec::new();

        let visit = |ix: i64, iy: i64, iz: i64, found: &mut Vec<(f64, u32)>| {
            if ix < 0 || iy < 0 || iz < 0 || ix >= dims[0] || iy >= dims[1] || iz >= dims[2] {
                return;
            }
            if let Some(&slot) = self.lookup.get(&[ix as u32, iy as u32, iz as u32]) {
                let d2 = (self.voxels[slot as usize].mean - center).norm_squared();
                if d2 <= max_r2 {
                    found.push((d2, slot));
                }
            }
        };

        for n in 0..=max_shell {
            for dx in -n..=n {
                for dy in -n..=n {
                    let on_face = dx.abs() == n || dy.abs() == n;
                    if on_face {
                        for dz in -n..=n {
                            visit(c[0] + dx, c[1] + dy, c[2] + dz, &mut found);
                        }
                    } else {
                        visit(c[0] + dx, c[1] + dy, c[2] - n, &mut found);
                        if n > 0 {
                            visit(c[0] + dx, c[1] + dy, c[2] + n, &mut found);
                        }
                    }
                }
            }
            if found.len() >= k {
                // anything in shell n+1 or beyond is at least n voxel edges away
                let reach = n as f64 * s;
                let mut d2s: Vec<f64> = found.iter().map(|f| f.0).collect();
                let (_, kth, _) = d2s.select_nth_unstable_by(k - 1, f64::total_cmp);
                if *kth <= reach * reach {
                    break;
                }
            }
        }
        found.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        found.truncate(k);
        found
            .into_iter()
            .map(|(_, slot)| self.voxels[slot as usize].mean)
            .collect()
    }
}

/// Bins every point into its voxel and keeps the per-voxel mean.
///
/// Points outside the lattice box are dropped and counted in
/// [`VoxelLattice::discarded`].
pub fn resample_to_lattice(
    cloud: &PointCloud,
    config: &LatticeConfig,
) -> Result<VoxelLattice, CloudError> {
    config.validate()?;
    let mut acc: FxHashMap<VoxelIndex, (Vec3, u32)> = FxHashMap::default();
    let mut discarded = 0usize;
    for p in cloud.points() {
        match config.voxel_of(p) {
            Some(idx) => {
                let e = acc.entry(idx).or_insert((Vec3::zeros(), 0));
                e.0 += p.coords;
                e.1 += 1;
            }
            None => discarded += 1,
        }
    }
    if acc.is_empty() {
        return Err(CloudError::EmptyLattice { discarded });
    }
    let mut voxels: Vec<ActiveVoxel> = acc
        .into_iter()
        .map(|(index, (sum, count))| {
            let raw = Point3::from(sum / count as f64);
            // rounding in the sum can push the mean a few ulps past a face
            let bx = config.voxel_box(index);
            let mean = Point3::from(Vec3::from_fn(|a, _| raw[a].clamp(bx.min[a], bx.max[a])));
            ActiveVoxel { index, mean, count }
        })
        .collect();
    voxels.sort_unstable_by_key(|v| v.index);
    let lookup = voxels
        .iter()
        .enumerate()
        .map(|(i, v)| (v.index, i as u32))
        .collect();
    Ok(VoxelLattice {
        config: *config,
        voxels,
        lookup,
        discarded,
    })
}

/// Means strictly inside the sphere, in lattice order.
pub fn query_points_in_sphere(lattice: &VoxelLattice, center: &Point3, radius: f64) -> Vec<Point3> {
    let mut out = Vec::new();
    lattice.for_each_in_sphere(center, radius, |p| out.push(*p));
    out
}

pub fn active_voxel_count(lattice: &VoxelLattice) -> usize {
    lattice.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud(points: &[[f64; 3]]) -> PointCloud {
        PointCloud::new(points.iter().map(|p| Point3::from(*p)).collect()).unwrap()
    }

    fn unit_config(spacing: f64, dims: u32) -> LatticeConfig {
        LatticeConfig {
            dims: [dims; 3],
            spacing,
            origin: Point3::origin(),
        }
    }

    #[test]
    fn two_points_one_voxel_mean() {
        let cfg = unit_config(0.04, 10);
        let lat = resample_to_lattice(&cloud(&[[0.01, 0.0, 0.0], [0.03, 0.0, 0.0]]), &cfg).unwrap();
        assert_eq!(active_voxel_count(&lat), 1);
        let v = lat.voxels()[0];
        assert_eq!(v.count, 2);
        assert!((v.mean - Point3::new(0.02, 0.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn one_point_per_voxel() {
        let pts = [[0.05, 0.05, 0.05], [0.15, 0.05, 0.05], [0.05, 0.25, 0.95]];
        let lat = resample_to_lattice(&cloud(&pts), &unit_config(0.1, 10)).unwrap();
        assert_eq!(lat.len(), pts.len());
        for p in pts {
            let idx = lat.config().voxel_of(&Point3::from(p)).unwrap();
            assert_eq!(lat.get(idx).unwrap().mean, Point3::from(p));
        }
    }

    #[test]
    fn max_face_goes_to_last_voxel() {
        let cfg = unit_config(0.1, 10);
        let far = Point3::new(1.0, 1.0, 1.0);
        assert_eq!(cfg.voxel_of(&far), Some([9, 9, 9]));
        assert_eq!(cfg.voxel_of(&Point3::new(1.0 + 1e-9, 0.5, 0.5)), None);
        assert_eq!(cfg.voxel_of(&Point3::new(-1e-12, 0.5, 0.5)), None);
        assert_eq!(cfg.voxel_of(&Point3::origin()), Some([0, 0, 0]));
    }

    #[test]
    fn outside_points_discarded_and_counted() {
        let cfg = unit_config(0.1, 10);
        let lat = resample_to_lattice(&cloud(&[[0.5, 0.5, 0.5], [2.0, 0.0, 0.0], [-1.0, 0.0, 0.0]]), &cfg)
            .unwrap();
        assert_eq!(lat.discarded(), 2);
        assert_eq!(lat.represented_points() + lat.discarded(), 3);
    }

    #[test]
    fn all_outside_is_error() {
        let cfg = unit_config(0.1, 10);
        let err = resample_to_lattice(&cloud(&[[5.0, 5.0, 5.0]]), &cfg).unwrap_err();
        assert!(matches!(err, CloudError::EmptyLattice { discarded: 1 }));
    }

    #[test]
    fn invalid_config() {
        let c = cloud(&[[0.0, 0.0, 0.0]]);
        let mut cfg = unit_config(0.1, 10);
        cfg.dims = [0, 1, 1];
        assert!(resample_to_lattice(&c, &cfg).is_err());
        let cfg = unit_config(0.0, 10);
        assert!(resample_to_lattice(&c, &cfg).is_err());
    }

    #[test]
    fn empty_lattice_counts_zero() {
        let lat = VoxelLattice::empty(LatticeConfig::default());
        assert_eq!(active_voxel_count(&lat), 0);
        assert!(query_points_in_sphere(&lat, &Point3::origin(), 1.0).is_empty());
    }

    #[test]
    fn query_free_space_and_strict_boundary() {
        let cfg = unit_config(0.25, 4);
        let lat = resample_to_lattice(&cloud(&[[0.5, 0.5, 0.5]]), &cfg).unwrap();
        assert!(query_points_in_sphere(&lat, &Point3::new(0.1, 0.1, 0.1), 0.05).is_empty());
        // mean at distance exactly 0.25 from the centre
        let c = Point3::new(0.25, 0.5, 0.5);
        assert!(query_points_in_sphere(&lat, &c, 0.25).is_empty());
        assert_eq!(query_points_in_sphere(&lat, &c, 0.25 + 1e-12).len(), 1);
    }

    #[test]
    fn query_centre_outside_lattice() {
        let cfg = unit_config(0.1, 10);
        let lat = resample_to_lattice(&cloud(&[[0.01, 0.5, 0.5]]), &cfg).unwrap();
        let hits = query_points_in_sphere(&lat, &Point3::new(-0.05, 0.5, 0.5), 0.1);
        assert_eq!(hits.len(), 1);
    }

    #[test]
    fn nearest_means_ordering() {
        let cfg = unit_config(0.1, 10);
        let pts: Vec<[f64; 3]> = (0..10).map(|i| [0.05 + 0.1 * i as f64, 0.05, 0.05]).collect();
        let lat = resample_to_lattice(&cloud(&pts), &cfg).unwrap();
        let near = lat.nearest_means(&Point3::new(0.0, 0.05, 0.05), 3, 10.0);
        let xs: Vec<f64> = near.iter().map(|p| p.x).collect();
        assert_eq!(xs.len(), 3);
        assert!((xs[0] - 0.05).abs() < 1e-12);
        assert!((xs[1] - 0.15).abs() < 1e-12);
        assert!((xs[2] - 0.25).abs() < 1e-12);
        // bounded search radius
        assert_eq!(lat.nearest_means(&Point3::new(0.0, 0.05, 0.05), 5, 0.16).len(), 2);
    }
}
