use approx::assert_relative_eq;
use cloudtouch::cloud::{query_points_in_sphere, resample_to_lattice, AffineTransform, LatticeConfig, PointCloud};
use cloudtouch::density::scatter;
use cloudtouch::force::{compute_friction_scale, FrictionParams};
use cloudtouch::geom::{Point3, Vec3};
use cloudtouch::proxy::{compute_overshoot, compute_sinking_normal};
use proptest::prelude::*;

fn point(r: f64) -> impl Strategy<Value = Point3> {
    (-r..r, -r..r, -r..r).prop_map(|(x, y, z)| Point3::new(x, y, z))
}

fn cloud(r: f64, max: usize) -> impl Strategy<Value = Vec<Point3>> {
    prop::collection::vec(point(r), 2..max)
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn transform_round_trip(
        p in point(0.1),
        axis in point(1.0).prop_filter("axis", |a| a.coords.norm() > 1e-3),
        angle in -3.0..3.0f64,
        s in 0.2..5.0f64,
        t in point(0.5),
    ) {
        let m = AffineTransform::rotation(axis.coords, angle).unwrap()
            .then(&AffineTransform::uniform_scaling(s).unwrap())
            .then(&AffineTransform::translation(t.coords).unwrap());
        let back = m.inverse().unwrap().apply(&m.apply(&p));
        assert_relative_eq!(back, p, epsilon = 1e-12);
    }

    #[test]
    fn means_stay_in_their_voxels_and_points_are_conserved(points in cloud(0.06, 400)) {
        let config = LatticeConfig::cube(Point3::origin(), 0.1, 40);
        let c = PointCloud::new(points.clone()).unwrap();
        let Ok(lattice) = resample_to_lattice(&c, &config) else {
            // every point fell outside
            prop_assert!(points.iter().all(|p| config.voxel_of(p).is_none()));
            return Ok(());
        };
        prop_assert_eq!(lattice.represented_points() + lattice.discarded(), points.len());
        for v in lattice.voxels() {
            let b = config.voxel_box(v.index);
            for i in 0..3 {
                prop_assert!(v.mean[i] >= b.min[i] - 1e-15 && v.mean[i] <= b.max[i] + 1e-15);
            }
        }
    }

    #[test]
    fn sphere_query_matches_brute_force(points in cloud(0.05, 300), c in point(0.05), r in 0.001..0.05f64) {
        let config = LatticeConfig::cube(Point3::origin(), 0.1, 50);
        let lattice = resample_to_lattice(&PointCloud::new(points).unwrap(), &config).unwrap();
        let mut got = query_points_in_sphere(&lattice, &c, r);
        let mut want: Vec<Point3> = lattice.voxels().iter().map(|v| v.mean).filter(|m| (m - c).norm() < r).collect();
        let key = |p: &Point3| (p.x, p.y, p.z);
        got.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
        want.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
        prop_assert_eq!(got, want);
    }

    #[test]
    fn scatter_scales_with_the_cloud(points in cloud(0.05, 64), s in 0.1..10.0f64) {
        let scaled: Vec<Point3> = points.iter().map(|p| Point3::from(p.coords * s)).collect();
        assert_relative_eq!(scatter(&scaled).unwrap(), s * scatter(&points).unwrap(), max_relative = 1e-9);
    }

    #[test]
    fn single_point_pushes_proxy_away(p in point(1.0), r in 1.1..3.0f64, k in 0.01..0.5f64) {
        prop_assume!(p.coords.norm() > 1e-6 && p.coords.norm() < r);
        let c = Point3::origin();
        let v_n = compute_sinking_normal(&c, r, &[p]);
        prop_assert_eq!(Some(v_n), compute_overshoot(&c, r, &p));
        prop_assert!(((c + v_n * k) - p).norm() > (c - p).norm());
    }

    #[test]
    fn more_dynamic_friction_slides_less(
        tx in -1.0..1.0f64, ty in -1.0..1.0f64, depth in 0.01..1.0f64,
        mu_s in 0.0..1.0f64, a in 0.0..1.0f64, b in 0.0..1.0f64,
    ) {
        let v_h = Vec3::new(tx, ty, -depth);
        let n = Vec3::z();
        let (lo, hi) = (a.min(b) * mu_s, a.max(b) * mu_s);
        let scale = |mu_d| compute_friction_scale(&v_h, &n, &FrictionParams { mu_s, mu_d, enabled: true }, 300.0).0;
        prop_assert!(scale(hi) <= scale(lo));
        prop_assert!((0.0..=1.0).contains(&scale(hi)));
    }
}
