//! Load a cloud (or synthesize a sphere), transform it and resample it onto
//! a lattice at a few scales.
//!
//! cargo run --release --example resample_cloud -- [cloud.xyz|cloud.ply]

use cloudtouch::cloud::{apply_transform, load_cloud_path, resample_to_lattice, AffineTransform, LatticeConfig};
use cloudtouch::geom::{Point3, Vec3};
use cloudtouch::oracle::{synth_sphere_cloud, SphereSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cloud = match std::env::args().nth(1) {
        Some(path) => load_cloud_path(path.as_ref())?,
        None => synth_sphere_cloud(&SphereSpec {
            center: Point3::origin(),
            radius: 0.025,
            sample_count: 50_000,
            seed: 1,
        })?,
    };
    let bb = cloud.bounds();
    println!("{} points, bounds {:?} .. {:?}", cloud.len(), bb.min, bb.max);

    let lattice = LatticeConfig::cube(bb.center(), 0.1, 300);
    for scale in [0.5, 1.0, 1.6, 2.0] {
        let t = AffineTransform::translation(-bb.center().coords)?
            .then(&AffineTransform::uniform_scaling(scale)?)
            .then(&AffineTransform::translation(bb.center().coords)?);
        let l = resample_to_lattice(&apply_transform(&cloud, &t)?, &lattice)?;
        println!(
            "scale {scale:>4}: {:>6} active voxels, {:.2} points/voxel, {} clipped",
            l.len(),
            l.represented_points() as f64 / l.len() as f64,
            l.discarded()
        );
    }

    // a rotation followed by its inverse gives the cloud back
    let r = AffineTransform::rotation(Vec3::new(1.0, 2.0, 3.0), 0.7)?;
    let back = apply_transform(&apply_transform(&cloud, &r)?, &r.inverse().expect("rotations invert"))?;
    let err = cloud
        .points()
        .iter()
        .zip(back.points())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    println!("rotation round trip: max error {err:.2e} m");
    Ok(())
}
