//! Local density estimation and the adaptive proxy radius.
//!
//! Sparse regions get a large proxy so it cannot slip between samples; dense
//! regions get a small one so it can feel detail. The radius is
//! `clamp(β·b, r1, r2)` where `b` is the Gaussian-kernel rule-of-thumb
//! bandwidth of the neighbourhood around the proxy.

use serde::{Deserialize, Serialize};

use crate::cloud::VoxelLattice;
use crate::geom::{Point3, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityConfig {
    /// Radius-to-bandwidth scale factor β.
    pub beta: f64,
    /// Smallest radius, meters.
    pub r1: f64,
    /// Largest radius, meters.
    pub r2: f64,
    /// Neighbours used for the local spread estimate.
    pub neighborhood_k: usize,
    /// Proxy travel, meters, before the radius is re-estimated.
    pub recompute_threshold: f64,
}

impl DensityConfig {
    /// Defaults scaled to a lattice of the given voxel `spacing`.
    pub fn for_spacing(spacing: f64) -> Self {
        Self {
            beta: 6.0,
            r1: 1.5 * spacing,
            r2: 10.0 * spacing,
            neighborhood_k: 32,
            recompute_threshold: 0.5 * spacing,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.r1 > 0.0 && self.r1 < self.r2 && self.r2.is_finite()) {
            return Err(format!("need 0 < r1 < r2, got r1={} r2={}", self.r1, self.r2));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(format!("beta must be positive, got {}", self.beta));
        }
        if self.neighborhood_k < 2 {
            return Err(format!("neighborhood_k must be >= 2, got {}", self.neighborhood_k));
        }
        if !(self.recompute_threshold >= 0.0 && self.recompute_threshold.is_finite()) {
            return Err("recompute_threshold must be non-negative".into());
        }
        Ok(())
    }
}

/// Scalar spread of a point set: the square root of the mean per-axis
/// variance about the centroid. `None` for fewer than two points.
pub fn scatter(points: &[Point3]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    // shift by the first point so coincident input gives exactly zero
    let base = points[0];
    let centroid = points.iter().fold(Vec3::zeros(), |acc, p| acc + (p - base)) / n;
    let sum_sq: f64 = points
        .iter()
        .map(|p| ((p - base) - centroid).norm_squared())
        .sum();
    Some((sum_sq / (3.0 * n)).sqrt())
}

/// Spread σ̂ of the `k` means nearest to `center`, searched out to
/// `search_radius`. Returns `(σ̂, n)` with `n ≤ k` the neighbours found, or
/// `None` when fewer than two were found.
pub fn local_std_dev(
    lattice: &VoxelLattice,
    center: &Point3,
    k: usize,
    search_radius: f64,
) -> Option<(f64, usize)> {
    let near = lattice.nearest_means(center, k, search_radius);
    scatter(&near).map(|s| (s, near.len()))
}

/// Normal-reference bandwidth `1.06 σ̂ n^(−1/5)`.
pub fn bandwidth(sigma_hat: f64, n: usize) -> f64 {
    1.06 * sigma_hat * (n.max(1) as f64).powf(-0.2)
}

pub fn adaptive_radius(b: f64, config: &DensityConfig) -> f64 {
    (config.beta * b).clamp(config.r1, config.r2)
}

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
pub fn gaussian_kernel(u: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * u * u).exp()
}

/// Gaussian kernel density estimate at `x` with bandwidth `b`.
pub fn kernel_density(x: f64, samples: &[f64], b: f64) -> f64 {
    debug_assert!(b > 0.0 && !samples.is_empty());
    let sum: f64 = samples.iter().map(|xi| gaussian_kernel((x - xi) / b)).sum();
    sum / (samples.len() as f64 * b)
}

/// Result of one radius estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiusEstimate {
    pub sigma_hat: f64,
    pub neighbors: usize,
    pub bandwidth: f64,
    pub radius: f64,
}

/// Full pipeline: neighbourhood spread → bandwidth → clamped radius.
///
/// The search stops at `2·r2`: a proxy in contact sits up to `r2` off the
/// surface, and the bound keeps the cost finite in free space.
pub fn estimate_radius(
    lattice: &VoxelLattice,
    center: &Point3,
    config: &DensityConfig,
) -> Option<RadiusEstimate> {
    let (sigma_hat, neighbors) =
        local_std_dev(lattice, center, config.neighborhood_k, 2.0 * config.r2)?;
    let b = bandwidth(sigma_hat, neighbors);
    Some(RadiusEstimate {
        sigma_hat,
        neighbors,
        bandwidth: b,
        radius: adaptive_radius(b, config),
    })
}
