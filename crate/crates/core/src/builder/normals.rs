//! PCA normal estimation oriented toward per-point sensor origins.

use crate::knn::KdTree3;
use crate::math::{symmetric_eigen_3x3, Mat3, Vec3};
use crate::scalar::Real;

/// k-NN PCA normals: the smallest-eigenvalue direction of the local
/// covariance, flipped toward the sensor origin that contributed the point.
/// Degenerate neighborhoods fall back to the direction toward the origin.
pub fn estimate_normals<T: Real>(
    points: &[Vec3<T>],
    k: usize,
    sensor_origins: &[Vec3<T>],
) -> Vec<Vec3<T>> {
    debug_assert_eq!(points.len(), sensor_origins.len());
    let tree = KdTree3::build(points);
    let mut out = Vec::with_capacity(points.len());
    for (i, &p) in points.iter().enumerate() {
        let toward_sensor = sensor_origins[i] - p;
        let fallback = toward_sensor
            .normalized()
            .unwrap_or(Vec3::new(T::zero(), T::zero(), T::one()));
        let neighbors = tree.k_nearest(p, (k + 1).min(points.len()));
        if neighbors.len() < 3 {
            out.push(fallback);
            continue;
        }
        let mut mean = Vec3::zero();
        for nb in &neighbors {
            mean += points[nb.index];
        }
        mean = mean / T::of_usize(neighbors.len());
        let mut cov: Mat3<T> = Mat3::zeros();
        for nb in &neighbors {
            let d = points[nb.index] - mean;
            let dd = [d.x, d.y, d.z];
            for r in 0..3 {
                for c in 0..3 {
                    cov.m[r][c] += dd[r] * dd[c];
                }
            }
        }
        let (vals, vecs) = symmetric_eigen_3x3(&cov);
        if !vals[0].is_finite() || vecs[0].norm_squared() < T::of(0.5) {
            out.push(fallback);
            continue;
        }
        let mut n = vecs[0];
        if n.dot(toward_sensor) < T::zero() {
            n = -n;
        }
        out.push(n.normalized().unwrap_or(fallback));
    }
    out
}
