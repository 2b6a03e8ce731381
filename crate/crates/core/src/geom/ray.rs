//! Rays and the Moller-Trumbore triangle intersection test.

use crate::math::Vec3;
use crate::scalar::Real;

/// Half-line `origin + t * direction`, `t > 0`. The direction need not be
/// unit length; `t` is measured in multiples of it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ray<T> {
    pub origin: Vec3<T>,
    pub direction: Vec3<T>,
}

impl<T: Real> Ray<T> {
    pub fn new(origin: Vec3<T>, direction: Vec3<T>) -> Self {
        Self { origin, direction }
    }

    pub fn is_valid(&self) -> bool {
        self.direction.norm_squared() > T::zero()
            && self.origin.is_finite()
            && self.direction.is_finite()
    }

    #[inline]
    pub fn point_at(&self, t: T) -> Vec3<T> {
        self.origin + self.direction * t
    }
}

/// Intersection record for a ray-mesh query.
#[derive(Clone, Copy, Debug)]
pub struct RayHit<T> {
    /// Ray parameter (multiple of the direction vector), strictly positive.
    pub t: T,
    pub point: Vec3<T>,
    /// Barycentric blend of the vertex normals, renormalized.
    pub interpolated_normal: Vec3<T>,
    pub triangle_index: usize,
}

/// Whether a query follows camera or LiDAR visibility rules.
///
/// LiDAR rays pass through triangles flagged `lidar_visible = false`
/// (glass); camera rays treat every triangle as a candidate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RayMode {
    Camera,
    Lidar,
}

/// Self-intersection guard: hits closer than this distance (in meters along
/// the ray) are rejected.
pub const RAY_EPSILON_M: f64 = 1e-6;

/// Minimum ray parameter corresponding to [`RAY_EPSILON_M`] for a given ray.
#[inline]
pub fn min_ray_parameter<T: Real>(ray: &Ray<T>) -> T {
    T::of(RAY_EPSILON_M) / ray.direction.norm()
}

/// Moller-Trumbore ray/triangle intersection.
///
/// Hits both face sides. Returns `(t, u, v)` with barycentric coordinates of
/// the hit, or `None` for misses, near-parallel rays and hits below `t_min`.
#[inline]
pub fn intersect_ray_triangle<T: Real>(
    ray: &Ray<T>,
    v0: Vec3<T>,
    v1: Vec3<T>,
    v2: Vec3<T>,
    t_min: T,
) -> Option<(T, T, T)> {
    let e1 = v1 - v0;
    let e2 = v2 - v0;
    let pvec = ray.direction.cross(e2);
    let det = e1.dot(pvec);
    // Scale-aware parallel/degenerate rejection.
    let eps = T::of(1e-14) * ray.direction.norm() * e1.norm().max(e2.norm()).max(T::of(1e-30));
    if det.abs() <= eps {
        return None;
    }
    let inv_det = T::one() / det;
    let tvec = ray.origin - v0;
    let u = tvec.dot(pvec) * inv_det;
    if u < T::zero() || u > T::one() {
        return None;
    }
    let qvec = tvec.cross(e1);
    let v = ray.direction.dot(qvec) * inv_det;
    if v < T::zero() || u + v > T::one() {
        return None;
    }
    let t = e2.dot(qvec) * inv_det;
    if t <= t_min {
        return None;
    }
    Some((t, u, v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perpendicular_hit_at_unit_distance() {
        let ray = Ray::new(Vec3::<f64>::new(0.25, 0.25, -1.0), Vec3::new(0.0, 0.0, 1.0));
        let (t, u, v) = intersect_ray_triangle(
            &ray,
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            min_ray_parameter(&ray),
        )
        .unwrap();
        assert!((t - 1.0).abs() < 1e-12);
        assert!((u - 0.25).abs() < 1e-12);
        assert!((v - 0.25).abs() < 1e-12);
    }

    #[test]
    fn outside_misses() {
        let ray = Ray::new(Vec3::<f64>::new(2.0, 2.0, -1.0), Vec3::new(0.0, 0.0, 1.0));
        assert!(intersect_ray_triangle(
            &ray,
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            min_ray_parameter(&ray),
        )
        .is_none());
    }

    #[test]
    fn backface_hits() {
        let ray = Ray::new(Vec3::<f64>::new(0.25, 0.25, 1.0), Vec3::new(0.0, 0.0, -1.0));
        assert!(intersect_ray_triangle(
            &ray,
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            min_ray_parameter(&ray),
        )
        .is_some());
    }

    #[test]
    fn self_intersection_guard() {
        // Origin exactly on the triangle plane: the epsilon guard rejects.
        let ray = Ray::new(Vec3::<f64>::new(0.25, 0.25, 0.0), Vec3::new(0.0, 0.0, 1.0));
        assert!(intersect_ray_triangle(
            &ray,
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            min_ray_parameter(&ray),
        )
        .is_none());
    }
}
