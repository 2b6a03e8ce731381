//! Analytic shapes with closed-form ray intersections and matching meshes.

use crate::geom::{Ray, RigidPose, TriangleMesh};
use crate::math::Vec3;
use crate::scalar::Real;

/// Intensity constant folded from the range-equation constants; chosen so
/// peak intensity is ~0.8 at R = 10 m with reflectance 1.
pub const LAMBERT_K: f64 = 80.0;

/// An analytic shape in its own object frame (centered at the origin).
#[derive(Clone, Copy, Debug)]
pub enum Shape<T> {
    Sphere { radius: T },
    Cuboid { half_extents: Vec3<T> },
}

/// Closed-form hit: ray parameter, world point, outward unit normal.
#[derive(Clone, Copy, Debug)]
pub struct AnalyticHit<T> {
    pub t: T,
    pub point: Vec3<T>,
    pub normal: Vec3<T>,
}

impl<T: Real> Shape<T> {
    /// Nearest positive intersection of a world-frame ray with the shape
    /// posed by `pose` (object -> world).
    pub fn intersect(&self, pose: &RigidPose<T>, ray: &Ray<T>) -> Option<AnalyticHit<T>> {
        let inv = pose.inverse();
        let o = inv.transform_point(ray.origin);
        let d = inv.transform_vector(ray.direction);
        let (t, normal_obj) = match self {
            Shape::Sphere { radius } => {
                let a = d.dot(d);
                let b = T::of(2.0) * o.dot(d);
                let c = o.dot(o) - *radius * *radius;
                let disc = b * b - T::of(4.0) * a * c;
                if disc < T::zero() {
                    return None;
                }
                let sq = disc.sqrt();
                let t0 = (-b - sq) / (T::of(2.0) * a);
                let t1 = (-b + sq) / (T::of(2.0) * a);
                let t_min = T::of(1e-9);
                let t = if t0 > t_min {
                    t0
                } else if t1 > t_min {
                    t1
                } else {
                    return None;
                };
                let p = o + d * t;
                (t, p / *radius)
            }
            Shape::Cuboid { half_extents } => {
                let mut t_near = T::neg_infinity();
                let mut t_far = T::infinity();
                let mut axis_near = 0usize;
                for axis in 0..3 {
                    let oc = o.component(axis);
                    let dc = d.component(axis);
                    let h = half_extents.component(axis);
                    if dc.abs() <= T::of(1e-300) {
                        if oc.abs() > h {
                            return None;
                        }
                        continue;
                    }
                    let inv_d = T::one() / dc;
                    let (mut lo, mut hi) = ((-h - oc) * inv_d, (h - oc) * inv_d);
                    if lo > hi {
                        std::mem::swap(&mut lo, &mut hi);
                    }
                    if lo > t_near {
                        t_near = lo;
                        axis_near = axis;
                    }
                    t_far = t_far.min(hi);
                    if t_near > t_far {
                        return None;
                    }
                }
                let t_min = T::of(1e-9);
                let (t, axis) = if t_near > t_min {
                    (t_near, axis_near)
                } else if t_far > t_min {
                    // Exit face; normal from the exit axis.
                    let p = o + d * t_far;
                    let mut best_axis = 0;
                    let mut best = T::neg_infinity();
                    for a in 0..3 {
                        let v = p.component(a).abs() / half_extents.component(a);
                        if v > best {
                            best = v;
                            best_axis = a;
                        }
                    }
                    (t_far, best_axis)
                } else {
                    return None;
                };
                let p = o + d * t;
                let mut n = Vec3::zero();
                let sign = if p.component(axis) >= T::zero() { T::one() } else { -T::one() };
                match axis {
                    0 => n.x = sign,
                    1 => n.y = sign,
                    _ => n.z = sign,
                }
                (t, n)
            }
        };
        Some(AnalyticHit {
            t,
            point: ray.point_at(t),
            normal: pose.transform_vector(normal_obj),
        })
    }

    /// Triangle mesh matching the analytic surface (vertices exactly on it).
    pub fn to_mesh(&self, resolution: usize) -> TriangleMesh<T> {
        match self {
            Shape::Sphere { radius } => uv_sphere(*radius, resolution.max(8)),
            Shape::Cuboid { half_extents } => cuboid_mesh(*half_extents, resolution.max(1)),
        }
    }

    /// Object-frame bounding dims (length, width, height).
    pub fn dims(&self) -> crate::placement::bbox::BoxDims<T> {
        match self {
            Shape::Sphere { radius } => {
                let d = *radius * T::of(2.0);
                crate::placement::bbox::BoxDims::new(d, d, d)
            }
            Shape::Cuboid { half_extents } => crate::placement::bbox::BoxDims::new(
                half_extents.x * T::of(2.0),
                half_extents.y * T::of(2.0),
                half_extents.z * T::of(2.0),
            ),
        }
    }
}

/// Lambertian range-equation intensity: `clamp(k rho cos(alpha) / R^2, 0, 1)`.
pub fn lambertian_intensity<T: Real>(rho: T, cos_alpha: T, range: T) -> T {
    (T::of(LAMBERT_K) * rho * cos_alpha / (range * range)).clamped(T::zero(), T::one())
}

fn uv_sphere<T: Real>(radius: T, resolution: usize) -> TriangleMesh<T> {
    let stacks = resolution;
    let slices = resolution * 2;
    let mut vertices = Vec::new();
    let mut normals = Vec::new();
    // Interior ring vertices plus two poles.
    for i in 1..stacks {
        let theta = T::PI() * T::of_usize(i) / T::of_usize(stacks);
        let (sin_t, cos_t) = theta.sin_cos();
        for j in 0..slices {
            let phi = T::PI() * T::of(2.0) * T::of_usize(j) / T::of_usize(slices);
            let (sin_p, cos_p) = phi.sin_cos();
            let n = Vec3::new(sin_t * cos_p, sin_t * sin_p, cos_t);
            vertices.push(n * radius);
            normals.push(n);
        }
    }
    let top = vertices.len() as u32;
    vertices.push(Vec3::new(T::zero(), T::zero(), radius));
    normals.push(Vec3::new(T::zero(), T::zero(), T::one()));
    let bottom = vertices.len() as u32;
    vertices.push(Vec3::new(T::zero(), T::zero(), -radius));
    normals.push(Vec3::new(T::zero(), T::zero(), -T::one()));
    let ring = |i: usize, j: usize| ((i - 1) * slices + (j % slices)) as u32;
    let mut triangles = Vec::new();
    for j in 0..slices {
        triangles.push([top, ring(1, j), ring(1, j + 1)]);
        triangles.push([bottom, ring(stacks - 1, j + 1), ring(stacks - 1, j)]);
    }
    for i in 1..stacks - 1 {
        for j in 0..slices {
            let a = ring(i, j);
            let b = ring(i, j + 1);
            let c = ring(i + 1, j);
            let d = ring(i + 1, j + 1);
            triangles.push([a, b, d]);
            triangles.push([a, d, c]);
        }
    }
    let n = triangles.len();
    TriangleMesh::new(vertices, triangles, normals, vec![true; n])
}

fn cuboid_mesh<T: Real>(half: Vec3<T>, subdivisions: usize) -> TriangleMesh<T> {
    let mut vertices = Vec::new();
    let mut normals = Vec::new();
    let mut triangles: Vec<[u32; 3]> = Vec::new();
    let n = subdivisions;
    // Six faces; duplicated vertices give each face its flat normal.
    let faces: [(Vec3<T>, Vec3<T>, Vec3<T>); 6] = [
        (Vec3::new(T::one(), T::zero(), T::zero()), Vec3::new(T::zero(), T::one(), T::zero()), Vec3::new(T::zero(), T::zero(), T::one())),
        (Vec3::new(-T::one(), T::zero(), T::zero()), Vec3::new(T::zero(), T::zero(), T::one()), Vec3::new(T::zero(), T::one(), T::zero())),
        (Vec3::new(T::zero(), T::one(), T::zero()), Vec3::new(T::zero(), T::zero(), T::one()), Vec3::new(T::one(), T::zero(), T::zero())),
        (Vec3::new(T::zero(), -T::one(), T::zero()), Vec3::new(T::one(), T::zero(), T::zero()), Vec3::new(T::zero(), T::zero(), T::one())),
        (Vec3::new(T::zero(), T::zero(), T::one()), Vec3::new(T::one(), T::zero(), T::zero()), Vec3::new(T::zero(), T::one(), T::zero())),
        (Vec3::new(T::zero(), T::zero(), -T::one()), Vec3::new(T::zero(), T::one(), T::zero()), Vec3::new(T::one(), T::zero(), T::zero())),
    ];
    for (normal, u_axis, v_axis) in faces {
        let base = vertices.len() as u32;
        let scale = |axis: Vec3<T>| {
            Vec3::new(axis.x * half.x, axis.y * half.y, axis.z * half.z)
        };
        let origin = scale(normal);
        for i in 0..=n {
            for j in 0..=n {
                let fu = T::of_usize(i) / T::of_usize(n) * T::of(2.0) - T::one();
                let fv = T::of_usize(j) / T::of_usize(n) * T::of(2.0) - T::one();
                vertices.push(origin + scale(u_axis) * fu + scale(v_axis) * fv);
                normals.push(normal);
            }
        }
        let idx = |i: usize, j: usize| base + (i * (n + 1) + j) as u32;
        for i in 0..n {
            for j in 0..n {
                triangles.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
                triangles.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
            }
        }
    }
    let count = triangles.len();
    TriangleMesh::new(vertices, triangles, normals, vec![true; count])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_intersection_closed_form() {
        let shape = Shape::Sphere { radius: 1.0f64 };
        let pose = RigidPose::from_yaw(0.0, Vec3::new(10.0, 0.0, 0.0));
        let ray = Ray::new(Vec3::zero(), Vec3::new(1.0, 0.0, 0.0));
        let hit = shape.intersect(&pose, &ray).unwrap();
        assert!((hit.t - 9.0).abs() < 1e-12);
        assert!((hit.normal - Vec3::new(-1.0, 0.0, 0.0)).norm() < 1e-12);
        let miss = Ray::new(Vec3::zero(), Vec3::new(0.0, 1.0, 0.0));
        assert!(shape.intersect(&pose, &miss).is_none());
    }

    #[test]
    fn cuboid_intersection_and_normal() {
        let shape = Shape::Cuboid { half_extents: Vec3::new(1.0f64, 2.0, 0.5) };
        let pose = RigidPose::from_yaw(0.0, Vec3::new(5.0, 0.0, 0.0));
        let ray = Ray::new(Vec3::zero(), Vec3::new(1.0, 0.0, 0.0));
        let hit = shape.intersect(&pose, &ray).unwrap();
        assert!((hit.t - 4.0).abs() < 1e-12);
        assert!((hit.normal - Vec3::new(-1.0, 0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn mesh_vertices_lie_on_analytic_surface() {
        let shape = Shape::Sphere { radius: 1.0f64 };
        let mesh = shape.to_mesh(24);
        mesh.validate().unwrap();
        for v in &mesh.vertices {
            assert!((v.norm() - 1.0).abs() < 1e-3);
        }
        let cuboid = Shape::Cuboid { half_extents: Vec3::new(1.0f64, 0.5, 0.25) };
        let mesh = cuboid.to_mesh(4);
        mesh.validate().unwrap();
        for v in &mesh.vertices {
            let onface = (v.x.abs() - 1.0).abs() < 1e-9
                || (v.y.abs() - 0.5).abs() < 1e-9
                || (v.z.abs() - 0.25).abs() < 1e-9;
            assert!(onface);
        }
    }

    #[test]
    fn lambertian_rules() {
        // Intensity halving by range doubling: quarters.
        let near = lambertian_intensity(1.0f64, 1.0, 10.0);
        let far = lambertian_intensity(1.0f64, 1.0, 20.0);
        assert!((near - 0.8).abs() < 1e-12);
        assert!((far - 0.2).abs() < 1e-12);
        // Clamped at 1 up close.
        assert_eq!(lambertian_intensity(1.0f64, 1.0, 1.0), 1.0);
    }

    #[test]
    fn analytic_and_mesh_agree_away_from_silhouette() {
        use crate::geom::{intersect_ray_mesh, Bvh, RayMode};
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let shape = Shape::Sphere { radius: 1.0f64 };
        let pose = RigidPose::from_yaw(0.3, Vec3::new(8.0, 1.0, -0.5));
        let mesh = shape.to_mesh(48).transformed(&pose);
        let bvh = Bvh::build(&mesh).unwrap();
        let voxel = 2.0 / 64.0;
        let mut rng = StdRng::seed_from_u64(8);
        let mut checked = 0;
        while checked < 500 {
            let dir = Vec3::new(
                rng.random_range(0.5..1.0),
                rng.random_range(-0.3..0.3),
                rng.random_range(-0.3..0.3),
            );
            let ray = Ray::new(Vec3::zero(), dir);
            let analytic = shape.intersect(&pose, &ray);
            // Skip silhouette-grazing rays (within 2 voxels of the rim).
            if let Some(h) = &analytic {
                let to_center = pose.translation - h.point;
                let d = ray.direction.normalized().unwrap();
                let grazing = to_center.cross(d).norm() > 1.0 - 2.0 * voxel;
                if grazing {
                    continue;
                }
            } else {
                // Distance from the center to the ray line.
                let d = ray.direction.normalized().unwrap();
                let miss_dist = pose.translation.cross(d).norm();
                if miss_dist < 1.0 + 2.0 * voxel {
                    continue;
                }
            }
            let mesh_hit = intersect_ray_mesh(&ray, &mesh, &bvh, RayMode::Lidar);
            match (&analytic, &mesh_hit) {
                (Some(a), Some(m)) => {
                    assert!((a.point - m.point).norm() < 2.0 * voxel);
                }
                (None, None) => {}
                other => panic!("analytic/mesh disagreement: {other:?}"),
            }
            checked += 1;
        }
    }
}
