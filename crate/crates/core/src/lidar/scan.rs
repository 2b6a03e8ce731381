//! Scan simulation against pasted meshes and occlusion-based removal of
//! original points.

use crate::geom::{intersect_ray_mesh, Bvh, RayMode, RigidPose, SimilarityTransform, TriangleMesh};
use crate::impaste::camera::CameraRig;
use crate::impaste::image::{bilinear_sample, SourcePatch};
use crate::intensity::IntensityInterpolant;
use crate::lidar::{laser_ray, PointCloud, ScanPattern};
use crate::scalar::Real;

/// Tolerance band for occlusion removal: a point survives when the mesh hit
/// in front of it is closer than this (registration/mesh error allowance).
pub const EPS_OCCLUSION_M: f64 = 0.05;

/// Simulates the LiDAR sweep against a pasted mesh.
///
/// At every firing step all lasers of both blocks fire at the same azimuth.
/// A return is kept when the LiDAR-mode ray hits the mesh and the hit,
/// mapped back through the pasting transform and the object's source pose,
/// samples the instance mask above 0.5. Kept points get their intensity
/// from the interpolant. Output ordering is (firing step, laser index);
/// the result contains only the newly simulated points.
#[allow(clippy::too_many_arguments)]
pub fn simulate_scan<T: Real>(
    pattern: &ScanPattern<T>,
    mesh: &TriangleMesh<T>,
    bvh: &Bvh<T>,
    camera: &CameraRig<T>,
    mask: &SourcePatch<T>,
    interpolant: &IntensityInterpolant<T>,
    paste_t: &SimilarityTransform<T>,
    h0: &RigidPose<T>,
) -> PointCloud<T> {
    let mut out = PointCloud::with_capacity(1024);
    let Some((lo, hi)) = mesh.aabb() else {
        return out;
    };
    let arc = azimuth_arc(lo, hi, max_origin_offset(pattern));
    let steps = pattern.steps_per_revolution();
    for k in 0..steps {
        let phi = pattern.azimuth_at(k);
        if !arc.contains(phi) {
            continue;
        }
        for laser in &pattern.lasers {
            let ray = laser_ray(laser, phi, pattern.ray_length);
            let Some(hit) = intersect_ray_mesh(&ray, mesh, bvh, RayMode::Lidar) else {
                continue;
            };
            // Mask gate: back-project through the object frame into the
            // source camera.
            let p_obj = paste_t.inverse_point(hit.point);
            let p_src_sensor = h0.transform_point(p_obj);
            let Some((u, v, _)) = camera.project_sensor_point(p_src_sensor) else {
                continue;
            };
            let (_, m) = bilinear_sample(mask, u, v);
            if m <= T::of(0.5) {
                continue;
            }
            let range = (hit.point - ray.origin).norm();
            let dir = ray.direction.normalized().expect("laser ray direction");
            let cos_alpha = hit.interpolated_normal.dot(dir).abs();
            let intensity = interpolant.resample_intensity(p_obj, range, cos_alpha);
            out.push(hit.point, intensity);
        }
    }
    out
}

/// Removes points of `cloud` occluded by the mesh: a point `p` goes away
/// iff the LiDAR-mode ray from the sensor origin through `p` hits the mesh
/// at a distance smaller than `|p| - eps_occ`. Order and intensities of the
/// surviving points are untouched.
pub fn remove_occluded<T: Real>(
    cloud: &PointCloud<T>,
    mesh: &TriangleMesh<T>,
    bvh: &Bvh<T>,
) -> PointCloud<T> {
    let eps = T::of(EPS_OCCLUSION_M);
    cloud.filtered_by_index(|i| {
        let p = cloud.points[i];
        let range = p.norm();
        if range <= T::of(1e-9) {
            return true;
        }
        let ray = crate::geom::Ray::new(crate::math::Vec3::zero(), p);
        match intersect_ray_mesh(&ray, mesh, bvh, RayMode::Lidar) {
            // t is in multiples of |p|, so hit distance = t * range.
            Some(hit) => hit.t * range >= range - eps,
            None => true,
        }
    })
}

fn max_origin_offset<T: Real>(pattern: &ScanPattern<T>) -> T {
    let mut m = T::zero();
    for l in &pattern.lasers {
        m = m.max(l.h_offset.abs()).max(l.v_offset.abs());
    }
    m
}

/// Circular azimuth interval subtended by an AABB from the sensor origin,
/// padded for per-laser origin offsets. `full` fires every step.
struct AzimuthArc<T> {
    full: bool,
    center: T,
    half_width: T,
}

impl<T: Real> AzimuthArc<T> {
    fn contains(&self, phi: T) -> bool {
        if self.full {
            return true;
        }
        let two_pi = T::PI() * T::of(2.0);
        let mut d = (phi - self.center) % two_pi;
        if d > T::PI() {
            d -= two_pi;
        }
        if d < -T::PI() {
            d += two_pi;
        }
        d.abs() <= self.half_width
    }
}

fn azimuth_arc<T: Real>(lo: crate::math::Vec3<T>, hi: crate::math::Vec3<T>, origin_pad: T) -> AzimuthArc<T> {
    // Minimum BEV distance of the box; a box close to (or containing) the
    // origin subtends everything.
    let bev_lo_x = lo.x.max(T::zero()).min(hi.x.min(T::zero()).abs().max(lo.x));
    let _ = bev_lo_x;
    let closest_x = if lo.x > T::zero() {
        lo.x
    } else if hi.x < T::zero() {
        -hi.x
    } else {
        T::zero()
    };
    let closest_y = if lo.y > T::zero() {
        lo.y
    } else if hi.y < T::zero() {
        -hi.y
    } else {
        T::zero()
    };
    let bev_dist = (closest_x * closest_x + closest_y * closest_y).sqrt();
    if bev_dist <= origin_pad + T::of(0.5) {
        return AzimuthArc { full: true, center: T::zero(), half_width: T::zero() };
    }
    let corners = [
        (lo.x, lo.y),
        (lo.x, hi.y),
        (hi.x, lo.y),
        (hi.x, hi.y),
    ];
    let center_az = {
        let cx = (lo.x + hi.x) * T::of(0.5);
        let cy = (lo.y + hi.y) * T::of(0.5);
        cy.atan2(cx)
    };
    let mut half_width = T::zero();
    for (x, y) in corners {
        let az = y.atan2(x);
        let two_pi = T::PI() * T::of(2.0);
        let mut d = (az - center_az) % two_pi;
        if d > T::PI() {
            d -= two_pi;
        }
        if d < -T::PI() {
            d += two_pi;
        }
        half_width = half_width.max(d.abs());
    }
    // Pad for laser origin offsets plus one extra degree of slack.
    let pad = (origin_pad + T::of(0.3)) / bev_dist;
    AzimuthArc { full: false, center: center_az, half_width: half_width + pad.asin() + T::of(0.02) }
}
