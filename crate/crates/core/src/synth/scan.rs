//! Analytic scan and image generation for oracle fixtures.

use crate::geom::{Ray, RigidPose};
use crate::impaste::camera::CameraRig;
use crate::impaste::image::ImageBuf;
use crate::lidar::{laser_ray, PointCloud, ScanPattern};
use crate::math::Vec3;
use crate::scalar::Real;
use crate::synth::shapes::{lambertian_intensity, AnalyticHit, Shape};

/// One posed shape with a Lambertian reflectance.
#[derive(Clone, Copy, Debug)]
pub struct SceneShape<T> {
    pub shape: Shape<T>,
    pub pose: RigidPose<T>,
    pub rho: T,
}

/// Ground reflectance used by drive fixtures.
pub const GROUND_RHO: f64 = 0.3;

/// Nearest analytic hit among the shapes and an optional ground plane.
pub fn intersect_scene<T: Real>(
    shapes: &[SceneShape<T>],
    ground_z: Option<T>,
    ray: &Ray<T>,
) -> Option<(AnalyticHit<T>, Option<usize>, T)> {
    let mut best: Option<(AnalyticHit<T>, Option<usize>, T)> = None;
    for (i, s) in shapes.iter().enumerate() {
        if let Some(hit) = s.shape.intersect(&s.pose, ray) {
            if best.as_ref().map_or(true, |(b, _, _)| hit.t < b.t) {
                best = Some((hit, Some(i), s.rho));
            }
        }
    }
    if let Some(gz) = ground_z {
        if ray.direction.z.abs() > T::of(1e-12) {
            let t = (gz - ray.origin.z) / ray.direction.z;
            if t > T::of(1e-9) && best.as_ref().map_or(true, |(b, _, _)| t < b.t) {
                let hit = AnalyticHit {
                    t,
                    point: ray.point_at(t),
                    normal: Vec3::new(T::zero(), T::zero(), T::one()),
                };
                best = Some((hit, None, T::of(GROUND_RHO)));
            }
        }
    }
    best
}

/// Simulates one full sweep against a single posed shape, intensities from
/// the Lambertian range equation (closed form, no mesh involved).
pub fn make_lambertian_scan<T: Real>(
    shape: &Shape<T>,
    pose: &RigidPose<T>,
    pattern: &ScanPattern<T>,
    rho: T,
) -> PointCloud<T> {
    let shapes = [SceneShape { shape: *shape, pose: *pose, rho }];
    make_scene_scan(&shapes, None, pattern)
}

/// Simulates one full sweep over several shapes plus an optional ground
/// plane.
pub fn make_scene_scan<T: Real>(
    shapes: &[SceneShape<T>],
    ground_z: Option<T>,
    pattern: &ScanPattern<T>,
) -> PointCloud<T> {
    let mut cloud = PointCloud::with_capacity(4096);
    for k in 0..pattern.steps_per_revolution() {
        let phi = pattern.azimuth_at(k);
        for laser in &pattern.lasers {
            let ray = laser_ray(laser, phi, pattern.ray_length);
            let Some((hit, _, rho)) = intersect_scene(shapes, ground_z, &ray) else {
                continue;
            };
            let range = (hit.point - ray.origin).norm();
            let dir = ray.direction.normalized().expect("laser direction");
            let cos_alpha = hit.normal.dot(dir).abs();
            cloud.push(hit.point, lambertian_intensity(rho, cos_alpha, range));
        }
    }
    cloud
}

/// Flat-shaded rendering of the analytic scene plus per-shape binary masks.
///
/// Object color is a smooth function of the surface normal (bilinear
/// resampling of it stays accurate); ground and sky are flat colors.
pub fn render_scene_image<T: Real>(
    shapes: &[SceneShape<T>],
    ground_z: Option<T>,
    rig: &CameraRig<T>,
) -> (ImageBuf<T>, Vec<Vec<T>>) {
    let (w, h) = (rig.model.image_width as usize, rig.model.image_height as usize);
    let mut image = ImageBuf::filled(w, h, [T::of(0.55), T::of(0.65), T::of(0.8)]);
    let mut masks = vec![vec![T::zero(); w * h]; shapes.len()];
    let caster = rig.sensor_ray_caster().expect("validated camera");
    for y in 0..h {
        for x in 0..w {
            let ray = caster.ray(T::of_usize(x), T::of_usize(y));
            let Some((hit, shape_index, _)) = intersect_scene(shapes, ground_z, &ray) else {
                continue;
            };
            match shape_index {
                Some(i) => {
                    let n = hit.normal;
                    let half = T::of(0.5);
                    image.set_pixel(
                        x,
                        y,
                        [
                            half + half * n.x * T::of(0.8),
                            half + half * n.y * T::of(0.8),
                            half + half * n.z * T::of(0.8),
                        ],
                    );
                    masks[i][y * w + x] = T::one();
                }
                None => {
                    image.set_pixel(x, y, [T::of(0.35), T::of(0.33), T::of(0.3)]);
                }
            }
        }
    }
    (image, masks)
}

/// KITTI-like synthetic rig: camera 0.27 m forward / 0.08 m up of the
/// LiDAR, looking along sensor +x, 640x480 at 500 px focal length.
pub fn synthetic_rig<T: Real>() -> CameraRig<T> {
    use crate::impaste::camera::CameraModel;
    use crate::math::Mat3;
    let rot = Mat3::from_rows(
        [T::zero(), -T::one(), T::zero()],
        [T::zero(), T::zero(), -T::one()],
        [T::one(), T::zero(), T::zero()],
    );
    let center = Vec3::new(T::of(0.27), T::zero(), T::of(0.08));
    let t = -rot.mul_vec(center);
    CameraRig::new(
        CameraModel::pinhole(T::of(500.0), T::of(500.0), T::of(320.0), T::of(240.0), 640, 480)
            .expect("pinhole"),
        RigidPose::new(rot, t),
    )
}

/// The matching synthetic calibration document (object dialect).
pub fn synthetic_calib_text() -> String {
    let rig_rot = [[0.0, -1.0, 0.0], [0.0, 0.0, -1.0], [1.0, 0.0, 0.0]];
    let center = [0.27, 0.0, 0.08];
    let mut t = [0.0; 3];
    for i in 0..3 {
        t[i] = -(rig_rot[i][0] * center[0] + rig_rot[i][1] * center[1] + rig_rot[i][2] * center[2]);
    }
    format!(
        "P2: 500 0 320 0 0 500 240 0 0 0 1 0\nR0_rect: 1 0 0 0 1 0 0 0 1\nTr_velo_to_cam: {} {} {} {} {} {} {} {} {} {} {} {}\n",
        rig_rot[0][0], rig_rot[0][1], rig_rot[0][2], t[0],
        rig_rot[1][0], rig_rot[1][1], rig_rot[1][2], t[1],
        rig_rot[2][0], rig_rot[2][1], rig_rot[2][2], t[2],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_point_has_unit_cos() {
        // Sphere straight ahead: the nearest return has cos(alpha) = 1, so
        // its intensity equals k rho / R^2 exactly.
        let shape = Shape::Sphere { radius: 1.0f64 };
        let pose = RigidPose::from_yaw(0.0, Vec3::new(10.0, 0.0, 0.0));
        let pattern = ScanPattern::ideal_grid(9, -0.2, 0.2, 0.01, 100.0);
        let cloud = make_lambertian_scan(&shape, &pose, &pattern, 1.0);
        assert!(!cloud.is_empty());
        let mut best = (f64::INFINITY, 0.0);
        for (i, p) in cloud.points.iter().enumerate() {
            if p.norm() < best.0 {
                best = (p.norm(), cloud.intensity[i]);
            }
        }
        let expected = crate::synth::shapes::LAMBERT_K * 1.0 / (9.0 * 9.0);
        assert!((best.1 - expected).abs() < 1e-9, "{} vs {expected}", best.1);
    }

    #[test]
    fn doubling_range_quarters_intensity() {
        let pattern = ScanPattern::ideal_grid(1, 0.0, 0.0, 0.5, 100.0);
        let near = make_lambertian_scan(
            &Shape::Cuboid { half_extents: Vec3::new(0.1, 5.0, 5.0) },
            &RigidPose::from_yaw(0.0, Vec3::new(10.1, 0.0, 0.0)),
            &pattern,
            1.0f64,
        );
        let far = make_lambertian_scan(
            &Shape::Cuboid { half_extents: Vec3::new(0.1, 5.0, 5.0) },
            &RigidPose::from_yaw(0.0, Vec3::new(20.1, 0.0, 0.0)),
            &pattern,
            1.0f64,
        );
        let i_near = near
            .points
            .iter()
            .zip(&near.intensity)
            .find(|(p, _)| (p.x - 10.0).abs() < 1e-6 && p.y.abs() < 1e-9)
            .map(|(_, i)| *i)
            .unwrap();
        let i_far = far
            .points
            .iter()
            .zip(&far.intensity)
            .find(|(p, _)| (p.x - 20.0).abs() < 1e-6 && p.y.abs() < 1e-9)
            .map(|(_, i)| *i)
            .unwrap();
        assert!((i_near / i_far - 4.0).abs() < 1e-9);
    }

    #[test]
    fn rendered_mask_matches_silhouette() {
        let rig = synthetic_rig::<f64>();
        let shapes = [SceneShape {
            shape: Shape::Sphere { radius: 1.0 },
            pose: RigidPose::from_yaw(0.0, Vec3::new(10.0, 0.0, 0.0)),
            rho: 1.0,
        }];
        let (image, masks) = render_scene_image(&shapes, Some(-1.73), &rig);
        assert_eq!(image.width, 640);
        let coverage: f64 = masks[0].iter().sum();
        // r/d * f = 1/10 * 500 = 50 px radius -> ~7850 px.
        assert!(coverage > 6500.0 && coverage < 9000.0, "coverage {coverage}");
        // The calibration text reproduces the rig.
        let calib: crate::io::FrameCalibration<f64> =
            crate::io::parse_calib(&synthetic_calib_text()).unwrap();
        let rig2 = calib.camera_rig(640, 480).unwrap();
        let p = Vec3::new(12.0, 1.0, -0.5);
        let (u1, v1, _) = rig.project_sensor_point(p).unwrap();
        let (u2, v2, _) = rig2.project_sensor_point(p).unwrap();
        assert!((u1 - u2).abs() < 1e-9 && (v1 - v2).abs() < 1e-9);
    }
}
