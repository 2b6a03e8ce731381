//! Projective camera model (3x4 matrix) and its mounting in the sensor frame.

use serde::{Deserialize, Serialize};

use crate::geom::{Ray, RigidPose};
use crate::impaste::ImpasteError;
use crate::math::{Mat3, Vec3};
use crate::scalar::Real;

/// Pinhole camera `[u', v', w']^T = P [x, y, z, 1]^T`, pixels = `(u'/w', v'/w')`,
/// depth = `w'`. Points are expressed in the camera's own frame.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CameraModel<T> {
    /// Row-major 3x4 projection matrix (pixels).
    pub p: [[T; 4]; 3],
    pub image_width: u32,
    pub image_height: u32,
}

impl<T: Real> CameraModel<T> {
    pub fn new(p: [[T; 4]; 3], image_width: u32, image_height: u32) -> Result<Self, ImpasteError> {
        let cam = Self { p, image_width, image_height };
        cam.validate()?;
        Ok(cam)
    }

    /// Simple pinhole constructor: focal lengths, principal point.
    pub fn pinhole(fx: T, fy: T, cx: T, cy: T, width: u32, height: u32) -> Result<Self, ImpasteError> {
        let z = T::zero();
        Self::new(
            [[fx, z, cx, z], [z, fy, cy, z], [z, z, T::one(), z]],
            width,
            height,
        )
    }

    pub fn validate(&self) -> Result<(), ImpasteError> {
        if !(self.p[0][0] > T::zero() && self.p[1][1] > T::zero()) {
            return Err(ImpasteError::InvalidCamera("focal entries must be positive"));
        }
        if self.intrinsic_block().inverse().is_none() {
            return Err(ImpasteError::InvalidCamera("singular intrinsic block"));
        }
        for row in &self.p {
            for v in row {
                if !v.is_finite() {
                    return Err(ImpasteError::InvalidCamera("non-finite projection entry"));
                }
            }
        }
        Ok(())
    }

    /// Left 3x3 block of `P`.
    pub fn intrinsic_block(&self) -> Mat3<T> {
        Mat3::from_rows(
            [self.p[0][0], self.p[0][1], self.p[0][2]],
            [self.p[1][0], self.p[1][1], self.p[1][2]],
            [self.p[2][0], self.p[2][1], self.p[2][2]],
        )
    }

    fn fourth_column(&self) -> Vec3<T> {
        Vec3::new(self.p[0][3], self.p[1][3], self.p[2][3])
    }

    /// Projects a camera-frame point; `None` signals a point at or behind
    /// the camera (`w' <= 0`).
    #[inline]
    pub fn project(&self, point: Vec3<T>) -> Option<(T, T, T)> {
        let m = self.intrinsic_block();
        let h = m.mul_vec(point) + self.fourth_column();
        if h.z <= T::zero() {
            return None;
        }
        Some((h.x / h.z, h.y / h.z, h.z))
    }

    /// Ray through pixel `(u, v)` (subpixel values allowed): origin at the
    /// camera center, direction such that reprojection lands on `(u, v)`.
    pub fn pixel_ray(&self, u: T, v: T) -> Result<Ray<T>, ImpasteError> {
        let m_inv = self
            .intrinsic_block()
            .inverse()
            .ok_or(ImpasteError::InvalidCamera("singular intrinsic block"))?;
        let origin = -m_inv.mul_vec(self.fourth_column());
        let direction = m_inv.mul_vec(Vec3::new(u, v, T::one()));
        Ok(Ray::new(origin, direction))
    }

    /// Precomputes the inverse for per-pixel ray generation.
    pub fn ray_caster(&self) -> Result<PixelRayCaster<T>, ImpasteError> {
        let m_inv = self
            .intrinsic_block()
            .inverse()
            .ok_or(ImpasteError::InvalidCamera("singular intrinsic block"))?;
        let origin = -m_inv.mul_vec(self.fourth_column());
        Ok(PixelRayCaster { m_inv, origin })
    }

    pub fn contains_pixel(&self, u: T, v: T) -> bool {
        u >= T::zero()
            && v >= T::zero()
            && u <= T::of_usize(self.image_width as usize - 1)
            && v <= T::of_usize(self.image_height as usize - 1)
    }
}

/// Cached `M^-1` for casting many pixel rays cheaply.
#[derive(Clone, Copy, Debug)]
pub struct PixelRayCaster<T> {
    m_inv: Mat3<T>,
    origin: Vec3<T>,
}

impl<T: Real> PixelRayCaster<T> {
    #[inline]
    pub fn ray(&self, u: T, v: T) -> Ray<T> {
        Ray::new(self.origin, self.m_inv.mul_vec(Vec3::new(u, v, T::one())))
    }

    pub fn center(&self) -> Vec3<T> {
        self.origin
    }
}

/// A camera model plus its mounting pose (sensor frame -> camera frame).
///
/// The engine keeps meshes and point clouds in the LiDAR/sensor frame; this
/// pairing projects sensor-frame points and casts pixel rays back into the
/// sensor frame.
#[derive(Clone, Debug)]
pub struct CameraRig<T> {
    pub model: CameraModel<T>,
    /// Transforms sensor-frame points into the camera frame.
    pub sensor_to_camera: RigidPose<T>,
}

impl<T: Real> CameraRig<T> {
    pub fn new(model: CameraModel<T>, sensor_to_camera: RigidPose<T>) -> Self {
        Self { model, sensor_to_camera }
    }

    /// A rig whose camera frame coincides with the sensor frame.
    pub fn colocated(model: CameraModel<T>) -> Self {
        Self { model, sensor_to_camera: RigidPose::identity() }
    }

    #[inline]
    pub fn project_sensor_point(&self, p: Vec3<T>) -> Option<(T, T, T)> {
        self.model.project(self.sensor_to_camera.transform_point(p))
    }

    /// Pixel ray expressed in the sensor frame.
    pub fn sensor_ray_caster(&self) -> Result<SensorRayCaster<T>, ImpasteError> {
        let caster = self.model.ray_caster()?;
        Ok(SensorRayCaster { caster, camera_to_sensor: self.sensor_to_camera.inverse() })
    }

    /// Camera center expressed in the sensor frame.
    pub fn camera_center_in_sensor(&self) -> Vec3<T> {
        let caster = self.model.ray_caster().expect("validated camera");
        self.sensor_to_camera.inverse().transform_point(caster.center())
    }
}

/// Pixel-ray generator producing sensor-frame rays.
#[derive(Clone, Copy, Debug)]
pub struct SensorRayCaster<T> {
    caster: PixelRayCaster<T>,
    camera_to_sensor: RigidPose<T>,
}

impl<T: Real> SensorRayCaster<T> {
    #[inline]
    pub fn ray(&self, u: T, v: T) -> Ray<T> {
        let r = self.caster.ray(u, v);
        Ray::new(
            self.camera_to_sensor.transform_point(r.origin),
            self.camera_to_sensor.transform_vector(r.direction),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pinhole_axis_projection() {
        let cam = CameraModel::<f64>::pinhole(1.0, 1.0, 0.0, 0.0, 100, 100).unwrap();
        let (u, v, depth) = cam.project(Vec3::new(0.0, 0.0, 2.0)).unwrap();
        assert_eq!((u, v), (0.0, 0.0));
        assert_eq!(depth, 2.0);
    }

    #[test]
    fn offset_principal_point() {
        let cam = CameraModel::<f64>::pinhole(700.0, 700.0, 600.0, 180.0, 1242, 375).unwrap();
        let (u, v, depth) = cam.project(Vec3::new(1.0, 0.0, 10.0)).unwrap();
        assert!((u - 670.0).abs() < 1e-12);
        assert!((v - 180.0).abs() < 1e-12);
        assert!((depth - 10.0).abs() < 1e-12);
    }

    #[test]
    fn behind_camera_is_signaled() {
        let cam = CameraModel::<f64>::pinhole(1.0, 1.0, 0.0, 0.0, 10, 10).unwrap();
        assert!(cam.project(Vec3::new(0.0, 0.0, -1.0)).is_none());
        assert!(cam.project(Vec3::new(0.0, 0.0, 0.0)).is_none());
    }

    #[test]
    fn pixel_ray_round_trips() {
        let cam = CameraModel::<f64>::pinhole(700.0, 650.0, 600.0, 180.0, 1242, 375).unwrap();
        for (u, v) in [(0.0, 0.0), (600.0, 180.0), (1241.0, 374.0), (87.25, 312.5)] {
            let ray = cam.pixel_ray(u, v).unwrap();
            // Intersect the plane z = 5 and reproject.
            let t = (5.0 - ray.origin.z) / ray.direction.z;
            let p = ray.point_at(t);
            let (u2, v2, _) = cam.project(p).unwrap();
            assert!((u2 - u).abs() < 1e-6 && (v2 - v).abs() < 1e-6, "({u},{v}) vs ({u2},{v2})");
        }
    }

    #[test]
    fn translated_camera_round_trips() {
        // Nonzero fourth column: P = K [I | t].
        let k = [[500.0, 0.0, 320.0], [0.0, 500.0, 240.0], [0.0, 0.0, 1.0]];
        let t = [0.06, -0.02, 0.3];
        let mut p = [[0.0; 4]; 3];
        for i in 0..3 {
            for j in 0..3 {
                p[i][j] = k[i][j];
            }
            p[i][3] = k[i][0] * t[0] + k[i][1] * t[1] + k[i][2] * t[2];
        }
        let cam = CameraModel::<f64>::new(p, 640, 480).unwrap();
        let ray = cam.pixel_ray(100.0, 200.0).unwrap();
        let tq = (4.0 - ray.origin.z) / ray.direction.z;
        let (u2, v2, _) = cam.project(ray.point_at(tq)).unwrap();
        assert!((u2 - 100.0).abs() < 1e-6 && (v2 - 200.0).abs() < 1e-6);
    }

    #[test]
    fn principal_point_looks_down_optical_axis() {
        let cam = CameraModel::<f64>::pinhole(500.0, 500.0, 320.0, 240.0, 640, 480).unwrap();
        let ray = cam.pixel_ray(320.0, 240.0).unwrap();
        let dir = ray.direction.normalized().unwrap();
        assert!((dir - Vec3::new(0.0, 0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn rejects_bad_cameras() {
        assert!(CameraModel::<f64>::pinhole(-1.0, 1.0, 0.0, 0.0, 10, 10).is_err());
        let singular = [[1.0, 0.0, 0.0, 0.0], [2.0, 0.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]];
        assert!(CameraModel::<f64>::new(singular, 10, 10).is_err());
    }

    #[test]
    fn rig_projects_through_mounting_pose() {
        // Camera looks along sensor +x: x_cam = -y_s, y_cam = -z_s, z_cam = x_s.
        let rot = Mat3::from_rows([0.0, -1.0, 0.0], [0.0, 0.0, -1.0], [1.0, 0.0, 0.0]);
        let rig = CameraRig::new(
            CameraModel::<f64>::pinhole(500.0, 500.0, 320.0, 240.0, 640, 480).unwrap(),
            RigidPose::new(rot, Vec3::zero()),
        );
        let (u, v, depth) = rig.project_sensor_point(Vec3::new(10.0, 0.0, 0.0)).unwrap();
        assert!((u - 320.0).abs() < 1e-9 && (v - 240.0).abs() < 1e-9);
        assert!((depth - 10.0).abs() < 1e-12);
        let caster = rig.sensor_ray_caster().unwrap();
        let ray = caster.ray(320.0, 240.0);
        let dir = ray.direction.normalized().unwrap();
        assert!((dir - Vec3::new(1.0, 0.0, 0.0)).norm() < 1e-12);
        assert!(rig.camera_center_in_sensor().norm() < 1e-12);
    }
}
