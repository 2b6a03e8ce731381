//! Rigid body poses (SO(3) rotation + translation) with exp/log maps on SE(3).

use serde::{Deserialize, Serialize};

use crate::math::{Mat3, Vec3};
use crate::scalar::Real;

/// A rigid transform `p' = R p + t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RigidPose<T> {
    pub rotation: Mat3<T>,
    pub translation: Vec3<T>,
}

impl<T: Real> RigidPose<T> {
    pub fn identity() -> Self {
        Self { rotation: Mat3::identity(), translation: Vec3::zero() }
    }

    pub fn new(rotation: Mat3<T>, translation: Vec3<T>) -> Self {
        Self { rotation, translation }
    }

    /// Pure yaw rotation about +z plus a translation.
    pub fn from_yaw(yaw: T, translation: Vec3<T>) -> Self {
        Self { rotation: Mat3::rotation_z(yaw), translation }
    }

    /// Checks `R^T R = I` (max-abs entry error) and `det R = +1`.
    pub fn orthonormality_error(&self) -> T {
        self.rotation.orthonormality_error()
    }

    pub fn is_valid(&self, tol: T) -> bool {
        self.orthonormality_error() <= tol
            && (self.rotation.det() - T::one()).abs() <= tol * T::of(10.0)
            && self.translation.is_finite()
    }

    /// `self` applied after `rhs`: `(self * rhs)(p) = self(rhs(p))`.
    pub fn compose(&self, rhs: &Self) -> Self {
        Self {
            rotation: self.rotation.mul_mat(&rhs.rotation),
            translation: self.rotation.mul_vec(rhs.translation) + self.translation,
        }
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self { rotation: rt, translation: -rt.mul_vec(self.translation) }
    }

    #[inline]
    pub fn transform_point(&self, p: Vec3<T>) -> Vec3<T> {
        self.rotation.mul_vec(p) + self.translation
    }

    #[inline]
    pub fn transform_vector(&self, v: Vec3<T>) -> Vec3<T> {
        self.rotation.mul_vec(v)
    }

    /// Exponential map: twist `(rho, phi)` in R^6 to a pose.
    pub fn exp_se3(rho: Vec3<T>, phi: Vec3<T>) -> Self {
        let rotation = Mat3::exp_so3(phi);
        let v = left_jacobian(phi);
        Self { rotation, translation: v.mul_vec(rho) }
    }

    /// Logarithm map: pose to twist `(rho, phi)`.
    pub fn log_se3(&self) -> (Vec3<T>, Vec3<T>) {
        let phi = self.rotation.log_so3();
        let v_inv = left_jacobian_inverse(phi);
        (v_inv.mul_vec(self.translation), phi)
    }

    /// Linear translation + geodesic rotation blend, `s` in [0, 1].
    pub fn interpolate(&self, other: &Self, s: T) -> Self {
        let translation = self.translation.lerp(other.translation, s);
        let delta = self.rotation.transpose().mul_mat(&other.rotation);
        let w = delta.log_so3();
        let rotation = self.rotation.mul_mat(&Mat3::exp_so3(w * s));
        Self { rotation, translation }
    }

    pub fn cast<U: Real>(&self) -> RigidPose<U> {
        let mut rotation = Mat3::<U>::zeros();
        for i in 0..3 {
            for j in 0..3 {
                rotation.m[i][j] = U::of(self.rotation.m[i][j].as_f64());
            }
        }
        RigidPose { rotation, translation: self.translation.cast() }
    }
}

/// SO(3) left Jacobian, the `V` matrix of the SE(3) exponential.
fn left_jacobian<T: Real>(phi: Vec3<T>) -> Mat3<T> {
    let theta = phi.norm();
    let hat = Mat3::hat(phi);
    let hat2 = hat.mul_mat(&hat);
    let (a, b) = if theta < T::of(1e-6) {
        let t2 = theta * theta;
        (
            T::of(0.5) - t2 / T::of(24.0),
            T::of(1.0 / 6.0) - t2 / T::of(120.0),
        )
    } else {
        let t2 = theta * theta;
        (
            (T::one() - theta.cos()) / t2,
            (theta - theta.sin()) / (t2 * theta),
        )
    };
    let mut v = Mat3::identity();
    for i in 0..3 {
        for j in 0..3 {
            v.m[i][j] += a * hat.m[i][j] + b * hat2.m[i][j];
        }
    }
    v
}

fn left_jacobian_inverse<T: Real>(phi: Vec3<T>) -> Mat3<T> {
    let theta = phi.norm();
    let hat = Mat3::hat(phi);
    let hat2 = hat.mul_mat(&hat);
    let b = if theta < T::of(1e-6) {
        let t2 = theta * theta;
        T::of(1.0 / 12.0) + t2 / T::of(720.0)
    } else {
        let half = theta * T::of(0.5);
        (T::one() - half * half.cos() / half.sin()) / (theta * theta)
    };
    let mut v = Mat3::identity();
    for i in 0..3 {
        for j in 0..3 {
            v.m[i][j] += -T::of(0.5) * hat.m[i][j] + b * hat2.m[i][j];
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_pose() -> RigidPose<f64> {
        RigidPose::new(
            Mat3::rotation_z(0.8).mul_mat(&Mat3::rotation_x(-0.2)),
            Vec3::new(1.0, -2.0, 0.5),
        )
    }

    #[test]
    fn compose_with_inverse_is_identity() {
        let p = sample_pose();
        let id = p.compose(&p.inverse());
        assert!(id.orthonormality_error() < 1e-9);
        assert!(id.translation.norm() < 1e-9);
        let q = Vec3::new(0.3, 0.7, -1.2);
        assert!((id.transform_point(q) - q).norm() < 1e-12);
    }

    #[test]
    fn rotation_stays_orthonormal() {
        let p = sample_pose();
        assert!(p.orthonormality_error() <= 1e-9);
        assert!((p.rotation.det() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn se3_exp_log_round_trip() {
        let rho = Vec3::new(0.4, -1.3, 2.0);
        let phi = Vec3::new(0.2, 0.5, -0.7);
        let pose = RigidPose::<f64>::exp_se3(rho, phi);
        let (r2, p2) = pose.log_se3();
        assert!((r2 - rho).norm() < 1e-10);
        assert!((p2 - phi).norm() < 1e-10);
    }

    #[test]
    fn interpolation_midpoint_yaw() {
        let a = RigidPose::<f64>::from_yaw(0.0, Vec3::zero());
        let b = RigidPose::from_yaw(std::f64::consts::FRAC_PI_2, Vec3::new(2.0, 0.0, 0.0));
        let mid = a.interpolate(&b, 0.5);
        let w = mid.rotation.log_so3();
        assert!((w.z - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
        assert!((mid.translation.x - 1.0).abs() < 1e-12);
    }
}
