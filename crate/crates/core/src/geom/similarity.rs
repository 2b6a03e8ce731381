//! The pasting transformation: yaw + translation + uniform scale with an
//! optional lateral reflection.

use serde::{Deserialize, Serialize};

use crate::math::{Mat3, Vec3};
use crate::scalar::Real;

/// Similarity transform applied when pasting an object.
///
/// A point maps as `p' = scale * Rz(yaw) * F * p + translation` where `F`
/// mirrors across the object's local longitudinal (x-z) plane when `reflect`
/// is set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityTransform<T> {
    pub yaw: T,
    pub translation: Vec3<T>,
    pub scale: T,
    pub reflect: bool,
}

impl<T: Real> SimilarityTransform<T> {
    pub fn identity() -> Self {
        Self { yaw: T::zero(), translation: Vec3::zero(), scale: T::one(), reflect: false }
    }

    pub fn new(yaw: T, translation: Vec3<T>, scale: T, reflect: bool) -> Self {
        Self { yaw, translation, scale, reflect }
    }

    pub fn is_valid(&self) -> bool {
        self.scale > T::zero() && self.translation.is_finite() && self.yaw.is_finite()
    }

    /// Rotation-reflection part (orthogonal, unit determinant magnitude).
    pub fn rotation_reflection(&self) -> Mat3<T> {
        let r = Mat3::rotation_z(self.yaw);
        if self.reflect {
            r.mul_mat(&Mat3::reflection_y())
        } else {
            r
        }
    }

    /// Full linear part `scale * Rz * F`.
    pub fn linear(&self) -> Mat3<T> {
        let mut m = self.rotation_reflection();
        for i in 0..3 {
            for j in 0..3 {
                m.m[i][j] *= self.scale;
            }
        }
        m
    }

    #[inline]
    pub fn apply_point(&self, p: Vec3<T>) -> Vec3<T> {
        let q = if self.reflect { Vec3::new(p.x, -p.y, p.z) } else { p };
        let (s, c) = self.yaw.sin_cos();
        let rotated = Vec3::new(c * q.x - s * q.y, s * q.x + c * q.y, q.z);
        rotated * self.scale + self.translation
    }

    /// Maps a point back into the object frame.
    #[inline]
    pub fn inverse_point(&self, p: Vec3<T>) -> Vec3<T> {
        let d = (p - self.translation) / self.scale;
        let (s, c) = self.yaw.sin_cos();
        let unrotated = Vec3::new(c * d.x + s * d.y, -s * d.x + c * d.y, d.z);
        if self.reflect {
            Vec3::new(unrotated.x, -unrotated.y, unrotated.z)
        } else {
            unrotated
        }
    }

    /// Transforms a unit normal (rotation-reflection only; uniform scale
    /// leaves directions unchanged).
    #[inline]
    pub fn apply_normal(&self, n: Vec3<T>) -> Vec3<T> {
        let q = if self.reflect { Vec3::new(n.x, -n.y, n.z) } else { n };
        let (s, c) = self.yaw.sin_cos();
        Vec3::new(c * q.x - s * q.y, s * q.x + c * q.y, q.z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_is_noop() {
        let t = SimilarityTransform::<f64>::identity();
        let p = Vec3::new(1.25, -3.5, 0.75);
        assert_eq!(t.apply_point(p), p);
    }

    #[test]
    fn reflection_is_involution() {
        let t = SimilarityTransform::<f64>::new(0.0, Vec3::zero(), 1.0, true);
        let p = Vec3::new(0.4, 1.9, -0.3);
        assert!((t.apply_point(t.apply_point(p)) - p).norm() < 1e-12);
    }

    #[test]
    fn inverse_round_trips() {
        let t = SimilarityTransform::<f64>::new(1.1, Vec3::new(4.0, -2.0, 1.0), 1.05, true);
        let p = Vec3::new(0.5, 0.25, -0.8);
        assert!((t.inverse_point(t.apply_point(p)) - p).norm() < 1e-12);
    }

    proptest! {
        #[test]
        fn scales_pairwise_distances(
            yaw in -3.0f64..3.0,
            tx in -5.0f64..5.0,
            ty in -5.0f64..5.0,
            scale in 0.2f64..3.0,
            reflect in proptest::bool::ANY,
            ax in -2.0f64..2.0, ay in -2.0f64..2.0, az in -2.0f64..2.0,
            bx in -2.0f64..2.0, by in -2.0f64..2.0, bz in -2.0f64..2.0,
        ) {
            let t = SimilarityTransform::new(yaw, Vec3::new(tx, ty, 0.5), scale, reflect);
            let a = Vec3::new(ax, ay, az);
            let b = Vec3::new(bx, by, bz);
            let before = a.distance(b);
            let after = t.apply_point(a).distance(t.apply_point(b));
            prop_assert!((after - scale * before).abs() < 1e-9 * (1.0 + before));
        }
    }
}
