//! 3x3 matrices, rotation helpers (exp/log on SO(3)) and a symmetric
//! eigensolver used for PCA normal estimation.

use serde::{Deserialize, Serialize};

use crate::math::vec3::Vec3;
use crate::scalar::Real;

/// Row-major 3x3 matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mat3<T> {
    pub m: [[T; 3]; 3],
}

impl<T: Real> Mat3<T> {
    #[inline]
    pub fn from_rows(r0: [T; 3], r1: [T; 3], r2: [T; 3]) -> Self {
        Self { m: [r0, r1, r2] }
    }

    #[inline]
    pub fn identity() -> Self {
        let o = T::one();
        let z = T::zero();
        Self::from_rows([o, z, z], [z, o, z], [z, z, o])
    }

    #[inline]
    pub fn zeros() -> Self {
        Self { m: [[T::zero(); 3]; 3] }
    }

    #[inline]
    pub fn row(&self, i: usize) -> Vec3<T> {
        Vec3::new(self.m[i][0], self.m[i][1], self.m[i][2])
    }

    #[inline]
    pub fn col(&self, j: usize) -> Vec3<T> {
        Vec3::new(self.m[0][j], self.m[1][j], self.m[2][j])
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros();
        for i in 0..3 {
            for j in 0..3 {
                out.m[i][j] = self.m[j][i];
            }
        }
        out
    }

    pub fn det(&self) -> T {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Inverse via adjugate; `None` when the determinant is ~0.
    pub fn inverse(&self) -> Option<Self> {
        let m = &self.m;
        let det = self.det();
        if det.abs() <= T::of(1e-30) {
            return None;
        }
        let inv_det = T::one() / det;
        let mut out = Self::zeros();
        out.m[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) * inv_det;
        out.m[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) * inv_det;
        out.m[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) * inv_det;
        out.m[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) * inv_det;
        out.m[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) * inv_det;
        out.m[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) * inv_det;
        out.m[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) * inv_det;
        out.m[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) * inv_det;
        out.m[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) * inv_det;
        Some(out)
    }

    pub fn rotation_x(angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        let o = T::one();
        let z = T::zero();
        Self::from_rows([o, z, z], [z, c, -s], [z, s, c])
    }

    pub fn rotation_y(angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        let o = T::one();
        let z = T::zero();
        Self::from_rows([c, z, s], [z, o, z], [-s, z, c])
    }

    pub fn rotation_z(angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        let o = T::one();
        let z = T::zero();
        Self::from_rows([c, -s, z], [s, c, z], [z, z, o])
    }

    /// Mirror across the x-z plane (flips y).
    pub fn reflection_y() -> Self {
        let o = T::one();
        let z = T::zero();
        Self::from_rows([o, z, z], [z, -o, z], [z, z, o])
    }

    /// Max absolute entry of `self^T * self - I`; 0 for orthonormal matrices.
    pub fn orthonormality_error(&self) -> T {
        let gram = self.transpose().mul_mat(self);
        let mut err = T::zero();
        for i in 0..3 {
            for j in 0..3 {
                let target = if i == j { T::one() } else { T::zero() };
                err = err.max((gram.m[i][j] - target).abs());
            }
        }
        err
    }

    /// Projects a near-rotation onto SO(3) (iterated polar averaging).
    pub fn orthonormalized(&self) -> Self {
        let mut r = *self;
        for _ in 0..20 {
            let rit = match r.inverse() {
                Some(inv) => inv.transpose(),
                None => return Self::identity(),
            };
            let mut next = Self::zeros();
            for i in 0..3 {
                for j in 0..3 {
                    next.m[i][j] = (r.m[i][j] + rit.m[i][j]) * T::of(0.5);
                }
            }
            r = next;
            if r.orthonormality_error() < T::of(1e-14) {
                break;
            }
        }
        r
    }

    pub fn mul_mat(&self, rhs: &Self) -> Self {
        let mut out = Self::zeros();
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = T::zero();
                for k in 0..3 {
                    acc += self.m[i][k] * rhs.m[k][j];
                }
                out.m[i][j] = acc;
            }
        }
        out
    }

    pub fn mul_vec(&self, v: Vec3<T>) -> Vec3<T> {
        Vec3::new(self.row(0).dot(v), self.row(1).dot(v), self.row(2).dot(v))
    }

    /// Rodrigues formula: rotation matrix for the axis-angle vector `w`.
    pub fn exp_so3(w: Vec3<T>) -> Self {
        let theta = w.norm();
        let hat = Self::hat(w);
        let hat2 = hat.mul_mat(&hat);
        // Series coefficients near zero keep the map smooth.
        let (a, b) = if theta < T::of(1e-6) {
            let t2 = theta * theta;
            (
                T::one() - t2 / T::of(6.0),
                T::of(0.5) - t2 / T::of(24.0),
            )
        } else {
            (theta.sin() / theta, (T::one() - theta.cos()) / (theta * theta))
        };
        let mut out = Self::identity();
        for i in 0..3 {
            for j in 0..3 {
                out.m[i][j] += a * hat.m[i][j] + b * hat2.m[i][j];
            }
        }
        out
    }

    /// Axis-angle vector of a rotation matrix, with careful handling near 0 and pi.
    pub fn log_so3(&self) -> Vec3<T> {
        let m = &self.m;
        let trace = m[0][0] + m[1][1] + m[2][2];
        let cos_theta = ((trace - T::one()) * T::of(0.5)).clamped(-T::one(), T::one());
        let theta = cos_theta.acos();
        if theta < T::of(1e-9) {
            // First-order: skew part directly.
            return Vec3::new(
                (m[2][1] - m[1][2]) * T::of(0.5),
                (m[0][2] - m[2][0]) * T::of(0.5),
                (m[1][0] - m[0][1]) * T::of(0.5),
            );
        }
        if theta > T::PI() - T::of(1e-5) {
            // Near pi the skew part vanishes; recover the axis from the
            // symmetric part R + I = 2(aa^T) + (1+cos)I.
            let diag = Vec3::new(m[0][0], m[1][1], m[2][2]);
            let k = if diag.x >= diag.y && diag.x >= diag.z {
                0
            } else if diag.y >= diag.z {
                1
            } else {
                2
            };
            let two = T::of(2.0);
            let mut axis = [T::zero(); 3];
            axis[k] = ((m[k][k] - cos_theta) / (T::one() - cos_theta)).max(T::zero()).sqrt();
            let denom = two * axis[k] * (T::one() - cos_theta);
            for j in 0..3 {
                if j != k {
                    axis[j] = (m[k][j] + m[j][k]) / denom;
                }
            }
            let mut a = Vec3::new(axis[0], axis[1], axis[2]);
            a = a.normalized().unwrap_or(Vec3::new(T::one(), T::zero(), T::zero()));
            // Disambiguate the sign with the (small) skew part.
            let skew = Vec3::new(m[2][1] - m[1][2], m[0][2] - m[2][0], m[1][0] - m[0][1]);
            if a.dot(skew) < T::zero() {
                a = -a;
            }
            return a * theta;
        }
        let scale = theta / (T::of(2.0) * theta.sin());
        Vec3::new(
            (m[2][1] - m[1][2]) * scale,
            (m[0][2] - m[2][0]) * scale,
            (m[1][0] - m[0][1]) * scale,
        )
    }

    /// Skew-symmetric cross-product matrix.
    pub fn hat(w: Vec3<T>) -> Self {
        let z = T::zero();
        Self::from_rows([z, -w.z, w.y], [w.z, z, -w.x], [-w.y, w.x, z])
    }
}

/// Eigen-decomposition of a symmetric 3x3 matrix by cyclic Jacobi rotations.
///
/// Returns `(eigenvalues, eigenvectors)` sorted ascending; eigenvectors are
/// the matching columns, unit length.
pub fn symmetric_eigen_3x3<T: Real>(a: &Mat3<T>) -> ([T; 3], [Vec3<T>; 3]) {
    let mut a = a.m;
    let mut v = Mat3::<T>::identity().m;
    for _ in 0..50 {
        // Largest off-diagonal element.
        let mut p = 0;
        let mut q = 1;
        let mut max = a[0][1].abs();
        if a[0][2].abs() > max {
            p = 0;
            q = 2;
            max = a[0][2].abs();
        }
        if a[1][2].abs() > max {
            p = 1;
            q = 2;
            max = a[1][2].abs();
        }
        if max < T::of(1e-30) {
            break;
        }
        let app = a[p][p];
        let aqq = a[q][q];
        let apq = a[p][q];
        let theta = (aqq - app) / (T::of(2.0) * apq);
        let t = if theta >= T::zero() {
            T::one() / (theta + (T::one() + theta * theta).sqrt())
        } else {
            -T::one() / (-theta + (T::one() + theta * theta).sqrt())
        };
        let c = T::one() / (T::one() + t * t).sqrt();
        let s = t * c;
        // Apply the rotation on both sides.
        for k in 0..3 {
            let akp = a[k][p];
            let akq = a[k][q];
            a[k][p] = c * akp - s * akq;
            a[k][q] = s * akp + c * akq;
        }
        for k in 0..3 {
            let apk = a[p][k];
            let aqk = a[q][k];
            a[p][k] = c * apk - s * aqk;
            a[q][k] = s * apk + c * aqk;
        }
        for k in 0..3 {
            let vkp = v[k][p];
            let vkq = v[k][q];
            v[k][p] = c * vkp - s * vkq;
            v[k][q] = s * vkp + c * vkq;
        }
    }
    let mut pairs: [(T, Vec3<T>); 3] = [
        (a[0][0], Vec3::new(v[0][0], v[1][0], v[2][0])),
        (a[1][1], Vec3::new(v[0][1], v[1][1], v[2][1])),
        (a[2][2], Vec3::new(v[0][2], v[1][2], v[2][2])),
    ];
    pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(std::cmp::Ordering::Equal));
    (
        [pairs[0].0, pairs[1].0, pairs[2].0],
        [pairs[0].1, pairs[1].1, pairs[2].1],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_recovers_identity() {
        let r = Mat3::<f64>::rotation_z(0.7).mul_mat(&Mat3::rotation_x(-0.3));
        let inv = r.inverse().unwrap();
        assert!(r.mul_mat(&inv).orthonormality_error() < 1e-12);
    }

    #[test]
    fn exp_log_round_trip() {
        let w = Vec3::<f64>::new(0.3, -0.8, 0.45);
        let r = Mat3::exp_so3(w);
        let back = r.log_so3();
        assert!((back - w).norm() < 1e-12);
    }

    #[test]
    fn log_near_pi() {
        let w = Vec3::<f64>::new(0.0, 0.0, std::f64::consts::PI - 1e-7);
        let r = Mat3::exp_so3(w);
        let back = r.log_so3();
        assert!((back - w).norm() < 1e-5);
    }

    #[test]
    fn log_near_zero() {
        let w = Vec3::<f64>::new(1e-9, -2e-9, 1.5e-9);
        let r = Mat3::exp_so3(w);
        assert!((r.log_so3() - w).norm() < 1e-15);
    }

    #[test]
    fn jacobi_eigen_diagonalizes() {
        let a = Mat3::<f64>::from_rows([4.0, 1.0, 0.5], [1.0, 3.0, -0.25], [0.5, -0.25, 2.0]);
        let (vals, vecs) = symmetric_eigen_3x3(&a);
        for k in 0..3 {
            let av = a.mul_vec(vecs[k]);
            assert!((av - vecs[k] * vals[k]).norm() < 1e-10);
        }
        assert!(vals[0] <= vals[1] && vals[1] <= vals[2]);
    }

    #[test]
    fn orthonormalized_projects() {
        let mut r = Mat3::<f64>::rotation_z(0.3);
        r.m[0][0] += 1e-4;
        r.m[1][2] -= 3e-5;
        let q = r.orthonormalized();
        assert!(q.orthonormality_error() < 1e-12);
        assert!((q.det() - 1.0).abs() < 1e-12);
    }
}
