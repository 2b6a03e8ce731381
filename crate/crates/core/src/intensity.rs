//! Physically derived LiDAR intensity resampling.
//!
//! For every original point we store, in log space, the pose-independent
//! factor `b = f * R^2 / cos(alpha)` (intensity un-done by range falloff and
//! incidence). Pasting at a new pose then reads
//! `f' = cos(alpha') / R'^2 * lerp(b)` where `lerp` interpolates log-b over
//! the original support points — averaging in log space turns the arithmetic
//! mean into a sharper geometric mean.

use std::io::{Read, Write};

use crate::knn::KdTree3;
use crate::math::Vec3;
use crate::scalar::Real;

/// Floor on cos(alpha) at build and query time; grazing incidence otherwise
/// blows up the b factor.
pub const EPS_COS: f64 = 0.05;
/// Intensity floor applied before taking logs (KITTI ships exact zeros).
pub const INTENSITY_FLOOR: f64 = 1.0 / 255.0;
/// Neighbors used by the inverse-distance interpolation.
pub const KNN_K: usize = 4;

/// Magic bytes of the serialized interpolant (see `docs/formats.md`).
pub const INTENSITY_MAGIC: [u8; 8] = *b"INTENS01";

#[derive(Debug, thiserror::Error)]
pub enum IntensityError {
    #[error("cannot build an interpolant from zero points")]
    EmptyInput,
    #[error("input arrays have mismatched lengths")]
    LengthMismatch,
    #[error("zero-length normal at index {0}")]
    ZeroNormal(usize),
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("intensity io: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad intensity blob: {0}")]
    Format(&'static str),
}

/// Scattered log-space interpolant of the b factor over the object-frame
/// support points. Immutable after build; queries are pure.
pub struct IntensityInterpolant<T> {
    support_points: Vec<Vec3<T>>,
    log_b: Vec<T>,
    tree: KdTree3<T>,
}

/// Builds the interpolant from the source observation of an object.
///
/// `points` are object-frame positions, `intensities` the observed values in
/// [0, 1], `normals` unit surface normals and `sensor_origin_obj` the LiDAR
/// origin of the source scan expressed in the object frame.
pub fn build_interpolant<T: Real>(
    points: &[Vec3<T>],
    intensities: &[T],
    normals: &[Vec3<T>],
    sensor_origin_obj: Vec3<T>,
) -> Result<IntensityInterpolant<T>, IntensityError> {
    if points.is_empty() {
        return Err(IntensityError::EmptyInput);
    }
    if points.len() != intensities.len() || points.len() != normals.len() {
        return Err(IntensityError::LengthMismatch);
    }
    let mut log_b = Vec::with_capacity(points.len());
    for i in 0..points.len() {
        let p = points[i];
        let n = normals[i];
        if !p.is_finite() || !intensities[i].is_finite() {
            return Err(IntensityError::NonFinite(i));
        }
        let n_norm = n.norm();
        if n_norm <= T::of(1e-12) {
            return Err(IntensityError::ZeroNormal(i));
        }
        let to_sensor = sensor_origin_obj - p;
        let range = to_sensor.norm();
        if range <= T::of(1e-9) {
            return Err(IntensityError::NonFinite(i));
        }
        let cos_alpha = (n.dot(to_sensor).abs() / (n_norm * range)).clamped(T::of(EPS_COS), T::one());
        let f = intensities[i].max(T::of(INTENSITY_FLOOR));
        let value = f.ln() + T::of(2.0) * range.ln() - cos_alpha.ln();
        if !value.is_finite() {
            return Err(IntensityError::NonFinite(i));
        }
        log_b.push(value);
    }
    let tree = KdTree3::build(points);
    Ok(IntensityInterpolant { support_points: points.to_vec(), log_b, tree })
}

impl<T: Real> IntensityInterpolant<T> {
    pub fn len(&self) -> usize {
        self.support_points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support_points.is_empty()
    }

    pub fn support_points(&self) -> &[Vec3<T>] {
        &self.support_points
    }

    pub fn log_b(&self) -> &[T] {
        &self.log_b
    }

    /// Interpolated log-b at `x`: k-nearest-neighbor inverse-distance
    /// weighting (power 2) with an exact-match short-circuit.
    pub fn lerp_log_b(&self, x: Vec3<T>) -> T {
        let neighbors = self.tree.k_nearest(x, KNN_K);
        debug_assert!(!neighbors.is_empty());
        // Exact support hit reproduces the stored value.
        if neighbors[0].dist_squared <= T::of(1e-18) {
            return self.log_b[neighbors[0].index];
        }
        let mut num = T::zero();
        let mut den = T::zero();
        for n in &neighbors {
            let w = T::one() / n.dist_squared;
            num += w * self.log_b[n.index];
            den += w;
        }
        num / den
    }

    /// Resampled intensity at object-frame point `x_obj` seen from a new
    /// pose with range `r_new` and incidence cosine `cos_alpha_new`,
    /// clamped into [0, 1].
    pub fn resample_intensity(&self, x_obj: Vec3<T>, r_new: T, cos_alpha_new: T) -> T {
        self.resample_unclamped(x_obj, r_new, cos_alpha_new)
            .clamped(T::zero(), T::one())
    }

    /// Pre-clamp value of [`Self::resample_intensity`] (exposed for
    /// monotonicity checks).
    pub fn resample_unclamped(&self, x_obj: Vec3<T>, r_new: T, cos_alpha_new: T) -> T {
        let cos_alpha = cos_alpha_new.max(T::of(EPS_COS));
        let log_f = cos_alpha.ln() - T::of(2.0) * r_new.ln() + self.lerp_log_b(x_obj);
        log_f.exp()
    }

    /// Serializes support positions and log-b as little-endian f32 arrays.
    pub fn write_binary<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        w.write_all(&INTENSITY_MAGIC)?;
        w.write_all(&(self.support_points.len() as u32).to_le_bytes())?;
        for p in &self.support_points {
            for c in p.to_array() {
                w.write_all(&(c.as_f64() as f32).to_le_bytes())?;
            }
        }
        for &v in &self.log_b {
            w.write_all(&(v.as_f64() as f32).to_le_bytes())?;
        }
        Ok(())
    }

    /// Reads the binary blob; the spatial index is rebuilt on load.
    pub fn read_binary<R: Read>(r: &mut R) -> Result<Self, IntensityError> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if magic != INTENSITY_MAGIC {
            return Err(IntensityError::Format("bad magic"));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        let n = u32::from_le_bytes(b4) as usize;
        if n == 0 {
            return Err(IntensityError::EmptyInput);
        }
        let mut support_points = Vec::with_capacity(n);
        for _ in 0..n {
            let mut arr = [T::zero(); 3];
            for slot in &mut arr {
                r.read_exact(&mut b4)?;
                *slot = T::of(f32::from_le_bytes(b4) as f64);
            }
            support_points.push(Vec3::from_array(arr));
        }
        let mut log_b = Vec::with_capacity(n);
        for _ in 0..n {
            r.read_exact(&mut b4)?;
            let v = T::of(f32::from_le_bytes(b4) as f64);
            if !v.is_finite() {
                return Err(IntensityError::Format("non-finite log_b"));
            }
            log_b.push(v);
        }
        let tree = KdTree3::build(&support_points);
        Ok(Self { support_points, log_b, tree })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_log_b() {
        // R = 10, f = 0.5, cos(alpha) = 1 -> log b = ln(50).
        let interp = build_interpolant(
            &[Vec3::<f64>::new(10.0, 0.0, 0.0)],
            &[0.5],
            &[Vec3::new(-1.0, 0.0, 0.0)],
            Vec3::zero(),
        )
        .unwrap();
        assert!((interp.log_b()[0] - 50.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn floored_intensity_stays_finite() {
        let interp = build_interpolant(
            &[Vec3::<f64>::new(5.0, 0.0, 0.0)],
            &[0.0],
            &[Vec3::new(-1.0, 0.0, 0.0)],
            Vec3::zero(),
        )
        .unwrap();
        assert!(interp.log_b()[0].is_finite());
    }

    #[test]
    fn resample_inverts_build() {
        let x = Vec3::<f64>::new(10.0, 0.0, 0.0);
        let interp =
            build_interpolant(&[x], &[0.5], &[Vec3::new(-1.0, 0.0, 0.0)], Vec3::zero()).unwrap();
        let same = interp.resample_intensity(x, 10.0, 1.0);
        assert!((same - 0.5).abs() < 1e-12);
        // Doubling the range quarters the intensity.
        let farther = interp.resample_intensity(x, 20.0, 1.0);
        assert!((farther - 0.125).abs() < 1e-12);
    }

    #[test]
    fn geometric_mean_between_two_supports() {
        let a = Vec3::<f64>::new(10.0, 1.0, 0.0);
        let b = Vec3::<f64>::new(10.0, -1.0, 0.0);
        let interp = build_interpolant(
            &[a, b],
            &[0.2, 0.8],
            &[Vec3::new(-1.0, 0.0, 0.0), Vec3::new(-1.0, 0.0, 0.0)],
            Vec3::zero(),
        )
        .unwrap();
        let mid = Vec3::new(10.0, 0.0, 0.0);
        let log_mid = interp.lerp_log_b(mid);
        let ea = interp.log_b()[0].exp();
        let eb = interp.log_b()[1].exp();
        assert!((log_mid.exp() - (ea * eb).sqrt()).abs() < 1e-9 * (ea * eb).sqrt());
    }

    #[test]
    fn errors_on_bad_input() {
        assert!(matches!(
            build_interpolant::<f64>(&[], &[], &[], Vec3::zero()),
            Err(IntensityError::EmptyInput)
        ));
        assert!(matches!(
            build_interpolant(
                &[Vec3::<f64>::new(1.0, 0.0, 0.0)],
                &[0.5],
                &[Vec3::zero()],
                Vec3::zero()
            ),
            Err(IntensityError::ZeroNormal(0))
        ));
    }

    #[test]
    fn binary_round_trip() {
        let pts = vec![
            Vec3::<f64>::new(1.0, 2.0, 3.0),
            Vec3::new(-1.0, 0.5, 2.0),
            Vec3::new(0.25, -0.75, 1.0),
        ];
        let normals = vec![Vec3::new(0.0, 0.0, 1.0); 3];
        let interp = build_interpolant(&pts, &[0.1, 0.5, 0.9], &normals, Vec3::new(0.0, 0.0, 30.0))
            .unwrap();
        let mut buf = Vec::new();
        interp.write_binary(&mut buf).unwrap();
        let back = IntensityInterpolant::<f64>::read_binary(&mut buf.as_slice()).unwrap();
        assert_eq!(back.len(), 3);
        for (a, b) in interp.log_b().iter().zip(back.log_b()) {
            assert!((a - b).abs() < 1e-6);
        }
        let mut buf2 = Vec::new();
        back.write_binary(&mut buf2).unwrap();
        assert_eq!(buf, buf2);
    }
}
