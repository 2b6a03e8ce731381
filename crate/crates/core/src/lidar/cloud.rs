//! Point cloud container: positions in the sensor frame plus intensities.

use crate::lidar::LidarError;
use crate::math::Vec3;
use crate::scalar::Real;

#[derive(Clone, Debug, Default)]
pub struct PointCloud<T> {
    pub points: Vec<Vec3<T>>,
    /// One value in [0, 1] per point.
    pub intensity: Vec<T>,
}

impl<T: Real> PointCloud<T> {
    pub fn new(points: Vec<Vec3<T>>, intensity: Vec<T>) -> Self {
        Self { points, intensity }
    }

    pub fn with_capacity(n: usize) -> Self {
        Self { points: Vec::with_capacity(n), intensity: Vec::with_capacity(n) }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn push(&mut self, p: Vec3<T>, intensity: T) {
        self.points.push(p);
        self.intensity.push(intensity);
    }

    pub fn extend_from(&mut self, other: &PointCloud<T>) {
        self.points.extend_from_slice(&other.points);
        self.intensity.extend_from_slice(&other.intensity);
    }

    pub fn validate(&self) -> Result<(), LidarError> {
        if self.points.len() != self.intensity.len() {
            return Err(LidarError::InvalidCloud("points/intensity length mismatch"));
        }
        for p in &self.points {
            if !p.is_finite() {
                return Err(LidarError::InvalidCloud("non-finite coordinate"));
            }
        }
        for &i in &self.intensity {
            if !(i >= T::zero() && i <= T::one()) {
                return Err(LidarError::InvalidCloud("intensity outside [0, 1]"));
            }
        }
        Ok(())
    }

    /// Keeps the points whose index passes `keep`, preserving order.
    pub fn filtered_by_index(&self, keep: impl Fn(usize) -> bool) -> Self {
        let mut out = Self::with_capacity(self.len());
        for i in 0..self.len() {
            if keep(i) {
                out.push(self.points[i], self.intensity[i]);
            }
        }
        out
    }
}
