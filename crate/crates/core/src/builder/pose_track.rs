//! Timestamped pose tracks and geodesic interpolation between knots.

use crate::builder::BuilderError;
use crate::geom::RigidPose;
use crate::scalar::Real;

/// A pose sample at a point in time (world frame).
#[derive(Clone, Copy, Debug)]
pub struct StampedPose<T> {
    /// Seconds; strictly increasing within a track.
    pub timestamp: T,
    pub pose: RigidPose<T>,
}

/// Pose at time `t`: translation linearly interpolated, rotation along the
/// geodesic (constant angular velocity) between the bracketing knots.
/// Extrapolation is refused.
pub fn interpolate_pose<T: Real>(
    track: &[StampedPose<T>],
    t: T,
) -> Result<RigidPose<T>, BuilderError> {
    if track.is_empty() {
        return Err(BuilderError::EmptyTrack);
    }
    for w in track.windows(2) {
        if w[1].timestamp <= w[0].timestamp {
            return Err(BuilderError::NonMonotonicTrack);
        }
    }
    let first = track.first().unwrap();
    let last = track.last().unwrap();
    if t < first.timestamp || t > last.timestamp {
        return Err(BuilderError::TimestampOutOfRange);
    }
    // Bracketing pair via binary search on timestamps.
    let mut lo = 0usize;
    let mut hi = track.len() - 1;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if track[mid].timestamp <= t {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if t == track[lo].timestamp {
        return Ok(track[lo].pose);
    }
    if t == track[hi].timestamp {
        return Ok(track[hi].pose);
    }
    let span = track[hi].timestamp - track[lo].timestamp;
    let s = (t - track[lo].timestamp) / span;
    Ok(track[lo].pose.interpolate(&track[hi].pose, s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{Mat3, Vec3};

    fn track() -> Vec<StampedPose<f64>> {
        vec![
            StampedPose {
                timestamp: 0.0,
                pose: RigidPose::from_yaw(0.0, Vec3::new(0.0, 0.0, 0.0)),
            },
            StampedPose {
                timestamp: 1.0,
                pose: RigidPose::from_yaw(std::f64::consts::FRAC_PI_2, Vec3::new(4.0, 0.0, 0.0)),
            },
        ]
    }

    #[test]
    fn knots_are_exact() {
        let tr = track();
        let p0 = interpolate_pose(&tr, 0.0).unwrap();
        assert_eq!(p0.translation, tr[0].pose.translation);
        let p1 = interpolate_pose(&tr, 1.0).unwrap();
        assert_eq!(p1.translation, tr[1].pose.translation);
    }

    #[test]
    fn midpoint_is_half_yaw() {
        let mid = interpolate_pose(&track(), 0.5).unwrap();
        let w = mid.rotation.log_so3();
        assert!((w.z - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
        assert!((mid.translation.x - 2.0).abs() < 1e-12);
    }

    #[test]
    fn extrapolation_refused() {
        assert!(matches!(
            interpolate_pose(&track(), -0.1),
            Err(BuilderError::TimestampOutOfRange)
        ));
        assert!(matches!(
            interpolate_pose(&track(), 1.1),
            Err(BuilderError::TimestampOutOfRange)
        ));
    }

    #[test]
    fn quarter_angle_fraction_matches_axis_angle_oracle() {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(31);
        for _ in 0..50 {
            let w = Vec3::<f64>::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            let a = RigidPose::new(Mat3::rotation_z(rng.random_range(-1.0..1.0)), Vec3::zero());
            let b = RigidPose::new(a.rotation.mul_mat(&Mat3::exp_so3(w)), Vec3::zero());
            let tr = vec![
                StampedPose { timestamp: 0.0, pose: a },
                StampedPose { timestamp: 1.0, pose: b },
            ];
            let q = interpolate_pose(&tr, 0.25).unwrap();
            // Angle from the start must be a quarter of the total angle.
            let total = a.rotation.transpose().mul_mat(&b.rotation).log_so3().norm();
            let part = a.rotation.transpose().mul_mat(&q.rotation).log_so3().norm();
            assert!((part - 0.25 * total).abs() < 1e-9, "part={part} total={total}");
        }
    }
}
