//! Multi-scan accumulation of one object's points into a common object frame.

use crate::builder::pose_track::{interpolate_pose, StampedPose};
use crate::builder::tracklets::Tracklet;
use crate::builder::BuilderError;
use crate::geom::RigidPose;
use crate::lidar::PointCloud;
use crate::math::Vec3;
use crate::scalar::Real;

/// Crop expansion around the labeled box (meters).
pub const CROP_EXPAND_M: f64 = 0.1;

/// One raw LiDAR frame of a sequence.
#[derive(Clone, Debug)]
pub struct FrameScan<T> {
    pub frame_index: usize,
    /// Cloud in the sensor frame of this scan.
    pub cloud: PointCloud<T>,
    /// Sensor frame -> world frame.
    pub lidar_pose: RigidPose<T>,
    /// Seconds.
    pub timestamp: T,
}

/// One object crop in the object frame, paired with its coarse pose.
#[derive(Clone, Debug)]
pub struct ObjectScan<T> {
    pub frame_index: usize,
    pub points: Vec<Vec3<T>>,
    pub intensity: Vec<T>,
    /// LiDAR origin of this scan, expressed in the object frame.
    pub sensor_origin_obj: Vec3<T>,
    /// Coarse object frame -> world at this frame.
    pub coarse_pose: RigidPose<T>,
}

/// Collects the object's points from every frame between its first and last
/// observation (rigid classes; labeled poses interpolated across unlabeled
/// frames) or from the labeled frames only (deformable classes). Points are
/// cropped inside the 0.1 m expanded box and mapped into the object frame by
/// the inverse object pose. Frames with empty crops are skipped.
pub fn accumulate_object<T: Real>(
    scans: &[&FrameScan<T>],
    tracklet: &Tracklet<T>,
) -> Result<Vec<ObjectScan<T>>, BuilderError> {
    if tracklet.observations.is_empty() {
        return Err(BuilderError::EmptyTrack);
    }
    if tracklet.class.is_rigid() && tracklet.observations.len() < 2 {
        return Err(BuilderError::RigidTrackTooShort);
    }
    let by_frame: std::collections::BTreeMap<usize, &&FrameScan<T>> =
        scans.iter().map(|s| (s.frame_index, s)).collect();

    // World pose track over the labeled observations.
    let mut track: Vec<StampedPose<T>> = Vec::with_capacity(tracklet.observations.len());
    for obs in &tracklet.observations {
        let scan = by_frame
            .get(&obs.frame_index)
            .ok_or(BuilderError::EmptyCrop)?;
        track.push(StampedPose {
            timestamp: scan.timestamp,
            pose: Tracklet::observation_pose(obs),
        });
    }
    for w in track.windows(2) {
        if w[1].timestamp <= w[0].timestamp {
            return Err(BuilderError::NonMonotonicTrack);
        }
    }

    let frames: Vec<usize> = if tracklet.class.is_rigid() {
        let first = tracklet.observations.first().unwrap().frame_index;
        let last = tracklet.observations.last().unwrap().frame_index;
        by_frame
            .keys()
            .copied()
            .filter(|&f| f >= first && f <= last)
            .collect()
    } else {
        tracklet.observations.iter().map(|o| o.frame_index).collect()
    };

    let half = Vec3::new(
        tracklet.dims.length * T::of(0.5) + T::of(CROP_EXPAND_M),
        tracklet.dims.width * T::of(0.5) + T::of(CROP_EXPAND_M),
        tracklet.dims.height * T::of(0.5) + T::of(CROP_EXPAND_M),
    );

    let mut out = Vec::new();
    for frame_index in frames {
        let scan = by_frame[&frame_index];
        let object_world = if let Some(obs) =
            tracklet.observations.iter().find(|o| o.frame_index == frame_index)
        {
            Tracklet::observation_pose(obs)
        } else {
            interpolate_pose(&track, scan.timestamp)?
        };
        let world_to_object = object_world.inverse();
        let sensor_to_object = world_to_object.compose(&scan.lidar_pose);
        let mut points = Vec::new();
        let mut intensity = Vec::new();
        for (i, &p) in scan.cloud.points.iter().enumerate() {
            let q = sensor_to_object.transform_point(p);
            if q.x.abs() <= half.x && q.y.abs() <= half.y && q.z.abs() <= half.z {
                points.push(q);
                intensity.push(scan.cloud.intensity[i]);
            }
        }
        if points.is_empty() {
            continue;
        }
        out.push(ObjectScan {
            frame_index,
            points,
            intensity,
            sensor_origin_obj: sensor_to_object.transform_point(Vec3::zero()),
            coarse_pose: object_world,
        });
    }
    if out.is_empty() {
        return Err(BuilderError::EmptyCrop);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builder::tracklets::TrackObservation;
    use crate::placement::bbox::{BoundingBox3D, BoxDims};
    use crate::scene::ObjectClass;

    fn observation(frame: usize, x: f64) -> TrackObservation<f64> {
        TrackObservation {
            frame_index: frame,
            label_index: 0,
            bbox_world: BoundingBox3D::new(
                Vec3::new(x, 0.0, 0.0),
                BoxDims::new(2.0, 2.0, 2.0),
                0.0,
            ),
            occlusion: 0,
            truncation: 0.0,
        }
    }

    fn cube_cloud_at(x: f64) -> PointCloud<f64> {
        // 8 corners of a 1 m cube centered at (x, 0, 0) plus an outside point.
        let mut c = PointCloud::default();
        for dx in [-0.5, 0.5] {
            for dy in [-0.5, 0.5] {
                for dz in [-0.5, 0.5] {
                    c.push(Vec3::new(x + dx, dy, dz), 0.5);
                }
            }
        }
        c.push(Vec3::new(x + 10.0, 0.0, 0.0), 0.9);
        c
    }

    fn tracklet(obs: Vec<TrackObservation<f64>>, class: ObjectClass) -> Tracklet<f64> {
        Tracklet {
            sequence: "s".into(),
            object_id: 0,
            class,
            dims: BoxDims::new(2.0, 2.0, 2.0),
            observations: obs,
        }
    }

    #[test]
    fn static_object_static_ego_gives_identical_crops() {
        let scans: Vec<FrameScan<f64>> = (0..3)
            .map(|f| FrameScan {
                frame_index: f,
                cloud: cube_cloud_at(5.0),
                lidar_pose: RigidPose::identity(),
                timestamp: 0.1 * f as f64,
            })
            .collect();
        let refs: Vec<&FrameScan<f64>> = scans.iter().collect();
        let t = tracklet(vec![observation(0, 5.0), observation(2, 5.0)], ObjectClass::Car);
        let out = accumulate_object(&refs, &t).unwrap();
        assert_eq!(out.len(), 3);
        for scan in &out {
            assert_eq!(scan.points, out[0].points);
            assert_eq!(scan.points.len(), 8); // outside point cropped away
        }
        // Sensor origin in object frame is -center.
        assert!((out[0].sensor_origin_obj - Vec3::new(-5.0, 0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn moving_object_lands_in_canonical_box() {
        // Object moves +1 m/frame; labels at ends only, middle interpolated.
        let scans: Vec<FrameScan<f64>> = (0..5)
            .map(|f| FrameScan {
                frame_index: f,
                cloud: cube_cloud_at(5.0 + f as f64),
                lidar_pose: RigidPose::identity(),
                timestamp: 0.1 * f as f64,
            })
            .collect();
        let refs: Vec<&FrameScan<f64>> = scans.iter().collect();
        let t = tracklet(vec![observation(0, 5.0), observation(4, 9.0)], ObjectClass::Car);
        let out = accumulate_object(&refs, &t).unwrap();
        assert_eq!(out.len(), 5);
        for scan in &out {
            assert_eq!(scan.points.len(), 8);
            for p in &scan.points {
                assert!(p.x.abs() <= 1.1 && p.y.abs() <= 1.1 && p.z.abs() <= 1.1);
            }
        }
    }

    #[test]
    fn rigid_single_observation_is_an_error() {
        let scans = [FrameScan {
            frame_index: 0,
            cloud: cube_cloud_at(5.0),
            lidar_pose: RigidPose::<f64>::identity(),
            timestamp: 0.0,
        }];
        let refs: Vec<&FrameScan<f64>> = scans.iter().collect();
        let t = tracklet(vec![observation(0, 5.0)], ObjectClass::Car);
        assert!(matches!(
            accumulate_object(&refs, &t),
            Err(BuilderError::RigidTrackTooShort)
        ));
        // The deformable single-scan path accepts it.
        let t = tracklet(vec![observation(0, 5.0)], ObjectClass::Pedestrian);
        assert_eq!(accumulate_object(&refs, &t).unwrap().len(), 1);
    }
}
