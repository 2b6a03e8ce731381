//! Simulated drives: per-frame scans of a moving shape over a ground plane
//! with exact labels and poses, for end-to-end builder fixtures.

use std::collections::BTreeMap;

use crate::builder::accumulate::FrameScan;
use crate::builder::cut_object::{SequenceData, SequenceFrame};
use crate::builder::pose_track::StampedPose;
use crate::builder::tracklets::{TrackObservation, Tracklet};
use crate::geom::RigidPose;
use crate::impaste::camera::CameraRig;
use crate::lidar::ScanPattern;
use crate::placement::bbox::BoundingBox3D;
use crate::scalar::Real;
use crate::scene::ObjectClass;
use crate::synth::scan::{make_scene_scan, render_scene_image, SceneShape};
use crate::synth::shapes::Shape;

/// Ground level of drive fixtures (sensor 1.73 m above ground).
pub const GROUND_Z: f64 = -1.73;

/// A synthetic oracle scene: the analytic shape, its mesh counterpart, the
/// sensing setup and the exact object trajectory.
pub struct SyntheticScene<T> {
    pub shape: Shape<T>,
    pub mesh: crate::geom::TriangleMesh<T>,
    pub rig: CameraRig<T>,
    pub pattern: ScanPattern<T>,
    pub ground_z: T,
    pub trajectory: Vec<StampedPose<T>>,
}

/// One generated frame of a drive.
pub struct DriveFrame<T> {
    pub scan: FrameScan<T>,
    pub image: crate::impaste::image::ImageBuf<T>,
    /// Full-frame mask of the object, keyed by label index (always 0 here).
    pub masks: BTreeMap<usize, Vec<T>>,
    pub label: BoundingBox3D<T>,
}

pub struct Drive<T> {
    pub scene: SyntheticScene<T>,
    pub frames: Vec<DriveFrame<T>>,
    pub class: ObjectClass,
    pub rho: T,
}

/// Generates a drive: one shape following `trajectory` (object -> world,
/// ego static at identity so world = sensor), scanned over a ground plane,
/// with exact labels and analytic masks per frame.
pub fn make_drive<T: Real>(
    shape: Shape<T>,
    class: ObjectClass,
    trajectory: &[StampedPose<T>],
    pattern: &ScanPattern<T>,
    rig: &CameraRig<T>,
    rho: T,
) -> Drive<T> {
    assert!(trajectory.len() >= 2, "a drive needs at least two frames");
    let dims = shape.dims();
    let mut frames = Vec::with_capacity(trajectory.len());
    for (frame_index, stamp) in trajectory.iter().enumerate() {
        let shapes = [SceneShape { shape, pose: stamp.pose, rho }];
        let cloud = make_scene_scan(&shapes, Some(T::of(GROUND_Z)), pattern);
        let (image, mut masks) = render_scene_image(&shapes, Some(T::of(GROUND_Z)), rig);
        let yaw = stamp.pose.rotation.log_so3().z;
        let label = BoundingBox3D::new(stamp.pose.translation, dims, yaw);
        let mut mask_map = BTreeMap::new();
        mask_map.insert(0usize, masks.remove(0));
        frames.push(DriveFrame {
            scan: FrameScan {
                frame_index,
                cloud,
                lidar_pose: RigidPose::identity(),
                timestamp: stamp.timestamp,
            },
            image,
            masks: mask_map,
            label,
        });
    }
    Drive {
        scene: SyntheticScene {
            shape,
            mesh: shape.to_mesh(48),
            rig: rig.clone(),
            pattern: pattern.clone(),
            ground_z: T::of(GROUND_Z),
            trajectory: trajectory.to_vec(),
        },
        frames,
        class,
        rho,
    }
}

impl<T: Real> Drive<T> {
    /// Builder-facing view of the drive.
    pub fn sequence_data(&self) -> SequenceData<T> {
        SequenceData {
            frames: self
                .frames
                .iter()
                .map(|f| SequenceFrame {
                    scan: f.scan.clone(),
                    image: f.image.clone(),
                    masks: f.masks.clone(),
                })
                .collect(),
            rig: self.scene.rig.clone(),
        }
    }

    /// The ground-truth tracklet (labels on every frame, fully visible).
    pub fn tracklet(&self) -> Tracklet<T> {
        Tracklet {
            sequence: "synth".to_string(),
            object_id: 0,
            class: self.class,
            dims: self.scene.shape.dims(),
            observations: self
                .frames
                .iter()
                .map(|f| TrackObservation {
                    frame_index: f.scan.frame_index,
                    label_index: 0,
                    bbox_world: f.label,
                    occlusion: 0,
                    truncation: 0.0,
                })
                .collect(),
        }
    }
}

/// A straight-line trajectory with constant yaw rate, 0.1 s per frame.
pub fn linear_trajectory<T: Real>(
    start: crate::math::Vec3<T>,
    velocity: crate::math::Vec3<T>,
    yaw0: T,
    yaw_rate: T,
    n_frames: usize,
) -> Vec<StampedPose<T>> {
    (0..n_frames)
        .map(|i| {
            let t = T::of(0.1) * T::of_usize(i);
            StampedPose {
                timestamp: t,
                pose: RigidPose::from_yaw(yaw0 + yaw_rate * t, start + velocity * t),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Vec3;
    use crate::synth::scan::synthetic_rig;

    fn small_pattern() -> ScanPattern<f64> {
        ScanPattern::ideal_grid(24, -0.35, 0.1, 2.0 * std::f64::consts::PI / 900.0, 120.0)
    }

    #[test]
    fn static_trajectory_gives_identical_crops() {
        let rig = synthetic_rig::<f64>();
        let traj = linear_trajectory(Vec3::new(8.0, 0.0, -0.73), Vec3::zero(), 0.0, 0.0, 3);
        let drive = make_drive(
            Shape::Sphere { radius: 1.0 },
            ObjectClass::Car,
            &traj,
            &small_pattern(),
            &rig,
            1.0,
        );
        assert_eq!(drive.frames.len(), 3);
        let seq = drive.sequence_data();
        let refs: Vec<&FrameScan<f64>> =
            seq.frames.iter().map(|f| &f.scan).collect();
        let scans =
            crate::builder::accumulate::accumulate_object(&refs, &drive.tracklet()).unwrap();
        assert_eq!(scans.len(), 3);
        for s in &scans {
            assert_eq!(s.points.len(), scans[0].points.len());
        }
    }

    #[test]
    fn linear_motion_interpolates_exactly() {
        // interpolate_pose at label midpoints matches the trajectory for
        // linear motion.
        let traj = linear_trajectory(
            Vec3::new(6.0, -2.0, -0.73),
            Vec3::new(1.0, 0.5, 0.0),
            0.2,
            0.0,
            5,
        );
        let knots = [traj[0], traj[4]];
        let mid = crate::builder::pose_track::interpolate_pose(&knots, 0.2).unwrap();
        assert!((mid.translation - traj[2].pose.translation).norm() < 1e-12);
    }
}
