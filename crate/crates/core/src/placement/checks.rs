//! The individual placement rules: viewpoint maintenance, ground
//! projection, occlusion and conflict rejection, distortion limiting.

use crate::geom::SimilarityTransform;
use crate::impaste::camera::CameraRig;
use crate::lidar::PointCloud;
use crate::math::Vec3;
use crate::placement::bbox::BoundingBox3D;
use crate::placement::config::{ObservedSides, PlacementConfig};
use crate::scalar::Real;

/// Why a candidate pose was rejected. Rejections are outcomes, not errors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Rejection<T> {
    TooFewGroundPoints { found: usize, needed: usize },
    UnevenGround { std: T },
    ForegroundOcclusion { count: usize },
    BevIntersection { existing_index: usize },
    BehindExistingBox { existing_index: usize, iou: T },
    ExcessiveDistortion { length_ratio: T, width_ratio: T },
}

/// Keeps the object's unobserved sides hidden: flips the yaw by pi when the
/// camera would see the unobserved front/back, then mirrors when it would
/// see the unobserved left/right. The result guarantees nonnegative dot
/// products between the camera direction (object frame) and both observed
/// axes; already-compliant poses come back unchanged (idempotent).
pub fn viewpoint_adjust<T: Real>(
    t: &SimilarityTransform<T>,
    sides: &ObservedSides,
    camera_center: Vec3<T>,
) -> SimilarityTransform<T> {
    let mut out = *t;
    let to_camera = camera_center - t.translation;
    // Undo yaw (reflection does not change x; handle y below).
    let (s, c) = t.yaw.sin_cos();
    let wx = c * to_camera.x + s * to_camera.y;
    let mut wy = -s * to_camera.x + c * to_camera.y;
    let front_sign = if sides.front_observed { T::one() } else { -T::one() };
    if front_sign * wx < T::zero() {
        out.yaw = normalize_angle(out.yaw + T::PI());
        wy = -wy;
    }
    let wy_obj = if out.reflect { -wy } else { wy };
    let left_sign = if sides.left_observed { T::one() } else { -T::one() };
    if left_sign * wy_obj < T::zero() {
        out.reflect = !out.reflect;
    }
    out
}

fn normalize_angle<T: Real>(a: T) -> T {
    let two_pi = T::PI() * T::of(2.0);
    let mut a = a % two_pi;
    if a < T::zero() {
        a += two_pi;
    }
    a
}

/// Camera viewing direction expressed in the object frame of `t`.
pub fn camera_direction_in_object_frame<T: Real>(
    t: &SimilarityTransform<T>,
    camera_center: Vec3<T>,
) -> Vec3<T> {
    let to_camera = camera_center - t.translation;
    let (s, c) = t.yaw.sin_cos();
    let wx = c * to_camera.x + s * to_camera.y;
    let wy = -s * to_camera.x + c * to_camera.y;
    let wy = if t.reflect { -wy } else { wy };
    Vec3::new(wx, wy, to_camera.z)
}

/// Projects the box onto the ground: collects cloud points whose BEV
/// position falls inside the expanded footprint below the box mid-height,
/// then rests the box bottom on their mean height. Too few points or too
/// much height variance reject the pose.
pub fn ground_project<T: Real>(
    cloud: &PointCloud<T>,
    bbox: &BoundingBox3D<T>,
    cfg: &PlacementConfig<T>,
) -> Result<BoundingBox3D<T>, Rejection<T>> {
    let mid_z = bbox.center.z;
    let mut heights: Vec<T> = Vec::new();
    for p in &cloud.points {
        if p.z < mid_z && bbox.bev_contains(p.x, p.y, cfg.footprint_expand) {
            heights.push(p.z);
        }
    }
    if heights.len() < cfg.min_ground_points {
        return Err(Rejection::TooFewGroundPoints {
            found: heights.len(),
            needed: cfg.min_ground_points,
        });
    }
    let n = T::of_usize(heights.len());
    let mean = heights.iter().fold(T::zero(), |a, &b| a + b) / n;
    let var = heights.iter().fold(T::zero(), |a, &b| a + (b - mean) * (b - mean)) / n;
    let std = var.sqrt();
    if std > cfg.max_ground_height_std {
        return Err(Rejection::UnevenGround { std });
    }
    let mut out = *bbox;
    out.center.z = mean + bbox.dims.height * T::of(0.5);
    Ok(out)
}

/// Rejects poses behind existing LiDAR points: more than the tolerated
/// count of non-ground points projecting inside the box's image rectangle
/// at a range shorter than the box's nearest corner (minus the margin)
/// suggests foreground occlusion.
pub fn check_foreground_occlusion<T: Real>(
    cloud: &PointCloud<T>,
    rig: &CameraRig<T>,
    bbox: &BoundingBox3D<T>,
    cfg: &PlacementConfig<T>,
) -> Result<(), Rejection<T>> {
    let Some(rect) = bbox.image_rect(rig) else {
        return Ok(());
    };
    let near_range = bbox.nearest_corner_range() - cfg.occlusion_range_margin;
    let ground_limit = bbox.bottom_z() + cfg.ground_band;
    let mut count = 0usize;
    for p in &cloud.points {
        if p.z <= ground_limit {
            continue;
        }
        if p.norm() >= near_range {
            continue;
        }
        let Some((u, v, _)) = rig.project_sensor_point(*p) else {
            continue;
        };
        if u >= rect.u0 && u <= rect.u1 && v >= rect.v0 && v <= rect.v1 {
            count += 1;
            if count > cfg.max_foreground_points {
                return Err(Rejection::ForegroundOcclusion { count });
            }
        }
    }
    Ok(())
}

/// Rejects candidates that intersect an existing box in bird's eye view or
/// sit behind one (image rectangles overlapping above the IoU threshold
/// with the existing box closer to the sensor).
pub fn check_box_conflicts<T: Real>(
    existing: &[BoundingBox3D<T>],
    candidate: &BoundingBox3D<T>,
    rig: &CameraRig<T>,
    cfg: &PlacementConfig<T>,
) -> Result<(), Rejection<T>> {
    for (i, other) in existing.iter().enumerate() {
        if candidate.bev_intersects(other) {
            return Err(Rejection::BevIntersection { existing_index: i });
        }
    }
    let Some(candidate_rect) = candidate.image_rect(rig) else {
        return Ok(());
    };
    let candidate_range = candidate.center.norm();
    for (i, other) in existing.iter().enumerate() {
        let Some(other_rect) = other.image_rect(rig) else {
            continue;
        };
        let iou = candidate_rect.intersection_over_union(&other_rect);
        if iou > cfg.behind_iou && candidate_range > other.center.norm() {
            return Err(Rejection::BehindExistingBox { existing_index: i, iou });
        }
    }
    Ok(())
}

/// Limits resampling distortion: the u-axis projected extents of the
/// transformed box's length and width edges may not exceed `d_max` times
/// the extents recorded from the source image.
pub fn check_distortion<T: Real>(
    len_u_src: T,
    wid_u_src: T,
    rig: &CameraRig<T>,
    candidate: &BoundingBox3D<T>,
    d_max: T,
) -> Result<(), Rejection<T>> {
    let Some((len_u, wid_u)) = candidate.projected_edge_extents(rig) else {
        // A box that projects behind the camera would distort unboundedly.
        return Err(Rejection::ExcessiveDistortion {
            length_ratio: T::infinity(),
            width_ratio: T::infinity(),
        });
    };
    let length_ratio = len_u / len_u_src;
    let width_ratio = wid_u / wid_u_src;
    if length_ratio > d_max || width_ratio > d_max {
        return Err(Rejection::ExcessiveDistortion { length_ratio, width_ratio });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::impaste::camera::CameraModel;
    use crate::math::Mat3;
    use crate::placement::bbox::BoxDims;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn rig() -> CameraRig<f64> {
        let rot = Mat3::from_rows([0.0, -1.0, 0.0], [0.0, 0.0, -1.0], [1.0, 0.0, 0.0]);
        CameraRig::new(
            CameraModel::pinhole(500.0, 500.0, 320.0, 240.0, 640, 480).unwrap(),
            crate::geom::RigidPose::new(rot, Vec3::zero()),
        )
    }

    fn default_cfg() -> PlacementConfig<f64> {
        PlacementConfig::default()
    }

    #[test]
    fn viewpoint_flips_back_facing_proposal() {
        // Object at +x, camera at origin. Front observed, but pose faces the
        // camera with its back (yaw = 0 means front points away from origin
        // toward +x; camera direction in object frame has x < 0).
        let sides = ObservedSides { front_observed: true, left_observed: true };
        let t = SimilarityTransform::new(0.0, Vec3::new(10.0, 0.0, 0.0), 1.0, false);
        let adjusted = viewpoint_adjust(&t, &sides, Vec3::zero());
        assert!((adjusted.yaw - std::f64::consts::PI).abs() < 1e-12);
        let w = camera_direction_in_object_frame(&adjusted, Vec3::zero());
        assert!(w.x >= 0.0);
    }

    #[test]
    fn compliant_pose_unchanged_and_idempotent() {
        let sides = ObservedSides { front_observed: true, left_observed: false };
        let t = SimilarityTransform::new(
            std::f64::consts::PI,
            Vec3::new(12.0, 3.0, -1.0),
            1.02,
            true,
        );
        let w = camera_direction_in_object_frame(&t, Vec3::zero());
        let once = viewpoint_adjust(&t, &sides, Vec3::zero());
        if w.x >= 0.0 && -(if t.reflect { -w.y } else { w.y }) >= 0.0 {
            assert_eq!(once, t);
        }
        let twice = viewpoint_adjust(&once, &sides, Vec3::zero());
        assert_eq!(once, twice);
    }

    #[test]
    fn viewpoint_invariant_holds_on_randomized_poses() {
        let mut rng = StdRng::seed_from_u64(2024);
        for _ in 0..10_000 {
            let sides = ObservedSides {
                front_observed: rng.random::<bool>(),
                left_observed: rng.random::<bool>(),
            };
            let t = SimilarityTransform::new(
                rng.random_range(0.0..std::f64::consts::TAU),
                Vec3::new(
                    rng.random_range(-40.0..40.0),
                    rng.random_range(-40.0..40.0),
                    rng.random_range(-2.0..0.5),
                ),
                rng.random_range(0.95..1.05),
                rng.random::<bool>(),
            );
            let camera = Vec3::new(0.27, 0.0, 0.08);
            if (camera - t.translation).norm() < 0.5 {
                continue;
            }
            let adjusted = viewpoint_adjust(&t, &sides, camera);
            let w = camera_direction_in_object_frame(&adjusted, camera);
            let fx = if sides.front_observed { w.x } else { -w.x };
            let ly = if sides.left_observed { w.y } else { -w.y };
            assert!(fx >= -1e-12, "front/back exposed: {w:?} sides {sides:?}");
            assert!(ly >= -1e-12, "left/right exposed: {w:?} sides {sides:?}");
        }
    }

    fn flat_ground_cloud(z: f64) -> PointCloud<f64> {
        let mut c = PointCloud::default();
        for i in 0..40 {
            for j in 0..40 {
                c.push(
                    Vec3::new(2.0 + 0.5 * i as f64, -10.0 + 0.5 * j as f64, z),
                    0.3,
                );
            }
        }
        c
    }

    #[test]
    fn ground_projection_rests_box_on_plane() {
        let cloud = flat_ground_cloud(-1.7);
        let bbox = BoundingBox3D::new(
            Vec3::new(10.0, 0.0, -0.5),
            BoxDims::new(4.0, 1.8, 1.5),
            0.3,
        );
        let out = ground_project(&cloud, &bbox, &default_cfg()).unwrap();
        assert!((out.bottom_z() + 1.7).abs() < 1e-6);
    }

    #[test]
    fn too_few_ground_points_rejected() {
        let mut cloud = PointCloud::default();
        for i in 0..3 {
            cloud.push(Vec3::new(10.0 + 0.1 * i as f64, 0.0, -1.7), 0.3);
        }
        let bbox =
            BoundingBox3D::new(Vec3::new(10.0, 0.0, -0.5), BoxDims::new(4.0, 1.8, 1.5), 0.0);
        match ground_project(&cloud, &bbox, &default_cfg()) {
            Err(Rejection::TooFewGroundPoints { found: 3, needed: 8 }) => {}
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn bimodal_heights_rejected_as_uneven() {
        let mut cloud = PointCloud::default();
        for i in 0..20 {
            let z = if i % 2 == 0 { -1.7 } else { -0.7 };
            cloud.push(Vec3::new(9.0 + 0.1 * i as f64, 0.0, z), 0.3);
        }
        let bbox =
            BoundingBox3D::new(Vec3::new(10.0, 0.0, 0.0), BoxDims::new(4.0, 1.8, 1.5), 0.0);
        match ground_project(&cloud, &bbox, &default_cfg()) {
            Err(Rejection::UnevenGround { std }) => {
                // Population std of a balanced {-1.7, -0.7} mix is 0.5.
                assert!((std - 0.5).abs() < 1e-9);
            }
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn empty_cloud_passes_occlusion() {
        let bbox =
            BoundingBox3D::new(Vec3::new(15.0, 0.0, -0.9), BoxDims::new(4.0, 1.8, 1.5), 0.0);
        check_foreground_occlusion(&PointCloud::default(), &rig(), &bbox, &default_cfg()).unwrap();
    }

    #[test]
    fn wall_in_front_rejects() {
        let mut cloud = PointCloud::default();
        for i in 0..20 {
            for j in 0..5 {
                cloud.push(
                    Vec3::new(5.0, -1.0 + 0.1 * i as f64, -1.0 + 0.4 * j as f64),
                    0.4,
                );
            }
        }
        let bbox =
            BoundingBox3D::new(Vec3::new(15.0, 0.0, -0.9), BoxDims::new(4.0, 1.8, 1.5), 0.0);
        assert!(matches!(
            check_foreground_occlusion(&cloud, &rig(), &bbox, &default_cfg()),
            Err(Rejection::ForegroundOcclusion { .. })
        ));
    }

    #[test]
    fn points_outside_rectangle_pass() {
        let mut cloud = PointCloud::default();
        for i in 0..50 {
            cloud.push(Vec3::new(5.0, 8.0 + 0.05 * i as f64, 0.0), 0.4);
        }
        let bbox =
            BoundingBox3D::new(Vec3::new(15.0, 0.0, -0.9), BoxDims::new(4.0, 1.8, 1.5), 0.0);
        check_foreground_occlusion(&cloud, &rig(), &bbox, &default_cfg()).unwrap();
    }

    #[test]
    fn identical_box_conflicts() {
        let bbox =
            BoundingBox3D::new(Vec3::new(15.0, 0.0, -0.9), BoxDims::new(4.0, 1.8, 1.5), 0.2);
        assert!(matches!(
            check_box_conflicts(&[bbox], &bbox, &rig(), &default_cfg()),
            Err(Rejection::BevIntersection { existing_index: 0 })
        ));
        let far =
            BoundingBox3D::new(Vec3::new(15.0, 10.0, -0.9), BoxDims::new(4.0, 1.8, 1.5), 0.2);
        check_box_conflicts(&[far], &bbox, &rig(), &default_cfg()).unwrap();
    }

    #[test]
    fn behind_existing_box_rejected() {
        // Same sight line, farther: BEV-disjoint but image rectangles
        // overlap well above the IoU threshold.
        let near =
            BoundingBox3D::new(Vec3::new(12.0, 0.0, -0.9), BoxDims::new(4.0, 1.8, 1.5), 0.0);
        let far =
            BoundingBox3D::new(Vec3::new(17.0, 0.0, -0.9), BoxDims::new(4.0, 1.8, 1.5), 0.0);
        assert!(!near.bev_intersects(&far));
        assert!(matches!(
            check_box_conflicts(&[near], &far, &rig(), &default_cfg()),
            Err(Rejection::BehindExistingBox { existing_index: 0, .. })
        ));
        // The nearer box is fine against the farther one.
        check_box_conflicts(&[far], &near, &rig(), &default_cfg()).unwrap();
    }

    #[test]
    fn distortion_identity_passes_half_depth_fails() {
        let r = rig();
        // Thin box (fronto-parallel width edges): pinhole scaling gives
        // ratio = z_src / z_new exactly.
        let dims = BoxDims::new(0.2, 1.8, 1.5);
        let src_box = BoundingBox3D::new(Vec3::new(20.0, 0.0, -0.9), dims, 0.0);
        let (len_u, wid_u) = src_box.projected_edge_extents(&r).unwrap();
        // Identity: ratios exactly 1.
        check_distortion(len_u, wid_u, &r, &src_box, 1.5).unwrap();
        // Half depth: ratio ~2 > 1.5.
        let near_box = BoundingBox3D::new(Vec3::new(10.0, 0.0, -0.9), dims, 0.0);
        match check_distortion(len_u, wid_u, &r, &near_box, 1.5) {
            Err(Rejection::ExcessiveDistortion { width_ratio, .. }) => {
                assert!((width_ratio - 2.0).abs() < 0.05, "ratio {width_ratio}");
            }
            other => panic!("unexpected: {other:?}"),
        }
        // A deep box is rejected as well: its near face upsamples even more.
        let deep = BoundingBox3D::new(Vec3::new(10.0, 0.0, -0.9), BoxDims::new(4.0, 1.8, 1.5), 0.0);
        let src_deep = BoundingBox3D::new(Vec3::new(20.0, 0.0, -0.9), BoxDims::new(4.0, 1.8, 1.5), 0.0);
        let (l2, w2) = src_deep.projected_edge_extents(&r).unwrap();
        assert!(check_distortion(l2, w2, &r, &deep, 1.5).is_err());
    }
}
