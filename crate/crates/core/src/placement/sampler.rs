//! Rejection sampling of valid pasting transformations.

use rand::Rng;

use crate::builder::cut_object::CutObject;
use crate::builder::database::CutObjectDb;
use crate::geom::SimilarityTransform;
use crate::math::Vec3;
use crate::placement::bbox::{placed_box, BoundingBox3D};
use crate::placement::checks::{
    check_box_conflicts, check_distortion, check_foreground_occlusion, ground_project,
    viewpoint_adjust,
};
use crate::placement::config::PlacementConfig;
use crate::scalar::Real;
use crate::scene::{ObjectClass, Scene};

/// Nominal sensor height above ground; only seeds the provisional z before
/// ground projection fixes it.
const NOMINAL_GROUND_Z: f64 = -1.73;

/// An accepted placement: which database object, where, and its label.
#[derive(Clone, Debug)]
pub struct Placement<T> {
    pub object_index: usize,
    pub class: ObjectClass,
    pub transform: SimilarityTransform<T>,
    pub label: BoundingBox3D<T>,
}

/// Proposes a candidate pasting transformation: ground position uniform
/// over the camera frustum footprint (area-uniform over the trapezoid,
/// clamped to the LiDAR radius), yaw uniform in [0, 2pi), scale uniform in
/// the configured range. The translation z is provisional until
/// `ground_project` fixes it.
pub fn propose_pose<T: Real, R: Rng>(
    scene: &Scene<T>,
    cut: &CutObject<T>,
    rng: &mut R,
    cfg: &PlacementConfig<T>,
) -> SimilarityTransform<T> {
    let (z_lo, z_hi) = (cfg.depth_range.0.as_f64(), cfg.depth_range.1.as_f64());
    let width = scene.camera.model.image_width as f64;
    let cam_to_sensor = scene.camera.sensor_to_camera.inverse();
    let scale = T::of(rng.random_range(cfg.scale_range.0.as_f64()..=cfg.scale_range.1.as_f64()));
    let yaw = T::of(rng.random_range(0.0..std::f64::consts::TAU));
    let provisional_z = NOMINAL_GROUND_Z + cut.dims.height.as_f64() * scale.as_f64() * 0.5;
    // Resample until the candidate center projects inside the image and
    // stays inside the LiDAR radius; bounded to keep worst cases cheap.
    let mut translation = Vec3::zero();
    for attempt in 0..64 {
        // Area-uniform depth over the widening frustum footprint.
        let u01: f64 = rng.random();
        let depth = (z_lo * z_lo + u01 * (z_hi * z_hi - z_lo * z_lo)).sqrt();
        let column: f64 = rng.random_range(0.0..width - 1.0);
        // Camera-frame ray through that column at unit depth.
        let caster = scene.camera.model.ray_caster().expect("validated camera");
        let dir = caster.ray(T::of(column), T::of(0.0)).direction;
        let x_cam = dir.x.as_f64() / dir.z.as_f64() * depth;
        let p_cam = Vec3::new(T::of(x_cam), T::zero(), T::of(depth));
        let p_sensor = cam_to_sensor.transform_point(p_cam);
        translation = Vec3::new(p_sensor.x, p_sensor.y, T::of(provisional_z));
        let bev_radius = (translation.x * translation.x + translation.y * translation.y).sqrt();
        if bev_radius > cfg.max_bev_radius {
            continue;
        }
        let center = Vec3::new(translation.x, translation.y, translation.z);
        if let Some((u, v, _)) = scene.camera.project_sensor_point(center) {
            if scene.camera.model.contains_pixel(u, v) {
                break;
            }
        }
        if attempt == 63 {
            break;
        }
    }
    SimilarityTransform::new(yaw, translation, scale, false)
}

/// Draws a class index from the configured distribution.
fn draw_class<T: Real, R: Rng>(cfg: &PlacementConfig<T>, rng: &mut R) -> ObjectClass {
    let x = T::of(rng.random::<f64>());
    let mut acc = T::zero();
    for (class, p) in &cfg.class_distribution {
        acc += *p;
        if x < acc {
            return *class;
        }
    }
    cfg.class_distribution.last().map(|(c, _)| *c).unwrap_or(ObjectClass::Car)
}

/// Samples up to `max_objects_per_frame` valid placements for a frame.
///
/// Classes are drawn i.i.d. from the class distribution and objects
/// uniformly within each class. Every candidate runs the full rule chain
/// (propose, viewpoint adjust, ground project, foreground occlusion, box
/// conflicts, distortion) with a bounded retry budget; accepted labels join
/// the conflict set for subsequent objects. Fully deterministic under a
/// seeded rng. Ground tests use the original (pre-paste) cloud only.
pub fn sample_placements<T: Real, R: Rng>(
    scene: &Scene<T>,
    db: &CutObjectDb<T>,
    rng: &mut R,
    cfg: &PlacementConfig<T>,
) -> Vec<Placement<T>> {
    let camera_center = scene.camera.camera_center_in_sensor();
    let mut conflict_set = scene.existing_boxes();
    let mut accepted: Vec<Placement<T>> = Vec::new();
    for _slot in 0..cfg.max_objects_per_frame {
        let class = draw_class(cfg, rng);
        let candidates = db.indices_of_class(class);
        if candidates.is_empty() {
            continue;
        }
        let object_index = candidates[rng.random_range(0..candidates.len())];
        let cut = db.object(object_index);
        for _attempt in 0..cfg.max_attempts_per_object {
            let proposal = propose_pose(scene, cut, rng, cfg);
            let mut t = viewpoint_adjust(&proposal, &cut.observed, camera_center);
            let candidate = placed_box(cut.dims, &t);
            let grounded = match ground_project(&scene.cloud, &candidate, cfg) {
                Ok(b) => b,
                Err(_) => continue,
            };
            t.translation.z = grounded.center.z;
            if check_foreground_occlusion(&scene.cloud, &scene.camera, &grounded, cfg).is_err() {
                continue;
            }
            if check_box_conflicts(&conflict_set, &grounded, &scene.camera, cfg).is_err() {
                continue;
            }
            if check_distortion(cut.len_u_src, cut.wid_u_src, &scene.camera, &grounded, cfg.d_max)
                .is_err()
            {
                continue;
            }
            conflict_set.push(grounded);
            accepted.push(Placement {
                object_index,
                class,
                transform: t,
                label: grounded,
            });
            break;
        }
    }
    accepted
}
