//! The pastable object record and its offline construction pipeline.

use crate::builder::accumulate::{accumulate_object, FrameScan};
use crate::builder::filters::{remove_outlier_flags, ransac_plane};
use crate::builder::icp::{colored_icp, IcpParams, ScanCloud};
use crate::builder::normals::estimate_normals;
use crate::builder::pose_graph::{optimize_pose_graph, PoseGraph, PoseGraphEdge};
use crate::builder::reconstruct::SurfaceReconstructor;
use crate::builder::tracklets::Tracklet;
use crate::builder::BuilderError;
use crate::geom::{RigidPose, SimilarityTransform, TriangleMesh};
use crate::impaste::camera::CameraRig;
use crate::impaste::image::{ImageBuf, SourcePatch};
use crate::intensity::{build_interpolant, IntensityInterpolant};
use crate::knn::KdTree3;
use crate::math::Vec3;
use crate::placement::bbox::{BoundingBox3D, BoxDims};
use crate::placement::config::ObservedSides;
use crate::scalar::Real;
use crate::scene::ObjectClass;

/// A pastable object: mesh, source crop + instance mask, intensity
/// interpolant, viewpoint metadata and the projected-length records used by
/// the distortion rule.
pub struct CutObject<T> {
    pub id: String,
    pub class: ObjectClass,
    pub dims: BoxDims<T>,
    /// Surface mesh in the object frame (origin at the box center).
    pub mesh: TriangleMesh<T>,
    pub patch: SourcePatch<T>,
    /// Object frame -> source sensor frame.
    pub h0: RigidPose<T>,
    pub interpolant: IntensityInterpolant<T>,
    pub observed: ObservedSides,
    /// u-axis pixel extents of the source box's length/width edges.
    pub len_u_src: T,
    pub wid_u_src: T,
}

/// Everything one sequence contributes to the builder.
pub struct SequenceData<T> {
    pub frames: Vec<SequenceFrame<T>>,
    pub rig: CameraRig<T>,
}

/// One raw frame: cloud in the sensor frame, image, instance masks aligned
/// with the tracklet observations that reference this frame.
pub struct SequenceFrame<T> {
    pub scan: FrameScan<T>,
    pub image: ImageBuf<T>,
    /// Full-frame soft masks keyed by source label index.
    pub masks: std::collections::BTreeMap<usize, Vec<T>>,
}

/// Tunables of the cut-object construction pipeline.
pub struct BuildParams<T> {
    pub icp: IcpParams<T>,
    pub reconstructor: Box<dyn SurfaceReconstructor<T>>,
    /// Minimum merged points for rigid reconstruction.
    pub min_points_rigid: usize,
    /// Minimum single-scan points for deformable reconstruction.
    pub min_points_deformable: usize,
    /// Required coverage of the 2px-eroded mask by the mesh silhouette.
    pub min_silhouette_coverage: f64,
    /// Crop padding around the projected object box (pixels).
    pub patch_pad_px: i32,
    pub ransac_iterations: usize,
    pub ransac_threshold: T,
    pub ransac_seed: u64,
}

impl<T: Real> Default for BuildParams<T> {
    fn default() -> Self {
        Self {
            icp: IcpParams::default(),
            reconstructor: Box::new(crate::builder::reconstruct::SdfMarchingCubes::default()),
            min_points_rigid: 100,
            min_points_deformable: 50,
            min_silhouette_coverage: 0.995,
            patch_pad_px: 4,
            ransac_iterations: 100,
            ransac_threshold: T::of(0.04),
            ransac_seed: 12345,
        }
    }
}

/// Builds one cut object from a sequence and a tracklet.
///
/// Rigid classes: accumulate -> pairwise colored ICP -> pose graph -> merge
/// -> outlier removal -> RANSAC ground removal -> surface reconstruction.
/// Deformable classes consume exactly one (the source) scan. Any stage
/// failure aborts this object with a reason; the database build continues
/// with the next object.
pub fn build_cut_object<T: Real>(
    seq: &SequenceData<T>,
    tracklet: &Tracklet<T>,
    params: &BuildParams<T>,
) -> Result<CutObject<T>, BuilderError> {
    let source_obs = tracklet
        .source_observation(seq, &seq.rig)
        .ok_or(BuilderError::NoUnoccludedSource)?;
    let dims = tracklet.dims;

    // --- Geometry: accumulate and register (rigid) or take the source scan.
    let frame_scans: Vec<&FrameScan<T>> = seq.frames.iter().map(|f| &f.scan).collect();
    let (merged_points, merged_origin, source_cloud) = if tracklet.class.is_rigid() {
        let scans = accumulate_object(&frame_scans, tracklet)?;
        let registered = register_scans(&scans, &params.icp)?;
        let source_scan_index = scans
            .iter()
            .position(|s| s.frame_index == source_obs.frame_index)
            .unwrap_or(0);
        merge_registered(&scans, &registered, source_scan_index)
    } else {
        let scans = accumulate_object(&frame_scans, tracklet)?;
        let src = scans
            .iter()
            .find(|s| s.frame_index == source_obs.frame_index)
            .or_else(|| scans.first())
            .ok_or(BuilderError::EmptyCrop)?;
        (
            src.points.clone(),
            vec![src.sensor_origin_obj; src.points.len()],
            (src.points.clone(), src.intensity.clone(), src.sensor_origin_obj),
        )
    };

    let min_points = if tracklet.class.is_rigid() {
        params.min_points_rigid
    } else {
        params.min_points_deformable
    };
    if merged_points.len() < min_points {
        return Err(BuilderError::TooFewPoints { have: merged_points.len(), need: min_points });
    }

    // --- Outlier removal over the merged cloud.
    let keep = remove_outlier_flags(&merged_points, 20, T::of(2.0));
    let (mut points, mut origins) = (Vec::new(), Vec::new());
    for i in 0..merged_points.len() {
        if keep[i] {
            points.push(merged_points[i]);
            origins.push(merged_origin[i]);
        }
    }

    // --- Ground plane removal (only when a credible ground plane exists).
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(params.ransac_seed);
    use rand::SeedableRng;
    if let Ok((plane, inliers)) =
        ransac_plane(&points, params.ransac_iterations, params.ransac_threshold, &mut rng)
    {
        let horizontal = plane.normal.z.abs() > T::of(0.85);
        let near_bottom = {
            let mean_z = inliers.iter().map(|&i| points[i].z.as_f64()).sum::<f64>()
                / inliers.len().max(1) as f64;
            mean_z < (-dims.height * T::of(0.5) + T::of(0.3)).as_f64()
        };
        let substantial = inliers.len() * 8 >= points.len();
        if horizontal && near_bottom && substantial {
            let drop: std::collections::BTreeSet<usize> = inliers.into_iter().collect();
            let mut p2 = Vec::new();
            let mut o2 = Vec::new();
            for i in 0..points.len() {
                if !drop.contains(&i) {
                    p2.push(points[i]);
                    o2.push(origins[i]);
                }
            }
            points = p2;
            origins = o2;
        }
    }
    if points.len() < min_points {
        return Err(BuilderError::TooFewPoints { have: points.len(), need: min_points });
    }

    // --- Normals oriented toward the contributing scan's sensor origin.
    let normals = estimate_normals(&points, 20, &origins);

    // --- Surface reconstruction in the object frame.
    let mesh = params.reconstructor.reconstruct(&points, &normals, dims)?;
    if mesh.is_empty() {
        return Err(BuilderError::Reconstruction("empty mesh"));
    }

    // --- Source-frame metadata.
    let h0 = source_obs.object_to_sensor;
    let camera_center_obj = h0.inverse().transform_point(seq.rig.camera_center_in_sensor());
    let observed = ObservedSides {
        front_observed: camera_center_obj.x >= T::zero(),
        left_observed: camera_center_obj.y >= T::zero(),
    };
    let source_box = BoundingBox3D::new(h0.translation, dims, source_obs.yaw);
    let (len_u_src, wid_u_src) = source_box
        .projected_edge_extents(&seq.rig)
        .ok_or(BuilderError::SourceBoxBehindCamera)?;
    if !(len_u_src > T::zero() && wid_u_src > T::zero()) {
        return Err(BuilderError::SourceBoxBehindCamera);
    }

    // --- Patch + mask crop around the projected box.
    let frame = &seq.frames[source_obs.sequence_frame];
    let mask_full = frame
        .masks
        .get(&source_obs.label_index)
        .ok_or(BuilderError::MissingMask)?;
    let patch = crop_patch(
        &frame.image,
        mask_full,
        &source_box,
        &seq.rig,
        params.patch_pad_px,
    )?;

    // --- Silhouette must cover the (eroded) instance mask: hole-freeness proxy.
    let coverage = silhouette_mask_coverage(&mesh, &h0, &seq.rig, &patch);
    if coverage < params.min_silhouette_coverage {
        return Err(BuilderError::SilhouetteGap { coverage });
    }

    // --- Intensity interpolant from the source-frame points.
    let (src_points, src_intensity, src_origin) = source_cloud;
    if src_points.is_empty() {
        return Err(BuilderError::EmptyCrop);
    }
    let vertex_tree = KdTree3::build(&mesh.vertices);
    let src_normals: Vec<Vec3<T>> = src_points
        .iter()
        .map(|&p| {
            let n = vertex_tree.nearest(p).expect("mesh has vertices");
            mesh.vertex_normals[n.index]
        })
        .collect();
    let interpolant = build_interpolant(&src_points, &src_intensity, &src_normals, src_origin)
        .map_err(|e| BuilderError::Intensity(e.to_string()))?;

    Ok(CutObject {
        id: tracklet.id_string(),
        class: tracklet.class,
        dims,
        mesh,
        patch,
        h0,
        interpolant,
        observed,
        len_u_src,
        wid_u_src,
    })
}

/// Pairwise colored ICP on temporally adjacent scans plus loop edges to the
/// densest scan, pose-graph optimized. Returns per-scan corrections.
fn register_scans<T: Real>(
    scans: &[crate::builder::accumulate::ObjectScan<T>],
    icp_params: &IcpParams<T>,
) -> Result<Vec<RigidPose<T>>, BuilderError> {
    if scans.len() == 1 {
        return Ok(vec![RigidPose::identity()]);
    }
    let clouds: Vec<ScanCloud<T>> = scans
        .iter()
        .map(|s| ScanCloud::from_points(&s.points, &s.intensity, s.sensor_origin_obj))
        .collect();
    let reference = scans
        .iter()
        .enumerate()
        .max_by_key(|(_, s)| s.points.len())
        .map(|(i, _)| i)
        .unwrap_or(0);
    let mut edges = Vec::new();
    let mut add_edge = |i: usize, j: usize| {
        if i == j {
            return;
        }
        let result = colored_icp(&clouds[j], &clouds[i], &RigidPose::identity(), icp_params);
        let mut information = [[T::zero(); 6]; 6];
        let w = result.fitness.max(T::of(1e-3));
        for (d, row) in information.iter_mut().enumerate() {
            row[d] = w;
        }
        edges.push(PoseGraphEdge { from: i, to: j, measurement: result.pose, information });
    };
    for i in 0..scans.len() - 1 {
        add_edge(i, i + 1);
    }
    for i in 0..scans.len() {
        if i != reference && i.abs_diff(reference) > 1 {
            add_edge(reference, i);
        }
    }
    let graph = PoseGraph { nodes: vec![RigidPose::identity(); scans.len()], edges };
    optimize_pose_graph(&graph).map_err(|e| BuilderError::Registration(e.to_string()))
}

type MergedCloud<T> = (Vec<Vec3<T>>, Vec<Vec3<T>>, (Vec<Vec3<T>>, Vec<T>, Vec3<T>));

/// Applies corrections and concatenates scans; also returns the corrected
/// source-frame cloud (points, intensities, sensor origin) for the
/// intensity interpolant.
fn merge_registered<T: Real>(
    scans: &[crate::builder::accumulate::ObjectScan<T>],
    corrections: &[RigidPose<T>],
    source_index: usize,
) -> MergedCloud<T> {
    let mut points = Vec::new();
    let mut origins = Vec::new();
    let mut source = (Vec::new(), Vec::new(), Vec3::zero());
    for (scan, correction) in scans.iter().zip(corrections.iter()) {
        let origin = correction.transform_point(scan.sensor_origin_obj);
        for &p in &scan.points {
            points.push(correction.transform_point(p));
            origins.push(origin);
        }
    }
    let scan = &scans[source_index];
    let correction = &corrections[source_index];
    source.2 = correction.transform_point(scan.sensor_origin_obj);
    for (k, &p) in scan.points.iter().enumerate() {
        source.0.push(correction.transform_point(p));
        source.1.push(scan.intensity[k]);
    }
    (points, origins, source)
}

/// Crops the source image and mask to the projected box padded by `pad`.
fn crop_patch<T: Real>(
    image: &ImageBuf<T>,
    mask: &[T],
    source_box: &BoundingBox3D<T>,
    rig: &CameraRig<T>,
    pad: i32,
) -> Result<SourcePatch<T>, BuilderError> {
    let rect = source_box
        .image_rect(rig)
        .ok_or(BuilderError::SourceBoxBehindCamera)?;
    let (w, h) = (image.width as i64, image.height as i64);
    let x0 = ((rect.u0.as_f64().floor() as i64) - pad as i64).clamp(0, w - 1);
    let y0 = ((rect.v0.as_f64().floor() as i64) - pad as i64).clamp(0, h - 1);
    let x1 = ((rect.u1.as_f64().ceil() as i64) + pad as i64).clamp(0, w - 1);
    let y1 = ((rect.v1.as_f64().ceil() as i64) + pad as i64).clamp(0, h - 1);
    if x1 <= x0 || y1 <= y0 {
        return Err(BuilderError::SourceBoxBehindCamera);
    }
    let cw = (x1 - x0 + 1) as usize;
    let ch = (y1 - y0 + 1) as usize;
    let mut out = ImageBuf::filled(cw, ch, [T::zero(); 3]);
    let mut out_mask = vec![T::zero(); cw * ch];
    for y in 0..ch {
        for x in 0..cw {
            let sx = x0 as usize + x;
            let sy = y0 as usize + y;
            out.set_pixel(x, y, image.pixel(sx, sy));
            out_mask[y * cw + x] = mask[sy * image.width + sx];
        }
    }
    SourcePatch::new(out, out_mask, (x0 as i32, y0 as i32))
        .map_err(|e| BuilderError::Intensity(e.to_string()))
}

/// Fraction of the 2px-eroded instance mask covered by the mesh silhouette
/// (camera-mode ray per mask pixel center).
pub fn silhouette_mask_coverage<T: Real>(
    mesh: &TriangleMesh<T>,
    h0: &RigidPose<T>,
    rig: &CameraRig<T>,
    patch: &SourcePatch<T>,
) -> f64 {
    use crate::geom::{intersect_ray_mesh, Bvh, RayMode};
    let Ok(bvh) = Bvh::build(&mesh.transformed(h0)) else {
        return 0.0;
    };
    let mesh_sensor = mesh.transformed(h0);
    let Ok(caster) = rig.sensor_ray_caster() else {
        return 0.0;
    };
    let eroded = crate::impaste::image::erode_mask(
        &patch.mask,
        patch.image.width,
        patch.image.height,
        2,
    );
    let mut total = 0usize;
    let mut covered = 0usize;
    for y in 0..patch.image.height {
        for x in 0..patch.image.width {
            if !eroded[y * patch.image.width + x] {
                continue;
            }
            total += 1;
            let u = T::of((x as i64 + patch.offset.0 as i64) as f64);
            let v = T::of((y as i64 + patch.offset.1 as i64) as f64);
            let ray = caster.ray(u, v);
            if intersect_ray_mesh(&ray, &mesh_sensor, &bvh, RayMode::Camera).is_some() {
                covered += 1;
            }
        }
    }
    if total == 0 {
        1.0
    } else {
        covered as f64 / total as f64
    }
}

impl<T: Real> CutObject<T> {
    /// The source pose expressed as a pasting transformation (identity paste).
    pub fn source_paste_transform(&self) -> SimilarityTransform<T> {
        let yaw = self.h0.rotation.log_so3().z;
        SimilarityTransform::new(yaw, self.h0.translation, T::one(), false)
    }
}
