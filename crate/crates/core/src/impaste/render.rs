//! Per-pixel mesh-guided image resampling and depth-ordered frame
//! compositing.

use rand::Rng;

use crate::builder::cut_object::CutObject;
use crate::geom::{intersect_ray_mesh, Bvh, RayMode, SimilarityTransform, TriangleMesh};
use crate::impaste::camera::CameraRig;
use crate::impaste::image::{bilinear_sample, gaussian_blur_layer, ImageBuf, RgbaLayer};
use crate::impaste::ImpasteError;
use crate::lidar::{remove_occluded, simulate_scan};
use crate::placement::bbox::placed_box;
use crate::scalar::Real;
use crate::scene::{Scene, SceneBox};

/// Anti-aliasing knobs: probability of a slight Gaussian blur on the pasted
/// object layer and the sigma range it draws from (pixels).
#[derive(Clone, Copy, Debug)]
pub struct RenderConfig {
    pub p_blur: f64,
    pub sigma_range: (f64, f64),
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self { p_blur: 0.5, sigma_range: (0.5, 1.0) }
    }
}

impl RenderConfig {
    /// Disables the random blur (tests and deterministic fixtures).
    pub fn no_blur() -> Self {
        Self { p_blur: 0.0, sigma_range: (0.5, 1.0) }
    }
}

/// Integer pixel rectangle, inclusive bounds, clamped to an image.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IRect {
    pub x0: i64,
    pub y0: i64,
    pub x1: i64,
    pub y1: i64,
}

impl IRect {
    pub fn contains(&self, x: i64, y: i64) -> bool {
        x >= self.x0 && x <= self.x1 && y >= self.y0 && y <= self.y1
    }
}

/// Screen bounding rectangle of a pasted mesh, padded by `pad` pixels and
/// clamped to the image. `None` when no vertex projects in front of the
/// camera or the rectangle misses the image entirely.
pub fn pasted_screen_rect<T: Real>(
    camera: &CameraRig<T>,
    mesh: &TriangleMesh<T>,
    pad: i64,
) -> Option<IRect> {
    let mut lo_u = f64::INFINITY;
    let mut lo_v = f64::INFINITY;
    let mut hi_u = f64::NEG_INFINITY;
    let mut hi_v = f64::NEG_INFINITY;
    let mut any = false;
    for &v in &mesh.vertices {
        if let Some((u, vv, _)) = camera.project_sensor_point(v) {
            lo_u = lo_u.min(u.as_f64());
            lo_v = lo_v.min(vv.as_f64());
            hi_u = hi_u.max(u.as_f64());
            hi_v = hi_v.max(vv.as_f64());
            any = true;
        }
    }
    if !any {
        return None;
    }
    let (w, h) = (camera.model.image_width as i64, camera.model.image_height as i64);
    let rect = IRect {
        x0: (lo_u.floor() as i64 - pad).clamp(0, w - 1),
        y0: (lo_v.floor() as i64 - pad).clamp(0, h - 1),
        x1: (hi_u.ceil() as i64 + pad).clamp(0, w - 1),
        y1: (hi_v.ceil() as i64 + pad).clamp(0, h - 1),
    };
    if rect.x1 < rect.x0 || rect.y1 < rect.y0 {
        return None;
    }
    Some(rect)
}

/// 2x2 stratified sub-pixel offsets used for supersampling.
pub const SUBPIXEL_OFFSETS: [(f64, f64); 4] =
    [(-0.25, -0.25), (0.25, -0.25), (-0.25, 0.25), (0.25, 0.25)];

/// Renders one pasted object into `dest`.
///
/// Every pixel in the mesh's padded screen rectangle is sampled with four
/// stratified rays. Each camera-mode hit maps back to the object frame
/// (inverse pasting transform), then through the object's source pose into
/// the source camera, where color and instance mask are bilinearly sampled.
/// The four samples accumulate premultiplied; compositing uses
/// `dest = layer + (1 - alpha) * dest` with alpha the mean sampled mask
/// (misses contribute zero). With probability `p_blur` the premultiplied
/// layer is blurred before compositing. Returns the touched rectangle.
#[allow(clippy::too_many_arguments)]
pub fn render_pasted_object<T: Real, R: Rng>(
    dest: &mut ImageBuf<T>,
    camera: &CameraRig<T>,
    cut: &CutObject<T>,
    mesh_t: &TriangleMesh<T>,
    bvh: &Bvh<T>,
    paste_t: &SimilarityTransform<T>,
    cfg: &RenderConfig,
    rng: &mut R,
) -> Result<Option<IRect>, ImpasteError> {
    // Draw blur decisions up front so the rectangle can include the spread.
    let do_blur = rng.random::<f64>() < cfg.p_blur;
    let sigma = rng.random_range(cfg.sigma_range.0..=cfg.sigma_range.1);
    let blur_pad = if do_blur { (3.0 * sigma).ceil() as i64 + 1 } else { 0 };
    let Some(rect) = pasted_screen_rect(camera, mesh_t, 1 + blur_pad) else {
        return Ok(None);
    };
    let caster = camera.sensor_ray_caster()?;
    let width = (rect.x1 - rect.x0 + 1) as usize;
    let height = (rect.y1 - rect.y0 + 1) as usize;
    let mut layer = RgbaLayer::<T>::zeros(width, height);
    let quarter = T::of(0.25);
    for py in rect.y0..=rect.y1 {
        for px in rect.x0..=rect.x1 {
            let mut acc = [T::zero(); 4];
            let mut hits = 0u32;
            for (du, dv) in SUBPIXEL_OFFSETS {
                let u = T::of(px as f64 + du);
                let v = T::of(py as f64 + dv);
                let ray = caster.ray(u, v);
                let Some(hit) = intersect_ray_mesh(&ray, mesh_t, bvh, RayMode::Camera) else {
                    continue;
                };
                let p_obj = paste_t.inverse_point(hit.point);
                let p_src = cut.h0.transform_point(p_obj);
                let Some((su, sv, _)) = camera.project_sensor_point(p_src) else {
                    continue; // behind the source camera: transparent
                };
                let (color, mask) = bilinear_sample(&cut.patch, su, sv);
                for c in 0..3 {
                    acc[c] += mask * color[c];
                }
                acc[3] += mask;
                hits += 1;
            }
            if hits == 0 {
                continue;
            }
            let px_out = layer.at_mut((px - rect.x0) as usize, (py - rect.y0) as usize);
            for c in 0..4 {
                px_out[c] = acc[c] * quarter;
            }
        }
    }
    if do_blur {
        layer = gaussian_blur_layer(&layer, T::of(sigma));
    }
    // Composite: premultiplied over.
    for py in rect.y0..=rect.y1 {
        for px in rect.x0..=rect.x1 {
            let src = layer.at((px - rect.x0) as usize, (py - rect.y0) as usize);
            let alpha = src[3];
            if alpha == T::zero() {
                continue;
            }
            let alpha = alpha.min(T::one());
            let dst = dest.pixel(px as usize, py as usize);
            let mut out = [T::zero(); 3];
            for c in 0..3 {
                out[c] = (src[c] + (T::one() - alpha) * dst[c]).clamped(T::zero(), T::one());
            }
            dest.set_pixel(px as usize, py as usize, out);
        }
    }
    Ok(Some(rect))
}

/// Resampling record of one composited frame.
#[derive(Clone, Debug, Default)]
pub struct CompositeReport {
    /// Image rectangles touched, one per rendered object.
    pub touched_rects: Vec<IRect>,
    /// Simulated points appended per object.
    pub points_added: Vec<usize>,
    /// Original + earlier-pasted points removed per object.
    pub points_removed: Vec<usize>,
}

/// Pastes objects into a scene in descending camera distance, resampling
/// image and point cloud sequentially per object and appending labels.
///
/// Placements must be pre-validated; ordering guarantees the painter's
/// algorithm in the image and correct shadowing in the cloud.
pub fn composite_frame<T: Real, R: Rng>(
    scene: &mut Scene<T>,
    placements: &[(&CutObject<T>, SimilarityTransform<T>)],
    cfg: &RenderConfig,
    rng: &mut R,
) -> Result<CompositeReport, ImpasteError> {
    let camera_center = scene.camera.camera_center_in_sensor();
    let mut order: Vec<usize> = (0..placements.len()).collect();
    order.sort_by(|&a, &b| {
        let da = placed_box(placements[a].0.dims, &placements[a].1)
            .center
            .distance(camera_center);
        let db = placed_box(placements[b].0.dims, &placements[b].1)
            .center
            .distance(camera_center);
        db.partial_cmp(&da).unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut report = CompositeReport::default();
    for index in order {
        let (cut, paste_t) = &placements[index];
        let mesh_t = cut.mesh.apply_similarity(paste_t);
        let bvh = Bvh::build(&mesh_t).map_err(|_| ImpasteError::EmptyPaste)?;
        if let Some(rect) = render_pasted_object(
            &mut scene.image,
            &scene.camera,
            cut,
            &mesh_t,
            &bvh,
            paste_t,
            cfg,
            rng,
        )? {
            report.touched_rects.push(rect);
        }
        let before = scene.cloud.len();
        scene.cloud = remove_occluded(&scene.cloud, &mesh_t, &bvh);
        report.points_removed.push(before - scene.cloud.len());
        let new_points = simulate_scan(
            &scene.scan,
            &mesh_t,
            &bvh,
            &scene.camera,
            &cut.patch,
            &cut.interpolant,
            paste_t,
            &cut.h0,
        );
        report.points_added.push(new_points.len());
        scene.cloud.extend_from(&new_points);
        scene.boxes.push(SceneBox {
            class: cut.class,
            bbox: placed_box(cut.dims, paste_t),
        });
    }
    Ok(report)
}
