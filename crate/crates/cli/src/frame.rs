//! Loading and saving augmentable frame directories.

use std::path::Path;

use anyhow::{Context, Result};

use meshpaste_core::io::{self, FrameCalibration, RunConfig};
use meshpaste_core::lidar::ScanPattern;
use meshpaste_core::scene::{Scene, SceneBox};

pub struct LoadedFrame {
    pub scene: Scene<f64>,
    pub calib: FrameCalibration<f64>,
    /// Original labels text, preserved verbatim on output.
    pub labels_text: String,
}

pub fn load_run_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading config {}", p.display()))?;
            Ok(io::load_run_config(&text)?)
        }
        None => Ok(RunConfig::default()),
    }
}

pub fn scan_pattern_from_config(cfg: &RunConfig) -> Result<ScanPattern<f64>> {
    let mut pattern = match &cfg.lidar.intrinsics_path {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading laser table {}", path.display()))?;
            let lasers = meshpaste_core::lidar::parse_laser_table(&text)?;
            ScanPattern::new(lasers, cfg.lidar.azimuth_step, cfg.lidar.ray_length)?
        }
        None => {
            let mut p = ScanPattern::hdl64_ideal();
            p.azimuth_step = cfg.lidar.azimuth_step;
            p.ray_length = cfg.lidar.ray_length;
            p.validate()?;
            p
        }
    };
    pattern.lasers.sort_by_key(|l| l.laser_id);
    Ok(pattern)
}

/// Reads a frame directory: `calib.txt`, `velodyne.bin`, `image.png`,
/// `labels.txt` (optional).
pub fn load_frame(dir: &Path, cfg: &RunConfig) -> Result<LoadedFrame> {
    let calib_text = std::fs::read_to_string(dir.join("calib.txt"))
        .with_context(|| format!("reading {}", dir.join("calib.txt").display()))?;
    let calib: FrameCalibration<f64> = io::parse_calib(&calib_text)?;
    let cloud_bytes = std::fs::read(dir.join("velodyne.bin"))
        .with_context(|| format!("reading {}", dir.join("velodyne.bin").display()))?;
    let cloud = io::read_point_cloud(&cloud_bytes)?;
    let image = io::read_png_rgb_file::<f64>(&dir.join("image.png"))
        .with_context(|| format!("reading {}", dir.join("image.png").display()))?;
    let labels_text = std::fs::read_to_string(dir.join("labels.txt")).unwrap_or_default();
    let labels = io::parse_labels(&labels_text)?;
    let camera = calib.camera_rig(image.width as u32, image.height as u32)?;
    let boxes: Vec<SceneBox<f64>> = labels
        .iter()
        .filter_map(|l| {
            io::label_to_sensor_box(l, &calib).map(|(class, bbox)| SceneBox { class, bbox })
        })
        .collect();
    let scan = scan_pattern_from_config(cfg)?;
    Ok(LoadedFrame {
        scene: Scene { cloud, image, camera, scan, boxes },
        calib,
        labels_text,
    })
}

/// Writes an augmented frame: resampled cloud and image, the original
/// labels text with pasted labels appended, and the calibration copied
/// through.
pub fn save_frame(
    dir: &Path,
    frame: &LoadedFrame,
    scene: &Scene<f64>,
    pasted: &[(meshpaste_core::scene::ObjectClass, meshpaste_core::placement::BoundingBox3D<f64>)],
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("velodyne.bin"), io::write_point_cloud(&scene.cloud))?;
    io::write_png_rgb_file(&dir.join("image.png"), &scene.image)?;
    let mut labels_text = frame.labels_text.clone();
    if !labels_text.is_empty() && !labels_text.ends_with('\n') {
        labels_text.push('\n');
    }
    let pasted_labels: Vec<io::KittiLabel> = pasted
        .iter()
        .map(|(class, bbox)| io::sensor_box_to_label(*class, bbox, &frame.calib, &scene.camera))
        .collect();
    labels_text.push_str(&io::write_labels(&pasted_labels));
    std::fs::write(dir.join("labels.txt"), labels_text)?;
    let calib_src = frame_calib_text(frame);
    std::fs::write(dir.join("calib.txt"), calib_src)?;
    Ok(())
}

fn frame_calib_text(frame: &LoadedFrame) -> String {
    // Re-emit the calibration from the parsed values (byte-stable).
    let c = &frame.calib;
    let row = |m: &[[f64; 4]; 3]| {
        m.iter()
            .flat_map(|r| r.iter())
            .map(|v| format!("{v}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let r0 = c
        .r0_rect
        .m
        .iter()
        .flat_map(|r| r.iter())
        .map(|v| format!("{v}"))
        .collect::<Vec<_>>()
        .join(" ");
    format!(
        "P2: {}\nR0_rect: {}\nTr_velo_to_cam: {}\n",
        row(&c.p2),
        r0,
        row(&c.tr_velo_to_cam)
    )
}
