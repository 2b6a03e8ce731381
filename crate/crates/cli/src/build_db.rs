use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};

use meshpaste_core::builder::accumulate::FrameScan;
use meshpaste_core::builder::cut_object::{build_cut_object, BuildParams, SequenceData, SequenceFrame};
use meshpaste_core::builder::database::{config_hash, write_database};
use meshpaste_core::builder::tracklets::{build_tracklets, FrameLabels, LabeledWorldBox};
use meshpaste_core::builder::CutObject;
use meshpaste_core::geom::RigidPose;
use meshpaste_core::io::{self, FrameCalibration};
use meshpaste_core::math::Vec3;
use meshpaste_core::placement::BoundingBox3D;

use crate::frame::load_run_config;

/// Expected sequence layout under `<raw>/<seq>/`:
/// `calib.txt` (or `calib_cam_to_cam.txt` + `calib_velo_to_cam.txt`),
/// `velodyne_points/data/NNNNNNNNNN.bin`, `velodyne_points/timestamps.txt`
/// (optional; 0.1 s spacing otherwise), `oxts/data/NNNNNNNNNN.txt`,
/// `image_02/data/NNNNNNNNNN.png`. Labels live at `<labels>/<seq>/NNN.txt`
/// (KITTI object format) and masks at `<masks>/<seq>/NNN_KK.png` with `KK`
/// the label row index.
pub fn run(
    raw_root: &Path,
    labels_root: &Path,
    masks_root: &Path,
    out: &Path,
    config: Option<&Path>,
) -> Result<()> {
    let cfg = load_run_config(config)?;
    let hash = config_hash(serde_json::to_string(&cfg)?.as_bytes());
    let mut sequences: Vec<String> = std::fs::read_dir(raw_root)
        .with_context(|| format!("listing {}", raw_root.display()))?
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_dir())
        .map(|e| e.file_name().to_string_lossy().to_string())
        .collect();
    sequences.sort();
    if sequences.is_empty() {
        anyhow::bail!("no sequence directories under {}", raw_root.display());
    }
    let mut objects: Vec<CutObject<f64>> = Vec::new();
    let mut skipped = 0usize;
    for seq in &sequences {
        let loaded = load_sequence(raw_root, labels_root, masks_root, seq)
            .with_context(|| format!("loading sequence {seq}"))?;
        let tracklets = build_tracklets(seq, &loaded.frame_labels);
        println!(
            "sequence {seq}: {} frames, {} tracklets",
            loaded.data.frames.len(),
            tracklets.len()
        );
        for tracklet in &tracklets {
            let params = BuildParams::default();
            match build_cut_object(&loaded.data, tracklet, &params) {
                Ok(obj) => {
                    println!(
                        "  built {} ({}, {} triangles, {} support points)",
                        obj.id,
                        obj.class.name(),
                        obj.mesh.triangles.len(),
                        obj.interpolant.len()
                    );
                    objects.push(obj);
                }
                Err(err) => {
                    skipped += 1;
                    eprintln!("  skipped {}: {err}", tracklet.id_string());
                }
            }
        }
    }
    if objects.is_empty() {
        anyhow::bail!("no cut objects could be built ({skipped} skipped)");
    }
    objects.sort_by(|a, b| a.id.cmp(&b.id));
    write_database(out, &objects, &hash)?;
    println!(
        "wrote {} object(s) to {} ({} skipped)",
        objects.len(),
        out.display(),
        skipped
    );
    Ok(())
}

struct LoadedSequence {
    data: SequenceData<f64>,
    frame_labels: Vec<FrameLabels<f64>>,
}

fn load_sequence(
    raw_root: &Path,
    labels_root: &Path,
    masks_root: &Path,
    seq: &str,
) -> Result<LoadedSequence> {
    let seq_dir = raw_root.join(seq);
    let calib = load_calibration(&seq_dir)?;
    let velo_dir = seq_dir.join("velodyne_points").join("data");
    let mut frame_ids: Vec<usize> = std::fs::read_dir(&velo_dir)
        .with_context(|| format!("listing {}", velo_dir.display()))?
        .filter_map(|e| e.ok())
        .filter_map(|e| {
            let name = e.file_name().to_string_lossy().to_string();
            name.strip_suffix(".bin").and_then(|stem| stem.parse::<usize>().ok())
        })
        .collect();
    frame_ids.sort_unstable();
    if frame_ids.is_empty() {
        anyhow::bail!("no velodyne frames in {}", velo_dir.display());
    }
    // Timestamps: per-scan file when present, uniform 0.1 s spacing otherwise.
    let ts_path = seq_dir.join("velodyne_points").join("timestamps.txt");
    let timestamps: Vec<f64> = if ts_path.exists() {
        let raw = io::parse_timestamps(&std::fs::read_to_string(&ts_path)?)?;
        let t0 = raw.first().copied().unwrap_or(0.0);
        raw.iter().map(|t| t - t0).collect()
    } else {
        (0..frame_ids.len()).map(|i| i as f64 * 0.1).collect()
    };
    if timestamps.len() < frame_ids.len() {
        anyhow::bail!("timestamps shorter than the frame list");
    }

    let oxts_dir = seq_dir.join("oxts").join("data");
    let image_dir = seq_dir.join("image_02").join("data");
    let labels_dir = labels_root.join(seq);
    let masks_dir = masks_root.join(seq);

    let mut scale_lat: Option<f64> = None;
    let mut frames = Vec::new();
    let mut frame_labels = Vec::new();
    let mut rig = None;
    for (order, &frame_index) in frame_ids.iter().enumerate() {
        let name = format!("{frame_index:010}");
        let cloud = io::read_point_cloud::<f64>(&std::fs::read(
            velo_dir.join(format!("{name}.bin")),
        )?)?;
        let oxts_text = std::fs::read_to_string(oxts_dir.join(format!("{name}.txt")))
            .with_context(|| format!("oxts for frame {name}"))?;
        let rec = io::parse_oxts_record(oxts_text.lines().next().unwrap_or(""))?;
        let lat0 = *scale_lat.get_or_insert(rec.lat);
        let lidar_pose: RigidPose<f64> = io::oxts_to_pose(&rec, lat0);
        let image = io::read_png_rgb_file::<f64>(&image_dir.join(format!("{name}.png")))
            .with_context(|| format!("image for frame {name}"))?;
        if rig.is_none() {
            rig = Some(calib.camera_rig(image.width as u32, image.height as u32)?);
        }

        // Labels (optional per frame) and their masks.
        let mut masks = BTreeMap::new();
        let mut boxes = Vec::new();
        let label_path = labels_dir.join(format!("{name}.txt"));
        if label_path.exists() {
            let labels = io::parse_labels(&std::fs::read_to_string(&label_path)?)?;
            for (label_index, label) in labels.iter().enumerate() {
                let Some((class, sensor_box)) = io::label_to_sensor_box(label, &calib) else {
                    continue;
                };
                let world_box = sensor_box_to_world(&sensor_box, &lidar_pose);
                boxes.push(LabeledWorldBox {
                    label_index,
                    class,
                    bbox: world_box,
                    occlusion: label.occluded,
                    truncation: label.truncated,
                });
                let mask_path = masks_dir.join(format!("{name}_{label_index:02}.png"));
                if mask_path.exists() {
                    let (mw, mh, mask) = io::read_png_gray_file::<f64>(&mask_path)?;
                    if (mw, mh) == (image.width, image.height) {
                        masks.insert(label_index, mask);
                    }
                }
            }
        }
        if !boxes.is_empty() {
            frame_labels.push(FrameLabels { frame_index, boxes });
        }
        frames.push(SequenceFrame {
            scan: FrameScan {
                frame_index,
                cloud,
                lidar_pose,
                timestamp: timestamps[order],
            },
            image,
            masks,
        });
    }
    let rig = rig.context("sequence has no frames")?;
    Ok(LoadedSequence { data: SequenceData { frames, rig }, frame_labels })
}

fn load_calibration(seq_dir: &Path) -> Result<FrameCalibration<f64>> {
    let single = seq_dir.join("calib.txt");
    if single.exists() {
        return Ok(io::parse_calib(&std::fs::read_to_string(&single)?)?);
    }
    // Raw dialect: two files, concatenated for the auto-detecting parser.
    let cam = seq_dir.join("calib_cam_to_cam.txt");
    let velo = seq_dir.join("calib_velo_to_cam.txt");
    if cam.exists() && velo.exists() {
        let text = format!(
            "{}\n{}",
            std::fs::read_to_string(&cam)?,
            std::fs::read_to_string(&velo)?
        );
        return Ok(io::parse_calib(&text)?);
    }
    anyhow::bail!("no calibration found in {}", seq_dir.display())
}

/// Sensor-frame yaw box to world frame through the ego pose (yaw extracted
/// from the rotated x axis; KITTI ego roll/pitch are near zero).
fn sensor_box_to_world(bbox: &BoundingBox3D<f64>, pose: &RigidPose<f64>) -> BoundingBox3D<f64> {
    let center = pose.transform_point(bbox.center);
    let x_axis = pose.transform_vector(Vec3::new(1.0, 0.0, 0.0));
    let ego_yaw = x_axis.y.atan2(x_axis.x);
    BoundingBox3D::new(center, bbox.dims, bbox.yaw + ego_yaw)
}
