//! Writes synthetic drives to disk in the KITTI-style layout the CLI
//! ingests, for golden tests and end-to-end determinism checks.

use std::fs;
use std::path::Path;

use crate::io::{self, IoError};
use crate::scalar::Real;
use crate::synth::drive::Drive;
use crate::synth::scan::synthetic_calib_text;

/// Layout written under `<root>/<sequence>`:
///
/// ```text
/// calib.txt
/// velodyne_points/data/NNNNNNNNNN.bin
/// velodyne_points/timestamps.txt
/// oxts/data/NNNNNNNNNN.txt
/// image_02/data/NNNNNNNNNN.png
/// ```
///
/// and per-frame labels + masks under `<labels>/<sequence>/` and
/// `<masks>/<sequence>/` (`NNNNNNNNNN.txt`, `NNNNNNNNNN_KK.png`).
pub fn write_kitti_sequence<T: Real>(
    raw_root: &Path,
    labels_root: &Path,
    masks_root: &Path,
    sequence: &str,
    drive: &Drive<T>,
) -> Result<(), IoError> {
    let seq_dir = raw_root.join(sequence);
    let velo_dir = seq_dir.join("velodyne_points").join("data");
    let oxts_dir = seq_dir.join("oxts").join("data");
    let image_dir = seq_dir.join("image_02").join("data");
    let labels_dir = labels_root.join(sequence);
    let masks_dir = masks_root.join(sequence);
    for d in [&velo_dir, &oxts_dir, &image_dir, &labels_dir, &masks_dir] {
        fs::create_dir_all(d)?;
    }
    fs::write(seq_dir.join("calib.txt"), synthetic_calib_text())?;

    let calib: io::FrameCalibration<T> = io::parse_calib(&synthetic_calib_text())?;
    let rig = calib.camera_rig(
        drive.scene.rig.model.image_width,
        drive.scene.rig.model.image_height,
    )?;
    let mut timestamps = String::new();
    for frame in &drive.frames {
        let name = format!("{:010}", frame.scan.frame_index);
        fs::write(
            velo_dir.join(format!("{name}.bin")),
            io::write_point_cloud(&frame.scan.cloud),
        )?;
        // Static ego at the Mercator origin (lat = lon = 0 is invalid for
        // KITTI but fine here; the pose comes out as identity rotation).
        let ts = frame.scan.timestamp.as_f64();
        timestamps.push_str(&format!(
            "2011-09-26 13:02:{:02}.{:09}\n",
            ts as u64 % 60,
            ((ts - ts.floor()) * 1e9).round() as u64
        ));
        fs::write(oxts_dir.join(format!("{name}.txt")), "0 0 0 0 0 0\n")?;
        io::write_png_rgb_file(&image_dir.join(format!("{name}.png")), &frame.image)?;
        // Label in KITTI camera-frame format.
        let label = io::sensor_box_to_label(drive.class, &frame.label, &calib, &rig);
        fs::write(labels_dir.join(format!("{name}.txt")), io::write_labels(&[label]))?;
        for (label_index, mask) in &frame.masks {
            io::write_png_gray_file(
                &masks_dir.join(format!("{name}_{label_index:02}.png")),
                frame.image.width,
                frame.image.height,
                mask,
            )?;
        }
    }
    fs::write(seq_dir.join("velodyne_points").join("timestamps.txt"), timestamps)?;
    Ok(())
}

/// Writes a single augmentable frame directory (`calib.txt`,
/// `velodyne.bin`, `image.png`, `labels.txt`).
pub fn write_frame_dir<T: Real>(dir: &Path, drive: &Drive<T>, frame: usize) -> Result<(), IoError> {
    fs::create_dir_all(dir)?;
    let f = &drive.frames[frame];
    fs::write(dir.join("calib.txt"), synthetic_calib_text())?;
    fs::write(dir.join("velodyne.bin"), io::write_point_cloud(&f.scan.cloud))?;
    io::write_png_rgb_file(&dir.join("image.png"), &f.image)?;
    let calib: io::FrameCalibration<T> = io::parse_calib(&synthetic_calib_text())?;
    let rig = calib.camera_rig(f.image.width as u32, f.image.height as u32)?;
    let label = io::sensor_box_to_label(drive.class, &f.label, &calib, &rig);
    fs::write(dir.join("labels.txt"), io::write_labels(&[label]))?;
    Ok(())
}
