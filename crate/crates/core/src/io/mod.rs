//! KITTI-format ingestion, run configuration and image/mask PNG handling.

pub mod config;
pub mod kitti;
pub mod png;

pub use config::{load_run_config, LidarSection, PlacementSection, RenderSection, RunConfig};
pub use kitti::{
    label_to_sensor_box, oxts_to_pose, parse_calib, parse_labels, parse_oxts_record,
    parse_timestamps, read_point_cloud, sensor_box_to_label, write_labels, write_point_cloud,
    FrameCalibration, KittiLabel, OxtsRecord, EARTH_RADIUS_M,
};
pub use png::{
    decode_png_gray, decode_png_rgb, encode_png_gray, encode_png_rgb, read_png_gray_file,
    read_png_rgb_file, write_png_gray_file, write_png_rgb_file,
};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("calibration: {0}")]
    Calib(String),
    #[error("velodyne: {0}")]
    Velodyne(String),
    #[error("labels: {0}")]
    Labels(String),
    #[error("oxts: {0}")]
    Oxts(String),
    #[error("timestamps: {0}")]
    Timestamps(String),
    #[error("png: {0}")]
    Png(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
