//! Velodyne beam model, scan simulation against pasted meshes and
//! occlusion-based removal of original points.
//!
//! Pure operations over immutable inputs; output ordering is deterministic
//! (firing step, then laser index).

pub mod cloud;
pub mod intrinsics;
pub mod scan;

pub use cloud::PointCloud;
pub use intrinsics::{
    laser_ray, parse_laser_table, Block, LaserIntrinsics, ScanPattern,
    DEFAULT_AZIMUTH_STEPS_PER_REV, DEFAULT_RAY_LENGTH_M,
};
pub use scan::{remove_occluded, simulate_scan, EPS_OCCLUSION_M};

#[derive(Debug, thiserror::Error)]
pub enum LidarError {
    #[error("invalid scan pattern: {0}")]
    InvalidPattern(&'static str),
    #[error("invalid point cloud: {0}")]
    InvalidCloud(&'static str),
    #[error("laser table line {line}: {what}")]
    Parse { line: usize, what: &'static str },
}
