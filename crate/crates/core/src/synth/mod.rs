//! Synthetic-oracle scene generation: analytic shapes, Lambertian
//! intensities from the range equation, simulated drives with exact poses.

pub mod drive;
pub mod export;
pub mod scan;
pub mod selftest;
pub mod shapes;

pub use drive::{linear_trajectory, make_drive, Drive, DriveFrame, SyntheticScene, GROUND_Z};
pub use export::{write_frame_dir, write_kitti_sequence};
pub use scan::{
    intersect_scene, make_lambertian_scan, make_scene_scan, render_scene_image,
    synthetic_calib_text, synthetic_rig, SceneShape,
};
pub use selftest::{run_selftest, SelfTestResult};
pub use shapes::{lambertian_intensity, AnalyticHit, Shape, LAMBERT_K};
