//! Rejection sampling of valid pasting transformations: viewpoint
//! maintenance, ground projection, occlusion and conflict rejection,
//! distortion limiting.

pub mod bbox;
pub mod checks;
pub mod config;
pub mod sampler;

pub use bbox::{placed_box, BoundingBox3D, BoxDims, PixelRect};
pub use checks::{
    camera_direction_in_object_frame, check_box_conflicts, check_distortion,
    check_foreground_occlusion, ground_project, viewpoint_adjust, Rejection,
};
pub use config::{ObservedSides, PlacementConfig};
pub use sampler::{propose_pose, sample_placements, Placement};

#[derive(Debug, thiserror::Error)]
pub enum PlacementError {
    #[error("invalid placement config: {0}")]
    InvalidConfig(&'static str),
}
