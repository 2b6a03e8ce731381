//! Camera model, mesh-guided image resampling with supersampling,
//! mask-weighted blending, optional Gaussian blur and depth-ordered
//! compositing.

pub mod camera;
pub mod image;
pub mod render;

pub use camera::{CameraModel, CameraRig, PixelRayCaster, SensorRayCaster};
pub use image::{bilinear_sample, erode_mask, gaussian_blur_layer, ImageBuf, SourcePatch};
pub use render::{
    composite_frame, pasted_screen_rect, render_pasted_object, CompositeReport, IRect,
    RenderConfig, SUBPIXEL_OFFSETS,
};

#[derive(Debug, thiserror::Error)]
pub enum ImpasteError {
    #[error("invalid camera: {0}")]
    InvalidCamera(&'static str),
    #[error("invalid image: {0}")]
    InvalidImage(&'static str),
    #[error("pasted mesh is empty")]
    EmptyPaste,
}
