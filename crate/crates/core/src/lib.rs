//! Multimodal ground-truth paste augmentation for LiDAR + camera data.
//!
//! The crate builds a database of pastable objects ("cut objects") from
//! multi-frame sensor logs — accumulation, registration, surface
//! reconstruction — and pastes them into new frames by physically
//! resampling both the point cloud and the image under object-level
//! similarity transformations.
//!
//! Everything numeric is generic over [`scalar::Real`] (`f32` or `f64`);
//! concrete aliases for the common instantiations live at the crate root.

pub mod builder;
pub mod geom;
pub mod impaste;
pub mod intensity;
pub mod io;
pub mod knn;
pub mod lidar;
pub mod math;
pub mod pipeline;
pub mod placement;
pub mod scalar;
pub mod scene;
pub mod synth;

pub use scalar::Real;
pub use scene::{ObjectClass, Scene, SceneBox};

// Concrete aliases for the two supported scalar instantiations. The engine
// pipeline runs in f64; file formats store f32.
pub type Vec3f = math::Vec3<f32>;
pub type Vec3d = math::Vec3<f64>;
pub type Mat3f = math::Mat3<f32>;
pub type Mat3d = math::Mat3<f64>;
pub type RigidPosef = geom::RigidPose<f32>;
pub type RigidPosed = geom::RigidPose<f64>;
pub type SimilarityTransformf = geom::SimilarityTransform<f32>;
pub type SimilarityTransformd = geom::SimilarityTransform<f64>;
pub type TriangleMeshf = geom::TriangleMesh<f32>;
pub type TriangleMeshd = geom::TriangleMesh<f64>;
pub type Rayf = geom::Ray<f32>;
pub type Rayd = geom::Ray<f64>;
pub type PointCloudf = lidar::PointCloud<f32>;
pub type PointCloudd = lidar::PointCloud<f64>;
pub type CameraModelf = impaste::CameraModel<f32>;
pub type CameraModeld = impaste::CameraModel<f64>;
pub type Scened = Scene<f64>;
pub type CutObjectd = builder::CutObject<f64>;
