//! Core geometry: poses, similarity transforms, triangle meshes and
//! BVH-accelerated ray casting.
//!
//! All types are immutable after construction and every operation is pure,
//! so values can be shared freely across worker threads.

pub mod bvh;
pub mod mesh;
pub mod pose;
pub mod ray;
pub mod similarity;

pub use bvh::{intersect_ray_mesh, Bvh, DEGENERATE_AREA_M2};
pub use mesh::{recompute_vertex_normals, TriangleMesh, MESH_MAGIC};
pub use pose::RigidPose;
pub use ray::{intersect_ray_triangle, min_ray_parameter, Ray, RayHit, RayMode};
pub use similarity::SimilarityTransform;

#[derive(Debug, thiserror::Error)]
pub enum GeomError {
    #[error("cannot build a BVH over an empty mesh")]
    EmptyMesh,
    #[error("invalid mesh: {0}")]
    Invalid(&'static str),
    #[error("mesh io: {0}")]
    Io(#[from] std::io::Error),
}
