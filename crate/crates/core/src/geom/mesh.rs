//! Indexed triangle meshes with per-vertex normals and a per-triangle
//! LiDAR-visibility flag (glass handling), plus the binary mesh format.

use std::io::{self, Read, Write};

use crate::geom::similarity::SimilarityTransform;
use crate::geom::GeomError;
use crate::geom::RigidPose;
use crate::math::Vec3;
use crate::scalar::Real;

/// Magic bytes of the binary mesh format (see `docs/formats.md`).
pub const MESH_MAGIC: [u8; 8] = *b"TRIMESH1";

#[derive(Clone, Debug, Default)]
pub struct TriangleMesh<T> {
    pub vertices: Vec<Vec3<T>>,
    pub triangles: Vec<[u32; 3]>,
    pub vertex_normals: Vec<Vec3<T>>,
    /// One flag per triangle; `false` lets LiDAR rays pass through.
    pub lidar_visible: Vec<bool>,
}

impl<T: Real> TriangleMesh<T> {
    pub fn new(
        vertices: Vec<Vec3<T>>,
        triangles: Vec<[u32; 3]>,
        vertex_normals: Vec<Vec3<T>>,
        lidar_visible: Vec<bool>,
    ) -> Self {
        Self { vertices, triangles, vertex_normals, lidar_visible }
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty() || self.triangles.is_empty()
    }

    pub fn validate(&self) -> Result<(), GeomError> {
        if self.vertex_normals.len() != self.vertices.len() {
            return Err(GeomError::Invalid("vertex_normals length != vertex count"));
        }
        if self.lidar_visible.len() != self.triangles.len() {
            return Err(GeomError::Invalid("lidar_visible length != triangle count"));
        }
        let n = self.vertices.len() as u32;
        for tri in &self.triangles {
            if tri.iter().any(|&i| i >= n) {
                return Err(GeomError::Invalid("triangle index out of range"));
            }
        }
        for nrm in &self.vertex_normals {
            if (nrm.norm() - T::one()).abs() > T::of(1e-6) {
                return Err(GeomError::Invalid("vertex normal not unit length"));
            }
        }
        for v in &self.vertices {
            if !v.is_finite() {
                return Err(GeomError::Invalid("non-finite vertex"));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn triangle_vertices(&self, i: usize) -> [Vec3<T>; 3] {
        let t = self.triangles[i];
        [
            self.vertices[t[0] as usize],
            self.vertices[t[1] as usize],
            self.vertices[t[2] as usize],
        ]
    }

    pub fn triangle_area(&self, i: usize) -> T {
        let [a, b, c] = self.triangle_vertices(i);
        (b - a).cross(c - a).norm() * T::of(0.5)
    }

    pub fn triangle_centroid(&self, i: usize) -> Vec3<T> {
        let [a, b, c] = self.triangle_vertices(i);
        (a + b + c) / T::of(3.0)
    }

    /// Geometric (non-interpolated) triangle normal from the winding order.
    pub fn face_normal(&self, i: usize) -> Option<Vec3<T>> {
        let [a, b, c] = self.triangle_vertices(i);
        (b - a).cross(c - a).normalized()
    }

    pub fn aabb(&self) -> Option<(Vec3<T>, Vec3<T>)> {
        if self.vertices.is_empty() {
            return None;
        }
        let mut lo = Vec3::splat(T::infinity());
        let mut hi = Vec3::splat(T::neg_infinity());
        for v in &self.vertices {
            lo = lo.min_by_component(*v);
            hi = hi.max_by_component(*v);
        }
        Some((lo, hi))
    }

    /// Applies a pasting transformation; normals are re-derived from the
    /// rotation-reflection part and the winding order is flipped under
    /// reflection so outward orientation is preserved.
    pub fn apply_similarity(&self, t: &SimilarityTransform<T>) -> Self {
        let vertices = self.vertices.iter().map(|&v| t.apply_point(v)).collect();
        let vertex_normals = self.vertex_normals.iter().map(|&n| t.apply_normal(n)).collect();
        let triangles = if t.reflect {
            self.triangles.iter().map(|&[a, b, c]| [a, c, b]).collect()
        } else {
            self.triangles.clone()
        };
        Self { vertices, triangles, vertex_normals, lidar_visible: self.lidar_visible.clone() }
    }

    /// Applies a rigid transform (convenience for fixtures and registration).
    pub fn transformed(&self, pose: &RigidPose<T>) -> Self {
        Self {
            vertices: self.vertices.iter().map(|&v| pose.transform_point(v)).collect(),
            triangles: self.triangles.clone(),
            vertex_normals: self
                .vertex_normals
                .iter()
                .map(|&n| pose.transform_vector(n))
                .collect(),
            lidar_visible: self.lidar_visible.clone(),
        }
    }

    /// Writes the little-endian binary mesh format.
    pub fn write_binary<W: Write>(&self, w: &mut W) -> io::Result<()> {
        w.write_all(&MESH_MAGIC)?;
        w.write_all(&(self.vertices.len() as u32).to_le_bytes())?;
        w.write_all(&(self.triangles.len() as u32).to_le_bytes())?;
        for v in &self.vertices {
            for c in v.to_array() {
                w.write_all(&(c.as_f64() as f32).to_le_bytes())?;
            }
        }
        for n in &self.vertex_normals {
            for c in n.to_array() {
                w.write_all(&(c.as_f64() as f32).to_le_bytes())?;
            }
        }
        for t in &self.triangles {
            for i in t {
                w.write_all(&i.to_le_bytes())?;
            }
        }
        // LiDAR-visibility bitset, LSB-first within each byte.
        let mut bits = vec![0u8; self.triangles.len().div_ceil(8)];
        for (i, &vis) in self.lidar_visible.iter().enumerate() {
            if vis {
                bits[i / 8] |= 1 << (i % 8);
            }
        }
        w.write_all(&bits)?;
        Ok(())
    }

    /// Reads the binary mesh format.
    pub fn read_binary<R: Read>(r: &mut R) -> Result<Self, GeomError> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(GeomError::Io)?;
        if magic != MESH_MAGIC {
            return Err(GeomError::Invalid("bad mesh magic"));
        }
        let mut u32buf = [0u8; 4];
        r.read_exact(&mut u32buf).map_err(GeomError::Io)?;
        let n_vertices = u32::from_le_bytes(u32buf) as usize;
        r.read_exact(&mut u32buf).map_err(GeomError::Io)?;
        let n_triangles = u32::from_le_bytes(u32buf) as usize;
        let read_vec3 = |r: &mut R| -> Result<Vec3<T>, GeomError> {
            let mut f = [0u8; 4];
            let mut out = [T::zero(); 3];
            for o in &mut out {
                r.read_exact(&mut f).map_err(GeomError::Io)?;
                *o = T::of(f32::from_le_bytes(f) as f64);
            }
            Ok(Vec3::from_array(out))
        };
        let mut vertices = Vec::with_capacity(n_vertices);
        for _ in 0..n_vertices {
            vertices.push(read_vec3(r)?);
        }
        let mut vertex_normals = Vec::with_capacity(n_vertices);
        for _ in 0..n_vertices {
            vertex_normals.push(read_vec3(r)?);
        }
        let mut triangles = Vec::with_capacity(n_triangles);
        for _ in 0..n_triangles {
            let mut t = [0u32; 3];
            for i in &mut t {
                r.read_exact(&mut u32buf).map_err(GeomError::Io)?;
                *i = u32::from_le_bytes(u32buf);
            }
            triangles.push(t);
        }
        let mut bits = vec![0u8; n_triangles.div_ceil(8)];
        r.read_exact(&mut bits).map_err(GeomError::Io)?;
        let lidar_visible = (0..n_triangles).map(|i| bits[i / 8] & (1 << (i % 8)) != 0).collect();
        Ok(Self { vertices, triangles, vertex_normals, lidar_visible })
    }
}

/// Rebuilds per-vertex normals as area-weighted averages of face normals.
pub fn recompute_vertex_normals<T: Real>(mesh: &mut TriangleMesh<T>) {
    let mut acc = vec![Vec3::<T>::zero(); mesh.vertices.len()];
    for i in 0..mesh.triangles.len() {
        let [a, b, c] = mesh.triangle_vertices(i);
        let n = (b - a).cross(c - a); // area-weighted
        for &vi in &mesh.triangles[i] {
            acc[vi as usize] += n;
        }
    }
    mesh.vertex_normals = acc
        .into_iter()
        .map(|n| n.normalized().unwrap_or(Vec3::new(T::zero(), T::zero(), T::one())))
        .collect();
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_triangle() -> TriangleMesh<f64> {
        TriangleMesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2]],
            vec![Vec3::new(0.0, 0.0, 1.0); 3],
            vec![true],
        )
    }

    #[test]
    fn validate_catches_bad_index() {
        let mut m = unit_triangle();
        m.triangles[0][2] = 9;
        assert!(m.validate().is_err());
    }

    #[test]
    fn identity_similarity_is_bitwise_noop_on_vertices() {
        let m = unit_triangle();
        let t = SimilarityTransform::identity();
        let m2 = m.apply_similarity(&t);
        assert_eq!(m.vertices, m2.vertices);
        assert_eq!(m.triangles, m2.triangles);
    }

    #[test]
    fn scale_doubles_edge_lengths() {
        let m = unit_triangle();
        let t = SimilarityTransform::new(0.0, Vec3::zero(), 2.0, false);
        let m2 = m.apply_similarity(&t);
        let e = m.vertices[1].distance(m.vertices[0]);
        let e2 = m2.vertices[1].distance(m2.vertices[0]);
        assert!((e2 - 2.0 * e).abs() < 1e-12);
    }

    #[test]
    fn double_reflection_restores_vertices() {
        let m = unit_triangle();
        let t = SimilarityTransform::new(0.0, Vec3::zero(), 1.0, true);
        let m2 = m.apply_similarity(&t).apply_similarity(&t);
        for (a, b) in m.vertices.iter().zip(m2.vertices.iter()) {
            assert!((*a - *b).norm() < 1e-12);
        }
        assert_eq!(m.triangles, m2.triangles);
    }

    #[test]
    fn reflection_flips_winding_and_preserves_outwardness() {
        let m = unit_triangle();
        let t = SimilarityTransform::new(0.0, Vec3::zero(), 1.0, true);
        let m2 = m.apply_similarity(&t);
        // Original geometric normal +z; mirrored outward normal is still +z
        // after the winding swap.
        let n = m2.face_normal(0).unwrap();
        assert!((n - Vec3::new(0.0, 0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn binary_round_trip() {
        let m = unit_triangle();
        let mut buf = Vec::new();
        m.write_binary(&mut buf).unwrap();
        let m2 = TriangleMesh::<f64>::read_binary(&mut buf.as_slice()).unwrap();
        assert_eq!(m.triangles, m2.triangles);
        assert_eq!(m.lidar_visible, m2.lidar_visible);
        for (a, b) in m.vertices.iter().zip(m2.vertices.iter()) {
            assert!((*a - *b).norm() < 1e-6);
        }
        // Byte-exact writer round trip.
        let mut buf2 = Vec::new();
        m2.write_binary(&mut buf2).unwrap();
        assert_eq!(buf, buf2);
    }
}
