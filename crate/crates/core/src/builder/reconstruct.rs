//! Surface reconstruction from oriented points: a signed distance field on
//! a voxel grid, contoured cube by cube into triangles.
//!
//! The reconstructor is pluggable so a screened-Poisson implementation can
//! replace the built-in method without touching callers. The built-in
//! contours every grid cube through a fixed six-tetrahedron decomposition
//! whose face diagonals agree between neighboring cubes, which makes the
//! extracted surface watertight without case tables; triangle orientation
//! comes from the local SDF gradient.

use std::collections::HashMap;

use crate::builder::BuilderError;
use crate::geom::TriangleMesh;
use crate::knn::KdTree3;
use crate::math::Vec3;
use crate::placement::bbox::BoxDims;
use crate::scalar::Real;

pub trait SurfaceReconstructor<T>: Send + Sync {
    /// Builds a mesh in the object frame from oriented points. The mesh is
    /// trimmed to the label box expanded by the trim margin, and triangles
    /// without nearby supporting points are flagged invisible to LiDAR.
    fn reconstruct(
        &self,
        points: &[Vec3<T>],
        normals: &[Vec3<T>],
        dims: BoxDims<T>,
    ) -> Result<TriangleMesh<T>, BuilderError>;
}

/// Built-in reconstructor: locally weighted signed plane distance sampled
/// on a voxel grid (voxel = max(dims) / grid_resolution), contoured to
/// triangles.
#[derive(Clone, Debug)]
pub struct SdfMarchingCubes {
    /// Voxels along the longest box dimension.
    pub grid_resolution: usize,
    /// Neighbors blended into the signed distance estimate.
    pub sdf_neighbors: usize,
    /// Sparse-support radius in voxel diagonals: triangles whose centroid
    /// has no source point within this radius become LiDAR-invisible.
    pub support_radius_diagonals: f64,
    /// Trim margin around the label box (meters).
    pub trim_expand: f64,
}

impl Default for SdfMarchingCubes {
    fn default() -> Self {
        Self {
            grid_resolution: 64,
            sdf_neighbors: 12,
            support_radius_diagonals: 3.0,
            trim_expand: 0.2,
        }
    }
}

impl<T: Real> SurfaceReconstructor<T> for SdfMarchingCubes {
    fn reconstruct(
        &self,
        points: &[Vec3<T>],
        normals: &[Vec3<T>],
        dims: BoxDims<T>,
    ) -> Result<TriangleMesh<T>, BuilderError> {
        if points.len() < 4 {
            return Err(BuilderError::TooFewPoints { have: points.len(), need: 4 });
        }
        if points.len() != normals.len() {
            return Err(BuilderError::Reconstruction("points/normals length mismatch"));
        }
        if !dims.is_valid() {
            return Err(BuilderError::Reconstruction("invalid box dims"));
        }
        let voxel = dims.max_extent() / T::of_usize(self.grid_resolution);
        let expand = T::of(self.trim_expand);
        let half = Vec3::new(
            dims.length * T::of(0.5) + expand,
            dims.width * T::of(0.5) + expand,
            dims.height * T::of(0.5) + expand,
        );
        // Two extra voxels of padding so the surface can close around the box.
        let pad = voxel * T::of(2.0);
        let origin = -(half + Vec3::splat(pad));
        let extent = (half + Vec3::splat(pad)) * T::of(2.0);
        let nx = (extent.x / voxel).ceil().as_f64() as usize + 1;
        let ny = (extent.y / voxel).ceil().as_f64() as usize + 1;
        let nz = (extent.z / voxel).ceil().as_f64() as usize + 1;

        let tree = KdTree3::build(points);
        let node_pos = |i: usize, j: usize, k: usize| {
            origin
                + Vec3::new(
                    voxel * T::of_usize(i),
                    voxel * T::of_usize(j),
                    voxel * T::of_usize(k),
                )
        };
        // Signed distance at every grid node.
        let mut sdf = vec![T::zero(); nx * ny * nz];
        let node_index = |i: usize, j: usize, k: usize| (k * ny + j) * nx + i;
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    let x = node_pos(i, j, k);
                    sdf[node_index(i, j, k)] =
                        imls_distance(x, points, normals, &tree, self.sdf_neighbors, voxel);
                }
            }
        }

        // Contour every cube through the Kuhn tetrahedron decomposition.
        let mut vertices: Vec<Vec3<T>> = Vec::new();
        let mut vertex_keys: HashMap<(usize, usize), u32> = HashMap::new();
        let mut triangles: Vec<[u32; 3]> = Vec::new();
        // Corner id bit layout: bit0 = +x, bit1 = +y, bit2 = +z. Corner
        // order within each tet is arranged for positive signed volume, so
        // triangle winding can be fixed by permutation parity alone.
        const TETS: [[usize; 4]; 6] = [
            [0, 1, 3, 7],
            [0, 1, 7, 5],
            [0, 2, 7, 3],
            [0, 2, 6, 7],
            [0, 4, 5, 7],
            [0, 4, 7, 6],
        ];
        for k in 0..nz - 1 {
            for j in 0..ny - 1 {
                for i in 0..nx - 1 {
                    let corner_nodes: [usize; 8] = std::array::from_fn(|c| {
                        node_index(i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1))
                    });
                    let corner_pos: [Vec3<T>; 8] = std::array::from_fn(|c| {
                        node_pos(i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1))
                    });
                    let values: [T; 8] = std::array::from_fn(|c| sdf[corner_nodes[c]]);
                    // Cheap reject: all same sign.
                    let any_neg = values.iter().any(|&v| v < T::zero());
                    let any_pos = values.iter().any(|&v| v >= T::zero());
                    if !(any_neg && any_pos) {
                        continue;
                    }
                    for tet in &TETS {
                        contour_tetrahedron(
                            tet,
                            &corner_nodes,
                            &corner_pos,
                            &values,
                            &mut vertex_keys,
                            &mut vertices,
                            &mut triangles,
                        );
                    }
                }
            }
        }
        if triangles.is_empty() {
            return Err(BuilderError::Reconstruction("empty contour"));
        }

        // Trim triangles leaving the expanded label box, then compact.
        let inside = |v: &Vec3<T>| {
            v.x.abs() <= half.x + voxel * T::of(1e-6)
                && v.y.abs() <= half.y + voxel * T::of(1e-6)
                && v.z.abs() <= half.z + voxel * T::of(1e-6)
        };
        let kept: Vec<[u32; 3]> = triangles
            .into_iter()
            .filter(|t| t.iter().all(|&vi| inside(&vertices[vi as usize])))
            .collect();
        if kept.is_empty() {
            return Err(BuilderError::Reconstruction("trim removed every triangle"));
        }
        let mut remap = vec![u32::MAX; vertices.len()];
        let mut out_vertices = Vec::new();
        let mut out_triangles = Vec::with_capacity(kept.len());
        for t in &kept {
            let mut nt = [0u32; 3];
            for (slot, &vi) in nt.iter_mut().zip(t.iter()) {
                if remap[vi as usize] == u32::MAX {
                    remap[vi as usize] = out_vertices.len() as u32;
                    out_vertices.push(vertices[vi as usize]);
                }
                *slot = remap[vi as usize];
            }
            out_triangles.push(nt);
        }

        let mut mesh = TriangleMesh::new(
            out_vertices,
            out_triangles,
            Vec::new(),
            Vec::new(),
        );
        crate::geom::recompute_vertex_normals(&mut mesh);

        // Sparse-support pass: triangles far from every source point let
        // LiDAR rays through (glass bridging).
        let r_sup = voxel * T::of(self.support_radius_diagonals) * T::of(3.0f64.sqrt());
        let r2 = r_sup * r_sup;
        mesh.lidar_visible = (0..mesh.triangles.len())
            .map(|ti| {
                let c = mesh.triangle_centroid(ti);
                tree.nearest(c).map_or(false, |nb| nb.dist_squared <= r2)
            })
            .collect();
        Ok(mesh)
    }
}

/// Locally weighted signed plane distance (implicit moving least squares):
/// a Gaussian-weighted blend of point-plane distances over the k nearest
/// points, with the kernel width adapting to the query's nearest distance
/// so the field stays smooth away from the samples.
fn imls_distance<T: Real>(
    x: Vec3<T>,
    points: &[Vec3<T>],
    normals: &[Vec3<T>],
    tree: &KdTree3<T>,
    k: usize,
    voxel: T,
) -> T {
    let neighbors = tree.k_nearest(x, k.min(points.len()));
    let d_near = neighbors[0].dist_squared.sqrt();
    let h = d_near.max(voxel) * T::of(1.5);
    let mut num = T::zero();
    let mut den = T::zero();
    for nb in &neighbors {
        let w = (-nb.dist_squared / (h * h)).exp();
        let plane_dist = (x - points[nb.index]).dot(normals[nb.index]);
        num += w * plane_dist;
        den += w;
    }
    if den <= T::of(1e-30) {
        d_near
    } else {
        num / den
    }
}

/// Parity of the permutation mapping `arranged` onto `canonical`
/// (4 distinct elements); `true` means even.
fn even_permutation(canonical: &[usize; 4], arranged: &[usize; 4]) -> bool {
    let mut perm = [0usize; 4];
    for (slot, a) in perm.iter_mut().zip(arranged.iter()) {
        *slot = canonical.iter().position(|c| c == a).expect("corner in tet");
    }
    let mut inversions = 0;
    for i in 0..4 {
        for j in i + 1..4 {
            if perm[i] > perm[j] {
                inversions += 1;
            }
        }
    }
    inversions % 2 == 0
}

/// Emits the isosurface triangles of one tetrahedron. Vertices are keyed by
/// their global lattice segment so shared edges reuse the same vertex.
/// Winding is combinatorial: the canonical positive-volume corner order
/// determines the outward side, which keeps orientation consistent across
/// tets even for degenerate slivers.
#[allow(clippy::too_many_arguments)]
fn contour_tetrahedron<T: Real>(
    tet: &[usize; 4],
    corner_nodes: &[usize; 8],
    corner_pos: &[Vec3<T>; 8],
    values: &[T; 8],
    vertex_keys: &mut HashMap<(usize, usize), u32>,
    vertices: &mut Vec<Vec3<T>>,
    triangles: &mut Vec<[u32; 3]>,
) {
    let ids: [usize; 4] = [tet[0], tet[1], tet[2], tet[3]];
    let inside: Vec<usize> = ids.iter().copied().filter(|&c| values[c] < T::zero()).collect();
    if inside.is_empty() || inside.len() == 4 {
        return;
    }
    let outside: Vec<usize> = ids.iter().copied().filter(|&c| values[c] >= T::zero()).collect();

    fn edge_vertex<T: Real>(
        a: usize,
        b: usize,
        corner_nodes: &[usize; 8],
        corner_pos: &[Vec3<T>; 8],
        values: &[T; 8],
        vertex_keys: &mut HashMap<(usize, usize), u32>,
        vertices: &mut Vec<Vec3<T>>,
    ) -> u32 {
        let key = (corner_nodes[a].min(corner_nodes[b]), corner_nodes[a].max(corner_nodes[b]));
        if let Some(&v) = vertex_keys.get(&key) {
            return v;
        }
        // Deterministic interpolation: evaluate from the smaller node id so
        // both adjacent cubes compute bit-identical coordinates.
        let (lo, hi) = if corner_nodes[a] <= corner_nodes[b] { (a, b) } else { (b, a) };
        let (va, vb) = (values[lo], values[hi]);
        let t = va / (va - vb);
        let p = corner_pos[lo] + (corner_pos[hi] - corner_pos[lo]) * t;
        let index = vertices.len() as u32;
        vertices.push(p);
        vertex_keys.insert(key, index);
        index
    }

    let mut ev = |a: usize, b: usize| {
        edge_vertex(a, b, corner_nodes, corner_pos, values, vertex_keys, vertices)
    };

    let mut emit = |tri: [u32; 3], flip: bool| {
        if flip {
            triangles.push([tri[0], tri[2], tri[1]]);
        } else {
            triangles.push(tri);
        }
    };

    match inside.len() {
        1 => {
            // Arranged (inside, o0, o1, o2): even parity keeps (v0, v1, v2)
            // outward (derived from the canonical unit tet).
            let a = inside[0];
            let arranged = [a, outside[0], outside[1], outside[2]];
            let v = [ev(a, outside[0]), ev(a, outside[1]), ev(a, outside[2])];
            emit(v, !even_permutation(&ids, &arranged));
        }
        3 => {
            // Complement of the 1-inside case: reversed winding.
            let a = outside[0];
            let arranged = [a, inside[0], inside[1], inside[2]];
            let v = [ev(a, inside[0]), ev(a, inside[1]), ev(a, inside[2])];
            emit(v, even_permutation(&ids, &arranged));
        }
        2 => {
            let (a, b) = (inside[0], inside[1]);
            let (c, d) = (outside[0], outside[1]);
            let arranged = [a, b, c, d];
            let flip = !even_permutation(&ids, &arranged);
            let ac = ev(a, c);
            let ad = ev(a, d);
            let bc = ev(b, c);
            let bd = ev(b, d);
            emit([ac, ad, bd], flip);
            emit([ac, bd, bc], flip);
        }
        _ => unreachable!(),
    }
}
