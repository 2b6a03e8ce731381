//! Bounding volume hierarchy over mesh triangles and the nearest-hit query.

use crate::geom::mesh::TriangleMesh;
use crate::geom::ray::{intersect_ray_triangle, min_ray_parameter, Ray, RayHit, RayMode};
use crate::geom::GeomError;
use crate::math::Vec3;
use crate::scalar::Real;

/// Triangles with area below this (m^2) are dropped at build time;
/// reconstruction can emit slivers.
pub const DEGENERATE_AREA_M2: f64 = 1e-12;

const LEAF_SIZE: usize = 4;

#[derive(Clone, Copy, Debug)]
struct Aabb<T> {
    lo: Vec3<T>,
    hi: Vec3<T>,
}

impl<T: Real> Aabb<T> {
    fn empty() -> Self {
        Self { lo: Vec3::splat(T::infinity()), hi: Vec3::splat(T::neg_infinity()) }
    }

    fn grow_point(&mut self, p: Vec3<T>) {
        self.lo = self.lo.min_by_component(p);
        self.hi = self.hi.max_by_component(p);
    }

    fn grow(&mut self, other: &Aabb<T>) {
        self.lo = self.lo.min_by_component(other.lo);
        self.hi = self.hi.max_by_component(other.hi);
    }

    /// Slab test over `t` in `(t_min, t_max)`; conservative on boundaries.
    #[inline]
    fn hit_by(&self, ray: &Ray<T>, t_min: T, t_max: T) -> bool {
        let mut t0 = t_min;
        let mut t1 = t_max;
        for axis in 0..3 {
            let o = ray.origin.component(axis);
            let d = ray.direction.component(axis);
            let lo = self.lo.component(axis);
            let hi = self.hi.component(axis);
            if d.abs() <= T::of(1e-300) {
                if o < lo || o > hi {
                    return false;
                }
                continue;
            }
            let inv = T::one() / d;
            let (mut near, mut far) = ((lo - o) * inv, (hi - o) * inv);
            if near > far {
                std::mem::swap(&mut near, &mut far);
            }
            t0 = t0.max(near);
            t1 = t1.min(far);
            if t0 > t1 {
                return false;
            }
        }
        true
    }
}

#[derive(Clone, Debug)]
struct BvhNode<T> {
    aabb: Aabb<T>,
    /// Leaf: index of the first triangle; internal: index of the left child
    /// (the right child is `index + 1`... see `len`).
    index: u32,
    /// Leaf: number of triangles (> 0); internal: 0.
    len: u32,
    right: u32,
}

/// Static BVH; read-only after build and freely shareable across threads.
#[derive(Clone, Debug)]
pub struct Bvh<T> {
    nodes: Vec<BvhNode<T>>,
    /// Triangle indices into the source mesh, permuted so each leaf owns a
    /// contiguous range.
    tri_order: Vec<u32>,
    triangle_count: usize,
}

impl<T: Real> Bvh<T> {
    /// Builds over all non-degenerate triangles of `mesh`.
    pub fn build(mesh: &TriangleMesh<T>) -> Result<Self, GeomError> {
        if mesh.is_empty() {
            return Err(GeomError::EmptyMesh);
        }
        let mut tris: Vec<u32> = Vec::with_capacity(mesh.triangles.len());
        let mut centroids: Vec<Vec3<T>> = Vec::with_capacity(mesh.triangles.len());
        let mut boxes: Vec<Aabb<T>> = Vec::with_capacity(mesh.triangles.len());
        for i in 0..mesh.triangles.len() {
            if mesh.triangle_area(i) < T::of(DEGENERATE_AREA_M2) {
                continue;
            }
            let [a, b, c] = mesh.triangle_vertices(i);
            let mut bb = Aabb::empty();
            bb.grow_point(a);
            bb.grow_point(b);
            bb.grow_point(c);
            tris.push(i as u32);
            centroids.push(mesh.triangle_centroid(i));
            boxes.push(bb);
        }
        let mut bvh = Self {
            nodes: Vec::new(),
            tri_order: Vec::new(),
            triangle_count: mesh.triangles.len(),
        };
        if tris.is_empty() {
            // All triangles degenerate: a valid hierarchy that never hits.
            return Ok(bvh);
        }
        let n = tris.len();
        let mut scratch: Vec<(u32, usize)> = tris.iter().map(|&t| (t, 0)).collect();
        for (slot, entry) in scratch.iter_mut().enumerate() {
            entry.1 = slot;
        }
        bvh.build_rec(&mut scratch[..], &centroids, &boxes);
        debug_assert_eq!(bvh.tri_order.len(), n);
        Ok(bvh)
    }

    fn build_rec(&mut self, items: &mut [(u32, usize)], centroids: &[Vec3<T>], boxes: &[Aabb<T>]) -> u32 {
        let mut aabb = Aabb::empty();
        let mut cbox = Aabb::empty();
        for &(_, slot) in items.iter() {
            aabb.grow(&boxes[slot]);
            cbox.grow_point(centroids[slot]);
        }
        let node_index = self.nodes.len() as u32;
        self.nodes.push(BvhNode { aabb, index: 0, len: 0, right: 0 });
        if items.len() <= LEAF_SIZE {
            let first = self.tri_order.len() as u32;
            for &(tri, _) in items.iter() {
                self.tri_order.push(tri);
            }
            self.nodes[node_index as usize].index = first;
            self.nodes[node_index as usize].len = items.len() as u32;
            return node_index;
        }
        let extent = cbox.hi - cbox.lo;
        let axis = if extent.x >= extent.y && extent.x >= extent.z {
            0
        } else if extent.y >= extent.z {
            1
        } else {
            2
        };
        let mid = items.len() / 2;
        items.select_nth_unstable_by(mid, |a, b| {
            let ca = centroids[a.1].component(axis);
            let cb = centroids[b.1].component(axis);
            ca.partial_cmp(&cb).unwrap_or(std::cmp::Ordering::Equal)
        });
        let (left_items, right_items) = items.split_at_mut(mid);
        let left = self.build_rec(left_items, centroids, boxes);
        let right = self.build_rec(right_items, centroids, boxes);
        debug_assert_eq!(left, node_index + 1);
        self.nodes[node_index as usize].right = right;
        self.nodes[node_index as usize].len = 0;
        node_index
    }

    /// Number of triangles in the mesh this BVH was built over.
    pub fn source_triangle_count(&self) -> usize {
        self.triangle_count
    }
}

/// Nearest positive-t intersection of `ray` with `mesh` through `bvh`.
///
/// In [`RayMode::Lidar`] triangles flagged invisible are skipped; in
/// [`RayMode::Camera`] every triangle is a candidate. Both modes hit back
/// faces. Returns `None` on a miss.
pub fn intersect_ray_mesh<T: Real>(
    ray: &Ray<T>,
    mesh: &TriangleMesh<T>,
    bvh: &Bvh<T>,
    mode: RayMode,
) -> Option<RayHit<T>> {
    debug_assert_eq!(bvh.source_triangle_count(), mesh.triangles.len());
    if bvh.nodes.is_empty() || !ray.is_valid() {
        return None;
    }
    let t_min = min_ray_parameter(ray);
    let mut best: Option<(T, T, T, usize)> = None;
    let mut stack: Vec<u32> = Vec::with_capacity(64);
    stack.push(0);
    while let Some(node_index) = stack.pop() {
        let node = &bvh.nodes[node_index as usize];
        let t_max = best.map_or(T::infinity(), |(t, _, _, _)| t);
        if !node.aabb.hit_by(ray, T::zero(), t_max) {
            continue;
        }
        if node.len > 0 {
            for k in node.index..node.index + node.len {
                let tri = bvh.tri_order[k as usize] as usize;
                if mode == RayMode::Lidar && !mesh.lidar_visible[tri] {
                    continue;
                }
                let [a, b, c] = mesh.triangle_vertices(tri);
                if let Some((t, u, v)) = intersect_ray_triangle(ray, a, b, c, t_min) {
                    if best.map_or(true, |(bt, _, _, _)| t < bt) {
                        best = Some((t, u, v, tri));
                    }
                }
            }
        } else {
            stack.push(node.right);
            stack.push(node_index + 1);
        }
    }
    best.map(|(t, u, v, tri)| {
        let point = ray.point_at(t);
        let [i0, i1, i2] = mesh.triangles[tri];
        let n0 = mesh.vertex_normals[i0 as usize];
        let n1 = mesh.vertex_normals[i1 as usize];
        let n2 = mesh.vertex_normals[i2 as usize];
        let blended = n0 * (T::one() - u - v) + n1 * u + n2 * v;
        let interpolated_normal = blended
            .normalized()
            .or_else(|| mesh.face_normal(tri))
            .unwrap_or(Vec3::new(T::zero(), T::zero(), T::one()));
        RayHit { t, point, interpolated_normal, triangle_index: tri }
    })
}
