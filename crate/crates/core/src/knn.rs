//! A small 3D k-d tree for nearest-neighbor and radius queries.
//!
//! Used by the intensity interpolant, normal estimation, statistical outlier
//! removal, ICP correspondences and the sparse-support mesh pass.

use crate::math::Vec3;
use crate::scalar::Real;

struct Node {
    /// Index into the point slice handed to `build`.
    point: u32,
    axis: u8,
    left: i32,
    right: i32,
}

pub struct KdTree3<T> {
    nodes: Vec<Node>,
    points: Vec<Vec3<T>>,
    root: i32,
}

/// Neighbor handle: original point index plus squared distance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Neighbor<T> {
    pub index: usize,
    pub dist_squared: T,
}

impl<T: Real> KdTree3<T> {
    pub fn build(points: &[Vec3<T>]) -> Self {
        let mut order: Vec<u32> = (0..points.len() as u32).collect();
        let mut nodes = Vec::with_capacity(points.len());
        let root = Self::build_rec(points, &mut order[..], &mut nodes);
        Self { nodes, points: points.to_vec(), root }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn build_rec(points: &[Vec3<T>], order: &mut [u32], nodes: &mut Vec<Node>) -> i32 {
        if order.is_empty() {
            return -1;
        }
        // Split on the widest axis of this subset.
        let mut lo = Vec3::splat(T::infinity());
        let mut hi = Vec3::splat(T::neg_infinity());
        for &i in order.iter() {
            lo = lo.min_by_component(points[i as usize]);
            hi = hi.max_by_component(points[i as usize]);
        }
        let extent = hi - lo;
        let axis = if extent.x >= extent.y && extent.x >= extent.z {
            0u8
        } else if extent.y >= extent.z {
            1
        } else {
            2
        };
        let mid = order.len() / 2;
        order.select_nth_unstable_by(mid, |&a, &b| {
            let pa = points[a as usize].component(axis as usize);
            let pb = points[b as usize].component(axis as usize);
            pa.partial_cmp(&pb).unwrap_or(std::cmp::Ordering::Equal)
        });
        let point = order[mid];
        let node_index = nodes.len() as i32;
        nodes.push(Node { point, axis, left: -1, right: -1 });
        let (left_half, rest) = order.split_at_mut(mid);
        let right_half = &mut rest[1..];
        let left = Self::build_rec(points, left_half, nodes);
        let right = Self::build_rec(points, right_half, nodes);
        nodes[node_index as usize].left = left;
        nodes[node_index as usize].right = right;
        node_index
    }

    /// Nearest neighbor; `None` on an empty tree.
    pub fn nearest(&self, query: Vec3<T>) -> Option<Neighbor<T>> {
        let mut best = self.k_nearest(query, 1);
        best.pop()
    }

    /// The `k` nearest neighbors sorted by increasing distance.
    pub fn k_nearest(&self, query: Vec3<T>, k: usize) -> Vec<Neighbor<T>> {
        if k == 0 || self.root < 0 {
            return Vec::new();
        }
        let mut heap: Vec<Neighbor<T>> = Vec::with_capacity(k + 1);
        self.k_nearest_rec(self.root, query, k, &mut heap);
        heap.sort_by(|a, b| {
            a.dist_squared
                .partial_cmp(&b.dist_squared)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.index.cmp(&b.index))
        });
        heap
    }

    fn k_nearest_rec(&self, node: i32, query: Vec3<T>, k: usize, heap: &mut Vec<Neighbor<T>>) {
        if node < 0 {
            return;
        }
        let n = &self.nodes[node as usize];
        let p = self.points[n.point as usize];
        let d2 = query.distance_squared(p);
        if heap.len() < k {
            heap.push(Neighbor { index: n.point as usize, dist_squared: d2 });
            if heap.len() == k {
                heap.sort_by(|a, b| {
                    b.dist_squared
                        .partial_cmp(&a.dist_squared)
                        .unwrap_or(std::cmp::Ordering::Equal)
                });
            }
        } else if d2 < heap[0].dist_squared {
            heap[0] = Neighbor { index: n.point as usize, dist_squared: d2 };
            // Keep the worst at the front.
            let mut i = 0;
            while i + 1 < heap.len() && heap[i].dist_squared < heap[i + 1].dist_squared {
                heap.swap(i, i + 1);
                i += 1;
            }
        }
        let axis = n.axis as usize;
        let delta = query.component(axis) - p.component(axis);
        let (near, far) = if delta <= T::zero() { (n.left, n.right) } else { (n.right, n.left) };
        self.k_nearest_rec(near, query, k, heap);
        let worst = if heap.len() < k { T::infinity() } else { heap[0].dist_squared };
        if delta * delta < worst {
            self.k_nearest_rec(far, query, k, heap);
        }
    }

    /// All points within `radius` of `query` (unsorted).
    pub fn within_radius(&self, query: Vec3<T>, radius: T) -> Vec<Neighbor<T>> {
        let mut out = Vec::new();
        if self.root >= 0 {
            self.radius_rec(self.root, query, radius * radius, &mut out);
        }
        out
    }

    fn radius_rec(&self, node: i32, query: Vec3<T>, r2: T, out: &mut Vec<Neighbor<T>>) {
        if node < 0 {
            return;
        }
        let n = &self.nodes[node as usize];
        let p = self.points[n.point as usize];
        let d2 = query.distance_squared(p);
        if d2 <= r2 {
            out.push(Neighbor { index: n.point as usize, dist_squared: d2 });
        }
        let axis = n.axis as usize;
        let delta = query.component(axis) - p.component(axis);
        let (near, far) = if delta <= T::zero() { (n.left, n.right) } else { (n.right, n.left) };
        self.radius_rec(near, query, r2, out);
        if delta * delta <= r2 {
            self.radius_rec(far, query, r2, out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_points(n: usize, seed: u64) -> Vec<Vec3<f64>> {
        let mut rng = StdRng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                Vec3::new(
                    rng.random_range(-10.0..10.0),
                    rng.random_range(-10.0..10.0),
                    rng.random_range(-10.0..10.0),
                )
            })
            .collect()
    }

    fn brute_k_nearest(points: &[Vec3<f64>], q: Vec3<f64>, k: usize) -> Vec<Neighbor<f64>> {
        let mut all: Vec<Neighbor<f64>> = points
            .iter()
            .enumerate()
            .map(|(i, p)| Neighbor { index: i, dist_squared: q.distance_squared(*p) })
            .collect();
        all.sort_by(|a, b| {
            a.dist_squared
                .partial_cmp(&b.dist_squared)
                .unwrap()
                .then(a.index.cmp(&b.index))
        });
        all.truncate(k);
        all
    }

    #[test]
    fn matches_brute_force_k_nearest() {
        let points = random_points(500, 11);
        let tree = KdTree3::build(&points);
        let queries = random_points(100, 12);
        for q in queries {
            let got = tree.k_nearest(q, 5);
            let want = brute_k_nearest(&points, q, 5);
            assert_eq!(got.len(), want.len());
            for (g, w) in got.iter().zip(want.iter()) {
                assert!((g.dist_squared - w.dist_squared).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn matches_brute_force_radius() {
        let points = random_points(400, 21);
        let tree = KdTree3::build(&points);
        for q in random_points(50, 22) {
            let r = 3.0;
            let mut got: Vec<usize> = tree.within_radius(q, r).iter().map(|n| n.index).collect();
            got.sort_unstable();
            let mut want: Vec<usize> = points
                .iter()
                .enumerate()
                .filter(|(_, p)| q.distance_squared(**p) <= r * r)
                .map(|(i, _)| i)
                .collect();
            want.sort_unstable();
            assert_eq!(got, want);
        }
    }

    #[test]
    fn empty_tree_behaves() {
        let tree = KdTree3::<f64>::build(&[]);
        assert!(tree.nearest(Vec3::zero()).is_none());
        assert!(tree.k_nearest(Vec3::zero(), 3).is_empty());
        assert!(tree.within_radius(Vec3::zero(), 1.0).is_empty());
    }
}
