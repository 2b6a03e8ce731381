//! Yaw-oriented 3D bounding boxes: BEV overlap tests, image-plane
//! rectangles and projected edge extents for the distortion rule.

use serde::{Deserialize, Serialize};

use crate::geom::SimilarityTransform;
use crate::impaste::camera::CameraRig;
use crate::math::Vec3;
use crate::scalar::Real;

/// Box extents in meters: length along local x, width along local y,
/// height along z.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxDims<T> {
    pub length: T,
    pub width: T,
    pub height: T,
}

impl<T: Real> BoxDims<T> {
    pub fn new(length: T, width: T, height: T) -> Self {
        Self { length, width, height }
    }

    pub fn is_valid(&self) -> bool {
        self.length > T::zero() && self.width > T::zero() && self.height > T::zero()
    }

    pub fn scaled(&self, s: T) -> Self {
        Self { length: self.length * s, width: self.width * s, height: self.height * s }
    }

    pub fn max_extent(&self) -> T {
        self.length.max(self.width).max(self.height)
    }
}

/// A yaw-oriented box: center is the 3D midpoint (mid-height).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox3D<T> {
    pub center: Vec3<T>,
    pub dims: BoxDims<T>,
    pub yaw: T,
}

impl<T: Real> BoundingBox3D<T> {
    pub fn new(center: Vec3<T>, dims: BoxDims<T>, yaw: T) -> Self {
        Self { center, dims, yaw }
    }

    pub fn bottom_z(&self) -> T {
        self.center.z - self.dims.height * T::of(0.5)
    }

    /// Local +x direction in the world/sensor frame.
    pub fn length_axis(&self) -> Vec3<T> {
        let (s, c) = self.yaw.sin_cos();
        Vec3::new(c, s, T::zero())
    }

    /// Local +y direction in the world/sensor frame.
    pub fn width_axis(&self) -> Vec3<T> {
        let (s, c) = self.yaw.sin_cos();
        Vec3::new(-s, c, T::zero())
    }

    pub fn corners(&self) -> [Vec3<T>; 8] {
        let half = T::of(0.5);
        let lx = self.length_axis() * (self.dims.length * half);
        let wy = self.width_axis() * (self.dims.width * half);
        let hz = Vec3::new(T::zero(), T::zero(), self.dims.height * half);
        let c = self.center;
        [
            c + lx + wy + hz,
            c + lx - wy + hz,
            c - lx + wy + hz,
            c - lx - wy + hz,
            c + lx + wy - hz,
            c + lx - wy - hz,
            c - lx + wy - hz,
            c - lx - wy - hz,
        ]
    }

    /// The 4 bird's-eye-view corners (z dropped), counterclockwise.
    pub fn bev_corners(&self) -> [(T, T); 4] {
        let half = T::of(0.5);
        let lx = self.length_axis() * (self.dims.length * half);
        let wy = self.width_axis() * (self.dims.width * half);
        let c = self.center;
        let p = |v: Vec3<T>| (v.x, v.y);
        [p(c + lx + wy), p(c - lx + wy), p(c - lx - wy), p(c + lx - wy)]
    }

    /// True when `(x, y)` lies inside the BEV footprint expanded by `margin`.
    pub fn bev_contains(&self, x: T, y: T, margin: T) -> bool {
        let d = Vec3::new(x - self.center.x, y - self.center.y, T::zero());
        let lu = d.dot(self.length_axis());
        let wu = d.dot(self.width_axis());
        lu.abs() <= self.dims.length * T::of(0.5) + margin
            && wu.abs() <= self.dims.width * T::of(0.5) + margin
    }

    /// Distance from the sensor origin to the nearest corner.
    pub fn nearest_corner_range(&self) -> T {
        self.corners()
            .iter()
            .map(|c| c.norm())
            .fold(T::infinity(), |a, b| a.min(b))
    }

    /// Exact separating-axis intersection test of two BEV rectangles.
    pub fn bev_intersects(&self, other: &Self) -> bool {
        let a = self.bev_corners();
        let b = other.bev_corners();
        let axes = [
            self.length_axis(),
            self.width_axis(),
            other.length_axis(),
            other.width_axis(),
        ];
        for axis in axes {
            let proj = |pts: &[(T, T); 4]| {
                let mut lo = T::infinity();
                let mut hi = T::neg_infinity();
                for &(x, y) in pts {
                    let d = axis.x * x + axis.y * y;
                    lo = lo.min(d);
                    hi = hi.max(d);
                }
                (lo, hi)
            };
            let (alo, ahi) = proj(&a);
            let (blo, bhi) = proj(&b);
            if ahi < blo || bhi < alo {
                return false;
            }
        }
        true
    }

    /// Axis-aligned image rectangle covering the projected corners.
    /// `None` when every corner is behind the camera.
    pub fn image_rect(&self, rig: &CameraRig<T>) -> Option<PixelRect<T>> {
        let mut rect: Option<PixelRect<T>> = None;
        for c in self.corners() {
            if let Some((u, v, _)) = rig.project_sensor_point(c) {
                let r = rect.get_or_insert(PixelRect { u0: u, v0: v, u1: u, v1: v });
                r.u0 = r.u0.min(u);
                r.v0 = r.v0.min(v);
                r.u1 = r.u1.max(u);
                r.v1 = r.v1.max(v);
            }
        }
        rect
    }

    /// Max u-axis pixel extent of the box's length edges and width edges.
    ///
    /// These are the projected lengths the distortion rule compares against
    /// the values recorded from the source image. `None` when an endpoint
    /// projects behind the camera.
    pub fn projected_edge_extents(&self, rig: &CameraRig<T>) -> Option<(T, T)> {
        let corners = self.corners();
        // Corner layout: bit0 -> width sign, bit1 -> length sign, bit2 -> top/bottom.
        let length_edges = [(0usize, 2usize), (1, 3), (4, 6), (5, 7)];
        let width_edges = [(0usize, 1usize), (2, 3), (4, 5), (6, 7)];
        let extent = |edges: &[(usize, usize); 4]| -> Option<T> {
            let mut best = T::zero();
            for &(i, j) in edges {
                let (ui, _, _) = rig.project_sensor_point(corners[i])?;
                let (uj, _, _) = rig.project_sensor_point(corners[j])?;
                best = best.max((ui - uj).abs());
            }
            Some(best)
        };
        Some((extent(&length_edges)?, extent(&width_edges)?))
    }
}

/// Floating-point pixel rectangle (unclamped).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PixelRect<T> {
    pub u0: T,
    pub v0: T,
    pub u1: T,
    pub v1: T,
}

impl<T: Real> PixelRect<T> {
    pub fn area(&self) -> T {
        (self.u1 - self.u0).max(T::zero()) * (self.v1 - self.v0).max(T::zero())
    }

    pub fn intersection_over_union(&self, other: &Self) -> T {
        let iu0 = self.u0.max(other.u0);
        let iv0 = self.v0.max(other.v0);
        let iu1 = self.u1.min(other.u1);
        let iv1 = self.v1.min(other.v1);
        let inter = (iu1 - iu0).max(T::zero()) * (iv1 - iv0).max(T::zero());
        let union = self.area() + other.area() - inter;
        if union <= T::zero() {
            T::zero()
        } else {
            inter / union
        }
    }
}

/// The label box produced by pasting `dims` at transform `t`: the object
/// frame origin is the box center, so the center is the translation, the
/// dims scale by the factor, and the yaw is the transform's yaw.
pub fn placed_box<T: Real>(dims: BoxDims<T>, t: &SimilarityTransform<T>) -> BoundingBox3D<T> {
    BoundingBox3D::new(t.translation, dims.scaled(t.scale), t.yaw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn boxd(cx: f64, cy: f64, l: f64, w: f64, yaw: f64) -> BoundingBox3D<f64> {
        BoundingBox3D::new(Vec3::new(cx, cy, 0.0), BoxDims::new(l, w, 1.5), yaw)
    }

    #[test]
    fn disjoint_boxes_do_not_intersect() {
        let a = boxd(0.0, 0.0, 4.0, 2.0, 0.0);
        let b = boxd(10.0, 0.0, 4.0, 2.0, 0.3);
        assert!(!a.bev_intersects(&b));
        assert!(a.bev_intersects(&a));
    }

    #[test]
    fn rotated_overlap_detected() {
        let a = boxd(0.0, 0.0, 4.0, 2.0, 0.0);
        let b = boxd(2.5, 0.0, 4.0, 2.0, std::f64::consts::FRAC_PI_2);
        assert!(a.bev_intersects(&b));
    }

    /// Monte-Carlo polygon-overlap oracle: sample points in one box and test
    /// containment in the other (and vice versa).
    fn overlap_oracle(a: &BoundingBox3D<f64>, b: &BoundingBox3D<f64>, rng: &mut StdRng) -> bool {
        let sample_in = |bx: &BoundingBox3D<f64>, rng: &mut StdRng| {
            let lu = rng.random_range(-0.5..0.5) * bx.dims.length;
            let wu = rng.random_range(-0.5..0.5) * bx.dims.width;
            let p = bx.center + bx.length_axis() * lu + bx.width_axis() * wu;
            (p.x, p.y)
        };
        for _ in 0..10_000 {
            let (x, y) = sample_in(a, rng);
            if b.bev_contains(x, y, 0.0) {
                return true;
            }
            let (x, y) = sample_in(b, rng);
            if a.bev_contains(x, y, 0.0) {
                return true;
            }
        }
        false
    }

    #[test]
    fn sat_matches_monte_carlo_oracle() {
        let mut rng = StdRng::seed_from_u64(99);
        let mut checked = 0;
        while checked < 60 {
            let a = boxd(
                rng.random_range(-3.0..3.0),
                rng.random_range(-3.0..3.0),
                rng.random_range(1.0..5.0),
                rng.random_range(1.0..3.0),
                rng.random_range(0.0..6.28),
            );
            let b = boxd(
                rng.random_range(-3.0..3.0),
                rng.random_range(-3.0..3.0),
                rng.random_range(1.0..5.0),
                rng.random_range(1.0..3.0),
                rng.random_range(0.0..6.28),
            );
            // Skip marginal cases (the oracle is sampling-based).
            let grown_a = BoundingBox3D {
                dims: BoxDims::new(a.dims.length + 0.02, a.dims.width + 0.02, a.dims.height),
                ..a
            };
            let shrunk_a = BoundingBox3D {
                dims: BoxDims::new(
                    (a.dims.length - 0.02).max(0.01),
                    (a.dims.width - 0.02).max(0.01),
                    a.dims.height,
                ),
                ..a
            };
            if grown_a.bev_intersects(&b) != shrunk_a.bev_intersects(&b) {
                continue;
            }
            let got = a.bev_intersects(&b);
            let want = overlap_oracle(&a, &b, &mut rng);
            assert_eq!(got, want, "a={a:?} b={b:?}");
            checked += 1;
        }
    }

    #[test]
    fn iou_of_identical_rects_is_one() {
        let r = PixelRect::<f64> { u0: 0.0, v0: 0.0, u1: 10.0, v1: 5.0 };
        assert!((r.intersection_over_union(&r) - 1.0).abs() < 1e-12);
        let far = PixelRect { u0: 100.0, v0: 0.0, u1: 110.0, v1: 5.0 };
        assert_eq!(r.intersection_over_union(&far), 0.0);
    }

    #[test]
    fn placed_box_scales_dims() {
        let t = SimilarityTransform::<f64>::new(0.4, Vec3::new(5.0, 1.0, -0.5), 1.1, true);
        let b = placed_box(BoxDims::new(4.0, 2.0, 1.5), &t);
        assert_eq!(b.center, t.translation);
        assert!((b.dims.length - 4.4).abs() < 1e-12);
        assert_eq!(b.yaw, 0.4);
    }
}
