//! Statistical outlier removal and RANSAC plane extraction.

use rand::Rng;

use crate::builder::BuilderError;
use crate::knn::KdTree3;
use crate::lidar::PointCloud;
use crate::math::Vec3;
use crate::scalar::Real;

/// Statistical outlier removal defaults.
pub const OUTLIER_K: usize = 20;
pub const OUTLIER_SIGMA: f64 = 2.0;

/// Keep-flags per point: a point survives when its mean distance to the k
/// nearest neighbors stays below `mean + sigma_mult * std` of the per-point
/// mean-distance distribution. Guarantees at least one survivor (the
/// densest point).
pub fn remove_outlier_flags<T: Real>(points: &[Vec3<T>], k: usize, sigma_mult: T) -> Vec<bool> {
    let n = points.len();
    if n <= 1 {
        return vec![true; n];
    }
    let k_eff = k.min(n - 1);
    let tree = KdTree3::build(points);
    let mut mean_dist = Vec::with_capacity(n);
    for &p in points {
        let neighbors = tree.k_nearest(p, k_eff + 1); // first hit is the point itself
        let mut acc = T::zero();
        let mut cnt = 0usize;
        for nb in neighbors.iter().skip(1) {
            acc += nb.dist_squared.sqrt();
            cnt += 1;
        }
        mean_dist.push(acc / T::of_usize(cnt.max(1)));
    }
    let mu = mean_dist.iter().fold(T::zero(), |a, &b| a + b) / T::of_usize(n);
    let var = mean_dist
        .iter()
        .fold(T::zero(), |a, &b| a + (b - mu) * (b - mu))
        / T::of_usize(n);
    let limit = mu + sigma_mult * var.sqrt();
    let mut flags: Vec<bool> = mean_dist.iter().map(|&d| d <= limit).collect();
    if !flags.iter().any(|&f| f) {
        // Degenerate distribution: keep the densest point.
        let densest = mean_dist
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(std::cmp::Ordering::Equal))
            .map(|(i, _)| i)
            .unwrap_or(0);
        flags[densest] = true;
    }
    flags
}

/// Statistical outlier removal over a point cloud (k = 20, sigma = 2).
pub fn remove_outliers<T: Real>(cloud: &PointCloud<T>) -> PointCloud<T> {
    let flags = remove_outlier_flags(&cloud.points, OUTLIER_K, T::of(OUTLIER_SIGMA));
    cloud.filtered_by_index(|i| flags[i])
}

/// A plane `normal . p + d = 0` with unit normal.
#[derive(Clone, Copy, Debug)]
pub struct Plane<T> {
    pub normal: Vec3<T>,
    pub d: T,
}

impl<T: Real> Plane<T> {
    pub fn signed_distance(&self, p: Vec3<T>) -> T {
        self.normal.dot(p) + self.d
    }

    fn from_three_points(a: Vec3<T>, b: Vec3<T>, c: Vec3<T>) -> Option<Self> {
        let n = (b - a).cross(c - a).normalized()?;
        Some(Self { normal: n, d: -n.dot(a) })
    }

    /// Canonical sign: first nonzero normal component positive.
    fn canonical(mut self) -> Self {
        let flip = if self.normal.z.abs() > T::of(1e-12) {
            self.normal.z < T::zero()
        } else if self.normal.y.abs() > T::of(1e-12) {
            self.normal.y < T::zero()
        } else {
            self.normal.x < T::zero()
        };
        if flip {
            self.normal = -self.normal;
            self.d = -self.d;
        }
        self
    }
}

/// RANSAC plane fit: best of `iterations` random 3-point hypotheses by
/// inlier count (deterministic under a seeded rng). Errors when no
/// non-collinear triple shows up.
pub fn ransac_plane<T: Real, R: Rng>(
    points: &[Vec3<T>],
    iterations: usize,
    inlier_threshold: T,
    rng: &mut R,
) -> Result<(Plane<T>, Vec<usize>), BuilderError> {
    if points.len() < 3 {
        return Err(BuilderError::DegenerateInput);
    }
    let mut best: Option<(usize, Plane<T>)> = None;
    for _ in 0..iterations {
        let i = rng.random_range(0..points.len());
        let j = rng.random_range(0..points.len());
        let k = rng.random_range(0..points.len());
        if i == j || j == k || i == k {
            continue;
        }
        let Some(plane) = Plane::from_three_points(points[i], points[j], points[k]) else {
            continue;
        };
        let count = points
            .iter()
            .filter(|&&p| plane.signed_distance(p).abs() <= inlier_threshold)
            .count();
        if best.as_ref().map_or(true, |(c, _)| count > *c) {
            best = Some((count, plane));
        }
    }
    let (_, plane) = best.ok_or(BuilderError::DegenerateInput)?;
    let plane = plane.canonical();
    let inliers: Vec<usize> = points
        .iter()
        .enumerate()
        .filter(|(_, &p)| plane.signed_distance(p).abs() <= inlier_threshold)
        .map(|(i, _)| i)
        .collect();
    Ok((plane, inliers))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    #[test]
    fn uniform_cube_cloud_mostly_survives() {
        // Uniformly sampled cube shell (closed surface, like a LiDAR-scanned
        // object): no boundary skin, so nearly everything must be retained.
        let mut rng = StdRng::seed_from_u64(5);
        let mut points = Vec::new();
        let n_side = 24;
        let mut face = |f: &dyn Fn(f64, f64) -> Vec3<f64>, rng: &mut StdRng| {
            for i in 0..n_side {
                for j in 0..n_side {
                    let u = i as f64 / (n_side - 1) as f64 * 2.0 - 1.0
                        + rng.random_range(-0.015..0.015);
                    let v = j as f64 / (n_side - 1) as f64 * 2.0 - 1.0
                        + rng.random_range(-0.015..0.015);
                    points.push(f(u, v));
                }
            }
        };
        face(&|u, v| Vec3::new(1.0, u, v), &mut rng);
        face(&|u, v| Vec3::new(-1.0, u, v), &mut rng);
        face(&|u, v| Vec3::new(u, 1.0, v), &mut rng);
        face(&|u, v| Vec3::new(u, -1.0, v), &mut rng);
        face(&|u, v| Vec3::new(u, v, 1.0), &mut rng);
        face(&|u, v| Vec3::new(u, v, -1.0), &mut rng);
        let flags = remove_outlier_flags(&points, OUTLIER_K, 2.0);
        let kept = flags.iter().filter(|&&f| f).count();
        assert!(kept as f64 >= 0.98 * points.len() as f64, "kept {kept}/{}", points.len());
    }

    #[test]
    fn lone_far_point_removed() {
        let mut points: Vec<Vec3<f64>> = Vec::new();
        for i in 0..100 {
            let a = i as f64 * 0.37;
            points.push(Vec3::new(a.cos() * 0.5, a.sin() * 0.5, (i % 10) as f64 * 0.05));
        }
        points.push(Vec3::new(50.0, 0.0, 0.0));
        let flags = remove_outlier_flags(&points, OUTLIER_K, 2.0);
        assert!(!flags[100]);
        assert!(flags[..100].iter().all(|&f| f));
    }

    #[test]
    fn guard_returns_at_least_one_point() {
        // Two identical points plus two opposite far points: whatever the
        // distribution does, something must survive.
        let points = vec![
            Vec3::<f64>::new(0.0, 0.0, 0.0),
            Vec3::new(1e-9, 0.0, 0.0),
            Vec3::new(1e3, 0.0, 0.0),
            Vec3::new(-1e3, 0.0, 0.0),
        ];
        let flags = remove_outlier_flags(&points, 3, 2.0);
        assert!(flags.iter().any(|&f| f));
    }

    #[test]
    fn exact_plane_recovered() {
        let mut points = Vec::new();
        for x in 0..10 {
            for y in 0..10 {
                points.push(Vec3::new(x as f64 * 0.3, y as f64 * 0.3, -1.7));
            }
        }
        let mut rng = StdRng::seed_from_u64(3);
        let (plane, inliers) = ransac_plane(&points, 50, 0.01, &mut rng).unwrap();
        assert!((plane.normal - Vec3::new(0.0, 0.0, 1.0)).norm() < 1e-9);
        assert!((plane.d - 1.7).abs() < 1e-9);
        assert_eq!(inliers.len(), points.len());
    }

    #[test]
    fn survives_thirty_percent_outliers() {
        let mut rng = StdRng::seed_from_u64(9);
        let mut points = Vec::new();
        for _ in 0..700 {
            points.push(Vec3::new(
                rng.random_range(-5.0..5.0),
                rng.random_range(-5.0..5.0),
                -1.7,
            ));
        }
        for _ in 0..300 {
            points.push(Vec3::new(
                rng.random_range(-5.0..5.0),
                rng.random_range(-5.0..5.0),
                rng.random_range(-5.0..5.0),
            ));
        }
        let (plane, _) = ransac_plane(&points, 100, 0.05, &mut rng).unwrap();
        let angle = plane.normal.dot(Vec3::<f64>::new(0.0, 0.0, 1.0)).clamp(-1.0, 1.0).acos();
        assert!(angle.to_degrees() < 1.0, "angle {}", angle.to_degrees());
    }

    #[test]
    fn zero_threshold_on_noisy_data_keeps_nothing_much() {
        let mut rng = StdRng::seed_from_u64(13);
        let points: Vec<Vec3<f64>> = (0..300)
            .map(|_| {
                Vec3::new(
                    rng.random_range(-5.0..5.0),
                    rng.random_range(-5.0..5.0),
                    -1.7 + rng.random_range(-0.02..0.02),
                )
            })
            .collect();
        let (_, inliers) = ransac_plane(&points, 100, 0.0, &mut rng).unwrap();
        assert!(inliers.len() <= 3);
    }

    #[test]
    fn collinear_points_error() {
        let points: Vec<Vec3<f64>> =
            (0..10).map(|i| Vec3::new(i as f64, 2.0 * i as f64, 0.0)).collect();
        let mut rng = StdRng::seed_from_u64(1);
        assert!(matches!(
            ransac_plane(&points, 50, 0.01, &mut rng),
            Err(BuilderError::DegenerateInput)
        ));
    }
}
