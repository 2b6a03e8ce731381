//! Colored ICP: point-to-plane registration with an intensity residual on
//! the tangent plane, which resolves geometry that is ambiguous under
//! sliding.

use crate::builder::normals::estimate_normals;
use crate::geom::RigidPose;
use crate::knn::KdTree3;
use crate::math::{damped_solve, Mat3, SquareMat, Vec3};
use crate::scalar::Real;

/// Registration cloud: points with intensities, normals and precomputed
/// tangent-plane intensity gradients.
pub struct ScanCloud<T> {
    pub points: Vec<Vec3<T>>,
    pub intensity: Vec<T>,
    pub normals: Vec<Vec3<T>>,
    tree: KdTree3<T>,
    gradients: Vec<Vec3<T>>,
    mean_spacing: T,
}

impl<T: Real> ScanCloud<T> {
    /// Builds the registration structure; normals are estimated with k-NN
    /// PCA oriented toward `sensor_origin`.
    pub fn from_points(points: &[Vec3<T>], intensity: &[T], sensor_origin: Vec3<T>) -> Self {
        let origins = vec![sensor_origin; points.len()];
        let normals = estimate_normals(points, 20, &origins);
        Self::with_normals(points, intensity, &normals)
    }

    pub fn with_normals(points: &[Vec3<T>], intensity: &[T], normals: &[Vec3<T>]) -> Self {
        let tree = KdTree3::build(points);
        let mean_spacing = mean_nn_spacing(points, &tree);
        let gradients = intensity_gradients(points, intensity, normals, &tree);
        Self {
            points: points.to_vec(),
            intensity: intensity.to_vec(),
            normals: normals.to_vec(),
            tree,
            gradients,
            mean_spacing,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn mean_spacing(&self) -> T {
        self.mean_spacing
    }
}

fn mean_nn_spacing<T: Real>(points: &[Vec3<T>], tree: &KdTree3<T>) -> T {
    if points.len() < 2 {
        return T::of(0.05);
    }
    // Deterministic subsample keeps this O(n log n) for huge clouds.
    let stride = (points.len() / 1000).max(1);
    let mut acc = T::zero();
    let mut cnt = 0usize;
    for p in points.iter().step_by(stride) {
        let nb = tree.k_nearest(*p, 2);
        if nb.len() == 2 {
            acc += nb[1].dist_squared.sqrt();
            cnt += 1;
        }
    }
    acc / T::of_usize(cnt.max(1))
}

/// Least-squares intensity gradient on each point's tangent plane, with the
/// normal direction constrained out.
fn intensity_gradients<T: Real>(
    points: &[Vec3<T>],
    intensity: &[T],
    normals: &[Vec3<T>],
    tree: &KdTree3<T>,
) -> Vec<Vec3<T>> {
    let k = 10usize;
    let mut out = Vec::with_capacity(points.len());
    for (i, &p) in points.iter().enumerate() {
        let n = normals[i];
        let neighbors = tree.k_nearest(p, (k + 1).min(points.len()));
        let mut a = Mat3::zeros();
        let mut b = Vec3::zero();
        for nb in neighbors.iter().skip(1) {
            let q = points[nb.index];
            // Project the neighbor onto the tangent plane at p.
            let q_proj = q - n * n.dot(q - p);
            let d = q_proj - p;
            let dc = intensity[nb.index] - intensity[i];
            let dd = [d.x, d.y, d.z];
            for r in 0..3 {
                for c in 0..3 {
                    a.m[r][c] += dd[r] * dd[c];
                }
            }
            b += d * dc;
        }
        // Constrain the normal direction (keeps A invertible).
        let nn = [n.x, n.y, n.z];
        for r in 0..3 {
            for c in 0..3 {
                a.m[r][c] += nn[r] * nn[c];
            }
        }
        let g = a.inverse().map(|inv| inv.mul_vec(b)).unwrap_or(Vec3::zero());
        // Exact tangency.
        out.push(g - n * n.dot(g));
    }
    out
}

#[derive(Clone, Debug)]
pub struct IcpParams<T> {
    /// Weight of the intensity residual (geometric weight is `1 - lambda`).
    pub lambda_color: T,
    /// Correspondence radius schedule in multiples of the target's mean
    /// point spacing.
    pub stage_radii: Vec<T>,
    pub max_iterations_per_stage: usize,
    /// Convergence thresholds on the incremental update.
    pub translation_eps: T,
    pub rotation_eps: T,
    pub min_points: usize,
}

impl<T: Real> Default for IcpParams<T> {
    fn default() -> Self {
        Self {
            lambda_color: T::of(0.032),
            stage_radii: vec![T::of(4.0), T::of(2.0), T::of(1.0)],
            max_iterations_per_stage: 30,
            translation_eps: T::of(1e-7),
            rotation_eps: T::of(1e-6),
            min_points: 50,
        }
    }
}

impl<T: Real> IcpParams<T> {
    /// Pure point-to-plane variant (no intensity term).
    pub fn geometric_only() -> Self {
        Self { lambda_color: T::zero(), ..Self::default() }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct IcpResult<T> {
    /// Pose mapping source points into the target frame.
    pub pose: RigidPose<T>,
    /// Fraction of source points with a correspondence at the final stage.
    pub fitness: T,
    /// RMS point-to-plane residual over the final correspondences.
    pub rmse: T,
    pub converged: bool,
}

/// Registers `source` onto `target` starting from `init`.
///
/// Minimizes `(1 - lambda) * point-to-plane^2 + lambda * color^2` by
/// Gauss-Newton over a shrinking correspondence-radius schedule. On
/// non-convergence the best-so-far pose is returned flagged low-fitness.
pub fn colored_icp<T: Real>(
    source: &ScanCloud<T>,
    target: &ScanCloud<T>,
    init: &RigidPose<T>,
    params: &IcpParams<T>,
) -> IcpResult<T> {
    let mut pose = *init;
    if source.len() < params.min_points || target.len() < params.min_points {
        return IcpResult { pose, fitness: T::zero(), rmse: T::infinity(), converged: false };
    }
    let sigma_g = T::one() - params.lambda_color;
    let sigma_c = params.lambda_color;
    let mut fitness = T::zero();
    let mut rmse = T::infinity();
    let mut converged = false;
    for &mult in &params.stage_radii {
        let radius = mult * target.mean_spacing();
        let r2 = radius * radius;
        for _ in 0..params.max_iterations_per_stage {
            let mut h = SquareMat::zeros(6);
            let mut g = [T::zero(); 6];
            let mut matched = 0usize;
            let mut sq_residual = T::zero();
            for (si, &sp) in source.points.iter().enumerate() {
                let p = pose.transform_point(sp);
                let Some(nb) = target.tree.nearest(p) else {
                    continue;
                };
                if nb.dist_squared > r2 {
                    continue;
                }
                let q = target.points[nb.index];
                let n = target.normals[nb.index];
                matched += 1;

                // Geometric point-to-plane residual.
                let r_geo = n.dot(p - q);
                sq_residual += r_geo * r_geo;
                let mut j_geo = [T::zero(); 6];
                j_geo[0] = n.x;
                j_geo[1] = n.y;
                j_geo[2] = n.z;
                for k in 0..3 {
                    let e = basis(k);
                    j_geo[3 + k] = n.dot(e.cross(p));
                }
                accumulate(&mut h, &mut g, &j_geo, r_geo, sigma_g);

                // Intensity residual along the tangent plane.
                if sigma_c > T::zero() {
                    let grad = target.gradients[nb.index];
                    let p_proj = p - n * n.dot(p - q);
                    let virtual_c = target.intensity[nb.index] + grad.dot(p_proj - q);
                    let r_col = virtual_c - source.intensity[si];
                    let g_t = grad - n * n.dot(grad);
                    let mut j_col = [T::zero(); 6];
                    j_col[0] = g_t.x;
                    j_col[1] = g_t.y;
                    j_col[2] = g_t.z;
                    for k in 0..3 {
                        let e = basis(k);
                        j_col[3 + k] = g_t.dot(e.cross(p));
                    }
                    accumulate(&mut h, &mut g, &j_col, r_col, sigma_c);
                }
            }
            if matched < params.min_points.min(source.len()) / 2 + 3 {
                break;
            }
            fitness = T::of_usize(matched) / T::of_usize(source.len());
            rmse = (sq_residual / T::of_usize(matched)).sqrt();
            let mut rhs = [T::zero(); 6];
            for k in 0..6 {
                rhs[k] = -g[k];
            }
            let Some(delta) = damped_solve(&h, &rhs, T::of(1e-6)) else {
                break;
            };
            let rho = Vec3::new(delta[0], delta[1], delta[2]);
            let phi = Vec3::new(delta[3], delta[4], delta[5]);
            pose = RigidPose::exp_se3(rho, phi).compose(&pose);
            if rho.norm() < params.translation_eps && phi.norm() < params.rotation_eps {
                converged = true;
                break;
            }
        }
    }
    IcpResult { pose, fitness, rmse, converged }
}

#[inline]
fn basis<T: Real>(k: usize) -> Vec3<T> {
    match k {
        0 => Vec3::new(T::one(), T::zero(), T::zero()),
        1 => Vec3::new(T::zero(), T::one(), T::zero()),
        _ => Vec3::new(T::zero(), T::zero(), T::one()),
    }
}

#[inline]
fn accumulate<T: Real>(h: &mut SquareMat<T>, g: &mut [T; 6], j: &[T; 6], r: T, w: T) {
    for a in 0..6 {
        g[a] += w * j[a] * r;
        for b in a..6 {
            let v = w * j[a] * j[b];
            h.add_at(a, b, v);
            if a != b {
                h.add_at(b, a, v);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    /// Bumpy surface patch with a smooth two-direction intensity pattern.
    fn wavy_cloud(n: usize, seed: u64) -> (Vec<Vec3<f64>>, Vec<f64>) {
        let mut rng = StdRng::seed_from_u64(seed);
        let mut points = Vec::with_capacity(n);
        let mut intensity = Vec::with_capacity(n);
        for _ in 0..n {
            let x: f64 = rng.random_range(-2.0..2.0);
            let y: f64 = rng.random_range(-2.0..2.0);
            let z = 0.3 * (1.7 * x).sin() * (1.3 * y).cos();
            points.push(Vec3::new(x, y, z));
            intensity.push(0.5 + 0.2 * (2.0 * x).sin() + 0.2 * (2.0 * y).sin());
        }
        (points, intensity)
    }

    #[test]
    fn identity_on_identical_clouds() {
        let (points, intensity) = wavy_cloud(800, 1);
        let cloud = ScanCloud::from_points(&points, &intensity, Vec3::new(0.0, 0.0, 20.0));
        let result = colored_icp(&cloud, &cloud, &RigidPose::identity(), &IcpParams::default());
        assert!(result.pose.translation.norm() < 1e-10);
        assert!(result.pose.rotation.log_so3().norm() < 1e-10);
        assert!(result.rmse < 1e-10);
        assert!(result.fitness > 0.99);
    }

    #[test]
    fn recovers_known_offset() {
        let (points, intensity) = wavy_cloud(3000, 2);
        let target = ScanCloud::from_points(&points, &intensity, Vec3::new(0.0, 0.0, 20.0));
        // Source = target moved by the inverse of a known transform; ICP
        // must recover the transform.
        let truth = RigidPose::new(
            Mat3::rotation_z(8.0f64.to_radians()),
            Vec3::new(0.12, -0.08, 0.05),
        );
        let inv = truth.inverse();
        let moved: Vec<Vec3<f64>> = points.iter().map(|&p| inv.transform_point(p)).collect();
        let source = ScanCloud::from_points(&moved, &intensity, Vec3::new(0.0, 0.0, 20.0));
        let result = colored_icp(&source, &target, &RigidPose::identity(), &IcpParams::default());
        let rot_err = result
            .pose
            .rotation
            .transpose()
            .mul_mat(&truth.rotation)
            .log_so3()
            .norm()
            .to_degrees();
        let trans_err = (result.pose.translation - truth.translation).norm();
        assert!(rot_err < 0.5, "rotation error {rot_err} deg");
        assert!(trans_err < 0.01, "translation error {trans_err} m");
    }

    #[test]
    fn intensity_resolves_planar_slide() {
        // Flat plane: geometry is ambiguous under in-plane slides, the
        // intensity pattern is not.
        let mut rng = StdRng::seed_from_u64(3);
        let mut points = Vec::new();
        let mut intensity = Vec::new();
        for _ in 0..4000 {
            let x: f64 = rng.random_range(-3.0..3.0);
            let y: f64 = rng.random_range(-3.0..3.0);
            points.push(Vec3::new(x, y, 0.0));
            intensity.push(0.5 + 0.2 * (2.0 * x).sin() + 0.2 * (2.0 * y).sin());
        }
        let target = ScanCloud::from_points(&points, &intensity, Vec3::new(0.0, 0.0, 20.0));
        let truth = RigidPose::new(Mat3::identity(), Vec3::new(0.15, -0.12, 0.0));
        let inv = truth.inverse();
        let moved: Vec<Vec3<f64>> = points.iter().map(|&p| inv.transform_point(p)).collect();
        let source = ScanCloud::from_points(&moved, &intensity, Vec3::new(0.0, 0.0, 20.0));

        let colored = colored_icp(&source, &target, &RigidPose::identity(), &IcpParams::default());
        let colored_err = (colored.pose.translation - truth.translation).norm();
        assert!(colored_err < 0.02, "colored error {colored_err}");

        let plain = colored_icp(
            &source,
            &target,
            &RigidPose::identity(),
            &IcpParams::geometric_only(),
        );
        let plain_err = (plain.pose.translation - truth.translation).norm();
        assert!(plain_err > 0.10, "plain point-to-plane unexpectedly solved it: {plain_err}");
    }

    #[test]
    fn tiny_clouds_flagged_unconverged() {
        let points = vec![Vec3::<f64>::new(0.0, 0.0, 0.0); 5];
        let intensity = vec![0.5; 5];
        let cloud = ScanCloud::from_points(&points, &intensity, Vec3::new(0.0, 0.0, 1.0));
        let r = colored_icp(&cloud, &cloud, &RigidPose::identity(), &IcpParams::default());
        assert!(!r.converged);
        assert_eq!(r.fitness, 0.0);
    }
}
