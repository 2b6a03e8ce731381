//! The synthetic oracle suite exposed through `synth selftest`.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::geom::{intersect_ray_mesh, Bvh, Ray, RayMode, RigidPose};
use crate::intensity::build_interpolant;
use crate::lidar::{laser_ray, Block, LaserIntrinsics, ScanPattern};
use crate::math::Vec3;
use crate::synth::scan::make_lambertian_scan;
use crate::synth::shapes::{lambertian_intensity, Shape, LAMBERT_K};

pub struct SelfTestResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Runs the oracle battery; every check is deterministic.
pub fn run_selftest() -> Vec<SelfTestResult> {
    vec![
        beam_model_reductions(),
        beam_model_magnitude_identity(),
        lambertian_scaling(),
        analytic_vs_mesh_agreement(),
        bvh_vs_brute_force(),
        intensity_round_trip(),
    ]
}

fn result(name: &'static str, passed: bool, detail: String) -> SelfTestResult {
    SelfTestResult { name, passed, detail }
}

fn beam_model_reductions() -> SelfTestResult {
    let zero = LaserIntrinsics {
        laser_id: 0,
        block: Block::Top,
        alpha: 0.0f64,
        theta: 0.0,
        h_offset: 0.0,
        v_offset: 0.0,
    };
    let r0 = laser_ray(&zero, 0.0, 1.0);
    let r90 = laser_ray(&zero, std::f64::consts::FRAC_PI_2, 1.0);
    let ok = (r0.direction - Vec3::new(1.0, 0.0, 0.0)).norm() < 1e-15
        && r0.origin.norm() < 1e-15
        && (r90.direction - Vec3::new(0.0, 1.0, 0.0)).norm() < 1e-15;
    result("beam model zero-correction reductions", ok, String::new())
}

fn beam_model_magnitude_identity() -> SelfTestResult {
    let mut rng = StdRng::seed_from_u64(100);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let l = LaserIntrinsics {
            laser_id: 0,
            block: Block::Top,
            alpha: rng.random_range(-0.5..0.5),
            theta: rng.random_range(-0.5..0.5),
            h_offset: rng.random_range(-0.1..0.1),
            v_offset: rng.random_range(-0.3..0.3),
        };
        let d: f64 = rng.random_range(1.0..120.0);
        let ray = laser_ray(&l, rng.random_range(0.0..6.28), d);
        let d_xy = d * l.theta.cos() - l.v_offset * l.theta.sin();
        let want = d_xy * d_xy + d * d * l.theta.sin().powi(2);
        worst = worst.max((ray.direction.norm_squared() - want).abs() / want);
    }
    result(
        "beam direction magnitude identity",
        worst < 1e-12,
        format!("worst relative error {worst:.2e}"),
    )
}

fn lambertian_scaling() -> SelfTestResult {
    let near = lambertian_intensity(1.0f64, 1.0, 10.0);
    let far = lambertian_intensity(1.0f64, 1.0, 20.0);
    let ok = (near - LAMBERT_K / 100.0).abs() < 1e-12 && (near / far - 4.0).abs() < 1e-12;
    result("range-equation 1/R^2 scaling", ok, format!("I(10m)={near}, I(20m)={far}"))
}

fn analytic_vs_mesh_agreement() -> SelfTestResult {
    let shape = Shape::Sphere { radius: 1.0f64 };
    let pose = RigidPose::from_yaw(0.0, Vec3::new(10.0, 0.0, 0.0));
    let mesh = shape.to_mesh(48).transformed(&pose);
    let bvh = match Bvh::build(&mesh) {
        Ok(b) => b,
        Err(e) => return result("analytic vs mesh agreement", false, e.to_string()),
    };
    let pattern = ScanPattern::ideal_grid(33, -0.25, 0.25, 0.004, 120.0);
    let cloud = make_lambertian_scan(&shape, &pose, &pattern, 1.0);
    let voxel = 2.0 / 64.0;
    let mut disagreements = 0usize;
    let mut compared = 0usize;
    for k in 0..pattern.steps_per_revolution() {
        let phi = pattern.azimuth_at(k);
        for laser in &pattern.lasers {
            let ray = laser_ray(laser, phi, pattern.ray_length);
            let analytic = shape.intersect(&pose, &ray);
            // Silhouette band excluded.
            let dir = match ray.direction.normalized() {
                Some(d) => d,
                None => continue,
            };
            let closest = (pose.translation - ray.origin).cross(dir).norm();
            if (closest - 1.0).abs() < 2.0 * voxel {
                continue;
            }
            let mesh_hit = intersect_ray_mesh(&ray, &mesh, &bvh, RayMode::Lidar);
            compared += 1;
            match (analytic, mesh_hit) {
                (Some(a), Some(m)) => {
                    if (a.point - m.point).norm() > 2.0 * voxel {
                        disagreements += 1;
                    }
                }
                (None, None) => {}
                _ => disagreements += 1,
            }
        }
    }
    let _ = cloud;
    result(
        "analytic vs mesh ray agreement",
        disagreements == 0 && compared > 1000,
        format!("{disagreements} disagreements over {compared} rays"),
    )
}

fn bvh_vs_brute_force() -> SelfTestResult {
    use crate::geom::{intersect_ray_triangle, min_ray_parameter, TriangleMesh};
    let mut rng = StdRng::seed_from_u64(3);
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for i in 0..400usize {
        let base = Vec3::new(
            rng.random_range(-5.0..5.0),
            rng.random_range(-5.0..5.0),
            rng.random_range(-5.0..5.0),
        );
        for _ in 0..3 {
            vertices.push(base
                + Vec3::new(
                    rng.random_range(-0.8..0.8),
                    rng.random_range(-0.8..0.8),
                    rng.random_range(-0.8..0.8),
                ));
        }
        let k = (i * 3) as u32;
        triangles.push([k, k + 1, k + 2]);
    }
    let nv = vertices.len();
    let mesh = TriangleMesh::new(vertices, triangles, vec![Vec3::new(0.0, 0.0, 1.0); nv], vec![true; 400]);
    let bvh = match Bvh::build(&mesh) {
        Ok(b) => b,
        Err(e) => return result("bvh vs brute force", false, e.to_string()),
    };
    let mut mismatches = 0usize;
    for _ in 0..2000 {
        let ray = Ray::new(
            Vec3::new(
                rng.random_range(-8.0..8.0),
                rng.random_range(-8.0..8.0),
                rng.random_range(-8.0..8.0),
            ),
            Vec3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            ),
        );
        if ray.direction.norm() < 1e-3 {
            continue;
        }
        let got = intersect_ray_mesh(&ray, &mesh, &bvh, RayMode::Camera);
        let mut want: Option<(f64, usize)> = None;
        for i in 0..mesh.triangles.len() {
            let [a, b, c] = mesh.triangle_vertices(i);
            if let Some((t, _, _)) = intersect_ray_triangle(&ray, a, b, c, min_ray_parameter(&ray)) {
                if want.map_or(true, |(wt, _)| t < wt) {
                    want = Some((t, i));
                }
            }
        }
        match (got, want) {
            (None, None) => {}
            (Some(h), Some((t, tri))) if h.triangle_index == tri && (h.t - t).abs() < 1e-9 => {}
            _ => mismatches += 1,
        }
    }
    result("bvh vs brute force", mismatches == 0, format!("{mismatches} mismatches"))
}

fn intensity_round_trip() -> SelfTestResult {
    // Lambertian sphere: b must come out spatially constant and resampling
    // from a new pose must match the analytic range equation.
    let shape = Shape::Sphere { radius: 1.0f64 };
    let pose = RigidPose::from_yaw(0.0, Vec3::new(10.0, 0.0, 0.0));
    let pattern = ScanPattern::ideal_grid(65, -0.3, 0.3, 0.003, 120.0);
    let cloud = make_lambertian_scan(&shape, &pose, &pattern, 0.9);
    let inv = pose.inverse();
    let origin_obj = inv.transform_point(Vec3::zero());
    // Keep support clear of the grazing-incidence floors (eps_cos and the
    // intensity floor kick in below cos ~ 0.05).
    let mut points_obj = Vec::new();
    let mut intensities = Vec::new();
    for (i, &p) in cloud.points.iter().enumerate() {
        let x = inv.transform_point(p);
        let to_sensor = origin_obj - x;
        let cos_a = x.dot(to_sensor).abs() / to_sensor.norm();
        if cos_a >= 0.1 && cloud.intensity[i] >= 2.0 / 255.0 {
            points_obj.push(x);
            intensities.push(cloud.intensity[i]);
        }
    }
    let cloud = crate::lidar::PointCloud::new(points_obj.clone(), intensities);
    let normals: Vec<Vec3<f64>> = points_obj.iter().map(|&p| p).collect(); // unit sphere
    let interp = match build_interpolant(&points_obj, &cloud.intensity, &normals, origin_obj) {
        Ok(i) => i,
        Err(e) => return result("intensity round trip", false, e.to_string()),
    };
    // b constant: log_b spread tiny.
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &b in interp.log_b() {
        lo = lo.min(b);
        hi = hi.max(b);
    }
    let spread = hi - lo;
    // Resample from a rotated/translated pose.
    let new_pose = RigidPose::from_yaw(0.4, Vec3::new(7.0, 2.0, 0.0));
    let new_origin_obj = new_pose.inverse().transform_point(Vec3::zero());
    let mut worst = 0.0f64;
    for &x in points_obj.iter().step_by(7) {
        let to_sensor = new_origin_obj - x;
        let r = to_sensor.norm();
        let cos_a = x.dot(to_sensor).abs() / r; // unit-sphere normal = x
        if cos_a < 0.2 {
            continue;
        }
        let got = interp.resample_intensity(x, r, cos_a);
        let want = lambertian_intensity(0.9, cos_a, r);
        if want > 1e-6 {
            worst = worst.max((got - want).abs() / want);
        }
    }
    result(
        "intensity round trip",
        spread < 1e-9 && worst <= 0.05,
        format!("log_b spread {spread:.2e}, worst relative error {worst:.3}"),
    )
}
