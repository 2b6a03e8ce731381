//! Pose graph optimization: joint correction of per-scan object poses.

use crate::builder::BuilderError;
use crate::geom::RigidPose;
use crate::math::{damped_solve, SquareMat, Vec3};
use crate::scalar::Real;

/// Relative pose constraint `measurement ~ node_from^-1 * node_to` with a
/// 6x6 information matrix (twist order: translation, rotation).
#[derive(Clone, Debug)]
pub struct PoseGraphEdge<T> {
    pub from: usize,
    pub to: usize,
    pub measurement: RigidPose<T>,
    pub information: [[T; 6]; 6],
}

#[derive(Clone, Debug)]
pub struct PoseGraph<T> {
    pub nodes: Vec<RigidPose<T>>,
    pub edges: Vec<PoseGraphEdge<T>>,
}

impl<T: Real> PoseGraph<T> {
    pub fn validate(&self) -> Result<(), BuilderError> {
        for e in &self.edges {
            if e.from >= self.nodes.len() || e.to >= self.nodes.len() {
                return Err(BuilderError::BadEdge);
            }
            for i in 0..6 {
                if e.information[i][i] < T::zero() {
                    return Err(BuilderError::BadEdge);
                }
                for j in 0..6 {
                    if (e.information[i][j] - e.information[j][i]).abs() > T::of(1e-9) {
                        return Err(BuilderError::BadEdge);
                    }
                }
            }
        }
        Ok(())
    }

    fn connected_components(&self) -> Vec<Vec<usize>> {
        let n = self.nodes.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for e in &self.edges {
            let a = find(&mut parent, e.from);
            let b = find(&mut parent, e.to);
            if a != b {
                parent[a] = b;
            }
        }
        let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for i in 0..n {
            let root = find(&mut parent, i);
            groups.entry(root).or_default().push(i);
        }
        groups.into_values().collect()
    }

    /// Sum of squared residuals weighted by the information matrices.
    pub fn total_residual(&self, nodes: &[RigidPose<T>]) -> T {
        let mut total = T::zero();
        for e in &self.edges {
            let r = edge_residual(e, &nodes[e.from], &nodes[e.to]);
            total += weighted_squared(&r, &e.information);
        }
        total
    }
}

fn edge_residual<T: Real>(
    edge: &PoseGraphEdge<T>,
    from: &RigidPose<T>,
    to: &RigidPose<T>,
) -> [T; 6] {
    let delta = edge
        .measurement
        .inverse()
        .compose(&from.inverse())
        .compose(to);
    let (rho, phi) = delta.log_se3();
    [rho.x, rho.y, rho.z, phi.x, phi.y, phi.z]
}

fn weighted_squared<T: Real>(r: &[T; 6], info: &[[T; 6]; 6]) -> T {
    let mut total = T::zero();
    for i in 0..6 {
        for j in 0..6 {
            total += r[i] * info[i][j] * r[j];
        }
    }
    total
}

/// Gauss-Newton with Levenberg damping over the pose manifold; node 0 is
/// held fixed as the gauge. Terminates on gradient infinity-norm < 1e-8 or
/// 100 iterations. Numerical (central difference) Jacobians.
pub fn optimize_pose_graph<T: Real>(graph: &PoseGraph<T>) -> Result<Vec<RigidPose<T>>, BuilderError> {
    graph.validate()?;
    let components = graph.connected_components();
    if components.len() > 1 {
        return Err(BuilderError::DisconnectedGraph(components));
    }
    let n = graph.nodes.len();
    if n <= 1 {
        return Ok(graph.nodes.clone());
    }
    let dof = 6 * (n - 1); // node 0 fixed
    let mut nodes = graph.nodes.clone();
    let h_step = T::of(1e-6).max(T::epsilon().sqrt());
    let mut damping = T::of(1e-8);
    let mut cost = graph.total_residual(&nodes);
    for _ in 0..100 {
        let mut h = SquareMat::zeros(dof);
        let mut g = vec![T::zero(); dof];
        for e in &graph.edges {
            let r0 = edge_residual(e, &nodes[e.from], &nodes[e.to]);
            // Jacobian columns for both endpoint nodes (skipping the gauge).
            let mut jac: Vec<(usize, [T; 6])> = Vec::with_capacity(12);
            for &(node, _is_from) in &[(e.from, true), (e.to, false)] {
                if node == 0 {
                    continue;
                }
                for k in 0..6 {
                    let mut plus = nodes.clone();
                    let mut minus = nodes.clone();
                    plus[node] = perturb(&nodes[node], k, h_step);
                    minus[node] = perturb(&nodes[node], k, -h_step);
                    let rp = edge_residual(e, &plus[e.from], &plus[e.to]);
                    let rm = edge_residual(e, &minus[e.from], &minus[e.to]);
                    let mut col = [T::zero(); 6];
                    for d in 0..6 {
                        col[d] = (rp[d] - rm[d]) / (T::of(2.0) * h_step);
                    }
                    jac.push((6 * (node - 1) + k, col));
                }
            }
            // H += J^T W J, g += J^T W r for this edge.
            let w = &e.information;
            let wr = apply_info(w, &r0);
            for &(col_a, ref ja) in &jac {
                let wja = apply_info(w, ja);
                for d in 0..6 {
                    g[col_a] += ja[d] * wr[d];
                }
                for &(col_b, ref jb) in &jac {
                    if col_b < col_a {
                        continue;
                    }
                    let mut acc = T::zero();
                    for d in 0..6 {
                        acc += jb[d] * wja[d];
                    }
                    h.add_at(col_a, col_b, acc);
                    if col_a != col_b {
                        h.add_at(col_b, col_a, acc);
                    }
                }
            }
        }
        let grad_inf = g.iter().fold(T::zero(), |a, &b| a.max(b.abs()));
        if grad_inf < T::of(1e-8) {
            break;
        }
        let rhs: Vec<T> = g.iter().map(|&v| -v).collect();
        let Some(delta) = damped_solve(&h, &rhs, damping) else {
            break;
        };
        // Tentative update, accepted only when the cost drops.
        let mut trial = nodes.clone();
        for node in 1..n {
            let base = 6 * (node - 1);
            let rho = Vec3::new(delta[base], delta[base + 1], delta[base + 2]);
            let phi = Vec3::new(delta[base + 3], delta[base + 4], delta[base + 5]);
            trial[node] = RigidPose::exp_se3(rho, phi).compose(&trial[node]);
        }
        let trial_cost = graph.total_residual(&trial);
        if trial_cost <= cost {
            let step: T = delta.iter().fold(T::zero(), |a, &b| a.max(b.abs()));
            nodes = trial;
            cost = trial_cost;
            damping = (damping * T::of(0.5)).max(T::of(1e-12));
            if step < T::of(1e-12) {
                break;
            }
        } else {
            damping = (damping * T::of(8.0)).min(T::of(1e6));
        }
    }
    Ok(nodes)
}

fn apply_info<T: Real>(info: &[[T; 6]; 6], v: &[T; 6]) -> [T; 6] {
    let mut out = [T::zero(); 6];
    for i in 0..6 {
        for j in 0..6 {
            out[i] += info[i][j] * v[j];
        }
    }
    out
}

fn perturb<T: Real>(pose: &RigidPose<T>, k: usize, step: T) -> RigidPose<T> {
    let mut rho = Vec3::zero();
    let mut phi = Vec3::zero();
    match k {
        0 => rho.x = step,
        1 => rho.y = step,
        2 => rho.z = step,
        3 => phi.x = step,
        4 => phi.y = step,
        _ => phi.z = step,
    }
    RigidPose::exp_se3(rho, phi).compose(pose)
}

/// Identity information scaled by a weight.
pub fn scaled_identity_information<T: Real>(w: T) -> [[T; 6]; 6] {
    let mut info = [[T::zero(); 6]; 6];
    for (i, row) in info.iter_mut().enumerate() {
        row[i] = w;
    }
    info
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn identity_info() -> [[f64; 6]; 6] {
        scaled_identity_information(1.0)
    }

    #[test]
    fn single_edge_two_nodes() {
        let meas = RigidPose::from_yaw(0.3, Vec3::new(1.0, 0.0, 0.0));
        let graph = PoseGraph {
            nodes: vec![RigidPose::identity(), RigidPose::identity()],
            edges: vec![PoseGraphEdge { from: 0, to: 1, measurement: meas, information: identity_info() }],
        };
        let out = optimize_pose_graph(&graph).unwrap();
        let want = graph.nodes[0].compose(&meas);
        assert!((out[1].translation - want.translation).norm() < 1e-7);
        assert!(out[1].rotation.transpose().mul_mat(&want.rotation).log_so3().norm() < 1e-7);
    }

    #[test]
    fn consistent_chain_stays_put() {
        // Nodes already satisfy the chained measurements: zero residual.
        let steps: Vec<RigidPose<f64>> = (0..5)
            .map(|i| RigidPose::from_yaw(0.1 * i as f64, Vec3::new(1.0, 0.1 * i as f64, 0.0)))
            .collect();
        let mut nodes = vec![RigidPose::identity()];
        for s in &steps {
            let last = *nodes.last().unwrap();
            nodes.push(last.compose(s));
        }
        let edges: Vec<PoseGraphEdge<f64>> = steps
            .iter()
            .enumerate()
            .map(|(i, s)| PoseGraphEdge {
                from: i,
                to: i + 1,
                measurement: *s,
                information: identity_info(),
            })
            .collect();
        let graph = PoseGraph { nodes: nodes.clone(), edges };
        assert!(graph.total_residual(&nodes) < 1e-12);
        let out = optimize_pose_graph(&graph).unwrap();
        assert!(graph.total_residual(&out) < 1e-12);
        for (a, b) in nodes.iter().zip(out.iter()) {
            assert!((a.translation - b.translation).norm() < 1e-9);
        }
    }

    #[test]
    fn loop_closure_beats_dead_reckoning() {
        let mut rng = StdRng::seed_from_u64(42);
        // Ground truth: 10 nodes around a yawing path.
        let mut truth = vec![RigidPose::<f64>::identity()];
        for i in 0..9 {
            let step = RigidPose::from_yaw(0.2, Vec3::new(1.0, 0.05 * i as f64, 0.0));
            let last = *truth.last().unwrap();
            truth.push(last.compose(&step));
        }
        // Noisy odometry chain.
        let mut edges = Vec::new();
        for i in 0..9 {
            let rel = truth[i].inverse().compose(&truth[i + 1]);
            let noise = RigidPose::exp_se3(
                Vec3::new(
                    rng.random_range(-0.05..0.05),
                    rng.random_range(-0.05..0.05),
                    rng.random_range(-0.05..0.05),
                ),
                Vec3::new(
                    rng.random_range(-0.02..0.02),
                    rng.random_range(-0.02..0.02),
                    rng.random_range(-0.02..0.02),
                ),
            );
            edges.push(PoseGraphEdge {
                from: i,
                to: i + 1,
                measurement: rel.compose(&noise),
                information: identity_info(),
            });
        }
        // Exact loop closure 0 -> 9 with strong information.
        edges.push(PoseGraphEdge {
            from: 0,
            to: 9,
            measurement: truth[0].inverse().compose(&truth[9]),
            information: scaled_identity_information(100.0),
        });
        // Init: dead reckoning along the noisy chain.
        let mut dead = vec![RigidPose::identity()];
        for e in edges.iter().take(9) {
            let last = *dead.last().unwrap();
            dead.push(last.compose(&e.measurement));
        }
        let graph = PoseGraph { nodes: dead.clone(), edges };
        let initial_residual = graph.total_residual(&dead);
        let out = optimize_pose_graph(&graph).unwrap();
        let final_residual = graph.total_residual(&out);
        assert!(final_residual < initial_residual);
        let rmse = |poses: &[RigidPose<f64>]| {
            let mut acc = 0.0;
            for (p, t) in poses.iter().zip(truth.iter()) {
                acc += (p.translation - t.translation).norm_squared();
            }
            (acc / poses.len() as f64).sqrt()
        };
        assert!(
            rmse(&out) < rmse(&dead),
            "optimized {} vs dead-reckoning {}",
            rmse(&out),
            rmse(&dead)
        );
    }

    #[test]
    fn disconnected_graph_lists_components() {
        let graph = PoseGraph::<f64> {
            nodes: vec![RigidPose::identity(); 4],
            edges: vec![
                PoseGraphEdge {
                    from: 0,
                    to: 1,
                    measurement: RigidPose::identity(),
                    information: identity_info(),
                },
                PoseGraphEdge {
                    from: 2,
                    to: 3,
                    measurement: RigidPose::identity(),
                    information: identity_info(),
                },
            ],
        };
        match optimize_pose_graph(&graph) {
            Err(BuilderError::DisconnectedGraph(components)) => {
                assert_eq!(components.len(), 2);
            }
            other => panic!("expected disconnected error, got {other:?}"),
        }
    }
}
