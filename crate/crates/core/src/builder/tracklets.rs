//! Track construction: frame-to-frame label association with the Hungarian
//! algorithm over a center-distance + size-agreement cost.

use crate::geom::RigidPose;
use crate::math::Vec3;
use crate::placement::bbox::{BoundingBox3D, BoxDims};
use crate::scalar::Real;
use crate::scene::ObjectClass;

/// Weight of the L1 dims disagreement in the matching cost.
pub const SIZE_WEIGHT: f64 = 2.0;
/// Center-distance gate per labeled-frame step (meters).
pub const GATE_DIST_PER_STEP: f64 = 2.0;

/// What the matcher sees of one labeled box.
#[derive(Clone, Copy, Debug)]
pub struct BoxDescriptor<T> {
    pub class: ObjectClass,
    pub center: Vec3<T>,
    pub dims: BoxDims<T>,
}

/// Matching cost between two world-frame boxes; `None` when infeasible
/// (class mismatch or gated by distance).
pub fn assignment_cost<T: Real>(
    a: &BoxDescriptor<T>,
    b: &BoxDescriptor<T>,
    gate_dist: T,
    size_weight: T,
) -> Option<T> {
    if a.class != b.class {
        return None;
    }
    let d_center = a.center.distance(b.center);
    if d_center > gate_dist {
        return None;
    }
    let d_dims = (a.dims.length - b.dims.length).abs()
        + (a.dims.width - b.dims.width).abs()
        + (a.dims.height - b.dims.height).abs();
    Some(d_center + size_weight * d_dims)
}

/// Minimum-cost assignment over feasible entries with unmatched rows and
/// columns allowed (maximum cardinality first, then minimum total cost).
///
/// Classic O(n^3) potentials formulation on the square-padded matrix;
/// infeasible entries carry a large sentinel and are stripped afterwards.
pub fn hungarian<T: Real>(cost: &[Vec<Option<T>>]) -> Vec<(usize, usize)> {
    let n_rows = cost.len();
    let n_cols = cost.iter().map(|r| r.len()).max().unwrap_or(0);
    if n_rows == 0 || n_cols == 0 {
        return Vec::new();
    }
    let k = n_rows.max(n_cols);
    let big = T::of(1e12);
    let at = |i: usize, j: usize| -> T {
        if i < n_rows && j < n_cols {
            cost[i].get(j).copied().flatten().unwrap_or(big)
        } else {
            T::zero() // dummy row/column
        }
    };
    // Potentials-based Hungarian over a (k+1)-indexed workspace.
    let mut u = vec![T::zero(); k + 1];
    let mut v = vec![T::zero(); k + 1];
    let mut p = vec![0usize; k + 1]; // p[j] = row matched to column j
    let mut way = vec![0usize; k + 1];
    for i in 1..=k {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![T::infinity(); k + 1];
        let mut used = vec![false; k + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = T::infinity();
            let mut j1 = 0usize;
            for j in 1..=k {
                if used[j] {
                    continue;
                }
                let cur = at(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=k {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        // Augment along the alternating path.
        while j0 != 0 {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        }
    }
    let mut out = Vec::new();
    for j in 1..=k {
        let i = p[j];
        if i == 0 {
            continue;
        }
        let (row, col) = (i - 1, j - 1);
        if row < n_rows && col < n_cols && cost[row].get(col).copied().flatten().is_some() {
            out.push((row, col));
        }
    }
    out.sort_unstable();
    out
}

/// One appearance of a tracked object.
#[derive(Clone, Copy, Debug)]
pub struct TrackObservation<T> {
    /// Raw frame index within the sequence.
    pub frame_index: usize,
    /// Index of the label row within that frame (mask lookup key).
    pub label_index: usize,
    pub bbox_world: BoundingBox3D<T>,
    /// KITTI occlusion flag; 0 = fully visible.
    pub occlusion: u8,
    pub truncation: f64,
}

/// A tracked object across labeled frames; frame indices strictly increase
/// and the class is constant by construction.
#[derive(Clone, Debug)]
pub struct Tracklet<T> {
    pub sequence: String,
    pub object_id: u32,
    pub class: ObjectClass,
    /// Element-wise median over the observations (rigid objects keep
    /// constant dimensions; the median damps label jitter).
    pub dims: BoxDims<T>,
    pub observations: Vec<TrackObservation<T>>,
}

/// Chosen source frame of a cut object.
#[derive(Clone, Copy, Debug)]
pub struct SourceObservation<T> {
    pub frame_index: usize,
    /// Index into `SequenceData::frames`.
    pub sequence_frame: usize,
    pub label_index: usize,
    /// Object frame -> sensor frame of the source scan (H0).
    pub object_to_sensor: RigidPose<T>,
    /// Box yaw in the sensor frame.
    pub yaw: T,
}

impl<T: Real> Tracklet<T> {
    pub fn id_string(&self) -> String {
        format!("{}_{:04}", self.sequence, self.object_id)
    }

    /// World-frame pose of the box at an observation (yaw about +z).
    pub fn observation_pose(obs: &TrackObservation<T>) -> RigidPose<T> {
        RigidPose::from_yaw(obs.bbox_world.yaw, obs.bbox_world.center)
    }

    /// Picks the source frame: the fully visible, untruncated observation
    /// with the largest projected image area.
    pub fn source_observation(
        &self,
        seq: &crate::builder::cut_object::SequenceData<T>,
        rig: &crate::impaste::camera::CameraRig<T>,
    ) -> Option<SourceObservation<T>> {
        let mut best: Option<(T, SourceObservation<T>)> = None;
        for obs in &self.observations {
            if obs.occlusion != 0 || obs.truncation > 0.01 {
                continue;
            }
            let seq_frame = seq
                .frames
                .iter()
                .position(|f| f.scan.frame_index == obs.frame_index)?;
            let lidar_pose = seq.frames[seq_frame].scan.lidar_pose;
            let world_pose = Self::observation_pose(obs);
            let object_to_sensor = lidar_pose.inverse().compose(&world_pose);
            let yaw = object_to_sensor.rotation.log_so3().z;
            let sensor_box =
                BoundingBox3D::new(object_to_sensor.translation, self.dims, yaw);
            let Some(rect) = sensor_box.image_rect(rig) else {
                continue;
            };
            let area = rect.area();
            let candidate = SourceObservation {
                frame_index: obs.frame_index,
                sequence_frame: seq_frame,
                label_index: obs.label_index,
                object_to_sensor,
                yaw,
            };
            if best.as_ref().map_or(true, |(a, _)| area > *a) {
                best = Some((area, candidate));
            }
        }
        best.map(|(_, s)| s)
    }
}

/// Per-frame labeled boxes (world frame) as fed to the track builder.
#[derive(Clone, Debug)]
pub struct FrameLabels<T> {
    pub frame_index: usize,
    pub boxes: Vec<LabeledWorldBox<T>>,
}

#[derive(Clone, Copy, Debug)]
pub struct LabeledWorldBox<T> {
    pub label_index: usize,
    pub class: ObjectClass,
    pub bbox: BoundingBox3D<T>,
    pub occlusion: u8,
    pub truncation: f64,
}

/// Greedy frame-to-frame association: Hungarian matching between the open
/// tracks' last boxes and the next labeled frame, gated by distance scaled
/// with the raw-frame gap.
pub fn build_tracklets<T: Real>(sequence: &str, frames: &[FrameLabels<T>]) -> Vec<Tracklet<T>> {
    struct Open<T> {
        object_id: u32,
        class: ObjectClass,
        observations: Vec<TrackObservation<T>>,
        last_frame: usize,
        last_box: BoundingBox3D<T>,
    }
    let mut open: Vec<Open<T>> = Vec::new();
    let mut next_id = 0u32;
    for frame in frames {
        let rows: Vec<BoxDescriptor<T>> = open
            .iter()
            .map(|t| BoxDescriptor { class: t.class, center: t.last_box.center, dims: t.last_box.dims })
            .collect();
        let cols: Vec<BoxDescriptor<T>> = frame
            .boxes
            .iter()
            .map(|b| BoxDescriptor { class: b.class, center: b.bbox.center, dims: b.bbox.dims })
            .collect();
        let mut cost = vec![vec![None; cols.len()]; rows.len()];
        for (i, row) in rows.iter().enumerate() {
            let gap = (frame.frame_index - open[i].last_frame).max(1);
            let gate = T::of(GATE_DIST_PER_STEP) * T::of_usize(gap);
            for (j, col) in cols.iter().enumerate() {
                cost[i][j] = assignment_cost(row, col, gate, T::of(SIZE_WEIGHT));
            }
        }
        let matches = hungarian(&cost);
        let mut matched_cols = vec![false; cols.len()];
        for (i, j) in matches {
            matched_cols[j] = true;
            let b = &frame.boxes[j];
            open[i].observations.push(TrackObservation {
                frame_index: frame.frame_index,
                label_index: b.label_index,
                bbox_world: b.bbox,
                occlusion: b.occlusion,
                truncation: b.truncation,
            });
            open[i].last_frame = frame.frame_index;
            open[i].last_box = b.bbox;
        }
        for (j, b) in frame.boxes.iter().enumerate() {
            if matched_cols[j] {
                continue;
            }
            open.push(Open {
                object_id: next_id,
                class: b.class,
                observations: vec![TrackObservation {
                    frame_index: frame.frame_index,
                    label_index: b.label_index,
                    bbox_world: b.bbox,
                    occlusion: b.occlusion,
                    truncation: b.truncation,
                }],
                last_frame: frame.frame_index,
                last_box: b.bbox,
            });
            next_id += 1;
        }
    }
    open.sort_by_key(|t| t.object_id);
    open.into_iter()
        .map(|t| {
            let dims = median_dims(&t.observations);
            Tracklet {
                sequence: sequence.to_string(),
                object_id: t.object_id,
                class: t.class,
                dims,
                observations: t.observations,
            }
        })
        .collect()
}

fn median_dims<T: Real>(obs: &[TrackObservation<T>]) -> BoxDims<T> {
    let med = |f: fn(&BoxDims<T>) -> T| -> T {
        let mut vs: Vec<T> = obs.iter().map(|o| f(&o.bbox_world.dims)).collect();
        vs.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        vs[vs.len() / 2]
    };
    BoxDims::new(med(|d| d.length), med(|d| d.width), med(|d| d.height))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn desc(class: ObjectClass, center: [f64; 3], dims: [f64; 3]) -> BoxDescriptor<f64> {
        BoxDescriptor {
            class,
            center: Vec3::new(center[0], center[1], center[2]),
            dims: BoxDims::new(dims[0], dims[1], dims[2]),
        }
    }

    #[test]
    fn identical_boxes_cost_zero() {
        let a = desc(ObjectClass::Car, [1.0, 2.0, 0.0], [4.0, 1.8, 1.5]);
        assert_eq!(assignment_cost(&a, &a, 2.0, 2.0), Some(0.0));
    }

    #[test]
    fn class_mismatch_is_infeasible() {
        let a = desc(ObjectClass::Car, [0.0; 3], [4.0, 1.8, 1.5]);
        let b = desc(ObjectClass::Pedestrian, [0.0; 3], [4.0, 1.8, 1.5]);
        assert_eq!(assignment_cost(&a, &b, 2.0, 2.0), None);
    }

    #[test]
    fn formula_case() {
        // |dc| = 5, L1 dims delta = 0.2, w = 2 -> 5.4 (gate widened to pass).
        let a = desc(ObjectClass::Car, [0.0, 0.0, 0.0], [4.0, 1.8, 1.5]);
        let b = desc(ObjectClass::Car, [3.0, 4.0, 0.0], [4.1, 1.9, 1.5]);
        let c = assignment_cost(&a, &b, 10.0, 2.0).unwrap();
        assert!((c - 5.4).abs() < 1e-12);
        // Gated out at 2 m.
        assert_eq!(assignment_cost(&a, &b, 2.0, 2.0), None);
    }

    #[test]
    fn hungarian_identity_diagonal() {
        let cost: Vec<Vec<Option<f64>>> = (0..4)
            .map(|i| (0..4).map(|j| Some(if i == j { 0.0 } else { 10.0 })).collect())
            .collect();
        let m = hungarian(&cost);
        assert_eq!(m, vec![(0, 0), (1, 1), (2, 2), (3, 3)]);
    }

    #[test]
    fn hungarian_single_feasible() {
        let m = hungarian(&[vec![Some(3.0f64)]]);
        assert_eq!(m, vec![(0, 0)]);
        let empty = hungarian::<f64>(&[vec![None]]);
        assert!(empty.is_empty());
    }

    fn brute_force_min_cost(cost: &[Vec<Option<f64>>]) -> f64 {
        // All permutations of a square all-feasible matrix.
        let n = cost.len();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut best = f64::INFINITY;
        fn rec(perm: &mut Vec<usize>, k: usize, cost: &[Vec<Option<f64>>], best: &mut f64) {
            let n = perm.len();
            if k == n {
                let total: f64 = (0..n).map(|i| cost[i][perm[i]].unwrap()).sum();
                *best = best.min(total);
                return;
            }
            for i in k..n {
                perm.swap(k, i);
                rec(perm, k + 1, cost, best);
                perm.swap(k, i);
            }
        }
        rec(&mut perm, 0, cost, &mut best);
        best
    }

    #[test]
    fn hungarian_matches_permutation_minimum() {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(77);
        for _ in 0..100 {
            let cost: Vec<Vec<Option<f64>>> = (0..5)
                .map(|_| (0..5).map(|_| Some(rng.random_range(0.0..100.0))).collect())
                .collect();
            let m = hungarian(&cost);
            assert_eq!(m.len(), 5);
            let total: f64 = m.iter().map(|&(i, j)| cost[i][j].unwrap()).sum();
            let want = brute_force_min_cost(&cost);
            assert!((total - want).abs() < 1e-9, "{total} vs {want}");
        }
    }

    #[test]
    fn rectangular_leaves_rows_unmatched() {
        // 3 rows, 2 columns: one row stays unmatched.
        let cost: Vec<Vec<Option<f64>>> = vec![
            vec![Some(1.0), Some(9.0)],
            vec![Some(9.0), Some(1.0)],
            vec![Some(5.0), Some(5.0)],
        ];
        let m = hungarian(&cost);
        assert_eq!(m, vec![(0, 0), (1, 1)]);
    }

    #[test]
    fn tracklets_follow_a_moving_box() {
        let mk = |frame: usize, x: f64| FrameLabels {
            frame_index: frame,
            boxes: vec![LabeledWorldBox {
                label_index: 0,
                class: ObjectClass::Car,
                bbox: BoundingBox3D::new(Vec3::new(x, 0.0, 0.0), BoxDims::new(4.0, 1.8, 1.5), 0.0),
                occlusion: 0,
                truncation: 0.0,
            }],
        };
        let frames = vec![mk(0, 0.0), mk(1, 1.0), mk(2, 2.1)];
        let tracks = build_tracklets("seq0", &frames);
        assert_eq!(tracks.len(), 1);
        assert_eq!(tracks[0].observations.len(), 3);
        assert_eq!(tracks[0].id_string(), "seq0_0000");
    }

    #[test]
    fn far_jump_starts_a_new_track() {
        let mk = |frame: usize, x: f64| FrameLabels {
            frame_index: frame,
            boxes: vec![LabeledWorldBox {
                label_index: 0,
                class: ObjectClass::Car,
                bbox: BoundingBox3D::new(Vec3::new(x, 0.0, 0.0), BoxDims::new(4.0, 1.8, 1.5), 0.0),
                occlusion: 0,
                truncation: 0.0,
            }],
        };
        let tracks = build_tracklets("seq0", &[mk(0, 0.0), mk(1, 50.0)]);
        assert_eq!(tracks.len(), 2);
    }
}
