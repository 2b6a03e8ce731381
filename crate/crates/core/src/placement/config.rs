//! Placement configuration and the observed-sides record.

use serde::{Deserialize, Serialize};

use crate::scalar::Real;
use crate::scene::ObjectClass;

/// Which sides of the object faced the camera in its source image. A pasted
/// object must never expose a side that was concealed there.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservedSides {
    /// True when the front (local +x) faced the camera.
    pub front_observed: bool,
    /// True when the left (local +y) faced the camera.
    pub left_observed: bool,
}

/// Knobs of the rejection sampler. Defaults follow the reference setup:
/// distortion cap 1.5, class mix car 0.5 / pedestrian 0.25 / cyclist 0.25,
/// at most five pasted objects per frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Serialize",
    deserialize = "T: serde::de::DeserializeOwned"
))]
pub struct PlacementConfig<T> {
    /// Cap on the ratio of pasted-to-source projected box side lengths.
    pub d_max: T,
    /// Uniform scale range `[lo, hi]` applied to pasted objects.
    pub scale_range: (T, T),
    /// Minimum ground points under a candidate box.
    pub min_ground_points: usize,
    /// Maximum ground height standard deviation (meters).
    pub max_ground_height_std: T,
    pub max_attempts_per_object: usize,
    pub max_objects_per_frame: usize,
    /// Sampling distribution over classes; probabilities sum to 1.
    pub class_distribution: Vec<(ObjectClass, T)>,
    /// Proposal depth range along the camera axis (meters).
    pub depth_range: (T, T),
    /// BEV footprint expansion when collecting ground points (meters).
    pub footprint_expand: T,
    /// Foreground points tolerated before an occlusion rejection.
    pub max_foreground_points: usize,
    /// Range margin for the foreground occlusion test (meters).
    pub occlusion_range_margin: T,
    /// Image-rectangle IoU above which a farther box counts as "behind".
    pub behind_iou: T,
    /// BEV radius cap of proposals (LiDAR range, meters).
    pub max_bev_radius: T,
    /// Points closer to the ground estimate than this are treated as ground
    /// by the occlusion test (meters).
    pub ground_band: T,
}

impl<T: Real> Default for PlacementConfig<T> {
    fn default() -> Self {
        Self {
            d_max: T::of(1.5),
            scale_range: (T::of(0.95), T::of(1.05)),
            min_ground_points: 8,
            max_ground_height_std: T::of(0.15),
            max_attempts_per_object: 30,
            max_objects_per_frame: 5,
            class_distribution: vec![
                (ObjectClass::Car, T::of(0.5)),
                (ObjectClass::Pedestrian, T::of(0.25)),
                (ObjectClass::Cyclist, T::of(0.25)),
            ],
            depth_range: (T::of(4.0), T::of(60.0)),
            footprint_expand: T::of(0.2),
            max_foreground_points: 5,
            occlusion_range_margin: T::of(0.5),
            behind_iou: T::of(0.3),
            max_bev_radius: T::of(70.0),
            ground_band: T::of(0.3),
        }
    }
}

impl<T: Real> PlacementConfig<T> {
    pub fn validate(&self) -> Result<(), crate::placement::PlacementError> {
        use crate::placement::PlacementError::InvalidConfig;
        if !(self.d_max > T::one()) {
            return Err(InvalidConfig("d_max must exceed 1"));
        }
        let (lo, hi) = self.scale_range;
        if !(lo > T::zero() && hi >= lo) {
            return Err(InvalidConfig("scale_range must satisfy 0 < lo <= hi"));
        }
        let sum: T = self
            .class_distribution
            .iter()
            .fold(T::zero(), |acc, (_, p)| acc + *p);
        if (sum - T::one()).abs() > T::of(1e-6) {
            return Err(InvalidConfig("class probabilities must sum to 1"));
        }
        if self.class_distribution.iter().any(|(_, p)| *p < T::zero()) {
            return Err(InvalidConfig("class probabilities must be nonnegative"));
        }
        if !(self.depth_range.0 > T::zero() && self.depth_range.1 > self.depth_range.0) {
            return Err(InvalidConfig("depth_range must be increasing and positive"));
        }
        Ok(())
    }
}
