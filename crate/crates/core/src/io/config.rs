//! Run configuration: a JSON document with placement thresholds, sensor
//! settings, render knobs and seeds. Unknown keys are rejected and error
//! messages are path-qualified.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::impaste::render::RenderConfig;
use crate::io::IoError;
use crate::placement::config::PlacementConfig;
use crate::scene::ObjectClass;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct PlacementSection {
    pub d_max: f64,
    pub scale_range: (f64, f64),
    pub min_ground_points: usize,
    pub max_ground_height_std: f64,
    pub max_attempts_per_object: usize,
    pub max_objects_per_frame: usize,
    /// Class name -> probability; must sum to 1.
    pub class_distribution: BTreeMap<String, f64>,
    pub depth_range: (f64, f64),
    pub footprint_expand: f64,
    pub max_foreground_points: usize,
    pub occlusion_range_margin: f64,
    pub behind_iou: f64,
    pub max_bev_radius: f64,
    pub ground_band: f64,
}

impl Default for PlacementSection {
    fn default() -> Self {
        let cfg = PlacementConfig::<f64>::default();
        let mut class_distribution = BTreeMap::new();
        for (class, p) in &cfg.class_distribution {
            class_distribution.insert(class.name().to_string(), *p);
        }
        Self {
            d_max: cfg.d_max,
            scale_range: cfg.scale_range,
            min_ground_points: cfg.min_ground_points,
            max_ground_height_std: cfg.max_ground_height_std,
            max_attempts_per_object: cfg.max_attempts_per_object,
            max_objects_per_frame: cfg.max_objects_per_frame,
            class_distribution,
            depth_range: cfg.depth_range,
            footprint_expand: cfg.footprint_expand,
            max_foreground_points: cfg.max_foreground_points,
            occlusion_range_margin: cfg.occlusion_range_margin,
            behind_iou: cfg.behind_iou,
            max_bev_radius: cfg.max_bev_radius,
            ground_band: cfg.ground_band,
        }
    }
}

impl PlacementSection {
    pub fn to_placement_config(&self) -> Result<PlacementConfig<f64>, IoError> {
        let mut class_distribution = Vec::new();
        for (name, p) in &self.class_distribution {
            let class = match name.as_str() {
                "car" => ObjectClass::Car,
                "pedestrian" => ObjectClass::Pedestrian,
                "cyclist" => ObjectClass::Cyclist,
                other => {
                    return Err(IoError::Config(format!(
                        "placement.class_distribution: unknown class '{other}'"
                    )))
                }
            };
            class_distribution.push((class, *p));
        }
        let cfg = PlacementConfig {
            d_max: self.d_max,
            scale_range: self.scale_range,
            min_ground_points: self.min_ground_points,
            max_ground_height_std: self.max_ground_height_std,
            max_attempts_per_object: self.max_attempts_per_object,
            max_objects_per_frame: self.max_objects_per_frame,
            class_distribution,
            depth_range: self.depth_range,
            footprint_expand: self.footprint_expand,
            max_foreground_points: self.max_foreground_points,
            occlusion_range_margin: self.occlusion_range_margin,
            behind_iou: self.behind_iou,
            max_bev_radius: self.max_bev_radius,
            ground_band: self.ground_band,
        };
        cfg.validate()
            .map_err(|e| IoError::Config(format!("placement: {e}")))?;
        Ok(cfg)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct RenderSection {
    pub p_blur: f64,
    pub sigma_range: (f64, f64),
}

impl Default for RenderSection {
    fn default() -> Self {
        let cfg = RenderConfig::default();
        Self { p_blur: cfg.p_blur, sigma_range: cfg.sigma_range }
    }
}

impl RenderSection {
    pub fn to_render_config(&self) -> Result<RenderConfig, IoError> {
        if !(0.0..=1.0).contains(&self.p_blur) {
            return Err(IoError::Config("render.p_blur must be in [0, 1]".into()));
        }
        if self.sigma_range.0 > self.sigma_range.1 || self.sigma_range.0 < 0.0 {
            return Err(IoError::Config("render.sigma_range must be ordered and nonnegative".into()));
        }
        Ok(RenderConfig { p_blur: self.p_blur, sigma_range: self.sigma_range })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct LidarSection {
    /// Radians per firing; default approximates an HDL-64E S2 at 10 Hz.
    pub azimuth_step: f64,
    /// Arbitrary positive ray length `d` (meters).
    pub ray_length: f64,
    /// Optional laser intrinsics table; identity HDL-64 grid otherwise.
    pub intrinsics_path: Option<PathBuf>,
}

impl Default for LidarSection {
    fn default() -> Self {
        Self {
            azimuth_step: 2.0 * std::f64::consts::PI
                / crate::lidar::DEFAULT_AZIMUTH_STEPS_PER_REV as f64,
            ray_length: crate::lidar::DEFAULT_RAY_LENGTH_M,
            intrinsics_path: None,
        }
    }
}

/// The full engine configuration document.
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub placement: PlacementSection,
    pub render: RenderSection,
    pub lidar: LidarSection,
    /// Cut-object database root (CLI flags may override).
    pub database: Option<PathBuf>,
}

/// Parses the run configuration; an empty/whitespace document yields all
/// defaults. Unknown keys are rejected with a path-qualified message.
pub fn load_run_config(text: &str) -> Result<RunConfig, IoError> {
    if text.trim().is_empty() {
        return Ok(RunConfig::default());
    }
    let deserializer = &mut serde_json::Deserializer::from_str(text);
    let cfg: RunConfig = serde_path_to_error::deserialize(deserializer)
        .map_err(|e| IoError::Config(format!("{}: {}", e.path(), e.inner())))?;
    // Surface section-level validation early.
    cfg.placement.to_placement_config()?;
    cfg.render.to_render_config()?;
    if cfg.lidar.azimuth_step <= 0.0 || cfg.lidar.ray_length <= 0.0 {
        return Err(IoError::Config("lidar: azimuth_step and ray_length must be positive".into()));
    }
    Ok(cfg)
}
