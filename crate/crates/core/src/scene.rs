//! One frame of sensor data: point cloud, image, calibration and labels.

use serde::{Deserialize, Serialize};

use crate::impaste::camera::CameraRig;
use crate::impaste::image::ImageBuf;
use crate::lidar::{PointCloud, ScanPattern};
use crate::placement::bbox::BoundingBox3D;
use crate::scalar::Real;

/// Object categories the sampler draws from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectClass {
    Car,
    Pedestrian,
    Cyclist,
}

impl ObjectClass {
    pub const ALL: [ObjectClass; 3] = [ObjectClass::Car, ObjectClass::Pedestrian, ObjectClass::Cyclist];

    /// Rigid classes get multi-scan accumulation; deformable ones a single scan.
    pub fn is_rigid(self) -> bool {
        matches!(self, ObjectClass::Car)
    }

    pub fn name(self) -> &'static str {
        match self {
            ObjectClass::Car => "car",
            ObjectClass::Pedestrian => "pedestrian",
            ObjectClass::Cyclist => "cyclist",
        }
    }

    /// Parses KITTI label type strings; unmapped categories return `None`.
    pub fn from_kitti(s: &str) -> Option<Self> {
        match s {
            "Car" => Some(ObjectClass::Car),
            "Pedestrian" => Some(ObjectClass::Pedestrian),
            "Cyclist" => Some(ObjectClass::Cyclist),
            _ => None,
        }
    }

    pub fn to_kitti(self) -> &'static str {
        match self {
            ObjectClass::Car => "Car",
            ObjectClass::Pedestrian => "Pedestrian",
            ObjectClass::Cyclist => "Cyclist",
        }
    }
}

/// A labeled box in the sensor frame.
#[derive(Clone, Copy, Debug)]
pub struct SceneBox<T> {
    pub class: ObjectClass,
    pub bbox: BoundingBox3D<T>,
}

/// One frame: cloud and boxes live in the LiDAR/sensor frame; the rig
/// projects sensor-frame points into the image.
#[derive(Clone, Debug)]
pub struct Scene<T> {
    pub cloud: PointCloud<T>,
    pub image: ImageBuf<T>,
    pub camera: CameraRig<T>,
    pub scan: ScanPattern<T>,
    pub boxes: Vec<SceneBox<T>>,
}

impl<T: Real> Scene<T> {
    pub fn existing_boxes(&self) -> Vec<BoundingBox3D<T>> {
        self.boxes.iter().map(|b| b.bbox).collect()
    }
}
