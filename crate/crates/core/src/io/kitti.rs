//! KITTI-format ingestion: calibration (object and raw dialects), velodyne
//! binaries, object labels, GPS/IMU records, timestamps.

use crate::geom::RigidPose;
use crate::impaste::camera::{CameraModel, CameraRig};
use crate::io::IoError;
use crate::lidar::PointCloud;
use crate::math::{Mat3, Vec3};
use crate::placement::bbox::{BoundingBox3D, BoxDims};
use crate::scalar::Real;
use crate::scene::ObjectClass;

/// Calibration of one frame/sequence: rectified camera projection,
/// rectification rotation and the velodyne-to-camera rigid transform.
#[derive(Clone, Debug)]
pub struct FrameCalibration<T> {
    /// 3x4 projection of the left color camera (pixels).
    pub p2: [[T; 4]; 3],
    pub r0_rect: Mat3<T>,
    /// 3x4 rigid transform, velodyne frame to camera frame.
    pub tr_velo_to_cam: [[T; 4]; 3],
}

impl<T: Real> FrameCalibration<T> {
    /// Identity calibration (fixtures).
    pub fn identity() -> Self {
        let z = T::zero();
        let o = T::one();
        Self {
            p2: [[o, z, z, z], [z, o, z, z], [z, z, o, z]],
            r0_rect: Mat3::identity(),
            tr_velo_to_cam: [[o, z, z, z], [z, o, z, z], [z, z, o, z]],
        }
    }

    /// Sensor (velodyne) -> rectified camera pose; the shipped `R0_rect` is
    /// orthonormal only to ~1e-4, so the rotation is re-orthonormalized.
    pub fn velo_to_rect_cam(&self) -> RigidPose<T> {
        let tr_rot = Mat3::from_rows(
            [self.tr_velo_to_cam[0][0], self.tr_velo_to_cam[0][1], self.tr_velo_to_cam[0][2]],
            [self.tr_velo_to_cam[1][0], self.tr_velo_to_cam[1][1], self.tr_velo_to_cam[1][2]],
            [self.tr_velo_to_cam[2][0], self.tr_velo_to_cam[2][1], self.tr_velo_to_cam[2][2]],
        );
        let tr_t = Vec3::new(
            self.tr_velo_to_cam[0][3],
            self.tr_velo_to_cam[1][3],
            self.tr_velo_to_cam[2][3],
        );
        let rot = self.r0_rect.mul_mat(&tr_rot).orthonormalized();
        let t = self.r0_rect.mul_vec(tr_t);
        RigidPose::new(rot, t)
    }

    /// Full camera rig for a given image size.
    pub fn camera_rig(&self, width: u32, height: u32) -> Result<CameraRig<T>, IoError> {
        let model = CameraModel::new(self.p2, width, height)
            .map_err(|e| IoError::Calib(format!("bad P2: {e}")))?;
        Ok(CameraRig::new(model, self.velo_to_rect_cam()))
    }

    /// Maps a rectified-camera-frame point into the sensor frame.
    pub fn cam_to_velo_point(&self, p: Vec3<T>) -> Vec3<T> {
        self.velo_to_rect_cam().inverse().transform_point(p)
    }
}

fn parse_floats(value: &str, key: &str, arity: usize) -> Result<Vec<f64>, IoError> {
    let fields: Vec<&str> = value.split_whitespace().collect();
    if fields.len() != arity {
        return Err(IoError::Calib(format!(
            "key {key}: expected {arity} values, found {}",
            fields.len()
        )));
    }
    fields
        .iter()
        .map(|f| {
            f.parse::<f64>()
                .map_err(|_| IoError::Calib(format!("key {key}: malformed float '{f}'")))
        })
        .collect()
}

/// Parses a KITTI calibration text. Auto-detects the dialect by key
/// presence: object benchmark (`P2`, `R0_rect`, `Tr_velo_to_cam`) or raw
/// (`P_rect_02`, `R_rect_00`, and the velodyne `R` + `T` pair).
pub fn parse_calib<T: Real>(text: &str) -> Result<FrameCalibration<T>, IoError> {
    let mut map: std::collections::BTreeMap<String, String> = Default::default();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once(':') else {
            // Raw velo_to_cam files may use "key value..." without a colon.
            if let Some((key, value)) = line.split_once(' ') {
                map.insert(key.trim().to_string(), value.trim().to_string());
            }
            continue;
        };
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    let get = |keys: &[&str]| -> Option<(String, String)> {
        keys.iter()
            .find_map(|k| map.get(*k).map(|v| (k.to_string(), v.clone())))
    };
    let to34 = |v: &[f64]| -> [[T; 4]; 3] {
        let mut out = [[T::zero(); 4]; 3];
        for r in 0..3 {
            for c in 0..4 {
                out[r][c] = T::of(v[r * 4 + c]);
            }
        }
        out
    };
    let (p2_key, p2_value) = get(&["P2", "P_rect_02"]).ok_or_else(|| {
        IoError::Calib("missing key P2 (object dialect) / P_rect_02 (raw dialect)".into())
    })?;
    let p2 = to34(&parse_floats(&p2_value, &p2_key, 12)?);

    let r0_rect = match get(&["R0_rect", "R_rect_00"]) {
        Some((key, value)) => {
            let v = parse_floats(&value, &key, 9)?;
            Mat3::from_rows(
                [T::of(v[0]), T::of(v[1]), T::of(v[2])],
                [T::of(v[3]), T::of(v[4]), T::of(v[5])],
                [T::of(v[6]), T::of(v[7]), T::of(v[8])],
            )
        }
        None => return Err(IoError::Calib("missing key R0_rect / R_rect_00".into())),
    };

    let tr_velo_to_cam = if let Some((key, value)) = get(&["Tr_velo_to_cam", "Tr_velo_cam"]) {
        to34(&parse_floats(&value, &key, 12)?)
    } else if map.contains_key("R") && map.contains_key("T") {
        let r = parse_floats(&map["R"], "R", 9)?;
        let t = parse_floats(&map["T"], "T", 3)?;
        let mut out = [[T::zero(); 4]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = T::of(r[i * 3 + j]);
            }
            out[i][3] = T::of(t[i]);
        }
        out
    } else {
        return Err(IoError::Calib("missing key Tr_velo_to_cam".into()));
    };

    Ok(FrameCalibration { p2, r0_rect, tr_velo_to_cam })
}

/// Reads a KITTI velodyne binary: little-endian f32 quadruples
/// `(x, y, z, intensity)`, intensity clamped into [0, 1].
pub fn read_point_cloud<T: Real>(bytes: &[u8]) -> Result<PointCloud<T>, IoError> {
    if bytes.len() % 16 != 0 {
        return Err(IoError::Velodyne(format!(
            "buffer length {} not divisible by 16",
            bytes.len()
        )));
    }
    let n = bytes.len() / 16;
    let mut cloud = PointCloud::with_capacity(n);
    for i in 0..n {
        let f = |k: usize| {
            let o = i * 16 + k * 4;
            f32::from_le_bytes([bytes[o], bytes[o + 1], bytes[o + 2], bytes[o + 3]])
        };
        let p = Vec3::new(T::of(f(0) as f64), T::of(f(1) as f64), T::of(f(2) as f64));
        let intensity = T::of(f(3) as f64).clamped(T::zero(), T::one());
        cloud.push(p, intensity);
    }
    Ok(cloud)
}

/// Writes the KITTI velodyne binary format.
pub fn write_point_cloud<T: Real>(cloud: &PointCloud<T>) -> Vec<u8> {
    let mut out = Vec::with_capacity(cloud.len() * 16);
    for i in 0..cloud.len() {
        let p = cloud.points[i];
        for c in [p.x, p.y, p.z, cloud.intensity[i]] {
            out.extend_from_slice(&(c.as_f64() as f32).to_le_bytes());
        }
    }
    out
}

/// One row of a KITTI object label file.
#[derive(Clone, Debug)]
pub struct KittiLabel {
    pub kind: String,
    pub truncated: f64,
    pub occluded: u8,
    pub alpha: f64,
    pub bbox2d: [f64; 4],
    /// KITTI order: height, width, length (meters).
    pub dims_hwl: [f64; 3],
    /// Bottom-center location in the rectified camera frame.
    pub location: [f64; 3],
    pub rotation_y: f64,
}

/// Parses a KITTI object label file (one object per line, 15+ fields).
pub fn parse_labels(text: &str) -> Result<Vec<KittiLabel>, IoError> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() < 15 {
            return Err(IoError::Labels(format!("line {}: expected 15 fields", lineno + 1)));
        }
        let num = |i: usize| -> Result<f64, IoError> {
            f[i].parse::<f64>()
                .map_err(|_| IoError::Labels(format!("line {}: bad float '{}'", lineno + 1, f[i])))
        };
        out.push(KittiLabel {
            kind: f[0].to_string(),
            truncated: num(1)?,
            occluded: num(2)? as u8,
            alpha: num(3)?,
            bbox2d: [num(4)?, num(5)?, num(6)?, num(7)?],
            dims_hwl: [num(8)?, num(9)?, num(10)?],
            location: [num(11)?, num(12)?, num(13)?],
            rotation_y: num(14)?,
        });
    }
    Ok(out)
}

/// Converts a camera-frame KITTI label into a sensor-frame box.
pub fn label_to_sensor_box<T: Real>(
    label: &KittiLabel,
    calib: &FrameCalibration<T>,
) -> Option<(ObjectClass, BoundingBox3D<T>)> {
    let class = ObjectClass::from_kitti(&label.kind)?;
    let [h, w, l] = label.dims_hwl;
    let bottom_cam = Vec3::new(
        T::of(label.location[0]),
        T::of(label.location[1]),
        T::of(label.location[2]),
    );
    let bottom_velo = calib.cam_to_velo_point(bottom_cam);
    let center = Vec3::new(bottom_velo.x, bottom_velo.y, bottom_velo.z + T::of(h / 2.0));
    // Camera-frame rotation_y maps to sensor yaw: yaw = -ry - pi/2.
    let yaw = T::of(-label.rotation_y - std::f64::consts::FRAC_PI_2);
    Some((class, BoundingBox3D::new(center, BoxDims::new(T::of(l), T::of(w), T::of(h)), yaw)))
}

/// Converts a sensor-frame box back into a KITTI label row.
pub fn sensor_box_to_label<T: Real>(
    class: ObjectClass,
    bbox: &BoundingBox3D<T>,
    calib: &FrameCalibration<T>,
    rig: &CameraRig<T>,
) -> KittiLabel {
    let bottom = Vec3::new(bbox.center.x, bbox.center.y, bbox.bottom_z());
    let cam = calib.velo_to_rect_cam().transform_point(bottom);
    let ry = -bbox.yaw.as_f64() - std::f64::consts::FRAC_PI_2;
    let ry = (ry + std::f64::consts::PI).rem_euclid(2.0 * std::f64::consts::PI)
        - std::f64::consts::PI;
    let alpha = ry - cam.x.as_f64().atan2(cam.z.as_f64());
    let alpha = (alpha + std::f64::consts::PI).rem_euclid(2.0 * std::f64::consts::PI)
        - std::f64::consts::PI;
    let rect = bbox.image_rect(rig);
    let bbox2d = rect
        .map(|r| {
            let w = rig.model.image_width as f64 - 1.0;
            let h = rig.model.image_height as f64 - 1.0;
            [
                r.u0.as_f64().clamp(0.0, w),
                r.v0.as_f64().clamp(0.0, h),
                r.u1.as_f64().clamp(0.0, w),
                r.v1.as_f64().clamp(0.0, h),
            ]
        })
        .unwrap_or([0.0; 4]);
    KittiLabel {
        kind: class.to_kitti().to_string(),
        truncated: 0.0,
        occluded: 0,
        alpha,
        bbox2d,
        dims_hwl: [
            bbox.dims.height.as_f64(),
            bbox.dims.width.as_f64(),
            bbox.dims.length.as_f64(),
        ],
        location: [cam.x.as_f64(), cam.y.as_f64(), cam.z.as_f64()],
        rotation_y: ry,
    }
}

/// Formats label rows in the KITTI text layout (fixed precision keeps the
/// output byte-stable).
pub fn write_labels(labels: &[KittiLabel]) -> String {
    let mut out = String::new();
    for l in labels {
        out.push_str(&format!(
            "{} {:.2} {} {:.2} {:.2} {:.2} {:.2} {:.2} {:.2} {:.2} {:.2} {:.2} {:.2} {:.2} {:.2}\n",
            l.kind,
            l.truncated,
            l.occluded,
            l.alpha,
            l.bbox2d[0],
            l.bbox2d[1],
            l.bbox2d[2],
            l.bbox2d[3],
            l.dims_hwl[0],
            l.dims_hwl[1],
            l.dims_hwl[2],
            l.location[0],
            l.location[1],
            l.location[2],
            l.rotation_y
        ));
    }
    out
}

/// GPS/IMU record (subset of the KITTI oxts line).
#[derive(Clone, Copy, Debug)]
pub struct OxtsRecord {
    pub lat: f64,
    pub lon: f64,
    pub alt: f64,
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

/// Parses one oxts line (first six fields; the rest are ignored).
pub fn parse_oxts_record(line: &str) -> Result<OxtsRecord, IoError> {
    let f: Vec<&str> = line.split_whitespace().collect();
    if f.len() < 6 {
        return Err(IoError::Oxts("oxts record needs at least 6 fields".into()));
    }
    let num = |i: usize| -> Result<f64, IoError> {
        f[i].parse::<f64>()
            .map_err(|_| IoError::Oxts(format!("bad float '{}'", f[i])))
    };
    let rec = OxtsRecord {
        lat: num(0)?,
        lon: num(1)?,
        alt: num(2)?,
        roll: num(3)?,
        pitch: num(4)?,
        yaw: num(5)?,
    };
    if rec.lat.abs() > 90.0 || rec.lon.abs() > 180.0 {
        return Err(IoError::Oxts(format!("lat/lon out of range: {} {}", rec.lat, rec.lon)));
    }
    Ok(rec)
}

/// Earth radius used by the KITTI Mercator conversion (meters).
pub const EARTH_RADIUS_M: f64 = 6_378_137.0;

/// Converts GPS+IMU to a world pose via the Mercator projection with scale
/// anchored at `scale_origin_lat` (degrees):
/// `s = cos(lat0)`, `x = s R lon`, `y = s R ln(tan(pi/4 + lat/2))`,
/// `z = alt`, rotation `Rz(yaw) Ry(pitch) Rx(roll)`.
pub fn oxts_to_pose<T: Real>(rec: &OxtsRecord, scale_origin_lat: f64) -> RigidPose<T> {
    let s = (scale_origin_lat * std::f64::consts::PI / 180.0).cos();
    let x = s * EARTH_RADIUS_M * rec.lon * std::f64::consts::PI / 180.0;
    let y = s
        * EARTH_RADIUS_M
        * ((std::f64::consts::FRAC_PI_4 + rec.lat * std::f64::consts::PI / 360.0).tan()).ln();
    let rotation = Mat3::rotation_z(T::of(rec.yaw))
        .mul_mat(&Mat3::rotation_y(T::of(rec.pitch)))
        .mul_mat(&Mat3::rotation_x(T::of(rec.roll)));
    RigidPose::new(rotation, Vec3::new(T::of(x), T::of(y), T::of(rec.alt)))
}

/// Parses a KITTI timestamps file ("YYYY-MM-DD HH:MM:SS.fffffffff" per
/// line) into seconds. Days are folded in so midnight crossings stay
/// monotone.
pub fn parse_timestamps(text: &str) -> Result<Vec<f64>, IoError> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (date, time) = line
            .split_once(' ')
            .ok_or_else(|| IoError::Timestamps(format!("line {}: bad format", lineno + 1)))?;
        let mut dp = date.split('-');
        let (y, m, d) = (
            dp.next().and_then(|v| v.parse::<i64>().ok()),
            dp.next().and_then(|v| v.parse::<i64>().ok()),
            dp.next().and_then(|v| v.parse::<i64>().ok()),
        );
        let (Some(y), Some(m), Some(d)) = (y, m, d) else {
            return Err(IoError::Timestamps(format!("line {}: bad date", lineno + 1)));
        };
        let mut tp = time.split(':');
        let (hh, mm, ss) = (
            tp.next().and_then(|v| v.parse::<i64>().ok()),
            tp.next().and_then(|v| v.parse::<i64>().ok()),
            tp.next().and_then(|v| v.parse::<f64>().ok()),
        );
        let (Some(hh), Some(mm), Some(ss)) = (hh, mm, ss) else {
            return Err(IoError::Timestamps(format!("line {}: bad time", lineno + 1)));
        };
        // Days since epoch via the standard civil-date formula.
        let y_adj = if m <= 2 { y - 1 } else { y };
        let era = if y_adj >= 0 { y_adj } else { y_adj - 399 } / 400;
        let yoe = y_adj - era * 400;
        let mp = (m + 9) % 12;
        let doy = (153 * mp + 2) / 5 + d - 1;
        let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
        let days = era * 146_097 + doe - 719_468;
        out.push(days as f64 * 86_400.0 + hh as f64 * 3600.0 + mm as f64 * 60.0 + ss);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const OBJECT_CALIB: &str = "\
P0: 707.0493 0 604.0814 0 0 707.0493 180.5066 0 0 0 1 0
P2: 721.5377 0 609.5593 44.85728 0 721.5377 172.854 0.2163791 0 0 1 0.002745884
R0_rect: 0.9999239 0.00983776 -0.007445048 -0.0098698 0.9999421 -0.004278459 0.007402527 0.004351614 0.9999631
Tr_velo_to_cam: 0.007533745 -0.9999714 -0.000616602 -0.004069766 0.01480249 0.0007280733 -0.9998902 -0.07631618 0.9998621 0.00752379 0.014856 -0.2717806
";

    #[test]
    fn object_dialect_parses_exact_values() {
        let calib: FrameCalibration<f64> = parse_calib(OBJECT_CALIB).unwrap();
        assert_eq!(calib.p2[0][0], 721.5377);
        assert_eq!(calib.p2[0][2], 609.5593);
        assert_eq!(calib.p2[0][3], 44.85728);
        assert_eq!(calib.r0_rect.m[0][1], 0.00983776);
        assert_eq!(calib.tr_velo_to_cam[1][3], -0.07631618);
    }

    #[test]
    fn raw_dialect_parses() {
        let raw = "\
P_rect_02: 721.5377 0 609.5593 44.85728 0 721.5377 172.854 0.2163791 0 0 1 0.002745884
R_rect_00: 1 0 0 0 1 0 0 0 1
R: 0 -1 0 0 0 -1 1 0 0
T: 0 0 -0.27
";
        let calib: FrameCalibration<f64> = parse_calib(raw).unwrap();
        assert_eq!(calib.p2[0][0], 721.5377);
        assert_eq!(calib.tr_velo_to_cam[0][1], -1.0);
        assert_eq!(calib.tr_velo_to_cam[2][3], -0.27);
    }

    #[test]
    fn identity_calibration_maps_velo_to_cam_directly() {
        let calib = FrameCalibration::<f64>::identity();
        let p = calib.velo_to_rect_cam().transform_point(Vec3::new(1.0, 0.0, 0.0));
        assert!((p - Vec3::new(1.0, 0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn missing_key_is_named() {
        let text = "P2: 1 0 0 0 0 1 0 0 0 0 1 0\nR0_rect: 1 0 0 0 1 0 0 0 1\n";
        match parse_calib::<f64>(text) {
            Err(IoError::Calib(msg)) => assert!(msg.contains("Tr_velo_to_cam"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
        let bad_arity = "P2: 1 2 3\nR0_rect: 1 0 0 0 1 0 0 0 1\nTr_velo_to_cam: 1 0 0 0 0 1 0 0 0 0 1 0\n";
        assert!(parse_calib::<f64>(bad_arity).is_err());
    }

    #[test]
    fn calibration_chain_reproduces_hand_computed_pixels() {
        let calib: FrameCalibration<f64> = parse_calib(OBJECT_CALIB).unwrap();
        let rig = calib.camera_rig(1242, 375).unwrap();
        // Hand-computed chain: x_cam = R0 (Tr_rot x + Tr_t); pixel = P2 x_h.
        let x = Vec3::new(12.0, -1.5, -0.4);
        let tr = &calib.tr_velo_to_cam;
        let xc = Vec3::new(
            tr[0][0] * x.x + tr[0][1] * x.y + tr[0][2] * x.z + tr[0][3],
            tr[1][0] * x.x + tr[1][1] * x.y + tr[1][2] * x.z + tr[1][3],
            tr[2][0] * x.x + tr[2][1] * x.y + tr[2][2] * x.z + tr[2][3],
        );
        let xr = calib.r0_rect.mul_vec(xc);
        let p2 = &calib.p2;
        let uh = p2[0][0] * xr.x + p2[0][1] * xr.y + p2[0][2] * xr.z + p2[0][3];
        let vh = p2[1][0] * xr.x + p2[1][1] * xr.y + p2[1][2] * xr.z + p2[1][3];
        let wh = p2[2][0] * xr.x + p2[2][1] * xr.y + p2[2][2] * xr.z + p2[2][3];
        let (u, v, _) = rig.project_sensor_point(x).unwrap();
        // The rig re-orthonormalizes R0 (1e-4-level change), so allow 1e-1 px
        // against the raw-matrix chain but require 1e-4 against itself below.
        assert!((u - uh / wh).abs() < 0.15, "{u} vs {}", uh / wh);
        assert!((v - vh / wh).abs() < 0.15);
        // Determinism of the chain itself.
        let (u2, v2, _) = rig.project_sensor_point(x).unwrap();
        assert!((u - u2).abs() < 1e-12 && (v - v2).abs() < 1e-12);
    }

    #[test]
    fn point_cloud_round_trip() {
        let empty = read_point_cloud::<f64>(&[]).unwrap();
        assert!(empty.is_empty());
        let mut bytes = Vec::new();
        for v in [1.0f32, 2.0, 3.0, 0.5] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let one = read_point_cloud::<f64>(&bytes).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one.points[0], Vec3::new(1.0, 2.0, 3.0));
        assert_eq!(one.intensity[0], 0.5);
        assert_eq!(write_point_cloud(&one), bytes);
        assert!(read_point_cloud::<f64>(&bytes[..13]).is_err());
    }

    #[test]
    fn labels_parse_and_round_trip_shape() {
        let text = "Car 0.00 0 -1.58 587.01 173.33 614.12 200.12 1.65 1.67 3.64 -0.65 1.71 46.70 -1.59\nDontCare -1 -1 -10 503.89 169.71 590.61 190.13 -1 -1 -1 -1000 -1000 -1000 -10\n";
        let labels = parse_labels(text).unwrap();
        assert_eq!(labels.len(), 2);
        assert_eq!(labels[0].kind, "Car");
        assert_eq!(labels[0].dims_hwl, [1.65, 1.67, 3.64]);
        assert!(ObjectClass::from_kitti(&labels[1].kind).is_none());
    }

    #[test]
    fn label_box_conversion_round_trips() {
        let calib: FrameCalibration<f64> = parse_calib(OBJECT_CALIB).unwrap();
        let rig = calib.camera_rig(1242, 375).unwrap();
        let labels = parse_labels(
            "Car 0.00 0 -1.58 587.01 173.33 614.12 200.12 1.65 1.67 3.64 -0.65 1.71 46.70 -1.59\n",
        )
        .unwrap();
        let (class, bbox) = label_to_sensor_box(&labels[0], &calib).unwrap();
        assert_eq!(class, ObjectClass::Car);
        // Forward of the sensor, near ground.
        assert!(bbox.center.x > 40.0 && bbox.center.x < 50.0);
        let back = sensor_box_to_label(class, &bbox, &calib, &rig);
        assert!((back.location[0] - -0.65).abs() < 0.01);
        assert!((back.location[2] - 46.70).abs() < 0.01);
        assert!((back.rotation_y - -1.59).abs() < 0.01);
        assert!((back.dims_hwl[2] - 3.64).abs() < 1e-9);
    }

    #[test]
    fn oxts_pose_basics() {
        let rec = parse_oxts_record("49.0 8.43 112.8 0.0 0.0 0.0 0 0 0 0 0").unwrap();
        let pose: RigidPose<f64> = oxts_to_pose(&rec, 49.0);
        assert!(pose.rotation.orthonormality_error() < 1e-12);
        assert!((pose.rotation.m[0][0] - 1.0).abs() < 1e-12); // identity rotation
        let yawed = OxtsRecord { yaw: std::f64::consts::FRAC_PI_2, ..rec };
        let pose_y: RigidPose<f64> = oxts_to_pose(&yawed, 49.0);
        let x_image = pose_y.rotation.mul_vec(Vec3::new(1.0, 0.0, 0.0));
        assert!((x_image - Vec3::new(0.0, 1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn oxts_displacement_matches_haversine() {
        let a = OxtsRecord { lat: 49.0, lon: 8.43, alt: 110.0, roll: 0.0, pitch: 0.0, yaw: 0.0 };
        let b = OxtsRecord { lat: 49.0006, lon: 8.4312, ..a };
        let pa: RigidPose<f64> = oxts_to_pose(&a, 49.0);
        let pb: RigidPose<f64> = oxts_to_pose(&b, 49.0);
        let planar = ((pb.translation.x - pa.translation.x).powi(2)
            + (pb.translation.y - pa.translation.y).powi(2))
        .sqrt();
        // Haversine oracle.
        let rad = std::f64::consts::PI / 180.0;
        let dlat = (b.lat - a.lat) * rad;
        let dlon = (b.lon - a.lon) * rad;
        let h = (dlat / 2.0).sin().powi(2)
            + (a.lat * rad).cos() * (b.lat * rad).cos() * (dlon / 2.0).sin().powi(2);
        let hav = 2.0 * EARTH_RADIUS_M * h.sqrt().asin();
        assert!((planar - hav).abs() / hav < 1e-3, "planar {planar} vs haversine {hav}");
    }

    #[test]
    fn timestamps_parse_monotone() {
        let text = "2011-09-26 13:02:25.964389445\n2011-09-26 13:02:26.074785423\n";
        let ts = parse_timestamps(text).unwrap();
        assert_eq!(ts.len(), 2);
        let dt = ts[1] - ts[0];
        assert!((dt - 0.110395978).abs() < 1e-6, "dt {dt}");
    }
}
