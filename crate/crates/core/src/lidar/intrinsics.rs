//! Per-laser beam geometry and the scan pattern (block firing schedule).

use crate::geom::Ray;
use crate::lidar::LidarError;
use crate::math::Vec3;
use crate::scalar::Real;

/// Firing block of a 64-laser unit; both blocks fire at the same azimuth.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Block {
    Top,
    Bottom,
}

/// Correction/offset parameters of one laser.
#[derive(Clone, Copy, Debug)]
pub struct LaserIntrinsics<T> {
    pub laser_id: u32,
    pub block: Block,
    /// Rotational correction (radians).
    pub alpha: T,
    /// Vertical correction (radians).
    pub theta: T,
    /// Horizontal offset (meters).
    pub h_offset: T,
    /// Vertical offset (meters).
    pub v_offset: T,
}

impl<T: Real> LaserIntrinsics<T> {
    pub fn is_valid(&self) -> bool {
        self.theta.abs() < T::FRAC_PI_2() && self.alpha.abs() < T::PI()
    }
}

/// Outgoing ray for one laser at assembly rotation `phi` with ray length `d`:
///
/// ```text
/// beta = phi - alpha            d_xy = d cos(theta) - v_o sin(theta)
/// direction = [ d_xy cos(beta),  d_xy sin(beta),  d sin(theta) ]
/// origin    = [ -h_o cos(beta),  h_o sin(beta),   v_o cos(theta) ]
/// ```
pub fn laser_ray<T: Real>(l: &LaserIntrinsics<T>, phi: T, d: T) -> Ray<T> {
    let beta = phi - l.alpha;
    let (sin_b, cos_b) = beta.sin_cos();
    let (sin_t, cos_t) = l.theta.sin_cos();
    let d_xy = d * cos_t - l.v_offset * sin_t;
    let direction = Vec3::new(d_xy * cos_b, d_xy * sin_b, d * sin_t);
    let origin = Vec3::new(-l.h_offset * cos_b, l.h_offset * sin_b, l.v_offset * cos_t);
    Ray::new(origin, direction)
}

/// Full scan schedule: the laser table plus the azimuth step per firing.
#[derive(Clone, Debug)]
pub struct ScanPattern<T> {
    pub lasers: Vec<LaserIntrinsics<T>>,
    /// Radians of assembly rotation between consecutive firings.
    pub azimuth_step: T,
    /// Arbitrary positive ray length `d` (meters).
    pub ray_length: T,
}

/// Default azimuth step approximating an HDL-64E S2 at 10 Hz.
pub const DEFAULT_AZIMUTH_STEPS_PER_REV: usize = 2083;
/// Default ray length (meters).
pub const DEFAULT_RAY_LENGTH_M: f64 = 120.0;

impl<T: Real> ScanPattern<T> {
    pub fn new(lasers: Vec<LaserIntrinsics<T>>, azimuth_step: T, ray_length: T) -> Result<Self, LidarError> {
        let pattern = Self { lasers, azimuth_step, ray_length };
        pattern.validate()?;
        Ok(pattern)
    }

    pub fn validate(&self) -> Result<(), LidarError> {
        if self.azimuth_step <= T::zero() {
            return Err(LidarError::InvalidPattern("azimuth_step must be positive"));
        }
        if self.ray_length <= T::zero() {
            return Err(LidarError::InvalidPattern("ray_length must be positive"));
        }
        let mut seen = std::collections::BTreeSet::new();
        for l in &self.lasers {
            if !l.is_valid() {
                return Err(LidarError::InvalidPattern("laser correction out of range"));
            }
            if !seen.insert(l.laser_id) {
                return Err(LidarError::InvalidPattern("duplicate laser_id"));
            }
        }
        Ok(())
    }

    /// Number of firing steps per revolution.
    pub fn steps_per_revolution(&self) -> usize {
        let two_pi = T::PI() * T::of(2.0);
        (two_pi / self.azimuth_step - T::of(1e-9)).floor().as_f64() as usize + 1
    }

    /// Azimuth of firing step `k`.
    #[inline]
    pub fn azimuth_at(&self, k: usize) -> T {
        self.azimuth_step * T::of_usize(k)
    }

    /// Identity-correction table: `n` lasers with elevations evenly spanning
    /// `[theta_lo, theta_hi]`, upper half in the top block.
    pub fn ideal_grid(n: usize, theta_lo: T, theta_hi: T, azimuth_step: T, ray_length: T) -> Self {
        let mut lasers = Vec::with_capacity(n);
        for i in 0..n {
            let f = if n == 1 {
                T::of(0.5)
            } else {
                T::of_usize(i) / T::of_usize(n - 1)
            };
            let theta = theta_hi + (theta_lo - theta_hi) * f;
            lasers.push(LaserIntrinsics {
                laser_id: i as u32,
                block: if i < n / 2 { Block::Top } else { Block::Bottom },
                alpha: T::zero(),
                theta,
                h_offset: T::zero(),
                v_offset: T::zero(),
            });
        }
        Self { lasers, azimuth_step, ray_length }
    }

    /// 64 ideal lasers matching the HDL-64E S2 elevation span (top block
    /// +2 deg to -8.33 deg, bottom block -8.83 deg to -24.33 deg), zero
    /// corrections, default azimuth step.
    pub fn hdl64_ideal() -> Self {
        let step = T::of(2.0 * std::f64::consts::PI / DEFAULT_AZIMUTH_STEPS_PER_REV as f64);
        let deg = |d: f64| T::of(d.to_radians());
        let mut lasers = Vec::with_capacity(64);
        for i in 0..32 {
            let f = i as f64 / 31.0;
            lasers.push(LaserIntrinsics {
                laser_id: i as u32,
                block: Block::Top,
                alpha: T::zero(),
                theta: deg(2.0 + (-8.33 - 2.0) * f),
                h_offset: T::zero(),
                v_offset: T::zero(),
            });
        }
        for i in 0..32 {
            let f = i as f64 / 31.0;
            lasers.push(LaserIntrinsics {
                laser_id: 32 + i as u32,
                block: Block::Bottom,
                alpha: T::zero(),
                theta: deg(-8.83 + (-24.33 + 8.83) * f),
                h_offset: T::zero(),
                v_offset: T::zero(),
            });
        }
        Self { lasers, azimuth_step: step, ray_length: T::of(DEFAULT_RAY_LENGTH_M) }
    }
}

/// Parses the laser intrinsics text format: one row per laser,
/// `laser_id block alpha theta h_offset v_offset` (radians/meters,
/// whitespace-separated, `#` comments).
pub fn parse_laser_table<T: Real>(text: &str) -> Result<Vec<LaserIntrinsics<T>>, LidarError> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(LidarError::Parse { line: lineno + 1, what: "expected 6 fields" });
        }
        let laser_id: u32 = fields[0]
            .parse()
            .map_err(|_| LidarError::Parse { line: lineno + 1, what: "bad laser_id" })?;
        let block = match fields[1] {
            "top" => Block::Top,
            "bottom" => Block::Bottom,
            _ => return Err(LidarError::Parse { line: lineno + 1, what: "block must be top|bottom" }),
        };
        let mut nums = [T::zero(); 4];
        for (slot, f) in nums.iter_mut().zip(&fields[2..]) {
            let v: f64 = f
                .parse()
                .map_err(|_| LidarError::Parse { line: lineno + 1, what: "bad float" })?;
            *slot = T::of(v);
        }
        let l = LaserIntrinsics {
            laser_id,
            block,
            alpha: nums[0],
            theta: nums[1],
            h_offset: nums[2],
            v_offset: nums[3],
        };
        if !l.is_valid() {
            return Err(LidarError::Parse { line: lineno + 1, what: "correction out of range" });
        }
        out.push(l);
    }
    if out.is_empty() {
        return Err(LidarError::Parse { line: 0, what: "no laser rows" });
    }
    Ok(out)
}
