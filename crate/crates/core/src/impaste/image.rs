//! Image buffers, joint color+mask bilinear sampling, Gaussian blur and the
//! morphological erosion used by mask-fidelity checks.

use crate::impaste::ImpasteError;
use crate::scalar::Real;

/// Interleaved RGB image with components in [0, 1].
#[derive(Clone, Debug, PartialEq)]
pub struct ImageBuf<T> {
    pub width: usize,
    pub height: usize,
    data: Vec<T>,
}

impl<T: Real> ImageBuf<T> {
    pub fn filled(width: usize, height: usize, rgb: [T; 3]) -> Self {
        let mut data = Vec::with_capacity(width * height * 3);
        for _ in 0..width * height {
            data.extend_from_slice(&rgb);
        }
        Self { width, height, data }
    }

    pub fn from_raw(width: usize, height: usize, data: Vec<T>) -> Result<Self, ImpasteError> {
        if data.len() != width * height * 3 {
            return Err(ImpasteError::InvalidImage("raw buffer size mismatch"));
        }
        Ok(Self { width, height, data })
    }

    /// Converts an 8-bit RGB buffer into [0, 1] components.
    pub fn from_rgb8(width: usize, height: usize, bytes: &[u8]) -> Result<Self, ImpasteError> {
        if bytes.len() != width * height * 3 {
            return Err(ImpasteError::InvalidImage("rgb8 buffer size mismatch"));
        }
        let data = bytes.iter().map(|&b| T::of(b as f64 / 255.0)).collect();
        Ok(Self { width, height, data })
    }

    /// Quantizes back to 8-bit RGB (round half up after clamping).
    pub fn to_rgb8(&self) -> Vec<u8> {
        self.data
            .iter()
            .map(|&v| (v.clamped(T::zero(), T::one()).as_f64() * 255.0).round() as u8)
            .collect()
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [T; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [T; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i] = rgb[0];
        self.data[i + 1] = rgb[1];
        self.data[i + 2] = rgb[2];
    }

    pub fn raw(&self) -> &[T] {
        &self.data
    }
}

/// Cropped source image + instance mask of a cut object.
#[derive(Clone, Debug)]
pub struct SourcePatch<T> {
    pub image: ImageBuf<T>,
    /// Soft instance mask in [0, 1], same dimensions as `image`.
    pub mask: Vec<T>,
    /// Pixel coordinates of the crop origin in the full source frame.
    pub offset: (i32, i32),
}

impl<T: Real> SourcePatch<T> {
    pub fn new(image: ImageBuf<T>, mask: Vec<T>, offset: (i32, i32)) -> Result<Self, ImpasteError> {
        if mask.len() != image.width * image.height {
            return Err(ImpasteError::InvalidImage("mask/image dimension mismatch"));
        }
        if mask.iter().any(|&m| !(m >= T::zero() && m <= T::one())) {
            return Err(ImpasteError::InvalidImage("mask value outside [0, 1]"));
        }
        Ok(Self { image, mask, offset })
    }

    #[inline]
    fn texel(&self, x: i64, y: i64) -> ([T; 3], T) {
        if x < 0 || y < 0 || x >= self.image.width as i64 || y >= self.image.height as i64 {
            // Out-of-bounds contributes zero mask weight.
            return ([T::zero(); 3], T::zero());
        }
        let (xu, yu) = (x as usize, y as usize);
        (self.image.pixel(xu, yu), self.mask[yu * self.image.width + xu])
    }
}

/// Bilinear color + mask sample at full-source-frame pixel coordinates.
///
/// Pixel centers sit at integer coordinates; out-of-bounds neighbors
/// contribute zero mask.
pub fn bilinear_sample<T: Real>(patch: &SourcePatch<T>, u: T, v: T) -> ([T; 3], T) {
    let lu = u - T::of(patch.offset.0 as f64);
    let lv = v - T::of(patch.offset.1 as f64);
    let x0 = lu.floor();
    let y0 = lv.floor();
    let fx = lu - x0;
    let fy = lv - y0;
    let x0 = x0.as_f64() as i64;
    let y0 = y0.as_f64() as i64;
    let w00 = (T::one() - fx) * (T::one() - fy);
    let w10 = fx * (T::one() - fy);
    let w01 = (T::one() - fx) * fy;
    let w11 = fx * fy;
    let mut color = [T::zero(); 3];
    let mut mask = T::zero();
    for (dx, dy, w) in [(0, 0, w00), (1, 0, w10), (0, 1, w01), (1, 1, w11)] {
        let (c, m) = patch.texel(x0 + dx, y0 + dy);
        for k in 0..3 {
            color[k] += c[k] * w;
        }
        mask += m * w;
    }
    (color, mask)
}

/// Premultiplied RGBA working layer used while rendering one pasted object.
#[derive(Clone, Debug)]
pub struct RgbaLayer<T> {
    pub width: usize,
    pub height: usize,
    pub data: Vec<[T; 4]>,
}

impl<T: Real> RgbaLayer<T> {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self { width, height, data: vec![[T::zero(); 4]; width * height] }
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> [T; 4] {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn at_mut(&mut self, x: usize, y: usize) -> &mut [T; 4] {
        &mut self.data[y * self.width + x]
    }
}

/// Separable Gaussian blur of a premultiplied layer (color and alpha
/// together); boundaries are transparent.
pub fn gaussian_blur_layer<T: Real>(layer: &RgbaLayer<T>, sigma: T) -> RgbaLayer<T> {
    if sigma <= T::zero() {
        return layer.clone();
    }
    let radius = (sigma.as_f64() * 3.0).ceil() as i64;
    let mut kernel = Vec::with_capacity((2 * radius + 1) as usize);
    let mut sum = T::zero();
    for i in -radius..=radius {
        let x = T::of(i as f64);
        let w = (-(x * x) / (T::of(2.0) * sigma * sigma)).exp();
        kernel.push(w);
        sum += w;
    }
    for w in &mut kernel {
        *w /= sum;
    }
    let (w, h) = (layer.width, layer.height);
    let mut tmp = RgbaLayer::zeros(w, h);
    for y in 0..h {
        for x in 0..w {
            let mut acc = [T::zero(); 4];
            for (ki, kw) in kernel.iter().enumerate() {
                let sx = x as i64 + ki as i64 - radius;
                if sx < 0 || sx >= w as i64 {
                    continue;
                }
                let px = layer.at(sx as usize, y);
                for c in 0..4 {
                    acc[c] += px[c] * *kw;
                }
            }
            *tmp.at_mut(x, y) = acc;
        }
    }
    let mut out = RgbaLayer::zeros(w, h);
    for y in 0..h {
        for x in 0..w {
            let mut acc = [T::zero(); 4];
            for (ki, kw) in kernel.iter().enumerate() {
                let sy = y as i64 + ki as i64 - radius;
                if sy < 0 || sy >= h as i64 {
                    continue;
                }
                let px = tmp.at(x, sy as usize);
                for c in 0..4 {
                    acc[c] += px[c] * *kw;
                }
            }
            *out.at_mut(x, y) = acc;
        }
    }
    out
}

/// Binary erosion (8-neighborhood, threshold 0.5) applied `steps` times.
/// Used by identity-paste fidelity checks to stay clear of soft mask edges.
pub fn erode_mask<T: Real>(mask: &[T], width: usize, height: usize, steps: usize) -> Vec<bool> {
    let mut cur: Vec<bool> = mask.iter().map(|&m| m > T::of(0.5)).collect();
    for _ in 0..steps {
        let mut next = vec![false; cur.len()];
        for y in 0..height {
            for x in 0..width {
                if !cur[y * width + x] {
                    continue;
                }
                let mut keep = true;
                'scan: for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        let nx = x as i64 + dx;
                        let ny = y as i64 + dy;
                        if nx < 0 || ny < 0 || nx >= width as i64 || ny >= height as i64 {
                            keep = false;
                            break 'scan;
                        }
                        if !cur[ny as usize * width + nx as usize] {
                            keep = false;
                            break 'scan;
                        }
                    }
                }
                next[y * width + x] = keep;
            }
        }
        cur = next;
    }
    cur
}
