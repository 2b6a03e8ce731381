//! PNG ingestion/emission for images and masks (8-bit, lossless).

use std::io::{BufWriter, Cursor};
use std::path::Path;

use crate::impaste::image::ImageBuf;
use crate::io::IoError;
use crate::scalar::Real;

/// Decodes an RGB(A)/grayscale PNG into an RGB image buffer in [0, 1].
pub fn decode_png_rgb<T: Real>(bytes: &[u8]) -> Result<ImageBuf<T>, IoError> {
    let decoder = png::Decoder::new(Cursor::new(bytes));
    let mut reader = decoder.read_info().map_err(|e| IoError::Png(e.to_string()))?;
    let mut buf = vec![0u8; reader.output_buffer_size().ok_or_else(|| IoError::Png("image too large".into()))?];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| IoError::Png(e.to_string()))?;
    let (w, h) = (info.width as usize, info.height as usize);
    let data = &buf[..info.buffer_size()];
    let mut rgb = Vec::with_capacity(w * h * 3);
    match info.color_type {
        png::ColorType::Rgb => rgb.extend_from_slice(data),
        png::ColorType::Rgba => {
            for px in data.chunks_exact(4) {
                rgb.extend_from_slice(&px[..3]);
            }
        }
        png::ColorType::Grayscale => {
            for &g in data {
                rgb.extend_from_slice(&[g, g, g]);
            }
        }
        png::ColorType::GrayscaleAlpha => {
            for px in data.chunks_exact(2) {
                rgb.extend_from_slice(&[px[0], px[0], px[0]]);
            }
        }
        other => return Err(IoError::Png(format!("unsupported color type {other:?}"))),
    }
    ImageBuf::from_rgb8(w, h, &rgb).map_err(|e| IoError::Png(e.to_string()))
}

/// Decodes a PNG as a grayscale mask in [0, 1] (RGB inputs use the red
/// channel).
pub fn decode_png_gray<T: Real>(bytes: &[u8]) -> Result<(usize, usize, Vec<T>), IoError> {
    let img: ImageBuf<T> = decode_png_rgb(bytes)?;
    let mut mask = Vec::with_capacity(img.width * img.height);
    for y in 0..img.height {
        for x in 0..img.width {
            mask.push(img.pixel(x, y)[0]);
        }
    }
    Ok((img.width, img.height, mask))
}

/// Encodes an RGB image as an 8-bit PNG (fixed settings keep the bytes
/// deterministic).
pub fn encode_png_rgb<T: Real>(image: &ImageBuf<T>) -> Result<Vec<u8>, IoError> {
    let mut out = Vec::new();
    {
        let mut encoder = png::Encoder::new(
            BufWriter::new(&mut out),
            image.width as u32,
            image.height as u32,
        );
        encoder.set_color(png::ColorType::Rgb);
        encoder.set_depth(png::BitDepth::Eight);
        encoder.set_compression(png::Compression::Balanced);
        let mut writer = encoder
            .write_header()
            .map_err(|e| IoError::Png(e.to_string()))?;
        writer
            .write_image_data(&image.to_rgb8())
            .map_err(|e| IoError::Png(e.to_string()))?;
    }
    Ok(out)
}

/// Encodes a grayscale mask as an 8-bit PNG.
pub fn encode_png_gray<T: Real>(width: usize, height: usize, mask: &[T]) -> Result<Vec<u8>, IoError> {
    if mask.len() != width * height {
        return Err(IoError::Png("mask size mismatch".into()));
    }
    let bytes: Vec<u8> = mask
        .iter()
        .map(|&v| (v.clamped(T::zero(), T::one()).as_f64() * 255.0).round() as u8)
        .collect();
    let mut out = Vec::new();
    {
        let mut encoder =
            png::Encoder::new(BufWriter::new(&mut out), width as u32, height as u32);
        encoder.set_color(png::ColorType::Grayscale);
        encoder.set_depth(png::BitDepth::Eight);
        encoder.set_compression(png::Compression::Balanced);
        let mut writer = encoder
            .write_header()
            .map_err(|e| IoError::Png(e.to_string()))?;
        writer
            .write_image_data(&bytes)
            .map_err(|e| IoError::Png(e.to_string()))?;
    }
    Ok(out)
}

pub fn read_png_rgb_file<T: Real>(path: &Path) -> Result<ImageBuf<T>, IoError> {
    let bytes = std::fs::read(path)?;
    decode_png_rgb(&bytes)
}

pub fn read_png_gray_file<T: Real>(path: &Path) -> Result<(usize, usize, Vec<T>), IoError> {
    let bytes = std::fs::read(path)?;
    decode_png_gray(&bytes)
}

pub fn write_png_rgb_file<T: Real>(path: &Path, image: &ImageBuf<T>) -> Result<(), IoError> {
    std::fs::write(path, encode_png_rgb(image)?)?;
    Ok(())
}

pub fn write_png_gray_file<T: Real>(
    path: &Path,
    width: usize,
    height: usize,
    mask: &[T],
) -> Result<(), IoError> {
    std::fs::write(path, encode_png_gray(width, height, mask)?)?;
    Ok(())
}
