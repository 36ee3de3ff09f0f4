//! Source decoding and lossless variant encoding.

use std::path::Path;

use image::codecs::png::{CompressionType, FilterType, PngEncoder};
use image::imageops::FilterType as ResizeFilter;
use image::{ExtendedColorType, ImageEncoder};
use softaffect_core::ImageTensor;

use crate::error::{BenchError, Result};

pub const SOURCE_EXTENSIONS: [&str; 3] = ["png", "jpg", "jpeg"];

/// Decodes any supported file to RGB, optionally resizing to a square side
/// with a triangle filter.
pub fn load_source(path: &Path, resize: Option<u32>) -> Result<ImageTensor> {
    let img = image::open(path).map_err(|e| BenchError::format(path, e))?;
    let mut rgb = img.to_rgb8();
    if let Some(side) = resize {
        if side == 0 {
            return Err(BenchError::Invalid("resize side must be positive".into()));
        }
        if rgb.dimensions() != (side, side) {
            rgb = image::imageops::resize(&rgb, side, side, ResizeFilter::Triangle);
        }
    }
    let (w, h) = rgb.dimensions();
    Ok(ImageTensor::from_rgb8(h as usize, w as usize, rgb.as_raw())?)
}

/// 8-bit RGB PNG with fixed encoder settings, so equal pixels give equal bytes.
pub fn encode_png(img: &ImageTensor) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    PngEncoder::new_with_quality(&mut out, CompressionType::Default, FilterType::Adaptive)
        .write_image(
            &img.to_rgb8(),
            img.width() as u32,
            img.height() as u32,
            ExtendedColorType::Rgb8,
        )
        .map_err(|e| BenchError::Invalid(format!("png encoding failed: {e}")))?;
    Ok(out)
}

pub fn write_png(path: &Path, img: &ImageTensor) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(BenchError::io(dir))?;
    }
    std::fs::write(path, encode_png(img)?).map_err(BenchError::io(path))
}
