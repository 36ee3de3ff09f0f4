use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// An RGB image with channel values in `[0, 1]`, stored row-major and
/// channel-interleaved (`data[(y * width + x) * 3 + c]`).
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTensor {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl ImageTensor {
    pub const CHANNELS: usize = 3;

    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        check_area(height, width)?;
        let expected = height * width * Self::CHANNELS;
        if data.len() != expected {
            return Err(Error::invalid(format!(
                "image data has {} values, {height}x{width}x3 needs {expected}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid(format!(
                "pixel value {} at index {pos} is outside [0, 1]",
                data[pos]
            )));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Result<Self> {
        check_area(height, width)?;
        Self::new(height, width, alloc::vec![value; height * width * Self::CHANNELS])
    }

    /// Builds an image from interleaved 8-bit RGB samples.
    pub fn from_rgb8(height: usize, width: usize, bytes: &[u8]) -> Result<Self> {
        check_area(height, width)?;
        if bytes.len() != height * width * Self::CHANNELS {
            return Err(Error::invalid(format!(
                "rgb8 buffer has {} bytes, {height}x{width}x3 needs {}",
                bytes.len(),
                height * width * Self::CHANNELS
            )));
        }
        let data = bytes.iter().map(|&b| f64::from(b) / 255.0).collect();
        Ok(Self {
            height,
            width,
            data,
        })
    }

    /// Interleaved 8-bit RGB, rounding to the nearest level.
    pub fn to_rgb8(&self) -> Vec<u8> {
        self.data.iter().map(|&v| to_u8(v)).collect()
    }

    /// The image as it will look after an 8-bit save and reload.
    pub fn quantized(&self) -> ImageTensor {
        let data = self.data.iter().map(|&v| f64::from(to_u8(v)) / 255.0).collect();
        ImageTensor {
            height: self.height,
            width: self.width,
            data,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn same_shape(&self, other: &ImageTensor) -> bool {
        self.height == other.height && self.width == other.width
    }

    pub fn pixel(&self, y: usize, x: usize) -> [f64; 3] {
        let i = (y * self.width + x) * Self::CHANNELS;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    /// Wraps an already-sized buffer, clipping every value into `[0, 1]`.
    /// NaN maps to 0.
    pub(crate) fn from_unclipped(height: usize, width: usize, mut data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), height * width * Self::CHANNELS);
        for v in &mut data {
            *v = clip01(*v);
        }
        Self {
            height,
            width,
            data,
        }
    }
}

fn check_area(height: usize, width: usize) -> Result<()> {
    if height == 0 || width == 0 {
        return Err(Error::invalid(format!(
            "image must have positive area, got {height}x{width}"
        )));
    }
    Ok(())
}

#[inline]
pub(crate) fn clip01(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(0.0, 1.0)
    }
}

#[inline]
fn to_u8(v: f64) -> u8 {
    libm::round(clip01(v) * 255.0) as u8
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_and_bad_length() {
        assert!(ImageTensor::new(1, 1, alloc::vec![0.0, 0.5, 1.5]).is_err());
        assert!(ImageTensor::new(1, 1, alloc::vec![0.0, f64::NAN, 1.0]).is_err());
        assert!(ImageTensor::new(1, 2, alloc::vec![0.0; 3]).is_err());
        assert!(ImageTensor::new(1, 1, alloc::vec![0.0, 0.5, 1.0]).is_ok());
    }

    #[test]
    fn zero_area_is_invalid_argument() {
        let err = ImageTensor::new(0, 4, Vec::new()).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
        assert!(ImageTensor::filled(3, 0, 0.5).is_err());
    }

    #[test]
    fn rgb8_round_trip_is_exact() {
        let bytes: Vec<u8> = (0..=255u8).cycle().take(4 * 5 * 3).collect();
        let img = ImageTensor::from_rgb8(4, 5, &bytes).unwrap();
        assert_eq!(img.to_rgb8(), bytes);
        assert_eq!(img.quantized(), img);
    }
}
