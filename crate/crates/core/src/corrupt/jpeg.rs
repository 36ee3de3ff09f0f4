use alloc::format;
use alloc::vec::Vec;

use jpeg_encoder::{ColorType, Encoder};
use zune_core::bytestream::ZCursor;
use zune_core::colorspace::ColorSpace;
use zune_core::options::DecoderOptions;
use zune_jpeg::JpegDecoder;

use crate::error::{Error, Result};
use crate::ImageTensor;

/// Encodes the image as baseline JPEG at `quality` and decodes it again.
pub(crate) fn round_trip(img: &ImageTensor, quality: u8) -> Result<ImageTensor> {
    let (h, w) = (img.height(), img.width());
    let (h16, w16) = match (u16::try_from(h), u16::try_from(w)) {
        (Ok(a), Ok(b)) => (a, b),
        _ => return Err(Error::Codec(format!("{h}x{w} exceeds the JPEG size limit"))),
    };
    let mut encoded = Vec::new();
    Encoder::new(&mut encoded, quality)
        .encode(&img.to_rgb8(), w16, h16, ColorType::Rgb)
        .map_err(|e| Error::Codec(format!("encode: {e}")))?;

    let options = DecoderOptions::default().jpeg_set_out_colorspace(ColorSpace::RGB);
    let mut decoder = JpegDecoder::new_with_options(ZCursor::new(&encoded), options);
    let pixels = decoder
        .decode()
        .map_err(|e| Error::Codec(format!("decode: {e:?}")))?;
    ImageTensor::from_rgb8(h, w, &pixels)
}
