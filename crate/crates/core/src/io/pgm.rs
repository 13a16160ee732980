//! Grayscale portable graymap images.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use image::codecs::pnm::{GraymapHeader, PnmEncoder, SampleEncoding};
use image::{DynamicImage, ExtendedColorType, ImageEncoder, ImageReader};

use crate::error::{Error, Result};
use crate::image::{IntensityImage, MAX_INTENSITY};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BitDepth {
    #[default]
    Eight,
    /// Full scale 255.0 maps to 65535.
    Sixteen,
}

impl BitDepth {
    fn max_code(self) -> f64 {
        match self {
            BitDepth::Eight => 255.0,
            BitDepth::Sixteen => 65535.0,
        }
    }
}

/// Intensity to integer code, rounding half to even.
pub fn quantize(value: f64, depth: BitDepth) -> u16 {
    let max = depth.max_code();
    (value / MAX_INTENSITY * max)
        .round_ties_even()
        .clamp(0.0, max) as u16
}

fn image_error(path: &Path, e: image::ImageError) -> Error {
    match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        other => Error::format(format!("{}: {other}", path.display())),
    }
}

/// Reads an 8- or 16-bit graymap; 16-bit codes are scaled back to `[0, 255]`.
pub fn read_image(path: &Path) -> Result<IntensityImage> {
    let decoded = ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?
        .decode()
        .map_err(|e| image_error(path, e))?;
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    let values: Vec<f64> = match decoded {
        DynamicImage::ImageLuma8(img) => img.into_raw().into_iter().map(f64::from).collect(),
        DynamicImage::ImageLuma16(img) => img
            .into_raw()
            .into_iter()
            .map(|c| f64::from(c) / 65535.0 * MAX_INTENSITY)
            .collect(),
        other => {
            return Err(Error::format(format!(
                "{}: expected a grayscale image, got {:?}",
                path.display(),
                other.color()
            )))
        }
    };
    IntensityImage::from_vec(w, h, values)
}

pub fn write_image(img: &IntensityImage, path: &Path, depth: BitDepth) -> Result<()> {
    let (w, h) = (img.width() as u32, img.height() as u32);
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let header = GraymapHeader {
        encoding: SampleEncoding::Binary,
        width: w,
        height: h,
        maxwhite: depth.max_code() as u32,
    };
    let encoder = PnmEncoder::new(BufWriter::new(file)).with_header(header.into());
    let result = match depth {
        BitDepth::Eight => {
            let buf: Vec<u8> = img.pixels().map(|v| quantize(v, depth) as u8).collect();
            encoder.write_image(&buf, w, h, ExtendedColorType::L8)
        }
        BitDepth::Sixteen => {
            let buf: Vec<u8> = img
                .pixels()
                .flat_map(|v| quantize(v, depth).to_ne_bytes())
                .collect();
            encoder.write_image(&buf, w, h, ExtendedColorType::L16)
        }
    };
    result.map_err(|e| image_error(path, e))
}
