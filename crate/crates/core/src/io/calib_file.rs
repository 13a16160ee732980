//! Calibration documents: JSON with the four per-pixel maps stored as
//! base64-encoded little-endian `f64` arrays in row-major order.

use std::fs;
use std::path::Path;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::calibration::CalibrationData;
use crate::error::{Error, Result};
use crate::image::ClockParams;

pub const CALIBRATION_FORMAT: &str = "spikeforge-calibration";
pub const CALIBRATION_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Maps {
    l_d: String,
    r: String,
    q_r: String,
    d_dark: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct CalibrationDocument {
    format: String,
    version: u32,
    width: usize,
    height: usize,
    reference_pixel: [usize; 2],
    tick_seconds: f64,
    max_intensity: f64,
    masked_pixels: usize,
    maps: Maps,
}

fn encode_map(m: &Array2<f64>) -> String {
    let bytes: Vec<u8> = m.iter().flat_map(|v| v.to_le_bytes()).collect();
    BASE64.encode(bytes)
}

fn decode_map(name: &str, text: &str, width: usize, height: usize) -> Result<Array2<f64>> {
    let bytes = BASE64
        .decode(text)
        .map_err(|e| Error::format(format!("map {name}: {e}")))?;
    if bytes.len() != width * height * 8 {
        return Err(Error::format(format!(
            "map {name} holds {} bytes, {width}x{height} needs {}",
            bytes.len(),
            width * height * 8
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok(Array2::from_shape_vec((height, width), values).expect("length checked"))
}

pub fn calibration_to_string(calib: &CalibrationData) -> Result<String> {
    let doc = CalibrationDocument {
        format: CALIBRATION_FORMAT.to_string(),
        version: CALIBRATION_VERSION,
        width: calib.width(),
        height: calib.height(),
        reference_pixel: [calib.reference_pixel.0, calib.reference_pixel.1],
        tick_seconds: calib.clock.tick_seconds,
        max_intensity: calib.clock.max_intensity,
        masked_pixels: calib.masked_pixels,
        maps: Maps {
            l_d: encode_map(&calib.l_d),
            r: encode_map(&calib.r),
            q_r: encode_map(&calib.q_r),
            d_dark: encode_map(&calib.d_dark),
        },
    };
    serde_json::to_string_pretty(&doc).map_err(|e| Error::format(e.to_string()))
}

pub fn calibration_from_str(text: &str) -> Result<CalibrationData> {
    let doc: CalibrationDocument =
        serde_json::from_str(text).map_err(|e| Error::format(format!("calibration file: {e}")))?;
    if doc.format != CALIBRATION_FORMAT {
        return Err(Error::format(format!(
            "not a calibration file: {:?}",
            doc.format
        )));
    }
    if doc.version != CALIBRATION_VERSION {
        return Err(Error::format(format!(
            "unsupported calibration version {}",
            doc.version
        )));
    }
    let (w, h) = (doc.width, doc.height);
    let calib = CalibrationData {
        l_d: decode_map("l_d", &doc.maps.l_d, w, h)?,
        r: decode_map("r", &doc.maps.r, w, h)?,
        q_r: decode_map("q_r", &doc.maps.q_r, w, h)?,
        d_dark: decode_map("d_dark", &doc.maps.d_dark, w, h)?,
        reference_pixel: (doc.reference_pixel[0], doc.reference_pixel[1]),
        clock: ClockParams {
            tick_seconds: doc.tick_seconds,
            max_intensity: doc.max_intensity,
        },
        masked_pixels: doc.masked_pixels,
    };
    calib.validate()?;
    Ok(calib)
}

pub fn write_calibration(calib: &CalibrationData, path: &Path) -> Result<()> {
    fs::write(path, calibration_to_string(calib)?).map_err(|e| Error::io(path, e))
}

pub fn read_calibration(path: &Path) -> Result<CalibrationData> {
    calibration_from_str(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn sample() -> CalibrationData {
        let mut c = CalibrationData::from_maps(
            array![[0.0, 1.5, 19.75], [3.0, 0.1, 7.0]],
            array![[1.0, 0.93, 1.07], [0.999_999_9, 1.1, 0.9]],
            (2, 1),
            ClockParams::new(40e-6).unwrap(),
        )
        .unwrap();
        c.masked_pixels = 1;
        c
    }

    #[test]
    fn bit_exact_round_trip() {
        let c = sample();
        let back = calibration_from_str(&calibration_to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        assert!(back.d_dark[(0, 0)].is_infinite());
        for (a, b) in c.q_r.iter().zip(back.q_r.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn map_encoding_is_little_endian() {
        let text = encode_map(&array![[1.0]]);
        assert_eq!(BASE64.decode(text).unwrap(), 1.0f64.to_le_bytes());
    }

    #[test]
    fn rejects_bad_documents() {
        let good = calibration_to_string(&sample()).unwrap();
        let v2 = good.replace("\"version\": 1", "\"version\": 2");
        assert!(
            matches!(calibration_from_str(&v2), Err(Error::Format(m)) if m.contains("version"))
        );
        let fmt = good.replace(CALIBRATION_FORMAT, "other");
        assert!(calibration_from_str(&fmt).is_err());
        let wide = good.replace("\"width\": 3", "\"width\": 4");
        assert!(calibration_from_str(&wide).is_err());
        assert!(calibration_from_str("{").is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        write_calibration(&sample(), &p).unwrap();
        assert_eq!(read_calibration(&p).unwrap(), sample());
    }
}
