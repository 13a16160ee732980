//! File formats: spike streams, raw camera dumps, graymaps, calibration
//! documents and benchmark reports. All integers are little-endian.

mod calib_file;
mod pgm;
mod report;
mod spike_file;

pub use calib_file::{
    calibration_from_str, calibration_to_string, read_calibration, write_calibration,
    CALIBRATION_FORMAT, CALIBRATION_VERSION,
};
pub use pgm::{quantize, read_image, write_image, BitDepth};
pub use report::{
    report_to_csv, report_to_json, write_report, CSV_COLUMNS, REPORT_FORMAT, REPORT_VERSION,
};
pub use spike_file::{
    crop_for_pyramid, decode_raw, decode_stream, encode_stream, import_raw, read_stream,
    read_stream_with_header, write_stream, write_stream_with_tick, BitOrder, SpikeFileHeader,
    DEFAULT_TICK_NS, HEADER_LEN, RAW_HEIGHT, RAW_WIDTH, SPIKE_MAGIC,
};
