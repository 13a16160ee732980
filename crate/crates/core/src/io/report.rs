//! Benchmark report output: a CSV table and a JSON document.

use std::fs;
use std::path::Path;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::eval::BenchmarkReport;

pub const REPORT_FORMAT: &str = "spikeforge-benchmark";
pub const REPORT_VERSION: u32 = 1;

pub const CSV_COLUMNS: [&str; 9] = [
    "scene",
    "illumination",
    "method",
    "parameter",
    "stage",
    "psnr_db",
    "ssim",
    "runtime_s",
    "error",
];

/// Finite values as numbers; `inf`, `-inf` and `nan` as strings, since JSON
/// has no literals for them.
fn number(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or_else(|| Value::String(format_float(v)), Value::Number)
}

fn format_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        v.to_string()
    }
}

pub fn report_to_csv(report: &BenchmarkReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::format(e.to_string());
    w.write_record(CSV_COLUMNS).map_err(err)?;
    for r in &report.rows {
        w.write_record([
            r.scene.as_str(),
            r.illumination.name(),
            r.method.as_str(),
            r.parameter.as_str(),
            r.stage.name(),
            &format_float(r.psnr),
            &format_float(r.ssim),
            &format_float(r.runtime_seconds),
            r.error.as_deref().unwrap_or(""),
        ])
        .map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::format(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv writer emits utf-8"))
}

pub fn report_to_json(report: &BenchmarkReport) -> Value {
    let cells: Vec<Value> = report
        .cells
        .iter()
        .map(|c| {
            json!({
                "scene": c.scene,
                "target": c.target.name(),
                "theta": number(c.theta),
                "peak_density": number(c.peak_density),
                "class": c.class.name(),
                "seed": c.seed,
            })
        })
        .collect();
    let rows: Vec<Value> = report
        .rows
        .iter()
        .map(|r| {
            json!({
                "scene": r.scene,
                "illumination": r.illumination.name(),
                "method": r.method,
                "parameter": r.parameter,
                "stage": r.stage.name(),
                "psnr_db": number(r.psnr),
                "ssim": number(r.ssim),
                "runtime_s": number(r.runtime_seconds),
                "error": r.error,
            })
        })
        .collect();
    json!({
        "format": REPORT_FORMAT,
        "version": REPORT_VERSION,
        "seed": report.seed,
        "length": report.length,
        "eval_tick": report.eval_tick,
        "cells": cells,
        "rows": rows,
    })
}

/// Writes `<path>` as CSV when it ends in `.csv` and as JSON otherwise.
pub fn write_report(report: &BenchmarkReport, path: &Path) -> Result<()> {
    let text = if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
    {
        report_to_csv(report)?
    } else {
        serde_json::to_string_pretty(&report_to_json(report))
            .map_err(|e| Error::format(e.to_string()))?
    };
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
