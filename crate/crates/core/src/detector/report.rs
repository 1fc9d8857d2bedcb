//! Scan report CSV and detections JSON.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::Serialize;

use super::ScanReport;
use crate::fmt::{format_sig, round_sig};
use crate::signal_model::io::FormatError;
use crate::signal_model::DetectionResult;

const COLUMNS: [&str; 11] = [
    "channel",
    "segment",
    "L",
    "start_s",
    "end_s",
    "tau",
    "z",
    "p",
    "best_template",
    "positive",
    "degenerate",
];

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

pub fn write_scan_csv_to<W: Write>(report: &ScanReport, out: W) -> Result<(), FormatError> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(COLUMNS)?;
    for r in &report.rows {
        wtr.write_record([
            report.channel_label(r).to_string(),
            r.segment_index.to_string(),
            r.window_len.to_string(),
            format_sig(r.start_s),
            format_sig(r.end_s),
            format_sig(r.tau),
            format_sig(r.z),
            format_sig(r.p),
            r.best_template_id.clone(),
            flag(r.positive).to_string(),
            flag(r.degenerate).to_string(),
        ])?;
    }
    wtr.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_scan_csv(report: &ScanReport, path: &Path) -> Result<(), FormatError> {
    let file = File::create(path).map_err(|source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_scan_csv_to(report, BufWriter::new(file))
}

/// Reads a scan report back. Channel order is the order of first
/// appearance; the sample rate is recovered from the first row's length
/// and duration.
pub fn parse_scan_csv<R: Read>(reader: R) -> Result<ScanReport, FormatError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != COLUMNS {
        return Err(FormatError::Parse {
            line: 1,
            message: format!("expected columns {}", COLUMNS.join(",")),
        });
    }
    let mut channels: Vec<String> = Vec::new();
    let mut rows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let line = i + 2;
        let err = |what: &str| FormatError::Parse {
            line,
            message: format!("bad {what}"),
        };
        let num = |idx: usize, what: &str| -> Result<f64, FormatError> {
            record[idx].parse::<f64>().map_err(|_| err(what))
        };
        let int = |idx: usize, what: &str| -> Result<usize, FormatError> {
            record[idx].parse::<usize>().map_err(|_| err(what))
        };
        let boolean = |idx: usize, what: &str| -> Result<bool, FormatError> {
            match &record[idx] {
                "1" | "true" => Ok(true),
                "0" | "false" => Ok(false),
                _ => Err(err(what)),
            }
        };
        let label = record[0].to_string();
        let channel_index = match channels.iter().position(|c| *c == label) {
            Some(i) => i,
            None => {
                channels.push(label);
                channels.len() - 1
            }
        };
        let row = DetectionResult {
            channel_index,
            segment_index: int(1, "segment")?,
            window_len: int(2, "L")?,
            start_s: num(3, "start_s")?,
            end_s: num(4, "end_s")?,
            tau: num(5, "tau")?,
            z: num(6, "z")?,
            p: num(7, "p")?,
            best_template_id: record[8].to_string(),
            positive: boolean(9, "positive")?,
            degenerate: boolean(10, "degenerate")?,
        };
        if !(row.end_s > row.start_s) {
            return Err(err("time span"));
        }
        rows.push(row);
    }
    let sample_rate_hz = rows
        .first()
        .map(|r| {
            let rate = r.window_len as f64 / (r.end_s - r.start_s);
            if (rate - rate.round()).abs() < 1e-6 * rate {
                rate.round()
            } else {
                rate
            }
        })
        .unwrap_or(crate::signal_model::DEFAULT_SAMPLE_RATE_HZ);
    Ok(ScanReport {
        channels,
        sample_rate_hz,
        rows,
        warnings: Vec::new(),
    })
}

pub fn read_scan_csv(path: &Path) -> Result<ScanReport, FormatError> {
    let file = File::open(path).map_err(|source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_scan_csv(file)
}

#[derive(Serialize)]
struct Detection<'a> {
    channel: &'a str,
    channel_index: usize,
    segment_index: usize,
    window_len: usize,
    start_s: f64,
    end_s: f64,
    tau: f64,
    z: f64,
    p: f64,
    best_template_id: &'a str,
    positive: bool,
}

#[derive(Serialize)]
struct Detections<'a> {
    detections: Vec<Detection<'a>>,
}

/// Positive rows only, as pretty-printed JSON.
pub fn detections_json(report: &ScanReport) -> String {
    let detections = report
        .rows
        .iter()
        .filter(|r| r.positive)
        .map(|r| Detection {
            channel: report.channel_label(r),
            channel_index: r.channel_index,
            segment_index: r.segment_index,
            window_len: r.window_len,
            start_s: round_sig(r.start_s),
            end_s: round_sig(r.end_s),
            tau: round_sig(r.tau),
            z: round_sig(r.z),
            p: round_sig(r.p),
            best_template_id: &r.best_template_id,
            positive: r.positive,
        })
        .collect();
    serde_json::to_string_pretty(&Detections { detections }).expect("detections serialize")
}

pub fn write_detections_json(report: &ScanReport, path: &Path) -> Result<(), FormatError> {
    let io = |source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut f = BufWriter::new(File::create(path).map_err(io)?);
    f.write_all(detections_json(report).as_bytes())
        .and_then(|_| f.write_all(b"\n"))
        .and_then(|_| f.flush())
        .map_err(io)
}
