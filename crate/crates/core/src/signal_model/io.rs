//! Recording CSV, template CSV and annotation JSON.
//!
//! Recording CSV: an optional header row (detected by a non-numeric first
//! row), an optional leading `t_s` column, then one column per channel.
//! Template CSV: one sample per line, `#` comment lines may carry
//! `patient_id=<id>` and `sample_rate_hz=<f>`.
//! Feature CSV: header `tau,p,label`, label `1` for SWD and `0` otherwise.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::{
    default_channel_labels, AnnotationSet, ClassLabel, FeaturePoint, Recording, SignalError,
    Template, DEFAULT_SAMPLE_RATE_HZ,
};
use crate::fmt::format_sig;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("annotation JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Signal(#[from] SignalError),
}

fn open(path: &Path) -> Result<File, FormatError> {
    File::open(path).map_err(|source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>, FormatError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| FormatError::Io {
            path: path.to_path_buf(),
            source,
        })
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> FormatError + '_ {
    move |source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Parses a recording. The rate comes from the `t_s` column when present,
/// otherwise `fallback_rate_hz` is used.
pub fn parse_recording<R: Read>(
    reader: R,
    fallback_rate_hz: f64,
) -> Result<Recording, FormatError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut header: Option<Vec<String>> = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;

    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let line = i + 1;
        if record.iter().all(str::is_empty) {
            continue;
        }
        if i == 0 && record.iter().any(|f| f.parse::<f64>().is_err()) {
            header = Some(record.iter().map(str::to_string).collect());
            width = Some(record.len());
            continue;
        }
        let values = record
            .iter()
            .map(|f| {
                f.parse::<f64>().map_err(|_| FormatError::Parse {
                    line,
                    message: format!("not a number: {f:?}"),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        match width {
            Some(w) if w != values.len() => {
                return Err(FormatError::Parse {
                    line,
                    message: format!("expected {w} fields, found {}", values.len()),
                })
            }
            None => width = Some(values.len()),
            _ => {}
        }
        rows.push(values);
    }

    let width = width.unwrap_or(0);
    let has_time = header
        .as_ref()
        .and_then(|h| h.first())
        .is_some_and(|c| c == "t_s");
    let first_channel = usize::from(has_time);
    let labels = match &header {
        Some(h) => h[first_channel..].to_vec(),
        None => default_channel_labels(width),
    };

    let n_channels = width.saturating_sub(first_channel);
    let mut data = vec![Vec::with_capacity(rows.len()); n_channels];
    for row in &rows {
        for (ch, v) in row[first_channel..].iter().enumerate() {
            data[ch].push(*v);
        }
    }

    let rate = if has_time {
        infer_rate(rows.iter().map(|r| r[0])).unwrap_or(fallback_rate_hz)
    } else {
        fallback_rate_hz
    };
    Ok(Recording::new(labels, rate, data)?)
}

/// Rate implied by an evenly spaced time column, snapped to an integer when
/// within one part per million.
fn infer_rate(times: impl Iterator<Item = f64>) -> Option<f64> {
    let times: Vec<f64> = times.collect();
    let (first, last) = (*times.first()?, *times.last()?);
    if times.len() < 2 || !(last > first) {
        return None;
    }
    let rate = (times.len() - 1) as f64 / (last - first);
    let snapped = rate.round();
    if ((rate - snapped) / rate).abs() < 1e-6 {
        Some(snapped)
    } else {
        Some(rate)
    }
}

pub fn read_recording(path: &Path, fallback_rate_hz: f64) -> Result<Recording, FormatError> {
    parse_recording(open(path)?, fallback_rate_hz)
}

/// Writes `t_s` plus one column per channel, 12 significant digits.
pub fn write_recording_to<W: Write>(rec: &Recording, out: W) -> Result<(), FormatError> {
    let mut wtr = csv::Writer::from_writer(out);
    let mut header = vec!["t_s".to_string()];
    header.extend(rec.channels().iter().cloned());
    wtr.write_record(&header)?;
    let rate = rec.sample_rate_hz();
    let mut fields = Vec::with_capacity(rec.num_channels() + 1);
    for n in 0..rec.num_samples() {
        fields.clear();
        fields.push(format_sig(n as f64 / rate));
        fields.extend(rec.rows().iter().map(|row| format_sig(row[n])));
        wtr.write_record(&fields)?;
    }
    wtr.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_recording(rec: &Recording, path: &Path) -> Result<(), FormatError> {
    write_recording_to(rec, create(path)?)
}

/// Parses a single-column template; `id` normally comes from the file stem.
pub fn parse_template<R: Read>(
    reader: R,
    id: &str,
    fallback_rate_hz: f64,
) -> Result<Template, FormatError> {
    let mut patient_id = None;
    let mut rate = fallback_rate_hz;
    let mut samples = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line.map_err(io_err(Path::new(id)))?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        if let Some(comment) = text.strip_prefix('#') {
            let comment = comment.trim();
            if let Some(pid) = comment.strip_prefix("patient_id=") {
                patient_id = Some(pid.trim().to_string());
            } else if let Some(r) = comment.strip_prefix("sample_rate_hz=") {
                rate = r.trim().parse().map_err(|_| FormatError::Parse {
                    line: i + 1,
                    message: format!("bad sample rate {r:?}"),
                })?;
            }
            continue;
        }
        let v: f64 = text.parse().map_err(|_| FormatError::Parse {
            line: i + 1,
            message: format!("not a number: {text:?}"),
        })?;
        samples.push(v);
    }
    Ok(Template::new(id, patient_id, samples, rate)?)
}

pub fn read_template(path: &Path, fallback_rate_hz: f64) -> Result<Template, FormatError> {
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_template(open(path)?, &id, fallback_rate_hz)
}

/// Reads every `*.csv` in `dir`, ordered by file name.
pub fn read_template_dir(dir: &Path, fallback_rate_hz: f64) -> Result<Vec<Template>, FormatError> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| read_template(p, fallback_rate_hz))
        .collect()
}

pub fn write_template_to<W: Write>(t: &Template, mut out: W) -> std::io::Result<()> {
    if let Some(pid) = &t.patient_id {
        writeln!(out, "# patient_id={pid}")?;
    }
    if t.sample_rate_hz != DEFAULT_SAMPLE_RATE_HZ {
        writeln!(out, "# sample_rate_hz={}", format_sig(t.sample_rate_hz))?;
    }
    for v in t.samples() {
        writeln!(out, "{}", format_sig(*v))?;
    }
    out.flush()
}

pub fn write_template(t: &Template, path: &Path) -> Result<(), FormatError> {
    write_template_to(t, create(path)?).map_err(io_err(path))
}

pub fn parse_annotations(text: &str) -> Result<AnnotationSet, FormatError> {
    let set: AnnotationSet = serde_json::from_str(text)?;
    set.validate()?;
    Ok(set)
}

pub fn read_annotations(path: &Path) -> Result<AnnotationSet, FormatError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    parse_annotations(&text)
}

/// Serializes annotations with times rounded to 12 significant digits.
pub fn annotations_to_json(set: &AnnotationSet) -> String {
    let mut rounded = set.clone();
    for ev in &mut rounded.events {
        ev.start_s = crate::fmt::round_sig(ev.start_s);
        ev.end_s = crate::fmt::round_sig(ev.end_s);
    }
    serde_json::to_string_pretty(&rounded).expect("annotation set serializes")
}

pub fn write_annotations(set: &AnnotationSet, path: &Path) -> Result<(), FormatError> {
    let mut out = create(path)?;
    out.write_all(annotations_to_json(set).as_bytes())
        .and_then(|_| out.write_all(b"\n"))
        .and_then(|_| out.flush())
        .map_err(io_err(path))
}

pub fn write_features_to<W: Write>(points: &[FeaturePoint], out: W) -> Result<(), FormatError> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["tau", "p", "label"])?;
    for pt in points {
        let label = if pt.label.is_swd() { "1" } else { "0" };
        wtr.write_record([format_sig(pt.tau).as_str(), &format_sig(pt.p), label])?;
    }
    wtr.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_features(points: &[FeaturePoint], path: &Path) -> Result<(), FormatError> {
    write_features_to(points, create(path)?)
}

/// Accepts `1`/`0`, `swd`/`non_swd` and `true`/`false` labels.
pub fn parse_features<R: Read>(reader: R) -> Result<Vec<FeaturePoint>, FormatError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| FormatError::Parse {
                line: 1,
                message: format!("missing column {name:?}"),
            })
    };
    let (ct, cp, cl) = (col("tau")?, col("p")?, col("label")?);
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let num = |c: usize, name: &str| -> Result<f64, FormatError> {
            let text = rec.get(c).unwrap_or("");
            text.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| FormatError::Parse {
                    line,
                    message: format!("{name}: not a finite number: {text:?}"),
                })
        };
        let tau = num(ct, "tau")?;
        let p = num(cp, "p")?;
        if !(-1.0..=1.0).contains(&tau) || !(0.0..=1.0).contains(&p) {
            return Err(FormatError::Parse {
                line,
                message: format!("tau {tau} or p {p} out of range"),
            });
        }
        let label = match rec.get(cl).unwrap_or("").to_ascii_lowercase().as_str() {
            "1" | "swd" | "true" => ClassLabel::Swd,
            "0" | "non_swd" | "false" => ClassLabel::NonSwd,
            other => {
                return Err(FormatError::Parse {
                    line,
                    message: format!("unknown label {other:?}"),
                })
            }
        };
        out.push(FeaturePoint { tau, p, label });
    }
    Ok(out)
}

pub fn read_features(path: &Path) -> Result<Vec<FeaturePoint>, FormatError> {
    parse_features(open(path)?)
}
