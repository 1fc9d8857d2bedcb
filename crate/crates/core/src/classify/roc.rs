use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ClassifyError;
use crate::fmt::format_sig;
use crate::signal_model::io::FormatError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

/// Points in order of decreasing threshold, starting at `(0, 0)` for an
/// infinite threshold and ending at `(1, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

/// Sweeps every distinct score as a threshold (`score >= threshold` is
/// positive). Tied scores move the curve diagonally, so AUC counts a tie
/// as half a correct ordering.
pub fn roc(scores: &[(f64, bool)]) -> Result<RocCurve, ClassifyError> {
    if let Some(i) = scores.iter().position(|(s, _)| s.is_nan()) {
        return Err(ClassifyError::NonFinite(i));
    }
    let positives = scores.iter().filter(|(_, t)| *t).count();
    let negatives = scores.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(ClassifyError::SingleClass);
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut points = vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut auc = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let threshold = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == threshold {
            if sorted[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let prev = *points.last().expect("non-empty");
        let point = RocPoint {
            threshold,
            fpr: fp as f64 / negatives as f64,
            tpr: tp as f64 / positives as f64,
        };
        auc += (point.fpr - prev.fpr) * (point.tpr + prev.tpr) / 2.0;
        points.push(point);
    }
    Ok(RocCurve { points, auc })
}

pub fn write_roc_csv_to<W: Write>(curve: &RocCurve, out: W) -> Result<(), FormatError> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["threshold", "fpr", "tpr"])?;
    for p in &curve.points {
        let threshold = if p.threshold.is_infinite() {
            if p.threshold > 0.0 { "inf" } else { "-inf" }.to_string()
        } else {
            format_sig(p.threshold)
        };
        wtr.write_record([threshold, format_sig(p.fpr), format_sig(p.tpr)])?;
    }
    wtr.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_roc_csv(curve: &RocCurve, path: &Path) -> Result<(), FormatError> {
    let file = std::fs::File::create(path).map_err(|source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_roc_csv_to(curve, std::io::BufWriter::new(file))
}
