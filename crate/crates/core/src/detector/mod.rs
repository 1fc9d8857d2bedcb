//! Template scanning: every segment of every channel is scored against the
//! template set and thresholded on `(tau, p)`.
//!
//! Templates are grouped by length; each distinct length L produces its own
//! segmentation of the recording. Work units are `(channel, L)` pairs and run
//! concurrently; rows are sorted into `(channel, segment, L)` order afterwards
//! so the report does not depend on scheduling.

mod report;

pub use report::{
    detections_json, parse_scan_csv, read_scan_csv, write_detections_json, write_scan_csv,
    write_scan_csv_to,
};

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::ConfusionMatrix;
use crate::kendall::{self, Tail, TauVariant};
use crate::preprocess::{self, FilterConfig, PreprocessError, ScaleParams};
use crate::signal_model::{
    AnnotationSet, ClassLabel, DetectionResult, FeaturePoint, Recording, Segment, Template,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DetectError {
    #[error("no template compatible with a segment of length {len}")]
    NoCompatibleTemplate { len: usize },
    #[error("no templates left after filtering for patient {patient:?}")]
    NoTemplates { patient: Option<String> },
    #[error("annotation event {index} names unknown channel {channel:?}")]
    UnknownChannel { index: usize, channel: String },
    #[error("invalid detector config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
}

impl DetectError {
    /// True for errors caused by templates that do not fit the recording.
    pub fn is_incompatibility(&self) -> bool {
        matches!(
            self,
            DetectError::NoCompatibleTemplate { .. } | DetectError::NoTemplates { .. }
        )
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateAggregation {
    #[default]
    MaxTau,
}

/// Where the moving average is applied.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterScope {
    /// Filter each segment after segmentation.
    #[default]
    PerSegment,
    /// Filter the whole channel, then segment.
    WholeChannel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    pub tau_threshold: f64,
    pub p_threshold: f64,
    pub filter: FilterConfig,
    pub scale: ScaleParams,
    pub template_aggregation: TemplateAggregation,
    pub patient_filter: Option<String>,
    pub filter_scope: FilterScope,
    pub variant: TauVariant,
    pub tail: Tail,
    /// Fraction of a segment's duration that must fall inside annotated SWD
    /// events for the segment to count as truth-positive.
    pub overlap_frac: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            tau_threshold: 0.5,
            p_threshold: 0.05,
            filter: FilterConfig::default(),
            scale: ScaleParams::default(),
            template_aggregation: TemplateAggregation::MaxTau,
            patient_filter: None,
            filter_scope: FilterScope::PerSegment,
            variant: TauVariant::TauB,
            tail: Tail::TwoSided,
            overlap_frac: 0.5,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<(), DetectError> {
        let bad = |m: String| Err(DetectError::InvalidConfig(m));
        if !(-1.0..=1.0).contains(&self.tau_threshold) {
            return bad(format!(
                "tau_threshold {} outside [-1, 1]",
                self.tau_threshold
            ));
        }
        if !(self.p_threshold > 0.0 && self.p_threshold <= 1.0) {
            return bad(format!("p_threshold {} outside (0, 1]", self.p_threshold));
        }
        if self.filter.k == 0 {
            return bad("filter.k must be >= 1".into());
        }
        if !(self.overlap_frac > 0.0 && self.overlap_frac <= 1.0) {
            return bad(format!("overlap_frac {} outside (0, 1]", self.overlap_frac));
        }
        self.scale
            .validate()
            .map_err(|e| DetectError::InvalidConfig(e.to_string()))
    }

    pub fn is_positive(&self, tau: f64, p: f64) -> bool {
        tau >= self.tau_threshold && p <= self.p_threshold
    }
}

/// A template already filtered and scaled.
#[derive(Debug, Clone)]
struct PreparedTemplate {
    id: String,
    values: Vec<f64>,
}

/// Prepared templates grouped by length, ids ascending within each group.
fn prepare_templates(
    templates: &[Template],
    cfg: &DetectorConfig,
) -> Result<BTreeMap<usize, Vec<PreparedTemplate>>, DetectError> {
    let mut groups: BTreeMap<usize, Vec<PreparedTemplate>> = BTreeMap::new();
    for t in select_templates(templates, cfg.patient_filter.as_deref()) {
        let scaled = preprocess::preprocess_waveform(t.samples(), cfg.filter, cfg.scale)?;
        // A flat template has no rank structure to match against.
        if scaled.degenerate {
            continue;
        }
        groups.entry(t.len()).or_default().push(PreparedTemplate {
            id: t.id.clone(),
            values: scaled.values,
        });
    }
    for group in groups.values_mut() {
        group.sort_by(|a, b| a.id.cmp(&b.id));
    }
    Ok(groups)
}

/// Templates belonging to `patient`, or all of them when no patient is given.
pub fn select_templates<'a>(templates: &'a [Template], patient: Option<&str>) -> Vec<&'a Template> {
    templates
        .iter()
        .filter(|t| patient.is_none_or(|p| t.patient_id.as_deref() == Some(p)))
        .collect()
}

struct Score {
    tau: f64,
    z: f64,
    p: f64,
    best: String,
    degenerate: bool,
}

impl Score {
    fn degenerate() -> Self {
        Score {
            tau: 0.0,
            z: 0.0,
            p: 1.0,
            best: String::new(),
            degenerate: true,
        }
    }
}

/// Scores a filtered segment against prepared templates of the same length.
fn score_filtered(filtered: &[f64], group: &[PreparedTemplate], cfg: &DetectorConfig) -> Score {
    let scaled = preprocess::minmax_scale(filtered, cfg.scale);
    if scaled.degenerate {
        return Score::degenerate();
    }
    let mut best: Option<Score> = None;
    // `group` is sorted by id, so a strict comparison keeps the lowest id on ties.
    for t in group {
        let Ok(r) = kendall::tau_fast(&scaled.values, &t.values, cfg.variant, cfg.tail) else {
            continue;
        };
        if best.as_ref().is_none_or(|b| r.tau > b.tau) {
            best = Some(Score {
                tau: r.tau,
                z: r.z,
                p: r.p_value,
                best: t.id.clone(),
                degenerate: false,
            });
        }
    }
    best.unwrap_or_else(Score::degenerate)
}

fn to_result(seg: &Segment, score: Score, rate: f64, cfg: &DetectorConfig) -> DetectionResult {
    DetectionResult {
        channel_index: seg.channel_index,
        segment_index: seg.segment_index,
        window_len: seg.len(),
        start_s: seg.start_s(rate),
        end_s: seg.end_s(rate),
        positive: !score.degenerate && cfg.is_positive(score.tau, score.p),
        tau: score.tau,
        z: score.z,
        p: score.p,
        best_template_id: score.best,
        degenerate: score.degenerate,
    }
}

/// Scores one segment against every compatible template and keeps the
/// best (highest tau) match.
///
/// With [`FilterScope::WholeChannel`] the segment samples are taken to be
/// already filtered.
pub fn score_segment(
    seg: &Segment,
    templates: &[Template],
    cfg: &DetectorConfig,
    sample_rate_hz: f64,
) -> Result<DetectionResult, DetectError> {
    cfg.validate()?;
    let groups = prepare_templates(templates, cfg)?;
    let compatible = select_templates(templates, cfg.patient_filter.as_deref())
        .iter()
        .any(|t| t.len() == seg.len());
    if !compatible {
        return Err(DetectError::NoCompatibleTemplate { len: seg.len() });
    }
    let group = groups.get(&seg.len()).map(Vec::as_slice).unwrap_or(&[]);
    let filtered = match cfg.filter_scope {
        FilterScope::PerSegment => preprocess::moving_average(&seg.samples, cfg.filter.k)?,
        FilterScope::WholeChannel => seg.samples.clone(),
    };
    let score = score_filtered(&filtered, group, cfg);
    Ok(to_result(seg, score, sample_rate_hz, cfg))
}

/// A template length that could not be scanned because the recording is
/// shorter than it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanWarning {
    pub window_len: usize,
    pub signal_len: usize,
}

impl std::fmt::Display for ScanWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "skipped template length {}: recording has only {} samples",
            self.window_len, self.signal_len
        )
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelCounts {
    pub scanned: usize,
    pub positives: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub channels: Vec<String>,
    pub sample_rate_hz: f64,
    pub rows: Vec<DetectionResult>,
    pub warnings: Vec<ScanWarning>,
}

impl ScanReport {
    pub fn segments_scanned(&self) -> usize {
        self.rows.len()
    }

    pub fn positives(&self) -> usize {
        self.rows.iter().filter(|r| r.positive).count()
    }

    pub fn per_channel(&self) -> Vec<ChannelCounts> {
        let mut counts = vec![ChannelCounts::default(); self.channels.len()];
        for r in &self.rows {
            let c = &mut counts[r.channel_index];
            c.scanned += 1;
            c.positives += usize::from(r.positive);
        }
        counts
    }

    pub fn channel_label(&self, row: &DetectionResult) -> &str {
        &self.channels[row.channel_index]
    }
}

/// Segments and scores every channel for every distinct template length.
pub fn scan_recording(
    rec: &Recording,
    templates: &[Template],
    cfg: &DetectorConfig,
) -> Result<ScanReport, DetectError> {
    cfg.validate()?;
    if select_templates(templates, cfg.patient_filter.as_deref()).is_empty() {
        return Err(DetectError::NoTemplates {
            patient: cfg.patient_filter.clone(),
        });
    }
    let groups = prepare_templates(templates, cfg)?;
    let n = rec.num_samples();
    let rate = rec.sample_rate_hz();

    let mut warnings = Vec::new();
    let mut lengths = Vec::new();
    for &len in groups.keys() {
        if len > n {
            warnings.push(ScanWarning {
                window_len: len,
                signal_len: n,
            });
        } else {
            lengths.push(len);
        }
    }

    let units: Vec<(usize, usize)> = (0..rec.num_channels())
        .flat_map(|ch| lengths.iter().map(move |&len| (ch, len)))
        .collect();

    let mut rows: Vec<DetectionResult> = units
        .par_iter()
        .map(|&(ch, len)| -> Result<Vec<DetectionResult>, DetectError> {
            let group = &groups[&len];
            let channel = rec.channel(ch);
            match cfg.filter_scope {
                FilterScope::PerSegment => preprocess::segment_channel(channel, len, ch)?
                    .iter()
                    .map(|seg| {
                        let filtered = preprocess::moving_average(&seg.samples, cfg.filter.k)?;
                        Ok(to_result(
                            seg,
                            score_filtered(&filtered, group, cfg),
                            rate,
                            cfg,
                        ))
                    })
                    .collect(),
                FilterScope::WholeChannel => {
                    let filtered = preprocess::moving_average(channel, cfg.filter.k)?;
                    Ok(preprocess::segment_channel(&filtered, len, ch)?
                        .iter()
                        .map(|seg| {
                            to_result(seg, score_filtered(&seg.samples, group, cfg), rate, cfg)
                        })
                        .collect())
                }
            }
        })
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .flatten()
        .collect();

    rows.sort_by_key(|r| (r.channel_index, r.segment_index, r.window_len));

    Ok(ScanReport {
        channels: rec.channels().to_vec(),
        sample_rate_hz: rate,
        rows,
        warnings,
    })
}

/// Truth labels for every report row, plus the confusion matrix they imply.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconciliation {
    pub truth: Vec<bool>,
    pub confusion: ConfusionMatrix,
}

impl Reconciliation {
    /// `[tau, p]` features labelled by annotation truth.
    pub fn features(&self, report: &ScanReport) -> Vec<FeaturePoint> {
        report
            .rows
            .iter()
            .zip(&self.truth)
            .map(|(r, &t)| FeaturePoint {
                tau: r.tau,
                p: r.p,
                label: if t {
                    ClassLabel::Swd
                } else {
                    ClassLabel::NonSwd
                },
            })
            .collect()
    }
}

fn is_swd_event(label: &str) -> bool {
    label.eq_ignore_ascii_case("swd")
}

fn check_channels(report: &ScanReport, truth: &AnnotationSet) -> Result<(), DetectError> {
    for (index, ev) in truth.events.iter().enumerate() {
        if let Some(ch) = &ev.channel {
            if !report.channels.iter().any(|c| c == ch) {
                return Err(DetectError::UnknownChannel {
                    index,
                    channel: ch.clone(),
                });
            }
        }
    }
    Ok(())
}

/// Length of the union of `intervals`.
fn union_length(mut intervals: Vec<(f64, f64)>) -> f64 {
    intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut total = 0.0;
    let mut current: Option<(f64, f64)> = None;
    for (s, e) in intervals {
        match current {
            Some((cs, ce)) if s <= ce => current = Some((cs, ce.max(e))),
            Some((cs, ce)) => {
                total += ce - cs;
                current = Some((s, e));
            }
            None => current = Some((s, e)),
        }
    }
    total + current.map_or(0.0, |(s, e)| e - s)
}

/// Labels each row truth-positive when at least `overlap_frac` of its
/// duration lies inside events labelled `SWD` (case-insensitive) on its
/// channel or on all channels, then tallies TP/FP/TN/FN.
pub fn match_annotations(
    report: &ScanReport,
    truth: &AnnotationSet,
    overlap_frac: f64,
) -> Result<Reconciliation, DetectError> {
    check_channels(report, truth)?;
    let mut confusion = ConfusionMatrix::default();
    let truth_labels: Vec<bool> = report
        .rows
        .iter()
        .map(|row| {
            let label = report.channel_label(row);
            let overlaps: Vec<(f64, f64)> = truth
                .events
                .iter()
                .filter(|ev| is_swd_event(&ev.label) && ev.applies_to(label))
                .filter_map(|ev| {
                    let s = ev.start_s.max(row.start_s);
                    let e = ev.end_s.min(row.end_s);
                    (e > s).then_some((s, e))
                })
                .collect();
            let duration = row.end_s - row.start_s;
            let covered = union_length(overlaps);
            let is_true = covered >= overlap_frac * duration - 1e-9 * duration;
            confusion.record(row.positive, is_true);
            is_true
        })
        .collect();
    Ok(Reconciliation {
        truth: truth_labels,
        confusion,
    })
}

/// For each SWD event, whether some positive row on an applicable channel overlaps it at all.
pub fn event_hits(report: &ScanReport, truth: &AnnotationSet) -> Vec<bool> {
    truth
        .events
        .iter()
        .filter(|ev| is_swd_event(&ev.label))
        .map(|ev| {
            report.rows.iter().any(|r| {
                r.positive
                    && ev.applies_to(report.channel_label(r))
                    && r.start_s < ev.end_s
                    && ev.start_s < r.end_s
            })
        })
        .collect()
}
