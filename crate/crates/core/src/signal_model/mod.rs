//! Recordings, templates, segments, annotations and detection outputs.
//!
//! Every type here is immutable once constructed and is shared freely
//! between the preprocessing, detection and evaluation stages.

pub mod io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default sampling rate of the monopolar recordings.
pub const DEFAULT_SAMPLE_RATE_HZ: f64 = 256.0;

/// The 22-electrode 10-20 montage used when a recording file carries no header.
pub const DEFAULT_CHANNELS: [&str; 22] = [
    "Fp1", "Fp2", "F7", "F3", "Fz", "F4", "F8", "T3", "C3", "Cz", "C4", "T4", "T5", "P3", "Pz",
    "P4", "T6", "O1", "O2", "Oz", "FT10", "FT9",
];

/// Channel labels for `count` channels: the 10-20 list when it fits, `ch<i>` otherwise.
pub fn default_channel_labels(count: usize) -> Vec<String> {
    (0..count)
        .map(|i| match DEFAULT_CHANNELS.get(i) {
            Some(label) if count <= DEFAULT_CHANNELS.len() => (*label).to_string(),
            _ => format!("ch{i}"),
        })
        .collect()
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SignalError {
    #[error("recording has no channels or no samples")]
    EmptyRecording,
    #[error("ragged recording: channel {channel} has {got} samples, expected {expected}")]
    RaggedRows {
        channel: usize,
        expected: usize,
        got: usize,
    },
    #[error("sample rate must be positive, got {0}")]
    NonPositiveRate(f64),
    #[error("{labels} channel labels for {rows} data rows")]
    LabelCountMismatch { labels: usize, rows: usize },
    #[error("template {id} has {len} samples, at least 3 are required")]
    TemplateTooShort { id: String, len: usize },
    #[error("annotation event {index}: {reason}")]
    InvalidEvent { index: usize, reason: String },
    #[error("non-finite sample at channel {channel}, index {index}")]
    NonFinite { channel: usize, index: usize },
}

/// M channels × N samples, row `m` holding channel `m`. Amplitudes in microvolts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recording {
    channels: Vec<String>,
    sample_rate_hz: f64,
    data: Vec<Vec<f64>>,
}

impl Recording {
    pub fn new(
        channels: Vec<String>,
        sample_rate_hz: f64,
        data: Vec<Vec<f64>>,
    ) -> Result<Self, SignalError> {
        let rec = Recording {
            channels,
            sample_rate_hz,
            data,
        };
        validate_recording(&rec)?;
        Ok(rec)
    }

    pub fn channels(&self) -> &[String] {
        &self.channels
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn num_channels(&self) -> usize {
        self.data.len()
    }

    pub fn num_samples(&self) -> usize {
        self.data.first().map_or(0, Vec::len)
    }

    pub fn channel(&self, index: usize) -> &[f64] {
        &self.data[index]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.data
    }

    pub fn channel_index(&self, label: &str) -> Option<usize> {
        self.channels.iter().position(|c| c == label)
    }

    /// Same recording with every sample multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Recording {
        Recording {
            channels: self.channels.clone(),
            sample_rate_hz: self.sample_rate_hz,
            data: self
                .data
                .iter()
                .map(|row| row.iter().map(|v| v * factor).collect())
                .collect(),
        }
    }
}

/// Checks every structural invariant of a [`Recording`].
pub fn validate_recording(rec: &Recording) -> Result<(), SignalError> {
    if !(rec.sample_rate_hz > 0.0) || !rec.sample_rate_hz.is_finite() {
        return Err(SignalError::NonPositiveRate(rec.sample_rate_hz));
    }
    let Some(first) = rec.data.first() else {
        return Err(SignalError::EmptyRecording);
    };
    if first.is_empty() {
        return Err(SignalError::EmptyRecording);
    }
    let expected = first.len();
    for (channel, row) in rec.data.iter().enumerate() {
        if row.len() != expected {
            return Err(SignalError::RaggedRows {
                channel,
                expected,
                got: row.len(),
            });
        }
        if let Some(index) = row.iter().position(|v| !v.is_finite()) {
            return Err(SignalError::NonFinite { channel, index });
        }
    }
    if rec.channels.len() != rec.data.len() {
        return Err(SignalError::LabelCountMismatch {
            labels: rec.channels.len(),
            rows: rec.data.len(),
        });
    }
    Ok(())
}

/// A reference spike-and-wave waveform of length L.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Template {
    pub id: String,
    pub patient_id: Option<String>,
    samples: Vec<f64>,
    pub sample_rate_hz: f64,
}

impl Template {
    pub fn new(
        id: impl Into<String>,
        patient_id: Option<String>,
        samples: Vec<f64>,
        sample_rate_hz: f64,
    ) -> Result<Self, SignalError> {
        let id = id.into();
        if samples.len() < 3 {
            return Err(SignalError::TemplateTooShort {
                id,
                len: samples.len(),
            });
        }
        if !(sample_rate_hz > 0.0) {
            return Err(SignalError::NonPositiveRate(sample_rate_hz));
        }
        if let Some(index) = samples.iter().position(|v| !v.is_finite()) {
            return Err(SignalError::NonFinite { channel: 0, index });
        }
        Ok(Template {
            id,
            patient_id,
            samples,
            sample_rate_hz,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// One channel's window `[start_sample, end_sample)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub channel_index: usize,
    pub segment_index: usize,
    pub samples: Vec<f64>,
    pub start_sample: usize,
    pub end_sample: usize,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn start_s(&self, sample_rate_hz: f64) -> f64 {
        self.start_sample as f64 / sample_rate_hz
    }

    pub fn end_s(&self, sample_rate_hz: f64) -> f64 {
        self.end_sample as f64 / sample_rate_hz
    }
}

/// One annotated interval. A missing channel means the event spans every channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationEvent {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<String>,
    pub start_s: f64,
    pub end_s: f64,
    pub label: String,
}

impl AnnotationEvent {
    pub fn applies_to(&self, channel_label: &str) -> bool {
        self.channel.as_deref().is_none_or(|c| c == channel_label)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationSet {
    pub events: Vec<AnnotationEvent>,
}

impl AnnotationSet {
    pub fn new(events: Vec<AnnotationEvent>) -> Result<Self, SignalError> {
        let set = AnnotationSet { events };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<(), SignalError> {
        for (index, ev) in self.events.iter().enumerate() {
            if !ev.start_s.is_finite() || !ev.end_s.is_finite() {
                return Err(SignalError::InvalidEvent {
                    index,
                    reason: "non-finite time".into(),
                });
            }
            if ev.start_s < 0.0 {
                return Err(SignalError::InvalidEvent {
                    index,
                    reason: format!("negative start {}", ev.start_s),
                });
            }
            if ev.start_s >= ev.end_s {
                return Err(SignalError::InvalidEvent {
                    index,
                    reason: format!("start {} is not before end {}", ev.start_s, ev.end_s),
                });
            }
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

/// Binary class of a feature point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClassLabel {
    Swd,
    NonSwd,
}

impl ClassLabel {
    pub fn is_swd(self) -> bool {
        self == ClassLabel::Swd
    }

    /// +1 for SWD, −1 otherwise.
    pub fn sign(self) -> f64 {
        if self.is_swd() {
            1.0
        } else {
            -1.0
        }
    }
}

/// The `[tau, p]` classifier input and its class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeaturePoint {
    pub tau: f64,
    pub p: f64,
    pub label: ClassLabel,
}

impl FeaturePoint {
    pub fn new(tau: f64, p: f64, label: ClassLabel) -> Self {
        debug_assert!((-1.0..=1.0).contains(&tau), "tau out of range: {tau}");
        debug_assert!((0.0..=1.0).contains(&p), "p out of range: {p}");
        FeaturePoint { tau, p, label }
    }

    pub fn features(&self) -> [f64; 2] {
        [self.tau, self.p]
    }
}

/// Outcome of scoring one segment against the template set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionResult {
    pub channel_index: usize,
    pub segment_index: usize,
    pub window_len: usize,
    pub start_s: f64,
    pub end_s: f64,
    pub tau: f64,
    pub z: f64,
    pub p: f64,
    pub best_template_id: String,
    pub positive: bool,
    pub degenerate: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(n: usize) -> Vec<String> {
        default_channel_labels(n)
    }

    #[test]
    fn well_formed_recording_validates() {
        let rec = Recording::new(labels(2), 256.0, vec![vec![0.5; 512], vec![1.0; 512]]);
        assert!(rec.is_ok());
        let rec = rec.unwrap();
        assert_eq!(rec.num_channels(), 2);
        assert_eq!(rec.num_samples(), 512);
    }

    #[test]
    fn ragged_rows_rejected() {
        let err = Recording::new(labels(2), 256.0, vec![vec![0.0; 512], vec![0.0; 511]]);
        assert_eq!(
            err.unwrap_err(),
            SignalError::RaggedRows {
                channel: 1,
                expected: 512,
                got: 511
            }
        );
    }

    #[test]
    fn zero_rate_rejected() {
        let err = Recording::new(labels(1), 0.0, vec![vec![0.0; 8]]).unwrap_err();
        assert_eq!(err, SignalError::NonPositiveRate(0.0));
    }

    #[test]
    fn empty_recording_rejected() {
        assert_eq!(
            Recording::new(vec![], 256.0, vec![]).unwrap_err(),
            SignalError::EmptyRecording
        );
        assert_eq!(
            Recording::new(labels(1), 256.0, vec![vec![]]).unwrap_err(),
            SignalError::EmptyRecording
        );
    }

    #[test]
    fn default_labels_follow_the_montage() {
        let l = default_channel_labels(22);
        assert_eq!(l[0], "Fp1");
        assert_eq!(l[9], "Cz");
        assert_eq!(l[21], "FT9");
        assert_eq!(default_channel_labels(23)[22], "ch22");
    }

    #[test]
    fn template_needs_three_samples() {
        assert!(Template::new("t", None, vec![1.0, 2.0], 256.0).is_err());
        assert!(Template::new("t", None, vec![1.0, 2.0, 3.0], 256.0).is_ok());
    }

    #[test]
    fn annotation_times_checked() {
        let ev = |s, e| AnnotationEvent {
            channel: None,
            start_s: s,
            end_s: e,
            label: "SWD".into(),
        };
        assert!(AnnotationSet::new(vec![ev(1.0, 4.0)]).is_ok());
        assert!(AnnotationSet::new(vec![ev(4.0, 4.0)]).is_err());
        assert!(AnnotationSet::new(vec![ev(-1.0, 4.0)]).is_err());
    }

    #[test]
    fn channel_less_event_covers_every_channel() {
        let ev = AnnotationEvent {
            channel: None,
            start_s: 0.0,
            end_s: 1.0,
            label: "SWD".into(),
        };
        assert!(ev.applies_to("Cz"));
        let ev = AnnotationEvent {
            channel: Some("Cz".into()),
            ..ev
        };
        assert!(ev.applies_to("Cz"));
        assert!(!ev.applies_to("Fz"));
    }
}
