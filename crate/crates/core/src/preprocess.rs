//! Segmentation, k-point moving average and min–max scaling.
//!
//! These three stages run before any rank correlation is computed. All
//! functions are pure.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signal_model::{Segment, Template};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PreprocessError {
    #[error("window length {window} exceeds signal length {signal}")]
    WindowLongerThanSignal { window: usize, signal: usize },
    #[error("window length must be at least 3, got {0}")]
    WindowTooShort(usize),
    #[error("segment has {segment} samples but template has {template}")]
    LengthMismatch { segment: usize, template: usize },
    #[error("moving average needs k >= 1")]
    ZeroTaps,
    #[error("scale bounds must satisfy alpha < beta, got [{alpha}, {beta}]")]
    InvalidScale { alpha: f64, beta: f64 },
}

/// How a channel of length N splits into windows of length L.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SegmentationPlan {
    pub window_len: usize,
    pub num_segments: usize,
    pub remainder_samples: usize,
}

impl SegmentationPlan {
    pub fn new(signal_len: usize, window_len: usize) -> Result<Self, PreprocessError> {
        if window_len < 3 {
            return Err(PreprocessError::WindowTooShort(window_len));
        }
        if signal_len < window_len {
            return Err(PreprocessError::WindowLongerThanSignal {
                window: window_len,
                signal: signal_len,
            });
        }
        Ok(SegmentationPlan {
            window_len,
            num_segments: signal_len / window_len,
            remainder_samples: signal_len % window_len,
        })
    }

    /// Sample range `[start, end)` of segment `index`.
    pub fn span(&self, index: usize) -> (usize, usize) {
        let start = index * self.window_len;
        (start, start + self.window_len)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub k: usize,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig { k: 5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScaleParams {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for ScaleParams {
    fn default() -> Self {
        ScaleParams {
            alpha: -1.0,
            beta: 1.0,
        }
    }
}

impl ScaleParams {
    pub fn validate(&self) -> Result<(), PreprocessError> {
        if self.alpha < self.beta {
            Ok(())
        } else {
            Err(PreprocessError::InvalidScale {
                alpha: self.alpha,
                beta: self.beta,
            })
        }
    }

    pub fn midpoint(&self) -> f64 {
        (self.alpha + self.beta) / 2.0
    }
}

/// Output of [`minmax_scale`]. `degenerate` is set when the input was constant.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaled {
    pub values: Vec<f64>,
    pub degenerate: bool,
}

/// Non-overlapping windows of length `window_len`; the trailing remainder is dropped.
pub fn segment_channel(
    samples: &[f64],
    window_len: usize,
    channel_index: usize,
) -> Result<Vec<Segment>, PreprocessError> {
    let plan = SegmentationPlan::new(samples.len(), window_len)?;
    Ok(samples
        .chunks_exact(window_len)
        .enumerate()
        .map(|(segment_index, chunk)| {
            let (start_sample, end_sample) = plan.span(segment_index);
            Segment {
                channel_index,
                segment_index,
                samples: chunk.to_vec(),
                start_sample,
                end_sample,
            }
        })
        .collect())
}

/// Causal k-point moving average. The first k−1 outputs average over the
/// samples available so far, so the output has the input's length.
pub fn moving_average(x: &[f64], k: usize) -> Result<Vec<f64>, PreprocessError> {
    if k == 0 {
        return Err(PreprocessError::ZeroTaps);
    }
    if k == 1 {
        return Ok(x.to_vec());
    }
    // Each output is summed directly rather than via a running sum so that
    // the result does not depend on what came before the window.
    Ok((0..x.len())
        .map(|n| {
            let lo = (n + 1).saturating_sub(k);
            let window = &x[lo..=n];
            window.iter().sum::<f64>() / window.len() as f64
        })
        .collect())
}

/// Affine map of `v` onto `[alpha, beta]`: min → alpha, max → beta.
/// A constant input maps to the midpoint and is flagged degenerate.
pub fn minmax_scale(v: &[f64], params: ScaleParams) -> Scaled {
    let (min, max) = v
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    let range = max - min;
    if v.is_empty() || !(range > 0.0) {
        return Scaled {
            values: vec![params.midpoint(); v.len()],
            degenerate: true,
        };
    }
    let span = params.beta - params.alpha;
    let values = v
        .iter()
        .map(|&x| {
            if x == max {
                params.beta
            } else {
                (x - min) * span / range + params.alpha
            }
        })
        .collect();
    Scaled {
        values,
        degenerate: false,
    }
}

/// Filter then scale one waveform.
pub fn preprocess_waveform(
    x: &[f64],
    filt: FilterConfig,
    scale: ScaleParams,
) -> Result<Scaled, PreprocessError> {
    Ok(minmax_scale(&moving_average(x, filt.k)?, scale))
}

/// Filters then scales a segment and a template with identical parameters.
pub fn preprocess_pair(
    segment: &Segment,
    template: &Template,
    filt: FilterConfig,
    scale: ScaleParams,
) -> Result<(Scaled, Scaled), PreprocessError> {
    if segment.len() != template.len() {
        return Err(PreprocessError::LengthMismatch {
            segment: segment.len(),
            template: template.len(),
        });
    }
    scale.validate()?;
    Ok((
        preprocess_waveform(&segment.samples, filt, scale)?,
        preprocess_waveform(template.samples(), filt, scale)?,
    ))
}
