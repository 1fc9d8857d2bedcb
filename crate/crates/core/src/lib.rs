//! Spike-and-wave discharge (SWD) detection in multichannel EEG by template
//! matching with Kendall rank correlation.
//!
//! The pipeline, bottom up:
//!
//! * [`preprocess`]: non-overlapping segmentation, k-point moving average,
//!   min–max scaling to `[-1, 1]`.
//! * [`kendall`]: pair counting (brute force and O(n log n)), tau-a, tau-b and
//!   the normal-approximation z statistic with its p-value.
//! * [`detector`]: scores every segment of every channel against a template
//!   set, thresholds on `(tau, p)` and reconciles with annotations.
//! * [`classify`]: LDA, QDA and linear SVM on `[tau, p]` features with
//!   leave-one-out validation, confidence intervals and ROC curves.
//! * [`synthgen`]: seeded synthetic templates, background noise and
//!   recordings with annotated SWD bursts.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classify;
pub mod detector;
pub mod fmt;
pub mod kendall;
pub mod preprocess;
pub mod signal_model;
pub mod synthgen;
pub mod timing;

pub use classify::{ClassifierKind, ClassifierModel, ConfusionMatrix, RocCurve};
pub use detector::{DetectorConfig, ScanReport};
pub use kendall::{PairCounts, Tail, TauResult, TauVariant};
pub use preprocess::{FilterConfig, ScaleParams};
pub use signal_model::{
    AnnotationEvent, AnnotationSet, ClassLabel, DetectionResult, FeaturePoint, Recording, Segment,
    Template,
};
pub use synthgen::SynthConfig;
