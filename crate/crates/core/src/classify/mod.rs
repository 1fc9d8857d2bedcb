//! Classification of `[tau, p]` feature points and evaluation metrics.

mod models;
mod roc;
mod svm;

pub use models::{
    fit, leave_one_out, predict, ClassifierKind, ClassifierModel, LoocvReport, SvmParams,
};
pub use roc::{roc, write_roc_csv, write_roc_csv_to, RocCurve, RocPoint};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kendall::normal::two_sided_critical;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifyError {
    #[error("degenerate class: {0}")]
    DegenerateClass(String),
    #[error("{metric} is undefined: its denominator is zero")]
    UndefinedMetric { metric: &'static str },
    #[error("ROC needs both classes among the scores")]
    SingleClass,
    #[error("non-finite feature at row {0}")]
    NonFinite(usize),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn record(&mut self, predicted: bool, actual: bool) {
        match (predicted, actual) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, false) => self.tn += 1,
            (false, true) => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn sensitivity(&self) -> Result<f64, ClassifyError> {
        let d = self.tp + self.fn_;
        if d == 0 {
            return Err(ClassifyError::UndefinedMetric {
                metric: "sensitivity",
            });
        }
        Ok(self.tp as f64 / d as f64)
    }

    pub fn specificity(&self) -> Result<f64, ClassifyError> {
        let d = self.tn + self.fp;
        if d == 0 {
            return Err(ClassifyError::UndefinedMetric {
                metric: "specificity",
            });
        }
        Ok(self.tn as f64 / d as f64)
    }

    pub fn accuracy(&self) -> Result<f64, ClassifyError> {
        if self.total() == 0 {
            return Err(ClassifyError::UndefinedMetric { metric: "accuracy" });
        }
        Ok((self.tp + self.tn) as f64 / self.total() as f64)
    }
}

/// `(sensitivity, specificity)`.
pub fn metrics(cm: &ConfusionMatrix) -> Result<(f64, f64), ClassifyError> {
    Ok((cm.sensitivity()?, cm.specificity()?))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiMethod {
    #[default]
    Normal,
    Wilson,
}

/// Confidence interval for a binomial proportion, clamped to `[0, 1]`.
pub fn proportion_ci(p_hat: f64, n: u64, level: f64, method: CiMethod) -> (f64, f64) {
    assert!(n >= 1, "proportion_ci needs n >= 1");
    assert!((0.0..=1.0).contains(&p_hat), "p_hat outside [0, 1]");
    let z = two_sided_critical(level);
    let n = n as f64;
    let (lo, hi) = match method {
        CiMethod::Normal => {
            let half = z * (p_hat * (1.0 - p_hat) / n).sqrt();
            (p_hat - half, p_hat + half)
        }
        CiMethod::Wilson => {
            let z2 = z * z;
            let centre = (p_hat + z2 / (2.0 * n)) / (1.0 + z2 / n);
            let half = z / (1.0 + z2 / n) * (p_hat * (1.0 - p_hat) / n + z2 / (4.0 * n * n)).sqrt();
            (centre - half, centre + half)
        }
    };
    (lo.clamp(0.0, 1.0), hi.clamp(0.0, 1.0))
}

/// The metrics JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsReport {
    pub kind: String,
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub sensitivity: f64,
    pub specificity: f64,
    /// 95% interval on specificity.
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub sensitivity_ci_lo: f64,
    pub sensitivity_ci_hi: f64,
    pub auc: f64,
}

impl MetricsReport {
    /// Builds the report, failing when sensitivity or specificity is undefined.
    pub fn new(
        kind: impl Into<String>,
        cm: &ConfusionMatrix,
        auc: f64,
        method: CiMethod,
    ) -> Result<Self, ClassifyError> {
        let (sensitivity, specificity) = metrics(cm)?;
        let (ci_lo, ci_hi) = proportion_ci(specificity, cm.tn + cm.fp, 0.95, method);
        let (s_lo, s_hi) = proportion_ci(sensitivity, cm.tp + cm.fn_, 0.95, method);
        let r = crate::fmt::round_sig;
        Ok(MetricsReport {
            kind: kind.into(),
            tp: cm.tp,
            fp: cm.fp,
            tn: cm.tn,
            fn_: cm.fn_,
            sensitivity: r(sensitivity),
            specificity: r(specificity),
            ci_lo: r(ci_lo),
            ci_hi: r(ci_hi),
            sensitivity_ci_lo: r(s_lo),
            sensitivity_ci_hi: r(s_hi),
            auc: r(auc),
        })
    }
}
