//! Linear and quadratic Gaussian discriminants and a linear SVM, all on
//! two-dimensional features.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ClassifyError, ConfusionMatrix};
use crate::signal_model::{ClassLabel, FeaturePoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    Lda,
    Qda,
    #[serde(rename = "svm")]
    LinearSvm,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 3] = [
        ClassifierKind::Lda,
        ClassifierKind::Qda,
        ClassifierKind::LinearSvm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::Lda => "lda",
            ClassifierKind::Qda => "qda",
            ClassifierKind::LinearSvm => "svm",
        }
    }
}

impl std::str::FromStr for ClassifierKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lda" => Ok(ClassifierKind::Lda),
            "qda" => Ok(ClassifierKind::Qda),
            "svm" => Ok(ClassifierKind::LinearSvm),
            other => Err(format!("unknown classifier kind {other:?}")),
        }
    }
}

/// Symmetric 2×2 matrix `[[xx, xy], [xy, yy]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct Sym2 {
    xx: f64,
    xy: f64,
    yy: f64,
}

/// Condition number above which the diagonal is loaded.
const MAX_CONDITION: f64 = 1e12;
/// Smallest diagonal load, for covariances whose trace is zero.
const RIDGE_FLOOR: f64 = 1e-12;

impl Sym2 {
    const ZERO: Sym2 = Sym2 {
        xx: 0.0,
        xy: 0.0,
        yy: 0.0,
    };

    fn outer(d: [f64; 2]) -> Sym2 {
        Sym2 {
            xx: d[0] * d[0],
            xy: d[0] * d[1],
            yy: d[1] * d[1],
        }
    }

    fn add(self, o: Sym2) -> Sym2 {
        Sym2 {
            xx: self.xx + o.xx,
            xy: self.xy + o.xy,
            yy: self.yy + o.yy,
        }
    }

    fn scale(self, s: f64) -> Sym2 {
        Sym2 {
            xx: self.xx * s,
            xy: self.xy * s,
            yy: self.yy * s,
        }
    }

    fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    fn det(&self) -> f64 {
        self.xx * self.yy - self.xy * self.xy
    }

    fn eigenvalues(&self) -> (f64, f64) {
        let mean = self.trace() / 2.0;
        let spread = (((self.xx - self.yy) / 2.0).powi(2) + self.xy * self.xy).sqrt();
        (mean - spread, mean + spread)
    }

    /// Loads the diagonal with `1e-9·trace/2` (at least [`RIDGE_FLOOR`])
    /// when the matrix is ill-conditioned or not positive definite.
    fn regularized(self) -> Sym2 {
        let (lo, hi) = self.eigenvalues();
        if lo > 0.0 && hi / lo <= MAX_CONDITION {
            return self;
        }
        let ridge = (1e-9 * self.trace() / 2.0).max(RIDGE_FLOOR);
        Sym2 {
            xx: self.xx + ridge,
            xy: self.xy,
            yy: self.yy + ridge,
        }
    }

    fn inverse(&self) -> Sym2 {
        let d = self.det();
        Sym2 {
            xx: self.yy / d,
            xy: -self.xy / d,
            yy: self.xx / d,
        }
    }

    fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.xx * v[0] + self.xy * v[1],
            self.xy * v[0] + self.yy * v[1],
        ]
    }

    fn quad(&self, v: [f64; 2]) -> f64 {
        let a = self.apply(v);
        a[0] * v[0] + a[1] * v[1]
    }
}

fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Per-class summary: count, mean and scatter matrix.
struct ClassStats {
    count: usize,
    mean: [f64; 2],
    scatter: Sym2,
}

fn class_stats(data: &[FeaturePoint], label: ClassLabel) -> ClassStats {
    let pts: Vec<[f64; 2]> = data
        .iter()
        .filter(|p| p.label == label)
        .map(FeaturePoint::features)
        .collect();
    let count = pts.len();
    let mut mean = [0.0; 2];
    for p in &pts {
        mean[0] += p[0];
        mean[1] += p[1];
    }
    if count > 0 {
        mean[0] /= count as f64;
        mean[1] /= count as f64;
    }
    let scatter = pts
        .iter()
        .fold(Sym2::ZERO, |acc, p| acc.add(Sym2::outer(sub(*p, mean))));
    ClassStats {
        count,
        mean,
        scatter,
    }
}

/// Fixed hyper-parameters of the subgradient SVM trainer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub lambda: f64,
    pub iterations: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            lambda: 0.01,
            iterations: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassifierModel {
    /// Shared covariance: the discriminant is linear, `w·x + b`.
    Lda { weights: [f64; 2], bias: f64 },
    Qda {
        mean_swd: [f64; 2],
        mean_non: [f64; 2],
        precision_swd: [f64; 3],
        precision_non: [f64; 3],
        /// ½·log|Σ_non| − ½·log|Σ_swd| + log(π_swd / π_non)
        offset: f64,
    },
    #[serde(rename = "svm")]
    LinearSvm { weights: [f64; 2], bias: f64 },
}

impl ClassifierModel {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            ClassifierModel::Lda { .. } => ClassifierKind::Lda,
            ClassifierModel::Qda { .. } => ClassifierKind::Qda,
            ClassifierModel::LinearSvm { .. } => ClassifierKind::LinearSvm,
        }
    }
}

fn check_finite(data: &[FeaturePoint]) -> Result<(), ClassifyError> {
    match data
        .iter()
        .position(|p| !p.tau.is_finite() || !p.p.is_finite())
    {
        Some(i) => Err(ClassifyError::NonFinite(i)),
        None => Ok(()),
    }
}

fn fit_lda(swd: &ClassStats, non: &ClassStats) -> ClassifierModel {
    let n = (swd.count + non.count) as f64;
    let pooled = swd
        .scatter
        .add(non.scatter)
        .scale(1.0 / (n - 2.0))
        .regularized();
    let inv = pooled.inverse();
    let diff = sub(swd.mean, non.mean);
    let weights = inv.apply(diff);
    let midpoint = [
        (swd.mean[0] + non.mean[0]) / 2.0,
        (swd.mean[1] + non.mean[1]) / 2.0,
    ];
    let bias = -dot(weights, midpoint) + (swd.count as f64 / non.count as f64).ln();
    ClassifierModel::Lda { weights, bias }
}

fn fit_qda(swd: &ClassStats, non: &ClassStats) -> ClassifierModel {
    let cov_swd = swd
        .scatter
        .scale(1.0 / (swd.count as f64 - 1.0))
        .regularized();
    let cov_non = non
        .scatter
        .scale(1.0 / (non.count as f64 - 1.0))
        .regularized();
    let (ps, pn) = (cov_swd.inverse(), cov_non.inverse());
    let offset = 0.5 * cov_non.det().ln() - 0.5 * cov_swd.det().ln()
        + (swd.count as f64 / non.count as f64).ln();
    ClassifierModel::Qda {
        mean_swd: swd.mean,
        mean_non: non.mean,
        precision_swd: [ps.xx, ps.xy, ps.yy],
        precision_non: [pn.xx, pn.xy, pn.yy],
        offset,
    }
}

/// Full-batch subgradient descent on λ/2·|w|² + mean hinge loss, step 1/(λt).
/// The bias is unregularized and takes the same step.
fn fit_svm(data: &[FeaturePoint], params: SvmParams) -> ClassifierModel {
    let x: Vec<[f64; 2]> = data.iter().map(|p| p.features()).collect();
    let y: Vec<f64> = data.iter().map(|p| p.label.sign()).collect();
    let (weights, bias) = super::svm::train(&x, &y, params.lambda, params.iterations);
    ClassifierModel::LinearSvm { weights, bias }
}

/// Trains a classifier of the given kind.
pub fn fit(kind: ClassifierKind, data: &[FeaturePoint]) -> Result<ClassifierModel, ClassifyError> {
    check_finite(data)?;
    let swd = class_stats(data, ClassLabel::Swd);
    let non = class_stats(data, ClassLabel::NonSwd);
    if swd.count < 2 || non.count < 2 {
        return Err(ClassifyError::DegenerateClass(format!(
            "need at least 2 points per class, got {} SWD and {} non-SWD",
            swd.count, non.count
        )));
    }
    Ok(match kind {
        ClassifierKind::Lda => fit_lda(&swd, &non),
        ClassifierKind::Qda => fit_qda(&swd, &non),
        ClassifierKind::LinearSvm => fit_svm(data, SvmParams::default()),
    })
}

/// Class and real-valued score: the log posterior ratio for the
/// discriminants, the signed margin for the SVM. A score of exactly zero
/// is classified non-SWD.
pub fn predict(model: &ClassifierModel, features: [f64; 2]) -> (ClassLabel, f64) {
    let score = match model {
        ClassifierModel::Lda { weights, bias } | ClassifierModel::LinearSvm { weights, bias } => {
            dot(*weights, features) + bias
        }
        ClassifierModel::Qda {
            mean_swd,
            mean_non,
            precision_swd,
            precision_non,
            offset,
        } => {
            let ps = Sym2 {
                xx: precision_swd[0],
                xy: precision_swd[1],
                yy: precision_swd[2],
            };
            let pn = Sym2 {
                xx: precision_non[0],
                xy: precision_non[1],
                yy: precision_non[2],
            };
            0.5 * pn.quad(sub(features, *mean_non)) - 0.5 * ps.quad(sub(features, *mean_swd))
                + offset
        }
    };
    let label = if score > 0.0 {
        ClassLabel::Swd
    } else {
        ClassLabel::NonSwd
    };
    (label, score)
}

/// Leave-one-out outcome. `scores[i]` is the held-out score of point `i`,
/// or `None` when the fold could not be trained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoocvReport {
    pub kind: ClassifierKind,
    pub confusion: ConfusionMatrix,
    pub abstentions: usize,
    pub scores: Vec<Option<f64>>,
}

/// n folds, each holding out one point. A fold whose training set is
/// degenerate abstains, which counts as a miss for the held-out class.
pub fn leave_one_out(
    kind: ClassifierKind,
    data: &[FeaturePoint],
) -> Result<LoocvReport, ClassifyError> {
    check_finite(data)?;
    let swd = data.iter().filter(|p| p.label.is_swd()).count();
    if data.len() < 4 || swd == 0 || swd == data.len() {
        return Err(ClassifyError::DegenerateClass(format!(
            "leave-one-out needs at least 4 points covering both classes, got {} ({} SWD)",
            data.len(),
            swd
        )));
    }
    let outcomes: Vec<Option<(ClassLabel, f64)>> = (0..data.len())
        .into_par_iter()
        .map(|i| {
            let train: Vec<FeaturePoint> = data
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, p)| *p)
                .collect();
            fit(kind, &train)
                .ok()
                .map(|model| predict(&model, data[i].features()))
        })
        .collect();

    let mut confusion = ConfusionMatrix::default();
    let mut abstentions = 0;
    let mut scores = Vec::with_capacity(data.len());
    for (pt, outcome) in data.iter().zip(outcomes) {
        let actual = pt.label.is_swd();
        match outcome {
            Some((label, score)) => {
                confusion.record(label.is_swd(), actual);
                scores.push(Some(score));
            }
            None => {
                abstentions += 1;
                confusion.record(!actual, actual);
                scores.push(None);
            }
        }
    }
    Ok(LoocvReport {
        kind,
        confusion,
        abstentions,
        scores,
    })
}
