//! One function per subcommand. Each returns the summary line for stdout.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use swdtau::classify::{
    leave_one_out, proportion_ci, roc, write_roc_csv, CiMethod, ClassifierKind, MetricsReport,
};
use swdtau::detector::{
    event_hits, match_annotations, read_scan_csv, scan_recording, write_detections_json,
    write_scan_csv,
};
use swdtau::fmt::{format_sig, round_sig};
use swdtau::signal_model::io::{
    read_annotations, read_features, read_recording, read_template_dir, write_annotations,
    write_features, write_recording, write_template,
};
use swdtau::signal_model::DEFAULT_SAMPLE_RATE_HZ;
use swdtau::synthgen::{make_recording, make_template_set};
use swdtau::timing::run_bench;
use swdtau::ConfusionMatrix;

use crate::config::{KindChoice, RunConfig};
use crate::error::{CliError, ExitKind};

pub const RECORDING: &str = "recording.csv";
pub const TEMPLATES: &str = "templates";
pub const ANNOTATIONS: &str = "annotations.json";
pub const SCAN_REPORT: &str = "scan_report.csv";
pub const DETECTIONS: &str = "detections.json";
pub const METRICS: &str = "metrics.json";
pub const ROC: &str = "roc.csv";
pub const FEATURES: &str = "features.csv";
pub const LOOCV: &str = "loocv_report.json";
pub const BENCH: &str = "bench.json";

/// Flag value, then config value, then the default file inside `out`.
fn resolve(flag: Option<PathBuf>, config: &Option<PathBuf>, out: &Path, name: &str) -> PathBuf {
    flag.or_else(|| config.clone())
        .unwrap_or_else(|| out.join(name))
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::config(format!("{}: {e}", dir.display())))
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

pub fn synth(cfg: &RunConfig, out: &Path) -> Result<String, CliError> {
    let (rec, annotations) = make_recording(&cfg.synth)?;
    let templates = make_template_set(&cfg.synth)?;
    ensure_dir(out)?;
    let tdir = out.join(TEMPLATES);
    ensure_dir(&tdir)?;
    write_recording(&rec, &out.join(RECORDING))?;
    for t in &templates {
        write_template(t, &tdir.join(format!("{}.csv", t.id)))?;
    }
    write_annotations(&annotations, &out.join(ANNOTATIONS))?;
    Ok(format!(
        "channels={} samples={} events={} templates={}",
        rec.num_channels(),
        rec.num_samples(),
        annotations.events.len(),
        templates.len()
    ))
}

pub struct DetectPaths {
    pub recording: Option<PathBuf>,
    pub templates: Option<PathBuf>,
}

pub fn detect(cfg: &RunConfig, out: &Path, paths: DetectPaths) -> Result<String, CliError> {
    let rec_path = resolve(paths.recording, &cfg.paths.recording, out, RECORDING);
    let tdir = resolve(paths.templates, &cfg.paths.templates_dir, out, TEMPLATES);
    let rec = read_recording(&rec_path, DEFAULT_SAMPLE_RATE_HZ)?;
    let templates = read_template_dir(&tdir, rec.sample_rate_hz())?;
    let report = scan_recording(&rec, &templates, &cfg.detector)?;
    for w in &report.warnings {
        eprintln!(
            "warning: window length {} exceeds the {}-sample recording; skipped",
            w.window_len, w.signal_len
        );
    }
    if report.rows.is_empty() {
        return Err(CliError::new(
            ExitKind::Incompatible,
            format!(
                "no template fits the {}-sample recording",
                rec.num_samples()
            ),
        ));
    }
    ensure_dir(out)?;
    write_scan_csv(&report, &out.join(SCAN_REPORT))?;
    write_detections_json(&report, &out.join(DETECTIONS))?;
    Ok(format!(
        "scanned={} positives={}",
        report.segments_scanned(),
        report.positives()
    ))
}

pub struct EvaluatePaths {
    pub scan_report: Option<PathBuf>,
    pub annotations: Option<PathBuf>,
}

pub fn evaluate(cfg: &RunConfig, out: &Path, paths: EvaluatePaths) -> Result<String, CliError> {
    let report_path = resolve(paths.scan_report, &cfg.paths.scan_report, out, SCAN_REPORT);
    let ann_path = resolve(paths.annotations, &cfg.paths.annotations, out, ANNOTATIONS);
    let report = read_scan_csv(&report_path)?;
    let truth = read_annotations(&ann_path)?;
    let rec = match_annotations(&report, &truth, cfg.detector.overlap_frac)?;
    ensure_dir(out)?;
    write_features(&rec.features(&report), &out.join(FEATURES))?;

    // Checked first so an empty class is reported by metric name.
    swdtau::classify::metrics(&rec.confusion)?;
    let scores: Vec<(f64, bool)> = report
        .rows
        .iter()
        .map(|r| r.tau)
        .zip(rec.truth.iter().copied())
        .collect();
    let curve = roc(&scores)?;
    let metrics = MetricsReport::new(
        "threshold",
        &rec.confusion,
        curve.auc,
        cfg.classifier.ci_method,
    )?;
    write_json(&metrics, &out.join(METRICS))?;
    write_roc_csv(&curve, &out.join(ROC))?;

    let hits = event_hits(&report, &truth);
    Ok(format!(
        "tp={} fp={} tn={} fn={} sensitivity={} specificity={} auc={} events_hit={}/{}",
        metrics.tp,
        metrics.fp,
        metrics.tn,
        metrics.fn_,
        format_sig(metrics.sensitivity),
        format_sig(metrics.specificity),
        format_sig(metrics.auc),
        hits.iter().filter(|h| **h).count(),
        hits.len()
    ))
}

/// Leave-one-out results for one classifier kind.
#[derive(Debug, Serialize)]
pub struct LoocvBlock {
    pub kind: ClassifierKind,
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
    /// Over held-out scores; absent when abstentions leave a single class.
    pub auc: Option<f64>,
    pub abstentions: usize,
}

#[derive(Debug, Serialize)]
pub struct LoocvDocument {
    pub n: usize,
    pub reports: Vec<LoocvBlock>,
}

fn loocv_block(
    kind: ClassifierKind,
    cm: &ConfusionMatrix,
    scores: Vec<(f64, bool)>,
    abstentions: usize,
    method: CiMethod,
) -> Result<LoocvBlock, CliError> {
    let sensitivity = cm.sensitivity()?;
    let specificity = cm.specificity()?;
    let (ci_lo, ci_hi) = proportion_ci(specificity, cm.tn + cm.fp, 0.95, method);
    let (s_lo, s_hi) = proportion_ci(sensitivity, cm.tp + cm.fn_, 0.95, method);
    Ok(LoocvBlock {
        kind,
        tp: cm.tp,
        fp: cm.fp,
        tn: cm.tn,
        fn_: cm.fn_,
        sensitivity: round_sig(sensitivity),
        specificity: round_sig(specificity),
        ci_lo: round_sig(ci_lo),
        ci_hi: round_sig(ci_hi),
        sensitivity_ci_lo: round_sig(s_lo),
        sensitivity_ci_hi: round_sig(s_hi),
        auc: roc(&scores).ok().map(|c| round_sig(c.auc)),
        abstentions,
    })
}

pub fn classify(
    cfg: &RunConfig,
    out: &Path,
    features: Option<PathBuf>,
    kind: Option<KindChoice>,
) -> Result<String, CliError> {
    let path = resolve(features, &cfg.paths.features, out, FEATURES);
    let data = read_features(&path)?;
    let mut reports = Vec::new();
    let mut summary = Vec::new();
    for k in kind.unwrap_or(cfg.classifier.kind).kinds() {
        let r = leave_one_out(k, &data)?;
        let scores = r
            .scores
            .iter()
            .zip(&data)
            .filter_map(|(s, pt)| s.map(|s| (s, pt.label.is_swd())))
            .collect();
        let block = loocv_block(
            k,
            &r.confusion,
            scores,
            r.abstentions,
            cfg.classifier.ci_method,
        )?;
        summary.push(format!(
            "{}: sensitivity={} specificity={}",
            k.name(),
            format_sig(block.sensitivity),
            format_sig(block.specificity)
        ));
        reports.push(block);
    }
    ensure_dir(out)?;
    write_json(
        &LoocvDocument {
            n: data.len(),
            reports,
        },
        &out.join(LOOCV),
    )?;
    Ok(summary.join("\n"))
}

pub fn bench(cfg: &RunConfig, out: &Path, sizes: Option<Vec<usize>>) -> Result<String, CliError> {
    let sizes = sizes.unwrap_or_else(|| cfg.bench.sizes.clone());
    let mut report = run_bench(&sizes, cfg.bench.seed);
    for row in &mut report.rows {
        row.median_ns = round_sig(row.median_ns);
    }
    for check in &mut report.checks {
        check.speedup = round_sig(check.speedup);
    }
    ensure_dir(out)?;
    write_json(&report, &out.join(BENCH))?;
    let mut lines: Vec<String> = report
        .rows
        .chunks(2)
        .map(|pair| {
            format!(
                "n={} brute_ns={} fast_ns={} speedup={}",
                pair[0].n,
                format_sig(pair[0].median_ns),
                format_sig(pair[1].median_ns),
                format_sig(round_sig(pair[0].median_ns / pair[1].median_ns))
            )
        })
        .collect();
    if !report.passed {
        let slow: Vec<String> = report
            .checks
            .iter()
            .filter(|c| !c.fast_not_slower)
            .map(|c| c.n.to_string())
            .collect();
        return Err(CliError::new(
            ExitKind::Check,
            format!(
                "fast kernel slower than brute force at n = {}",
                slow.join(", ")
            ),
        ));
    }
    lines.push(format!("rows={}", report.rows.len()));
    Ok(lines.join("\n"))
}
