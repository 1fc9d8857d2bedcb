//! Library-level run of the whole pipeline on a small synthetic recording.

use swdtau::classify::{leave_one_out, roc};
use swdtau::detector::{
    event_hits, match_annotations, parse_scan_csv, scan_recording, write_scan_csv_to,
};
use swdtau::signal_model::io::{
    parse_features, parse_recording, write_features_to, write_recording_to,
};
use swdtau::synthgen::{make_recording, make_template_set, SynthEvent};
use swdtau::{ClassifierKind, DetectorConfig, SynthConfig};

/// Start of the `k`-th 3-cycle window (307 samples at 256 Hz). Bursts that
/// straddle two non-overlapping windows are split between them and can go
/// undetected, so the events here sit on window boundaries.
fn window_start(k: usize) -> f64 {
    (k * 307) as f64 / 256.0
}

fn config() -> SynthConfig {
    SynthConfig {
        seed: 31,
        num_channels: 4,
        duration_s: 24.0,
        snr_db: 25.0,
        events: vec![
            SynthEvent {
                channel: "Fp1".into(),
                start_s: window_start(3),
                cycles: 3,
            },
            SynthEvent {
                channel: "F3".into(),
                start_s: window_start(11),
                cycles: 3,
            },
        ],
        ..SynthConfig::default()
    }
}

#[test]
fn synth_scan_evaluate_classify() {
    let cfg = config();
    let (rec, truth) = make_recording(&cfg).unwrap();
    let templates = make_template_set(&cfg).unwrap();

    // The recording survives its CSV form.
    let mut csv = Vec::new();
    write_recording_to(&rec, &mut csv).unwrap();
    let back = parse_recording(csv.as_slice(), 1.0).unwrap();
    assert_eq!(back.channels(), rec.channels());
    assert_eq!(back.sample_rate_hz(), 256.0);

    let det = DetectorConfig::default();
    let report = scan_recording(&back, &templates, &det).unwrap();
    assert!(report.warnings.is_empty());
    assert_eq!(report, scan_recording(&rec, &templates, &det).unwrap());
    assert!(event_hits(&report, &truth).iter().all(|h| *h));

    let mut text = Vec::new();
    write_scan_csv_to(&report, &mut text).unwrap();
    let reread = parse_scan_csv(text.as_slice()).unwrap();
    assert_eq!(reread.rows.len(), report.rows.len());
    assert_eq!(
        reread.rows.iter().map(|r| r.positive).collect::<Vec<_>>(),
        report.rows.iter().map(|r| r.positive).collect::<Vec<_>>()
    );

    let rec_truth = match_annotations(&reread, &truth, det.overlap_frac).unwrap();
    let cm = rec_truth.confusion;
    assert_eq!(cm.total() as usize, report.rows.len());
    assert!(cm.tp > 0);
    assert!(cm.specificity().unwrap() > 0.95);

    let scores: Vec<(f64, bool)> = reread
        .rows
        .iter()
        .map(|r| r.tau)
        .zip(rec_truth.truth.iter().copied())
        .collect();
    assert!(roc(&scores).unwrap().auc > 0.5);

    let features = rec_truth.features(&reread);
    let mut out = Vec::new();
    write_features_to(&features, &mut out).unwrap();
    let features = parse_features(out.as_slice()).unwrap();
    let loocv = leave_one_out(ClassifierKind::Lda, &features).unwrap();
    assert_eq!(loocv.scores.len(), features.len());
    assert_eq!(loocv.confusion.total() as usize, features.len());
}

#[test]
fn scans_are_repeatable() {
    let cfg = config();
    let (rec, _) = make_recording(&cfg).unwrap();
    let templates = make_template_set(&cfg).unwrap();
    let a = scan_recording(&rec, &templates, &DetectorConfig::default()).unwrap();
    let b = scan_recording(&rec, &templates, &DetectorConfig::default()).unwrap();
    assert_eq!(a, b);
}
