//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::process::{Command, ExitCode};
use std::time::Instant;

use statrs::distribution::{ContinuousCDF, Normal};
use swdtau::classify::{leave_one_out, proportion_ci, roc, CiMethod};
use swdtau::detector::{event_hits, match_annotations, scan_recording};
use swdtau::kendall::{count_pairs_bruteforce, significance, tau_a, tau_b, tau_fast, tau_sign_sum};
use swdtau::signal_model::default_channel_labels;
use swdtau::synthgen::{make_recording, make_template, make_template_set, SplitMix64};
use swdtau::timing::BenchReport;
use swdtau::{
    ClassLabel, ClassifierKind, ConfusionMatrix, DetectorConfig, FeaturePoint, Recording,
    SynthConfig, Tail, TauVariant,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn random_vector(rng: &mut SplitMix64, n: usize, alphabet: Option<u64>) -> Vec<f64> {
    (0..n)
        .map(|_| match alphabet {
            Some(k) => (rng.next_u64() % k) as f64,
            None => rng.next_gaussian(),
        })
        .collect()
}

fn kernel_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = SplitMix64::new(0xC0FFEE);
    let mut worst = 0.0f64;
    for case in 0..1000 {
        let n = 2 + (rng.next_u64() % 499) as usize;
        let alphabet = (case % 4 == 0).then_some(3);
        let x = random_vector(&mut rng, n, alphabet);
        let y = random_vector(&mut rng, n, alphabet);
        let counts = count_pairs_bruteforce(&x, &y).map_err(|e| e.to_string())?;
        for variant in [TauVariant::TauA, TauVariant::TauB] {
            let want = match variant {
                TauVariant::TauA => Ok(tau_a(&counts)),
                TauVariant::TauB => tau_b(&counts),
            };
            let got = tau_fast(&x, &y, variant, Tail::TwoSided);
            match (got, want) {
                (Ok(r), Ok(t)) => {
                    check(
                        r.counts == counts,
                        format!("case {case}: pair counts differ"),
                    )?;
                    worst = worst.max((r.tau - t).abs());
                }
                (Err(_), Err(_)) => {}
                (g, w) => return Err(format!("case {case}: {g:?} vs {w:?}")),
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(worst <= 1e-12, format!("max |Δtau| = {worst:e}"))?;
    check(secs < 10.0, format!("took {secs:.2} s"))?;
    Ok(format!("1000 pairs, max |Δtau| = {worst:e}, {secs:.2} s"))
}

fn pair_count_vs_sign_sum() -> Outcome {
    let mut rng = SplitMix64::new(77);
    let mut worst = 0.0f64;
    for _ in 0..500 {
        let n = 2 + (rng.next_u64() % 300) as usize;
        let x = random_vector(&mut rng, n, None);
        let y = random_vector(&mut rng, n, None);
        let counts = count_pairs_bruteforce(&x, &y).map_err(|e| e.to_string())?;
        check(!counts.has_ties(), "tie in continuous data")?;
        let s = tau_sign_sum(&x, &y).map_err(|e| e.to_string())?;
        worst = worst.max((tau_a(&counts) - s).abs());
    }
    check(worst <= 1e-12, format!("max difference {worst:e}"))?;
    Ok(format!("500 tie-free pairs, max difference {worst:e}"))
}

fn canonical_values() -> Outcome {
    let x: Vec<f64> = (0..50)
        .map(|i| (i as f64 * 0.37).sin() + i as f64)
        .collect();
    let rev: Vec<f64> = x.iter().rev().copied().collect();
    let sorted: Vec<f64> = (0..50).map(f64::from).collect();
    for variant in [TauVariant::TauA, TauVariant::TauB] {
        let same = tau_fast(&x, &x, variant, Tail::TwoSided).map_err(|e| e.to_string())?;
        let opposite =
            tau_fast(&sorted, &rev, variant, Tail::TwoSided).map_err(|e| e.to_string())?;
        check(
            same.tau == 1.0,
            format!("{variant:?} identical: {}", same.tau),
        )?;
        check(
            opposite.tau == -1.0,
            format!("{variant:?} reversed: {}", opposite.tau),
        )?;
    }
    Ok("tau = +1 and -1 exactly".into())
}

fn normal_approximation() -> Outcome {
    let (tau, n) = (0.5, 10.0f64);
    let z_ref = 3.0 * tau * (n * (n - 1.0)).sqrt() / (2.0 * (2.0 * n + 5.0)).sqrt();
    let p_ref = 2.0 * (1.0 - Normal::new(0.0, 1.0).unwrap().cdf(z_ref));
    // 30-digit evaluation of the same expression.
    const Z_FROZEN: f64 = 2.012_461_179_749_810_7;
    const P_FROZEN: f64 = 0.044_171_344_908_442_615;
    check(
        (z_ref - Z_FROZEN).abs() < 1e-12,
        "independent z disagrees with frozen value",
    )?;
    check(
        (p_ref - P_FROZEN).abs() < 1e-9,
        "independent p disagrees with frozen value",
    )?;
    check(
        (z_ref - 2.0125).abs() <= 1e-3 && (p_ref - 0.0442).abs() <= 1e-3,
        "reference outside stated values",
    )?;
    let s = significance(tau, 10, Tail::TwoSided).map_err(|e| e.to_string())?;
    check((s.z - Z_FROZEN).abs() < 1e-12, format!("z = {}", s.z))?;
    check(
        (s.p_value - P_FROZEN).abs() < 1e-12,
        format!("p = {}", s.p_value),
    )?;
    Ok(format!("z = {:.6}, p = {:.6}", s.z, s.p_value))
}

fn small_synth(seed: u64) -> SynthConfig {
    SynthConfig {
        seed,
        num_channels: 6,
        duration_s: 20.0,
        events: vec![],
        ..SynthConfig::default()
    }
}

fn scale_invariance() -> Outcome {
    let cfg = SynthConfig {
        events: vec![swdtau::synthgen::SynthEvent {
            channel: "Fp1".into(),
            start_s: 4.0,
            cycles: 3,
        }],
        ..small_synth(9)
    };
    let (rec, _) = make_recording(&cfg).map_err(|e| e.to_string())?;
    let templates = make_template_set(&cfg).map_err(|e| e.to_string())?;
    let det = DetectorConfig::default();
    let base = scan_recording(&rec, &templates, &det).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for c in [1e-3, 1.0, 1e3] {
        let data = rec
            .rows()
            .iter()
            .map(|ch| ch.iter().map(|v| v * c).collect())
            .collect();
        let scaled = Recording::new(rec.channels().to_vec(), rec.sample_rate_hz(), data)
            .map_err(|e| e.to_string())?;
        let r = scan_recording(&scaled, &templates, &det).map_err(|e| e.to_string())?;
        check(r.rows.len() == base.rows.len(), "row count changed")?;
        for (a, b) in base.rows.iter().zip(&r.rows) {
            worst = worst.max((a.tau - b.tau).abs());
            check(
                a.positive == b.positive,
                format!("decision changed at c = {c}"),
            )?;
            check(
                (a.p - b.p).abs() <= 1e-12 * a.p.max(1e-300).max(1.0),
                format!("p changed at c = {c}"),
            )?;
        }
    }
    check(worst <= 1e-12, format!("max |Δtau| = {worst:e}"))?;
    Ok(format!(
        "{} rows x 3 scales, max |Δtau| = {worst:e}",
        base.rows.len()
    ))
}

fn segment_arithmetic() -> Outcome {
    let cfg = SynthConfig::default();
    let template = make_template(&cfg, 3).map_err(|e| e.to_string())?;
    let l = template.len();
    let n = 140 * l + l / 2;
    let mut rng = SplitMix64::new(4);
    let data: Vec<Vec<f64>> = (0..22).map(|_| random_vector(&mut rng, n, None)).collect();
    let rec = Recording::new(default_channel_labels(22), 256.0, data).map_err(|e| e.to_string())?;
    let report =
        scan_recording(&rec, &[template], &DetectorConfig::default()).map_err(|e| e.to_string())?;
    check(
        report.segments_scanned() == 3080,
        format!("scanned {}", report.segments_scanned()),
    )?;
    check(
        report.per_channel().iter().all(|c| c.scanned == 140),
        "uneven channel counts",
    )?;
    Ok(format!("L = {l}, N = {n}, 3080 segments"))
}

/// Seeded calibration of the default synthetic configuration.
/// Per seed: (positives with events, positives on pure noise).
const CALIBRATION: [(u64, usize, usize); 3] = [(1, 25, 13), (2, 18, 8), (3, 20, 12)];

fn synthetic_recovery() -> Outcome {
    let det = DetectorConfig::default();
    let mut notes = Vec::new();
    for (seed, want_pos, want_noise) in CALIBRATION {
        let cfg = SynthConfig {
            seed,
            ..SynthConfig::default()
        };
        check(cfg.snr_db >= 20.0, "calibration below 20 dB")?;
        let templates = make_template_set(&cfg).map_err(|e| e.to_string())?;
        let (rec, truth) = make_recording(&cfg).map_err(|e| e.to_string())?;
        let report = scan_recording(&rec, &templates, &det).map_err(|e| e.to_string())?;
        let hits = event_hits(&report, &truth);
        check(
            hits.len() == 5 && hits.iter().all(|h| *h),
            format!("seed {seed}: hits {hits:?}"),
        )?;

        let quiet = SynthConfig {
            events: vec![],
            ..cfg
        };
        let (noise, none) = make_recording(&quiet).map_err(|e| e.to_string())?;
        let noise_report = scan_recording(&noise, &templates, &det).map_err(|e| e.to_string())?;
        let cm = match_annotations(&noise_report, &none, det.overlap_frac)
            .map_err(|e| e.to_string())?
            .confusion;
        let spec = cm.specificity().map_err(|e| e.to_string())?;
        check(
            spec >= 0.95,
            format!("seed {seed}: noise specificity {spec}"),
        )?;
        check(
            (report.positives(), noise_report.positives()) == (want_pos, want_noise),
            format!(
                "seed {seed}: positives {} / {} differ from calibration {want_pos} / {want_noise}",
                report.positives(),
                noise_report.positives()
            ),
        )?;
        notes.push(format!(
            "seed {seed}: 5/5 events, noise specificity {spec:.4}"
        ));
    }
    Ok(notes.join("; "))
}

fn metrics_arithmetic() -> Outcome {
    let cm = ConfusionMatrix {
        tp: 14,
        fn_: 86,
        tn: 83,
        fp: 17,
    };
    let sens = cm.sensitivity().map_err(|e| e.to_string())?;
    let spec = cm.specificity().map_err(|e| e.to_string())?;
    check(sens == 0.14 && spec == 0.83, format!("{sens}, {spec}"))?;
    Ok("sensitivity 0.14, specificity 0.83".into())
}

fn ci_consistency() -> Outcome {
    let (lo, hi) = proportion_ci(0.83, 2780, 0.95, CiMethod::Normal);
    check(lo >= 0.81 && hi <= 0.85, format!("[{lo}, {hi}]"))?;
    check(hi - lo <= 0.03, format!("width {}", hi - lo))?;
    Ok(format!("[{lo:.4}, {hi:.4}]"))
}

fn separable_features() -> Vec<FeaturePoint> {
    let mut rng = SplitMix64::new(21);
    let mut j = move || 2.0 * rng.next_f64() - 1.0;
    (0..20)
        .flat_map(|_| {
            [
                FeaturePoint::new(0.9 + 0.05 * j(), 0.001 + 0.0005 * j(), ClassLabel::Swd),
                FeaturePoint::new(0.05 + 0.05 * j(), 0.8 + 0.1 * j(), ClassLabel::NonSwd),
            ]
        })
        .collect()
}

fn classifier_agreement() -> Outcome {
    let data = separable_features();
    for kind in ClassifierKind::ALL {
        let first = leave_one_out(kind, &data).map_err(|e| e.to_string())?;
        let again = leave_one_out(kind, &data).map_err(|e| e.to_string())?;
        check(first == again, format!("{} not deterministic", kind.name()))?;
        let cm = first.confusion;
        check(
            cm.sensitivity() == Ok(1.0) && cm.specificity() == Ok(1.0),
            format!("{}: {cm:?}", kind.name()),
        )?;
    }
    Ok("lda, qda, svm: sensitivity 1, specificity 1, repeatable".into())
}

fn roc_properties() -> Outcome {
    let separated: Vec<(f64, bool)> = (0..100).map(|i| (i as f64, i >= 50)).collect();
    let perfect = roc(&separated).map_err(|e| e.to_string())?;
    check(
        perfect.auc == 1.0,
        format!("separating AUC {}", perfect.auc),
    )?;

    let mut rng = SplitMix64::new(1000);
    let scores: Vec<f64> = (0..1000).map(|_| rng.next_f64()).collect();
    let mut labels: Vec<bool> = (0..1000).map(|i| i % 2 == 0).collect();
    for i in (1..labels.len()).rev() {
        labels.swap(i, (rng.next_u64() % (i as u64 + 1)) as usize);
    }
    let pairs: Vec<(f64, bool)> = scores.into_iter().zip(labels).collect();
    let permuted = roc(&pairs).map_err(|e| e.to_string())?;
    check(
        (permuted.auc - 0.5).abs() <= 0.05,
        format!("permuted AUC {}", permuted.auc),
    )?;
    for curve in [&perfect, &permuted] {
        let monotone = curve
            .points
            .windows(2)
            .all(|w| w[1].fpr >= w[0].fpr && w[1].tpr >= w[0].tpr);
        check(monotone, "non-monotone sweep")?;
    }
    Ok(format!(
        "AUC 1 when separated, {:.4} when permuted",
        permuted.auc
    ))
}

fn bench_speedup() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = Command::new(env!("CARGO_BIN_EXE_swdtau"))
        .args([
            "--out",
            dir.path().to_str().unwrap(),
            "bench",
            "--sizes",
            "4096",
        ])
        .output()
        .map_err(|e| e.to_string())?;
    check(
        out.status.success(),
        format!("bench exited {:?}", out.status.code()),
    )?;
    let text = std::fs::read_to_string(dir.path().join("bench.json")).map_err(|e| e.to_string())?;
    let report: BenchReport = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let speedup = report.speedup_at(4096).ok_or("no row for n = 4096")?;
    check(speedup >= 10.0, format!("speedup {speedup:.1}x"))?;
    Ok(format!("{speedup:.1}x at n = 4096"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("fast kernel matches brute force", kernel_equivalence),
        (
            "pair-count and sign-sum forms agree",
            pair_count_vs_sign_sum,
        ),
        ("canonical tau values", canonical_values),
        (
            "normal approximation at tau 0.5, n 10",
            normal_approximation,
        ),
        ("scale invariance of the scan", scale_invariance),
        ("segment arithmetic 22 x 140", segment_arithmetic),
        ("synthetic recovery", synthetic_recovery),
        ("metrics arithmetic", metrics_arithmetic),
        ("confidence interval consistency", ci_consistency),
        ("classifier agreement", classifier_agreement),
        ("ROC properties", roc_properties),
        ("fast kernel speedup", bench_speedup),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
