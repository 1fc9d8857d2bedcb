//! Deterministic synthetic EEG: spike-and-wave templates, background noise
//! and multichannel recordings with annotated SWD bursts.
//!
//! All randomness comes from [`SplitMix64`], so a `(seed, config)` pair fixes
//! every sample on every platform. Channel `m` draws from the stream seeded
//! with `seed ^ m`, which lets channels be generated in any order.

mod rng;

pub use rng::SplitMix64;

use std::collections::BTreeSet;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signal_model::{
    default_channel_labels, AnnotationEvent, AnnotationSet, Recording, SignalError, Template,
};

/// Mixed into the seed for the template-jitter stream.
const TEMPLATE_STREAM: u64 = 0x7E3A_9C15_D2B4_F068;
/// Rows of the Voss–McCartney pink-noise generator.
const PINK_ROWS: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("invalid synth config: {field}: {reason}")]
    InvalidConfig { field: String, reason: String },
    #[error("event {index} on {channel} [{start_s}, {end_s}) s falls outside the {duration_s} s recording")]
    EventOutOfBounds {
        index: usize,
        channel: String,
        start_s: f64,
        end_s: f64,
        duration_s: f64,
    },
    #[error("events {first} and {second} overlap on channel {channel}")]
    OverlappingEvents {
        first: usize,
        second: usize,
        channel: String,
    },
    #[error(transparent)]
    Signal(#[from] SignalError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    White,
    #[default]
    Pink,
}

/// One SWD burst to inject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthEvent {
    pub channel: String,
    pub start_s: f64,
    pub cycles: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: u64,
    pub sample_rate_hz: f64,
    pub swd_freq_hz: f64,
    /// Full width at half maximum of the spike.
    pub spike_width_ms: f64,
    /// Slow-wave amplitude as a fraction of the spike amplitude.
    pub wave_amplitude_ratio: f64,
    /// Spike amplitude before mean removal, in microvolts.
    pub spike_amplitude_uv: f64,
    pub noise_kind: NoiseKind,
    /// Mean SWD power over mean noise power, in decibels.
    pub snr_db: f64,
    pub num_channels: usize,
    pub duration_s: f64,
    pub events: Vec<SynthEvent>,
    pub patient_id: Option<String>,
    /// Size of the written template set, generating templates included.
    pub num_templates: usize,
    /// Cycle count of the generating template when no events are configured.
    pub template_cycles: usize,
    /// Relative frequency jitter of the extra templates.
    pub freq_jitter: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let events = [
            ("Cz", 6.0),
            ("Fz", 18.0),
            ("C3", 30.0),
            ("P4", 42.0),
            ("O1", 54.0),
        ]
        .into_iter()
        .map(|(channel, start_s)| SynthEvent {
            channel: channel.into(),
            start_s,
            cycles: 3,
        })
        .collect();
        SynthConfig {
            seed: 1,
            sample_rate_hz: 256.0,
            swd_freq_hz: 2.5,
            spike_width_ms: 40.0,
            wave_amplitude_ratio: 0.5,
            spike_amplitude_uv: 100.0,
            noise_kind: NoiseKind::Pink,
            snr_db: 20.0,
            num_channels: 22,
            duration_s: 60.0,
            events,
            patient_id: Some("P01".into()),
            num_templates: 10,
            template_cycles: 3,
            freq_jitter: 0.1,
        }
    }
}

impl SynthConfig {
    pub fn channel_labels(&self) -> Vec<String> {
        default_channel_labels(self.num_channels)
    }

    pub fn num_samples(&self) -> usize {
        (self.duration_s * self.sample_rate_hz).round() as usize
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |field: &str, reason: String| {
            Err(SynthError::InvalidConfig {
                field: field.into(),
                reason,
            })
        };
        if !(self.sample_rate_hz > 0.0 && self.sample_rate_hz.is_finite()) {
            return bad(
                "sample_rate_hz",
                format!("must be positive, got {}", self.sample_rate_hz),
            );
        }
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return bad(
                "duration_s",
                format!("must be positive, got {}", self.duration_s),
            );
        }
        if !(1.0..=3.0).contains(&self.swd_freq_hz) {
            return bad(
                "swd_freq_hz",
                format!("must lie in [1, 3] Hz, got {}", self.swd_freq_hz),
            );
        }
        if !(self.spike_width_ms > 0.0) || self.spike_width_ms * 3.0 >= 1000.0 / self.swd_freq_hz {
            return bad(
                "spike_width_ms",
                format!(
                    "must be positive and under a third of the cycle, got {}",
                    self.spike_width_ms
                ),
            );
        }
        if !(self.wave_amplitude_ratio > 0.0) {
            return bad("wave_amplitude_ratio", "must be positive".into());
        }
        if !(self.spike_amplitude_uv > 0.0) {
            return bad("spike_amplitude_uv", "must be positive".into());
        }
        if !self.snr_db.is_finite() {
            return bad("snr_db", "must be finite".into());
        }
        if self.num_channels == 0 {
            return bad("num_channels", "must be at least 1".into());
        }
        if self.template_cycles == 0 {
            return bad("template_cycles", "must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.freq_jitter) {
            return bad("freq_jitter", "must lie in [0, 1)".into());
        }
        let labels = self.channel_labels();
        for (i, ev) in self.events.iter().enumerate() {
            if !labels.contains(&ev.channel) {
                return bad(
                    &format!("events[{i}].channel"),
                    format!("unknown channel {:?}", ev.channel),
                );
            }
            if ev.cycles == 0 {
                return bad(&format!("events[{i}].cycles"), "must be at least 1".into());
            }
        }
        Ok(())
    }
}

/// Unit-amplitude SWD train: per cycle a Gaussian spike (FWHM `spike_width_ms`,
/// centred 1.5 widths into the cycle) followed by a negative half-sine slow
/// wave filling the rest of the cycle, then the mean removed.
pub fn swd_waveform(
    sample_rate_hz: f64,
    freq_hz: f64,
    cycles: usize,
    spike_width_ms: f64,
    wave_amplitude_ratio: f64,
) -> Vec<f64> {
    let len = (cycles as f64 * sample_rate_hz / freq_hz).round() as usize;
    let period = 1.0 / freq_hz;
    let fwhm = spike_width_ms / 1000.0;
    let sigma = fwhm / (2.0 * (2.0 * 2f64.ln()).sqrt());
    let centre = 1.5 * fwhm;
    let wave_start = 3.0 * fwhm;
    let mut x: Vec<f64> = (0..len)
        .map(|i| {
            let t = i as f64 / sample_rate_hz;
            let cycle = ((t * freq_hz).floor() as usize).min(cycles - 1);
            let tc = t - cycle as f64 * period;
            let spike = (-(tc - centre).powi(2) / (2.0 * sigma * sigma)).exp();
            let wave = if tc >= wave_start {
                -wave_amplitude_ratio * (PI * (tc - wave_start) / (period - wave_start)).sin()
            } else {
                0.0
            };
            spike + wave
        })
        .collect();
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter_mut().for_each(|v| *v -= mean);
    x
}

fn template_id(cycles: usize) -> String {
    format!("swd_{cycles}c")
}

/// The generating SWD template for a burst of `cycles` cycles, in microvolts.
pub fn make_template(cfg: &SynthConfig, cycles: usize) -> Result<Template, SynthError> {
    cfg.validate()?;
    if cycles == 0 {
        return Err(SynthError::InvalidConfig {
            field: "cycles".into(),
            reason: "must be at least 1".into(),
        });
    }
    let samples = swd_waveform(
        cfg.sample_rate_hz,
        cfg.swd_freq_hz,
        cycles,
        cfg.spike_width_ms,
        cfg.wave_amplitude_ratio,
    )
    .into_iter()
    .map(|v| v * cfg.spike_amplitude_uv)
    .collect();
    Ok(Template::new(
        template_id(cycles),
        cfg.patient_id.clone(),
        samples,
        cfg.sample_rate_hz,
    )?)
}

/// Cycle counts of the generating templates: those of the configured
/// events, or `template_cycles` when there are none.
fn generating_cycles(cfg: &SynthConfig) -> BTreeSet<usize> {
    let mut set: BTreeSet<usize> = cfg.events.iter().map(|e| e.cycles).collect();
    if set.is_empty() {
        set.insert(cfg.template_cycles);
    }
    set
}

/// The generating templates followed by frequency-jittered variants
/// (2 to 4 cycles) until `num_templates` are reached.
pub fn make_template_set(cfg: &SynthConfig) -> Result<Vec<Template>, SynthError> {
    cfg.validate()?;
    let mut out: Vec<Template> = generating_cycles(cfg)
        .into_iter()
        .map(|c| make_template(cfg, c))
        .collect::<Result<_, _>>()?;
    let mut rng = SplitMix64::new(cfg.seed ^ TEMPLATE_STREAM);
    let extra = cfg.num_templates.saturating_sub(out.len());
    for i in 0..extra {
        let cycles = 2 + i % 3;
        let freq = (cfg.swd_freq_hz * (1.0 + cfg.freq_jitter * (2.0 * rng.next_f64() - 1.0)))
            .clamp(1.0, 3.0);
        let samples = swd_waveform(
            cfg.sample_rate_hz,
            freq,
            cycles,
            cfg.spike_width_ms,
            cfg.wave_amplitude_ratio,
        )
        .into_iter()
        .map(|v| v * cfg.spike_amplitude_uv)
        .collect();
        out.push(Template::new(
            format!("swd_j{i:02}"),
            cfg.patient_id.clone(),
            samples,
            cfg.sample_rate_hz,
        )?);
    }
    Ok(out)
}

/// Unit-variance background noise.
pub fn noise(kind: NoiseKind, len: usize, rng: &mut SplitMix64) -> Vec<f64> {
    match kind {
        NoiseKind::White => (0..len).map(|_| rng.next_gaussian()).collect(),
        NoiseKind::Pink => {
            // Voss–McCartney: row k is redrawn every 2^k samples, staggered by
            // the trailing-zero count of the sample counter.
            let mut rows: Vec<f64> = (0..PINK_ROWS).map(|_| rng.next_gaussian()).collect();
            let mut sum: f64 = rows.iter().sum();
            let norm = ((PINK_ROWS + 1) as f64).sqrt();
            (0..len)
                .map(|n| {
                    let k = ((n as u64 + 1).trailing_zeros() as usize).min(PINK_ROWS - 1);
                    let fresh = rng.next_gaussian();
                    sum += fresh - rows[k];
                    rows[k] = fresh;
                    (sum + rng.next_gaussian()) / norm
                })
                .collect()
        }
    }
}

/// Standard deviation of background noise that puts SWD bursts at `snr_db`.
pub fn noise_std(cfg: &SynthConfig) -> f64 {
    let unit = swd_waveform(
        cfg.sample_rate_hz,
        cfg.swd_freq_hz,
        1,
        cfg.spike_width_ms,
        cfg.wave_amplitude_ratio,
    );
    let power = unit.iter().map(|v| v * v).sum::<f64>() / unit.len() as f64
        * cfg.spike_amplitude_uv
        * cfg.spike_amplitude_uv;
    (power / 10f64.powf(cfg.snr_db / 10.0)).sqrt()
}

/// Sample-accurate placement of each event: `(channel index, start, template)`.
fn place_events(cfg: &SynthConfig) -> Result<Vec<(usize, usize, Template)>, SynthError> {
    let labels = cfg.channel_labels();
    let n = cfg.num_samples();
    let mut placed = Vec::with_capacity(cfg.events.len());
    for (index, ev) in cfg.events.iter().enumerate() {
        let template = make_template(cfg, ev.cycles)?;
        let start = (ev.start_s * cfg.sample_rate_hz).round();
        let end = start + template.len() as f64;
        if !(ev.start_s >= 0.0) || end > n as f64 {
            return Err(SynthError::EventOutOfBounds {
                index,
                channel: ev.channel.clone(),
                start_s: ev.start_s,
                end_s: end / cfg.sample_rate_hz,
                duration_s: cfg.duration_s,
            });
        }
        let ch = labels
            .iter()
            .position(|l| *l == ev.channel)
            .expect("validated");
        placed.push((ch, start as usize, template));
    }
    for (i, a) in placed.iter().enumerate() {
        for (j, b) in placed.iter().enumerate().skip(i + 1) {
            if a.0 == b.0 && a.1 < b.1 + b.2.len() && b.1 < a.1 + a.2.len() {
                return Err(SynthError::OverlappingEvents {
                    first: i,
                    second: j,
                    channel: labels[a.0].clone(),
                });
            }
        }
    }
    Ok(placed)
}

/// Noise on every channel plus the configured SWD bursts, and one
/// annotation per burst with its exact sample span.
pub fn make_recording(cfg: &SynthConfig) -> Result<(Recording, AnnotationSet), SynthError> {
    cfg.validate()?;
    let n = cfg.num_samples();
    let placed = place_events(cfg)?;
    let sigma = noise_std(cfg);
    let labels = cfg.channel_labels();

    let data: Vec<Vec<f64>> = (0..cfg.num_channels)
        .into_par_iter()
        .map(|ch| {
            let mut rng = SplitMix64::new(cfg.seed ^ ch as u64);
            let mut row: Vec<f64> = noise(cfg.noise_kind, n, &mut rng)
                .into_iter()
                .map(|v| v * sigma)
                .collect();
            for (_, start, t) in placed.iter().filter(|p| p.0 == ch) {
                for (dst, src) in row[*start..*start + t.len()].iter_mut().zip(t.samples()) {
                    *dst += src;
                }
            }
            row
        })
        .collect();

    let events = placed
        .iter()
        .map(|(ch, start, t)| AnnotationEvent {
            channel: Some(labels[*ch].clone()),
            start_s: *start as f64 / cfg.sample_rate_hz,
            end_s: (*start + t.len()) as f64 / cfg.sample_rate_hz,
            label: "SWD".into(),
        })
        .collect();

    Ok((
        Recording::new(labels, cfg.sample_rate_hz, data)?,
        AnnotationSet::new(events)?,
    ))
}
