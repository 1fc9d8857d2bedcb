//! Wall-clock comparison of the brute-force and O(n log n) tau kernels.

use std::hint::black_box;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::kendall::{tau_bruteforce, tau_fast, Tail, TauVariant};
use crate::synthgen::SplitMix64;

/// Sizes at and above which the fast kernel must not be slower.
pub const CHECK_FROM_N: usize = 1024;
const SAMPLES: usize = 7;
const MIN_SAMPLE_TIME: Duration = Duration::from_millis(2);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    Brute,
    Fast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub n: usize,
    pub kernel: Kernel,
    /// Median over samples of the mean time per call.
    pub median_ns: f64,
    pub calls_per_sample: u64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchCheck {
    pub n: usize,
    pub speedup: f64,
    pub fast_not_slower: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub checks: Vec<BenchCheck>,
    /// False when any check at n >= 1024 found the fast kernel slower.
    pub passed: bool,
}

impl BenchReport {
    pub fn speedup_at(&self, n: usize) -> Option<f64> {
        let ns = |k| {
            self.rows
                .iter()
                .find(|r| r.n == n && r.kernel == k)
                .map(|r| r.median_ns)
        };
        Some(ns(Kernel::Brute)? / ns(Kernel::Fast)?)
    }
}

/// A tie-free pair of length `n` with moderate positive correlation.
pub fn random_pair(n: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = SplitMix64::new(seed);
    let x: Vec<f64> = (0..n).map(|_| rng.next_f64()).collect();
    let y = x.iter().map(|v| v + 0.5 * rng.next_f64()).collect();
    (x, y)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn time_kernel(kernel: Kernel, x: &[f64], y: &[f64]) -> BenchRow {
    let call = || {
        let r = match kernel {
            Kernel::Brute => tau_bruteforce(x, y, TauVariant::TauB, Tail::TwoSided),
            Kernel::Fast => tau_fast(x, y, TauVariant::TauB, Tail::TwoSided),
        };
        black_box(r.expect("bench input is valid"));
    };
    // Double the batch until one batch takes long enough to time reliably.
    let mut calls = 1u64;
    loop {
        let t = Instant::now();
        for _ in 0..calls {
            call();
        }
        if t.elapsed() >= MIN_SAMPLE_TIME || calls >= 1 << 24 {
            break;
        }
        calls *= 2;
    }
    let per_call: Vec<f64> = (0..SAMPLES)
        .map(|_| {
            let t = Instant::now();
            for _ in 0..calls {
                call();
            }
            t.elapsed().as_nanos() as f64 / calls as f64
        })
        .collect();
    BenchRow {
        n: x.len(),
        kernel,
        median_ns: median(per_call),
        calls_per_sample: calls,
        samples: SAMPLES,
    }
}

/// Times both kernels at every size (brute row first). Sizes below 2 are skipped.
pub fn run_bench(sizes: &[usize], seed: u64) -> BenchReport {
    let mut rows = Vec::with_capacity(sizes.len() * 2);
    let mut checks = Vec::new();
    for &n in sizes.iter().filter(|&&n| n >= 2) {
        let (x, y) = random_pair(n, seed ^ n as u64);
        let brute = time_kernel(Kernel::Brute, &x, &y);
        let fast = time_kernel(Kernel::Fast, &x, &y);
        if n >= CHECK_FROM_N {
            checks.push(BenchCheck {
                n,
                speedup: brute.median_ns / fast.median_ns,
                fast_not_slower: fast.median_ns <= brute.median_ns,
            });
        }
        rows.push(brute);
        rows.push(fast);
    }
    let passed = checks.iter().all(|c| c.fast_not_slower);
    BenchReport {
        rows,
        checks,
        passed,
    }
}
