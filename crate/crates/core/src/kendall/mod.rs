//! Kendall rank correlation.
//!
//! Two routes compute the same pair counts: [`count_pairs_bruteforce`]
//! classifies all n(n−1)/2 pairs directly, [`count_pairs_fast`] sorts by
//! `(x, y)` and counts discordant pairs as merge-sort exchanges, with tie
//! totals taken from run lengths (Knight's method). Everything downstream
//! (tau-a, tau-b, the z statistic) is a function of the counts.
//!
//! Ties are exact floating-point equality; there is no epsilon.

pub mod normal;

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KendallError {
    #[error("x has {x} values but y has {y}")]
    LengthMismatch { x: usize, y: usize },
    #[error("need at least {min} observations, got {n}")]
    TooShort { n: usize, min: usize },
    #[error("every pair is tied in x or in y; tau-b is undefined")]
    AllTied,
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauVariant {
    TauA,
    #[default]
    TauB,
}

/// Tail of the normal approximation used for the p-value.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tail {
    #[default]
    TwoSided,
    /// Upper tail only (positive association).
    OneSided,
}

/// Classification of all n(n−1)/2 pairs. The five classes are disjoint.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairCounts {
    pub concordant: u64,
    pub discordant: u64,
    /// Tied in x only.
    pub ties_x: u64,
    /// Tied in y only.
    pub ties_y: u64,
    /// Tied in both.
    pub ties_xy: u64,
    pub n: u64,
}

impl PairCounts {
    pub fn total_pairs(&self) -> u64 {
        self.n * self.n.saturating_sub(1) / 2
    }

    /// `true` when the five classes account for every pair.
    pub fn is_conserved(&self) -> bool {
        self.concordant + self.discordant + self.ties_x + self.ties_y + self.ties_xy
            == self.total_pairs()
    }

    pub fn has_ties(&self) -> bool {
        self.ties_x + self.ties_y + self.ties_xy > 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Significance {
    pub z: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauResult {
    pub tau: f64,
    pub z: f64,
    pub p_value: f64,
    pub counts: PairCounts,
    pub variant: TauVariant,
}

/// Smallest reported p-value.
pub const P_FLOOR: f64 = 1e-300;

fn check_inputs(x: &[f64], y: &[f64]) -> Result<(), KendallError> {
    if x.len() != y.len() {
        return Err(KendallError::LengthMismatch {
            x: x.len(),
            y: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(KendallError::TooShort { n: x.len(), min: 2 });
    }
    if let Some(i) = x
        .iter()
        .zip(y)
        .position(|(a, b)| !a.is_finite() || !b.is_finite())
    {
        return Err(KendallError::NonFinite(i));
    }
    Ok(())
}

/// Exhaustive O(n²) pair classification.
pub fn count_pairs_bruteforce(x: &[f64], y: &[f64]) -> Result<PairCounts, KendallError> {
    check_inputs(x, y)?;
    let n = x.len();
    let mut c = PairCounts {
        n: n as u64,
        ..PairCounts::default()
    };
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = x[i].partial_cmp(&x[j]).expect("finite");
            let dy = y[i].partial_cmp(&y[j]).expect("finite");
            match (dx, dy) {
                (Ordering::Equal, Ordering::Equal) => c.ties_xy += 1,
                (Ordering::Equal, _) => c.ties_x += 1,
                (_, Ordering::Equal) => c.ties_y += 1,
                (a, b) if a == b => c.concordant += 1,
                _ => c.discordant += 1,
            }
        }
    }
    Ok(c)
}

/// Sum of C(run, 2) over maximal runs of equal adjacent values.
fn tied_pairs<T, F: Fn(&T, &T) -> bool>(sorted: &[T], eq: F) -> u64 {
    let mut total = 0u64;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if eq(&w[0], &w[1]) {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Stable bottom-up merge sort returning the number of exchanges, i.e.
/// pairs `i < j` with `v[i] > v[j]` strictly.
fn sort_counting_exchanges(v: &mut Vec<f64>) -> u64 {
    let n = v.len();
    let mut buf = vec![0.0; n];
    let mut exchanges = 0u64;
    let mut width = 1;
    while width < n {
        let mut lo = 0;
        while lo < n {
            let mid = (lo + width).min(n);
            let hi = (lo + 2 * width).min(n);
            let (mut i, mut j, mut k) = (lo, mid, lo);
            while i < mid && j < hi {
                if v[j] < v[i] {
                    buf[k] = v[j];
                    exchanges += (mid - i) as u64;
                    j += 1;
                } else {
                    buf[k] = v[i];
                    i += 1;
                }
                k += 1;
            }
            buf[k..k + (mid - i)].copy_from_slice(&v[i..mid]);
            k += mid - i;
            buf[k..k + (hi - j)].copy_from_slice(&v[j..hi]);
            lo = hi;
        }
        std::mem::swap(v, &mut buf);
        width *= 2;
    }
    exchanges
}

/// O(n log n) pair classification.
pub fn count_pairs_fast(x: &[f64], y: &[f64]) -> Result<PairCounts, KendallError> {
    check_inputs(x, y)?;
    let n = x.len();
    let mut pairs: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    pairs.sort_unstable_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .expect("finite")
            .then(a.1.partial_cmp(&b.1).expect("finite"))
    });

    let tied_x_all = tied_pairs(&pairs, |a, b| a.0 == b.0);
    let tied_both = tied_pairs(&pairs, |a, b| a.0 == b.0 && a.1 == b.1);

    let mut ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let discordant = sort_counting_exchanges(&mut ys);
    let tied_y_all = tied_pairs(&ys, |a, b| a == b);

    let total = (n as u64) * (n as u64 - 1) / 2;
    Ok(PairCounts {
        concordant: total + tied_both - tied_x_all - tied_y_all - discordant,
        discordant,
        ties_x: tied_x_all - tied_both,
        ties_y: tied_y_all - tied_both,
        ties_xy: tied_both,
        n: n as u64,
    })
}

/// 2(n_c − n_d) / (n(n−1)).
pub fn tau_a(counts: &PairCounts) -> f64 {
    let n = counts.n as f64;
    2.0 * (counts.concordant as f64 - counts.discordant as f64) / (n * (n - 1.0))
}

/// (n_c − n_d) / √((n0 − t_x)(n0 − t_y)), with t_x, t_y counting every pair
/// tied in x (resp. y), including pairs tied in both.
pub fn tau_b(counts: &PairCounts) -> Result<f64, KendallError> {
    let n0 = counts.total_pairs();
    let untied_x = n0 - counts.ties_x - counts.ties_xy;
    let untied_y = n0 - counts.ties_y - counts.ties_xy;
    if untied_x == 0 || untied_y == 0 {
        return Err(KendallError::AllTied);
    }
    if !counts.has_ties() {
        return Ok(tau_a(counts));
    }
    let num = counts.concordant as f64 - counts.discordant as f64;
    let tau = num / ((untied_x as f64) * (untied_y as f64)).sqrt();
    Ok(tau.clamp(-1.0, 1.0))
}

/// Tau from the sign-sum form: 2/(n(n−1)) Σ_{i<j} sgn(x_i − x_j)·sgn(y_i − y_j).
pub fn tau_sign_sum(x: &[f64], y: &[f64]) -> Result<f64, KendallError> {
    check_inputs(x, y)?;
    let n = x.len();
    let sgn = |d: f64| -> i64 {
        if d > 0.0 {
            1
        } else if d < 0.0 {
            -1
        } else {
            0
        }
    };
    let mut sum: i64 = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            sum += sgn(x[i] - x[j]) * sgn(y[i] - y[j]);
        }
    }
    let nf = n as f64;
    Ok(2.0 * sum as f64 / (nf * (nf - 1.0)))
}

/// Normal-approximation statistic z = 3τ√(n(n−1)) / √(2(2n+5)) and its tail probability.
pub fn significance(tau: f64, n: usize, tail: Tail) -> Result<Significance, KendallError> {
    if n < 3 {
        return Err(KendallError::TooShort { n, min: 3 });
    }
    let nf = n as f64;
    let z = 3.0 * tau * (nf * (nf - 1.0)).sqrt() / (2.0 * (2.0 * nf + 5.0)).sqrt();
    let p = match tail {
        Tail::TwoSided => normal::normal_two_sided(z),
        Tail::OneSided => normal::normal_sf(z),
    };
    Ok(Significance {
        z,
        p_value: p.clamp(P_FLOOR, 1.0),
    })
}

fn finish(counts: PairCounts, variant: TauVariant, tail: Tail) -> Result<TauResult, KendallError> {
    let tau = match variant {
        TauVariant::TauA => tau_a(&counts),
        TauVariant::TauB => tau_b(&counts)?,
    };
    // Two observations carry no evidence either way.
    let sig = if counts.n < 3 {
        Significance {
            z: 0.0,
            p_value: 1.0,
        }
    } else {
        significance(tau, counts.n as usize, tail)?
    };
    Ok(TauResult {
        tau,
        z: sig.z,
        p_value: sig.p_value,
        counts,
        variant,
    })
}

/// Tau with significance via the O(n²) pair classification.
pub fn tau_bruteforce(
    x: &[f64],
    y: &[f64],
    variant: TauVariant,
    tail: Tail,
) -> Result<TauResult, KendallError> {
    finish(count_pairs_bruteforce(x, y)?, variant, tail)
}

/// Tau with significance via the O(n log n) route. For n = 2 the statistic
/// is reported as z = 0, p = 1.
pub fn tau_fast(
    x: &[f64],
    y: &[f64],
    variant: TauVariant,
    tail: Tail,
) -> Result<TauResult, KendallError> {
    finish(count_pairs_fast(x, y)?, variant, tail)
}

/// Evaluates many pairs concurrently; output `i` belongs to input `i`.
pub fn tau_batch(
    pairs: &[(&[f64], &[f64])],
    variant: TauVariant,
    tail: Tail,
) -> Vec<Result<TauResult, KendallError>> {
    pairs
        .par_iter()
        .map(|(x, y)| tau_fast(x, y, variant, tail))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn six_pair_enumeration() {
        let c = count_pairs_bruteforce(&[1., 2., 3., 4.], &[1., 3., 2., 4.]).unwrap();
        assert_eq!((c.concordant, c.discordant), (5, 1));
        assert!(!c.has_ties());
        assert_eq!(
            count_pairs_fast(&[1., 2., 3., 4.], &[1., 3., 2., 4.]).unwrap(),
            c
        );
        assert!((tau_a(&c) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn single_pair_cases() {
        let c = count_pairs_bruteforce(&[1., 2.], &[2., 1.]).unwrap();
        assert_eq!((c.concordant, c.discordant), (0, 1));
        let c = count_pairs_bruteforce(&[1., 1.], &[3., 4.]).unwrap();
        assert_eq!((c.ties_x, c.concordant, c.discordant), (1, 0, 0));
    }

    #[test]
    fn input_errors() {
        assert_eq!(
            count_pairs_bruteforce(&[1., 2.], &[1.]).unwrap_err(),
            KendallError::LengthMismatch { x: 2, y: 1 }
        );
        assert_eq!(
            count_pairs_fast(&[1.], &[1.]).unwrap_err(),
            KendallError::TooShort { n: 1, min: 2 }
        );
        assert_eq!(
            count_pairs_fast(&[1., f64::NAN], &[1., 2.]).unwrap_err(),
            KendallError::NonFinite(1)
        );
    }

    #[test]
    fn perfect_and_reversed_rankings() {
        let x: Vec<f64> = (0..1000).map(|i| i as f64 * 0.5 - 3.0).collect();
        let rev: Vec<f64> = x.iter().rev().copied().collect();
        for v in [TauVariant::TauA, TauVariant::TauB] {
            assert_eq!(tau_fast(&x, &x, v, Tail::TwoSided).unwrap().tau, 1.0);
            assert_eq!(tau_fast(&x, &rev, v, Tail::TwoSided).unwrap().tau, -1.0);
        }
    }

    #[test]
    fn all_tied_x_has_no_tau_b() {
        let c = count_pairs_fast(&[7., 7., 7.], &[1., 5., 2.]).unwrap();
        assert_eq!(c.ties_x, 3);
        assert_eq!(tau_b(&c).unwrap_err(), KendallError::AllTied);
        assert_eq!(tau_a(&c), 0.0);
    }

    #[test]
    fn tau_b_with_one_x_tie() {
        let (x, y) = ([1., 2., 2., 3.], [1., 2., 3., 4.]);
        let c = count_pairs_bruteforce(&x, &y).unwrap();
        assert_eq!((c.concordant, c.discordant, c.ties_x), (5, 0, 1));
        // n0 = 6, t_x = 1, t_y = 0: 5 / sqrt(5 * 6)
        let expected = 5.0 / 30f64.sqrt();
        let b = tau_b(&c).unwrap();
        assert!((b - expected).abs() < 1e-15);
        assert!(tau_a(&c) < b && b < 1.0);
    }

    #[test]
    fn tau_b_equals_tau_a_without_ties() {
        let c = count_pairs_fast(&[3., 1., 4., 1.5, 9.], &[2., 7., 1., 8., 2.8]).unwrap();
        assert!(!c.has_ties());
        assert_eq!(tau_b(&c).unwrap(), tau_a(&c));
    }

    #[test]
    fn significance_examples() {
        let s = significance(0.0, 17, Tail::TwoSided).unwrap();
        assert_eq!((s.z, s.p_value), (0.0, 1.0));

        // 1.5·√90/√50 and 2·(1 − Φ(z)) evaluated independently.
        let z = 1.5 * 90f64.sqrt() / 50f64.sqrt();
        let phi = 0.5 * (1.0 + statrs::function::erf::erf(z / 2f64.sqrt()));
        let p = 2.0 * (1.0 - phi);
        let s = significance(0.5, 10, Tail::TwoSided).unwrap();
        assert!((s.z - z).abs() < 1e-12);
        assert!((s.p_value - p).abs() < 1e-10);
        assert!((s.z - 2.0125).abs() < 1e-3);
        assert!((s.p_value - 0.0442).abs() < 1e-3);

        let s = significance(1.0, 256, Tail::TwoSided).unwrap();
        assert!((s.z - 3.0 * (256.0f64 * 255.0).sqrt() / 1034f64.sqrt()).abs() < 1e-12);
        assert!((s.z - 23.8).abs() < 0.05);
        assert!(s.p_value < 1e-15 && s.p_value >= P_FLOOR);

        assert_eq!(
            significance(0.3, 2, Tail::TwoSided).unwrap_err(),
            KendallError::TooShort { n: 2, min: 3 }
        );
    }

    #[test]
    fn one_sided_tail_halves_positive_p() {
        let two = significance(0.4, 20, Tail::TwoSided).unwrap();
        let one = significance(0.4, 20, Tail::OneSided).unwrap();
        assert!((one.p_value * 2.0 - two.p_value).abs() < 1e-15);
        let neg = significance(-0.4, 20, Tail::OneSided).unwrap();
        assert!((neg.p_value + one.p_value - 1.0).abs() < 1e-14);
    }

    #[test]
    fn batch_preserves_order() {
        let a = [1., 2., 3., 4.];
        let b = [4., 3., 2., 1.];
        let out = tau_batch(
            &[(&a, &a), (&a, &b), (&a, &a[..3])],
            TauVariant::TauB,
            Tail::TwoSided,
        );
        assert_eq!(out[0].as_ref().unwrap().tau, 1.0);
        assert_eq!(out[1].as_ref().unwrap().tau, -1.0);
        assert!(out[2].is_err());
    }

    fn alphabet_vec(max_len: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (2..max_len).prop_flat_map(|n| {
            (
                prop::collection::vec((0u8..3).prop_map(f64::from), n),
                prop::collection::vec((0u8..3).prop_map(f64::from), n),
            )
        })
    }

    fn distinct_vec(max_len: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (3..max_len).prop_flat_map(|n| {
            (
                Just((0..n).map(|i| i as f64).collect::<Vec<_>>()).prop_shuffle(),
                Just((0..n).map(|i| i as f64 * 1.5 - 7.0).collect::<Vec<_>>()).prop_shuffle(),
            )
        })
    }

    proptest! {
        #[test]
        fn fast_matches_bruteforce_with_heavy_ties((x, y) in alphabet_vec(120)) {
            let b = count_pairs_bruteforce(&x, &y).unwrap();
            let f = count_pairs_fast(&x, &y).unwrap();
            prop_assert_eq!(b, f);
            prop_assert!(b.is_conserved());
        }

        #[test]
        fn fast_matches_bruteforce_continuous(
            x in prop::collection::vec(-10.0f64..10.0, 2..200),
            seed in any::<u64>()
        ) {
            let y: Vec<f64> = x.iter().enumerate()
                .map(|(i, v)| (v * 3.1 + ((i as u64 ^ seed) % 17) as f64).sin())
                .collect();
            prop_assert_eq!(count_pairs_bruteforce(&x, &y).unwrap(), count_pairs_fast(&x, &y).unwrap());
        }

        #[test]
        fn pair_form_equals_sign_sum((x, y) in distinct_vec(200)) {
            let c = count_pairs_bruteforce(&x, &y).unwrap();
            let s = tau_sign_sum(&x, &y).unwrap();
            prop_assert!((tau_a(&c) - s).abs() <= 1e-12);
        }

        #[test]
        fn reversing_ranks_negates((x, y) in distinct_vec(150)) {
            let neg: Vec<f64> = y.iter().map(|v| -v).collect();
            let a = tau_fast(&x, &y, TauVariant::TauB, Tail::TwoSided).unwrap().tau;
            let b = tau_fast(&x, &neg, TauVariant::TauB, Tail::TwoSided).unwrap().tau;
            prop_assert!((a + b).abs() <= 1e-12);
        }

        #[test]
        fn monotone_transforms_do_not_change_tau((x, y) in distinct_vec(150), scale in 0.01f64..100.0, shift in -50.0f64..50.0) {
            let base = tau_fast(&x, &y, TauVariant::TauB, Tail::TwoSided).unwrap().tau;
            let affine: Vec<f64> = x.iter().map(|v| v * scale + shift).collect();
            let cubic: Vec<f64> = y.iter().map(|v| v * v * v + v).collect();
            prop_assert_eq!(tau_fast(&affine, &y, TauVariant::TauB, Tail::TwoSided).unwrap().tau, base);
            prop_assert_eq!(tau_fast(&x, &cubic, TauVariant::TauB, Tail::TwoSided).unwrap().tau, base);
        }

        #[test]
        fn significance_is_odd(tau in -1.0f64..1.0, n in 3usize..2000) {
            let pos = significance(tau, n, Tail::TwoSided).unwrap();
            let neg = significance(-tau, n, Tail::TwoSided).unwrap();
            prop_assert_eq!(pos.z, -neg.z);
            prop_assert_eq!(pos.p_value, neg.p_value);
            prop_assert!((0.0..=1.0).contains(&pos.p_value));
        }
    }
}
