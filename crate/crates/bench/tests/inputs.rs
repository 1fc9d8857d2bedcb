use swdtau::kendall::{tau_bruteforce, tau_fast};
use swdtau::{Tail, TauVariant};
use swdtau_bench::random_pair;

#[test]
fn bench_inputs_are_seeded_and_correlated() {
    let (x, y) = random_pair(512, 9);
    assert_eq!((x.len(), y.len()), (512, 512));
    assert_eq!(random_pair(512, 9), (x.clone(), y.clone()));
    assert_ne!(random_pair(512, 10).0, x);
    let fast = tau_fast(&x, &y, TauVariant::TauB, Tail::TwoSided).unwrap();
    let brute = tau_bruteforce(&x, &y, TauVariant::TauB, Tail::TwoSided).unwrap();
    assert_eq!(fast.counts, brute.counts);
    assert!(fast.tau > 0.5);
}
