//! Shared inputs for the criterion benchmarks.

pub use swdtau::timing::random_pair;
