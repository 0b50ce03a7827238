//! Shared fixtures for the criterion benchmarks.

use ipszeta::dk::trial_rng;
use ipszeta::{build_global_recursive, CMatrix, Caps, LocalOperator, C64};
use rand::Rng;

/// Caps wide enough for every benchmark size.
pub fn bench_caps() -> Caps {
    Caps {
        dense: 12,
        eigen: 12,
        matrix_free: 26,
    }
}

pub fn dk(p: f64, q: f64) -> LocalOperator {
    LocalOperator::dk_form(p, q)
}

pub fn random_general(seed: u64) -> LocalOperator {
    LocalOperator::random_general(&mut trial_rng(seed, 0))
}

/// Random complex state of length `2^n`.
pub fn random_state(n: usize, seed: u64) -> Vec<C64> {
    let mut rng = trial_rng(seed, 1);
    (0..1usize << n)
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect()
}

pub fn dense(local: &LocalOperator, n: usize) -> CMatrix {
    build_global_recursive(local, n, &bench_caps())
        .expect("within caps")
        .into_dense()
        .expect("dense form")
}
