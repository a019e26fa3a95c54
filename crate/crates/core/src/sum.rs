//! Fixed-order pairwise reductions.
//!
//! All norms and inner products in the crate go through these helpers so a
//! given input always reduces in the same order and produces bitwise
//! identical results.

const BLOCK: usize = 16;

/// Pairwise sum of `term(i)` for `i in 0..len`.
pub fn pairwise_sum_by<F: Fn(usize) -> f64>(len: usize, term: F) -> f64 {
    sum_range(0, len, &term)
}

/// Pairwise sum of a slice.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    pairwise_sum_by(values.len(), |i| values[i])
}

fn sum_range<F: Fn(usize) -> f64>(lo: usize, hi: usize, term: &F) -> f64 {
    let len = hi - lo;
    if len <= BLOCK {
        let mut acc = 0.0;
        for i in lo..hi {
            acc += term(i);
        }
        acc
    } else {
        let mid = lo + len / 2;
        sum_range(lo, mid, term) + sum_range(mid, hi, term)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    #[test]
    fn matches_naive_on_integers() {
        let v: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 499_500.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    #[test]
    fn beats_naive_accumulation_error() {
        // 0.1 is inexact in binary; naive summation drifts by O(n eps).
        let n = 1 << 20;
        let s = pairwise_sum_by(n, |_| 0.1);
        assert!((s - 0.1 * n as f64).abs() < 1e-6);
    }
}
