//! Statistical tests and regressions used to analyse observation tables.
//!
//! Exact null distributions are enumerated with dynamic programming over
//! doubled ranks, so midranks from ties stay integral.

mod fisher;
mod mann_whitney;
mod mixed;
mod ols;
mod signed_rank;

pub use fisher::fisher_exact_test;
pub use mann_whitney::mann_whitney_test;
pub use mixed::{
    family_treatments, fit_random_intercept, mixed_model_fit, Family, MixedFit, MixedOutcome,
    WaldTest,
};
pub use ols::{ols_by_level, simple_ols, OlsCell, OlsFit};
pub use signed_rank::{signed_rank_test, signed_rank_test_with, ZeroMethod};

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestResult {
    pub method: &'static str,
    pub statistic: f64,
    /// Two-sided.
    pub p_value: f64,
    /// Upper-tail p-value, reported where the test has a natural direction
    /// (the 2x2 Fisher test).
    pub one_sided_p: Option<f64>,
    pub n: Vec<usize>,
    pub exact: bool,
}

/// Midranks (1-based) of `values`, doubled so ties stay integral.
pub(crate) fn doubled_midranks(values: &[f64]) -> Vec<u64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0u64; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j+1 share their mean; doubled: i + j + 2
        for &k in &order[i..=j] {
            ranks[k] = (i + j + 2) as u64;
        }
        i = j + 1;
    }
    ranks
}

pub(crate) fn normal_upper_tail(z: f64) -> f64 {
    let standard = Normal::standard();
    standard.sf(z)
}

/// `2 * P(Z > |z|)`, capped at 1.
pub fn two_sided_normal_p(z: f64) -> f64 {
    (2.0 * normal_upper_tail(z.abs())).min(1.0)
}

/// Significance stars at 0.01 / 0.05 / 0.1.
pub fn stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.1 {
        "*"
    } else {
        ""
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midranks_with_ties() {
        assert_eq!(doubled_midranks(&[3.0, 1.0, 2.0]), vec![6, 2, 4]);
        assert_eq!(doubled_midranks(&[1.0, 1.0, 2.0]), vec![3, 3, 6]);
        assert_eq!(doubled_midranks(&[]), Vec::<u64>::new());
    }

    #[test]
    fn star_levels() {
        assert_eq!(stars(0.001), "***");
        assert_eq!(stars(0.03), "**");
        assert_eq!(stars(0.07), "*");
        assert_eq!(stars(0.5), "");
    }
}
