use super::{doubled_midranks, normal_upper_tail, TestResult};

/// Handling of observations equal to the hypothesised centre.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ZeroMethod {
    /// Drop zero differences before ranking.
    #[default]
    Drop,
    /// Rank zeros with everything else and split their ranks evenly between
    /// the positive and negative sums.
    Split,
}

const EXACT_MAX_N: usize = 25;

pub fn signed_rank_test(sample: &[f64], mu0: f64) -> TestResult {
    signed_rank_test_with(sample, mu0, ZeroMethod::Drop)
}

/// Wilcoxon signed-rank test of symmetry about `mu0`, two-sided. Exact for
/// up to 25 nonzero differences, normal approximation with continuity
/// correction beyond. The statistic is `W+`.
pub fn signed_rank_test_with(sample: &[f64], mu0: f64, zeros: ZeroMethod) -> TestResult {
    signed_rank_impl(sample, mu0, zeros, EXACT_MAX_N)
}

fn signed_rank_impl(sample: &[f64], mu0: f64, zeros: ZeroMethod, exact_max: usize) -> TestResult {
    let diffs: Vec<f64> = sample.iter().map(|v| v - mu0).collect();
    let ranked: Vec<f64> = match zeros {
        ZeroMethod::Drop => diffs.iter().copied().filter(|d| *d != 0.0).collect(),
        ZeroMethod::Split => diffs.clone(),
    };
    let abs: Vec<f64> = ranked.iter().map(|d| d.abs()).collect();
    let ranks = doubled_midranks(&abs);
    // zero differences carry no sign; only nonzero ranks vary under the null
    let mut signed: Vec<(u64, bool)> = Vec::new();
    let mut zero_part = 0u64;
    for (&d, &r) in ranked.iter().zip(&ranks) {
        if d == 0.0 {
            zero_part += r;
        } else {
            signed.push((r, d > 0.0));
        }
    }
    let n = signed.len();
    let w_plus2: u64 = signed.iter().filter(|(_, pos)| *pos).map(|(r, _)| r).sum();
    let statistic = (w_plus2 as f64 + zero_part as f64 / 2.0) / 2.0;
    if n == 0 {
        return TestResult {
            method: "Wilcoxon signed-rank",
            statistic,
            p_value: 1.0,
            one_sided_p: None,
            n: vec![sample.len()],
            exact: true,
        };
    }
    let total2: u64 = signed.iter().map(|(r, _)| r).sum();
    let (p_value, exact) = if n <= exact_max {
        // distribution of the doubled positive-rank sum over all sign flips
        let mut counts = vec![0f64; total2 as usize + 1];
        counts[0] = 1.0;
        let mut reach = 0usize;
        for (r, _) in &signed {
            let r = *r as usize;
            for s in (0..=reach).rev() {
                if counts[s] > 0.0 {
                    counts[s + r] += counts[s];
                }
            }
            reach += r;
        }
        let observed = (2 * w_plus2 as i64 - total2 as i64).abs();
        let extreme: f64 = counts
            .iter()
            .enumerate()
            .filter(|(s, _)| (2 * *s as i64 - total2 as i64).abs() >= observed)
            .map(|(_, c)| c)
            .sum();
        ((extreme / 2f64.powi(n as i32)).min(1.0), true)
    } else {
        let mean = total2 as f64 / 4.0;
        let var: f64 = signed
            .iter()
            .map(|(r, _)| (*r as f64 / 2.0).powi(2))
            .sum::<f64>()
            / 4.0;
        let w = w_plus2 as f64 / 2.0;
        let z = ((w - mean).abs() - 0.5).max(0.0) / var.sqrt();
        ((2.0 * normal_upper_tail(z)).min(1.0), false)
    };
    TestResult {
        method: "Wilcoxon signed-rank",
        statistic,
        p_value,
        one_sided_p: None,
        n: vec![n],
        exact,
    }
}
