use super::{doubled_midranks, normal_upper_tail, TestResult};

const EXACT_MAX_CELLS: usize = 400;

/// Mann-Whitney U test, two-sided. The statistic is `U` for sample `a`.
/// Exact when `n_a * n_b <= 400` (enumerating the null distribution of the
/// smaller sample's rank sum), tie-corrected normal approximation with
/// continuity correction otherwise.
pub fn mann_whitney_test(a: &[f64], b: &[f64]) -> TestResult {
    mann_whitney_impl(a, b, EXACT_MAX_CELLS)
}

fn mann_whitney_impl(a: &[f64], b: &[f64], exact_max: usize) -> TestResult {
    let (na, nb) = (a.len(), b.len());
    let n = na + nb;
    if na == 0 || nb == 0 {
        return TestResult {
            method: "Mann-Whitney U",
            statistic: 0.0,
            p_value: 1.0,
            one_sided_p: None,
            n: vec![na, nb],
            exact: true,
        };
    }
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = doubled_midranks(&pooled);
    let ra2: u64 = ranks[..na].iter().sum();
    let u_a = ra2 as f64 / 2.0 - (na * (na + 1)) as f64 / 2.0;
    let mean_u = (na * nb) as f64 / 2.0;

    let (p_value, exact) = if na * nb <= exact_max {
        // enumerate rank sums of every subset of size m drawn from the pool
        let (m, observed2) = if na <= nb {
            (na, ra2)
        } else {
            (nb, ranks[na..].iter().sum())
        };
        let max_sum: usize = ranks.iter().map(|&r| r as usize).sum();
        // counts[k][s]: subsets of size k with doubled rank sum s
        let mut counts = vec![vec![0f64; max_sum + 1]; m + 1];
        counts[0][0] = 1.0;
        let mut reach = 0usize;
        for &r in &ranks {
            let r = r as usize;
            for k in (1..=m).rev() {
                let (lower, upper) = counts.split_at_mut(k);
                let (src, dst) = (&lower[k - 1], &mut upper[0]);
                for s in (0..=reach).rev() {
                    if src[s] > 0.0 {
                        dst[s + r] += src[s];
                    }
                }
            }
            reach += r;
        }
        // doubled expected rank sum of a size-m subset: m (n + 1)
        let centre = (m * (n + 1)) as i64;
        let dev = (observed2 as i64 - centre).abs();
        let total: f64 = counts[m].iter().sum();
        let extreme: f64 = counts[m]
            .iter()
            .enumerate()
            .filter(|(s, _)| (*s as i64 - centre).abs() >= dev)
            .map(|(_, c)| c)
            .sum();
        ((extreme / total).min(1.0), true)
    } else {
        let mut sorted = pooled.clone();
        sorted.sort_by(f64::total_cmp);
        let mut tie_term = 0.0;
        let mut i = 0;
        while i < sorted.len() {
            let mut j = i;
            while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
                j += 1;
            }
            let t = (j - i + 1) as f64;
            tie_term += t * t * t - t;
            i = j + 1;
        }
        let nf = n as f64;
        let var = (na * nb) as f64 / 12.0 * ((nf + 1.0) - tie_term / (nf * (nf - 1.0)));
        if var <= 0.0 {
            (1.0, false)
        } else {
            let z = ((u_a - mean_u).abs() - 0.5).max(0.0) / var.sqrt();
            ((2.0 * normal_upper_tail(z)).min(1.0), false)
        }
    };
    TestResult {
        method: "Mann-Whitney U",
        statistic: u_a,
        p_value,
        one_sided_p: None,
        n: vec![na, nb],
        exact,
    }
}
