use super::TestResult;

fn ln_factorials(n: u64) -> Vec<f64> {
    let mut out = vec![0.0; n as usize + 1];
    for i in 1..=n as usize {
        out[i] = out[i - 1] + (i as f64).ln();
    }
    out
}

/// Fisher's exact test on a 2xK table of counts. The two-sided p-value
/// sums the probabilities of all tables with the observed margins that are
/// no more probable than the observed one. For 2x2 tables the upper tail
/// `P(a11 >= observed)` is reported as well. Tables with an empty row, or
/// fewer than two nonempty columns, are degenerate (`p = 1`).
pub fn fisher_exact_test(table: &[Vec<u64>; 2]) -> TestResult {
    let k = table[0].len().max(table[1].len());
    let cell = |r: usize, c: usize| table[r].get(c).copied().unwrap_or(0);
    let columns: Vec<u64> = (0..k).map(|c| cell(0, c) + cell(1, c)).collect();
    let row0: u64 = (0..k).map(|c| cell(0, c)).sum();
    let row1: u64 = (0..k).map(|c| cell(1, c)).sum();
    let total = row0 + row1;
    let n = vec![row0 as usize, row1 as usize];
    let live: Vec<usize> = (0..k).filter(|&c| columns[c] > 0).collect();
    if row0 == 0 || row1 == 0 || live.len() < 2 {
        return TestResult {
            method: "Fisher exact",
            statistic: 0.0,
            p_value: 1.0,
            one_sided_p: (k == 2).then_some(1.0),
            n,
            exact: true,
        };
    }
    let lf = ln_factorials(total);
    let cols: Vec<u64> = live.iter().map(|&c| columns[c]).collect();
    let observed: Vec<u64> = live.iter().map(|&c| cell(0, c)).collect();
    // log P = sum ln C(c_j, a_j) - ln C(N, row0)
    let ln_choose = |n: u64, r: u64| lf[n as usize] - lf[r as usize] - lf[(n - r) as usize];
    let ln_norm = ln_choose(total, row0);
    let ln_p = |first_row: &[u64]| -> f64 {
        first_row
            .iter()
            .zip(&cols)
            .map(|(&a, &c)| ln_choose(c, a))
            .sum::<f64>()
            - ln_norm
    };
    let ln_obs = ln_p(&observed);
    let tolerance = 1e-7;

    let mut two_sided = 0.0;
    let mut upper = 0.0;
    let mut current = vec![0u64; cols.len()];
    // remaining capacity of the columns to the right of each position
    let mut suffix = vec![0u64; cols.len() + 1];
    for j in (0..cols.len()).rev() {
        suffix[j] = suffix[j + 1] + cols[j];
    }
    fn walk(
        j: usize,
        left: u64,
        cols: &[u64],
        suffix: &[u64],
        current: &mut Vec<u64>,
        visit: &mut dyn FnMut(&[u64]),
    ) {
        if j == cols.len() {
            if left == 0 {
                visit(current);
            }
            return;
        }
        let lo = left.saturating_sub(suffix[j + 1]);
        let hi = left.min(cols[j]);
        for a in lo..=hi {
            current[j] = a;
            walk(j + 1, left - a, cols, suffix, current, visit);
        }
    }
    walk(0, row0, &cols, &suffix, &mut current, &mut |t: &[u64]| {
        let lp = ln_p(t);
        let p = lp.exp();
        if lp <= ln_obs + tolerance {
            two_sided += p;
        }
        if t[0] >= observed[0] {
            upper += p;
        }
    });
    TestResult {
        method: "Fisher exact",
        statistic: ln_obs.exp(),
        p_value: two_sided.min(1.0),
        one_sided_p: (k == 2 && live.len() == 2).then_some(upper.min(1.0)),
        n,
        exact: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn textbook_cases() {
        let r = fisher_exact_test(&[vec![2, 0], vec![0, 2]]);
        assert!((r.one_sided_p.unwrap() - 1.0 / 6.0).abs() < 1e-12);
        assert!((r.p_value - 1.0 / 3.0).abs() < 1e-12);
        let r = fisher_exact_test(&[vec![1, 1], vec![1, 1]]);
        assert!((r.p_value - 1.0).abs() < 1e-12);
        let r = fisher_exact_test(&[vec![10, 0], vec![0, 10]]);
        assert!((r.p_value - 2.0 / 184_756.0).abs() < 1e-15);
        assert!(r.p_value < 0.001);
    }

    #[test]
    fn degenerate_margins() {
        assert_eq!(fisher_exact_test(&[vec![0, 0], vec![3, 4]]).p_value, 1.0);
        assert_eq!(fisher_exact_test(&[vec![2, 0], vec![3, 0]]).p_value, 1.0);
    }

    #[test]
    fn two_by_three() {
        // hand enumeration: margins rows (3, 3), columns (2, 2, 2)
        let r = fisher_exact_test(&[vec![2, 1, 0], vec![0, 1, 2]]);
        // P(observed) = C(2,2)C(2,1)C(2,0)/C(6,3) = 2/20; tables with
        // probability <= 0.1 are the six permutations of (2,1,0)
        assert!((r.p_value - 0.6).abs() < 1e-12, "{}", r.p_value);
        assert!(r.one_sided_p.is_none());
    }

    proptest! {
        #[test]
        fn permutation_invariant(
            top in proptest::collection::vec(0u64..6, 2..=4),
            bottom in proptest::collection::vec(0u64..6, 2..=4),
            rotate in 0usize..4,
        ) {
            let k = top.len().min(bottom.len());
            let (top, bottom) = (top[..k].to_vec(), bottom[..k].to_vec());
            let base = fisher_exact_test(&[top.clone(), bottom.clone()]);
            prop_assert!((0.0..=1.0).contains(&base.p_value));
            let swapped = fisher_exact_test(&[bottom.clone(), top.clone()]);
            prop_assert!((base.p_value - swapped.p_value).abs() < 1e-9);
            let r = rotate % k;
            let mut t2 = top.clone();
            let mut b2 = bottom.clone();
            t2.rotate_left(r);
            b2.rotate_left(r);
            let rotated = fisher_exact_test(&[t2, b2]);
            prop_assert!((base.p_value - rotated.p_value).abs() < 1e-9);
        }
    }
}
