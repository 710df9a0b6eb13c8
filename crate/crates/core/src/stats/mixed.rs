//! Linear model with a random intercept per subject, fitted by maximum
//! likelihood. Fixed effects are the GLS solution for the current variance
//! components; the components move by EM steps, sped up by a squared
//! extrapolation that is only accepted when it does not lower the
//! likelihood. The recorded log-likelihood therefore never decreases.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::normal_upper_tail;
use crate::error::{Error, Result};
use crate::game::{EffortDirection, GameParams, TreatmentSpec};
use crate::metrics::relative_wage_gap;
use crate::rational::to_f64;
use crate::table::ObservationTable;

const TOLERANCE: f64 = 1e-10;
const MAX_ITERATIONS: usize = 20_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaldTest {
    pub label: String,
    pub chi2: f64,
    pub df: usize,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixedFit {
    pub names: Vec<String>,
    pub beta: Vec<f64>,
    pub se: Vec<f64>,
    #[serde(skip)]
    pub covariance: DMatrix<f64>,
    /// Subject-level intercept variance.
    pub sigma_u2: f64,
    pub sigma_e2: f64,
    pub log_likelihood: f64,
    pub log_likelihood_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub n_obs: usize,
    pub n_groups: usize,
    pub wald: Vec<WaldTest>,
}

impl MixedFit {
    /// Two-sided normal p-values of the coefficient z-ratios.
    pub fn p_values(&self) -> Vec<f64> {
        self.beta
            .iter()
            .zip(&self.se)
            .map(|(b, se)| {
                if *se > 0.0 {
                    (2.0 * normal_upper_tail((b / se).abs())).min(1.0)
                } else {
                    f64::NAN
                }
            })
            .collect()
    }

    pub fn coefficient(&self, name: &str) -> Option<(f64, f64)> {
        let i = self.names.iter().position(|n| n == name)?;
        Some((self.beta[i], self.se[i]))
    }

    /// Wald test of `R beta = 0`, one row of `R` per restriction, each row
    /// given as (coefficient name, weight) pairs.
    pub fn wald_test(&self, label: &str, restrictions: &[Vec<(&str, f64)>]) -> Result<WaldTest> {
        let p = self.names.len();
        let mut r = DMatrix::zeros(restrictions.len(), p);
        for (row, terms) in restrictions.iter().enumerate() {
            for (name, weight) in terms {
                let col = self
                    .names
                    .iter()
                    .position(|n| n == name)
                    .ok_or_else(|| Error::config(format!("unknown coefficient {name}")))?;
                r[(row, col)] += weight;
            }
        }
        let rb = &r * DVector::from_column_slice(&self.beta);
        let middle = &r * &self.covariance * r.transpose();
        let inv = middle.try_inverse().ok_or_else(|| {
            Error::data(format!(
                "Wald test {label}: singular restriction covariance"
            ))
        })?;
        let chi2 = (rb.transpose() * inv * &rb)[(0, 0)];
        let df = restrictions.len();
        let dist = ChiSquared::new(df as f64).expect("positive degrees of freedom");
        Ok(WaldTest {
            label: label.to_string(),
            chi2,
            df,
            p_value: dist.sf(chi2).clamp(0.0, 1.0),
        })
    }
}

struct Group {
    n: f64,
    xtx: DMatrix<f64>,
    col_sums: DVector<f64>,
    xty: DVector<f64>,
    y_sum: f64,
    rows: Vec<usize>,
}

/// Columns that are linear combinations of earlier ones, by Gram-Schmidt.
fn collinear_columns(x: &DMatrix<f64>, names: &[String]) -> Vec<String> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut dependent = Vec::new();
    for (j, name) in names.iter().enumerate() {
        let col = x.column(j).into_owned();
        let scale = col.norm();
        let mut residual = col;
        // two passes keep the projection stable
        for _ in 0..2 {
            for b in &basis {
                let c = b.dot(&residual);
                residual -= b * c;
            }
        }
        let norm = residual.norm();
        if scale == 0.0 || norm <= 1e-9 * scale {
            dependent.push(name.clone());
        } else {
            basis.push(residual / norm);
        }
    }
    dependent
}

/// Fits `y = X beta + u_group + e`. `groups` holds a group index per row.
pub fn fit_random_intercept(
    y: &[f64],
    x: &DMatrix<f64>,
    groups: &[usize],
    names: &[String],
) -> Result<MixedFit> {
    let (n_obs, p) = x.shape();
    if y.len() != n_obs || groups.len() != n_obs || names.len() != p {
        return Err(Error::config("mixed model: inconsistent input dimensions"));
    }
    let dependent = collinear_columns(x, names);
    if !dependent.is_empty() {
        return Err(Error::RankDeficient(dependent));
    }
    let mut index: HashMap<usize, usize> = HashMap::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    for (i, &g) in groups.iter().enumerate() {
        let slot = *index.entry(g).or_insert_with(|| {
            members.push(Vec::new());
            members.len() - 1
        });
        members[slot].push(i);
    }
    if members.len() < 2 {
        return Err(Error::data("mixed model needs at least two subjects"));
    }
    if members.iter().any(|m| m.len() < 2) {
        return Err(Error::data(
            "mixed model needs at least two rows per subject",
        ));
    }
    let yv = DVector::from_column_slice(y);
    let groups: Vec<Group> = members
        .into_iter()
        .map(|rows| {
            let xj = x.select_rows(rows.iter());
            let yj = DVector::from_iterator(rows.len(), rows.iter().map(|&i| y[i]));
            Group {
                n: rows.len() as f64,
                xtx: xj.transpose() * &xj,
                col_sums: xj.row_sum().transpose(),
                xty: xj.transpose() * &yj,
                y_sum: yj.sum(),
                rows,
            }
        })
        .collect();
    let n_groups = groups.len();
    let nf = n_obs as f64;

    let gls = |su2: f64, se2: f64| -> Result<(DVector<f64>, DMatrix<f64>)> {
        let mut a = DMatrix::zeros(p, p);
        let mut b = DVector::zeros(p);
        for g in &groups {
            let gamma = su2 / (se2 + g.n * su2);
            a += (&g.xtx - &g.col_sums * g.col_sums.transpose() * gamma) / se2;
            b += (&g.xty - &g.col_sums * (gamma * g.y_sum)) / se2;
        }
        let chol = a.cholesky().ok_or_else(|| {
            Error::data("mixed model: information matrix is not positive definite")
        })?;
        Ok((chol.solve(&b), chol.inverse()))
    };
    let residual_sums = |beta: &DVector<f64>| -> (DVector<f64>, Vec<(f64, f64)>) {
        let r = &yv - x * beta;
        let sums = groups
            .iter()
            .map(|g| {
                let s: f64 = g.rows.iter().map(|&i| r[i]).sum();
                let ss: f64 = g.rows.iter().map(|&i| r[i] * r[i]).sum();
                (s, ss)
            })
            .collect();
        (r, sums)
    };
    let log_likelihood = |sums: &[(f64, f64)], su2: f64, se2: f64| -> f64 {
        let mut ll = 0.0;
        for (g, &(s, ss)) in groups.iter().zip(sums) {
            let d = se2 + g.n * su2;
            let gamma = su2 / d;
            let logdet = (g.n - 1.0) * se2.ln() + d.ln();
            ll -= 0.5
                * (g.n * (2.0 * std::f64::consts::PI).ln() + logdet + (ss - gamma * s * s) / se2);
        }
        ll
    };

    // start from OLS
    let (beta0, _) = gls(0.0, 1.0)?;
    let (_, sums) = residual_sums(&beta0);
    let total_ss: f64 = sums.iter().map(|(_, ss)| ss).sum();
    let se2 = total_ss / nf;
    if se2 <= 0.0 || !se2.is_finite() {
        return Err(Error::data(
            "mixed model: the fixed effects fit the data exactly",
        ));
    }
    let between: f64 = groups
        .iter()
        .zip(&sums)
        .map(|(g, (s, _))| (s / g.n).powi(2))
        .sum::<f64>()
        / n_groups as f64;
    let su2_start = between.max(0.1 * se2);

    // State is the variance pair; beta is always its GLS solution, so the
    // likelihood tracked here is the profile over beta.
    let profile = |su2: f64, se2: f64| -> Result<(Vec<(f64, f64)>, f64)> {
        let (beta, _) = gls(su2, se2)?;
        let (_, sums) = residual_sums(&beta);
        let ll = log_likelihood(&sums, su2, se2);
        Ok((sums, ll))
    };
    let em = |su2: f64, se2: f64, sums: &[(f64, f64)]| -> Result<(f64, f64)> {
        let (mut su2_new, mut se2_new) = (0.0, 0.0);
        for (g, &(s, ss)) in groups.iter().zip(sums) {
            let gamma = su2 / (se2 + g.n * su2);
            let m = gamma * s;
            let v = gamma * se2;
            su2_new += m * m + v;
            se2_new += ss - 2.0 * m * s + g.n * m * m + g.n * v;
        }
        let (su2_new, se2_new) = (su2_new / n_groups as f64, se2_new / nf);
        if se2_new <= 0.0 || !se2_new.is_finite() || !su2_new.is_finite() {
            return Err(Error::data("mixed model: residual variance collapsed"));
        }
        Ok((su2_new, se2_new))
    };

    let (mut su2, mut se2) = (su2_start, se2);
    let (mut sums, mut ll) = profile(su2, se2)?;
    let mut trace = vec![ll];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        // two plain EM steps, then a squared extrapolation in log space that
        // is kept only if it does not lower the likelihood
        let t1 = em(su2, se2, &sums)?;
        let (s1, _) = profile(t1.0, t1.1)?;
        let t2 = em(t1.0, t1.1, &s1)?;
        let (s2, l2) = profile(t2.0, t2.1)?;
        let mut next = (t2, s2, l2);
        let log = |t: (f64, f64)| (t.0.max(f64::MIN_POSITIVE).ln(), t.1.ln());
        let (p0, p1, p2) = (log((su2, se2)), log(t1), log(t2));
        let r = (p1.0 - p0.0, p1.1 - p0.1);
        let v = (p2.0 - p1.0 - r.0, p2.1 - p1.1 - r.1);
        let (rn, vn) = (
            (r.0 * r.0 + r.1 * r.1).sqrt(),
            (v.0 * v.0 + v.1 * v.1).sqrt(),
        );
        if vn > 0.0 && rn.is_finite() {
            let alpha = -(rn / vn).max(1.0);
            let jump = |a: f64, b: f64, c: f64| {
                (a - 2.0 * alpha * b + alpha * alpha * c)
                    .clamp(-700.0, 700.0)
                    .exp()
            };
            let t = (jump(p0.0, r.0, v.0), jump(p0.1, r.1, v.1));
            if let Ok((st, _)) = profile(t.0, t.1) {
                if let Ok(t3) = em(t.0, t.1, &st) {
                    if let Ok((s3, l3)) = profile(t3.0, t3.1) {
                        if l3.is_finite() && l3 >= l2 {
                            next = (t3, s3, l3);
                        }
                    }
                }
            }
        }
        let prev = ll;
        ((su2, se2), sums, ll) = next;
        trace.push(ll);
        if ((ll - prev) / prev.abs().max(f64::MIN_POSITIVE)).abs() < TOLERANCE {
            converged = true;
            break;
        }
    }
    let mut beta = beta0;
    let (beta_final, covariance) = gls(su2, se2)?;
    if beta_final.iter().all(|b| b.is_finite()) {
        beta = beta_final;
    }
    let (_, sums) = residual_sums(&beta);
    let se = (0..p).map(|i| covariance[(i, i)].max(0.0).sqrt()).collect();
    Ok(MixedFit {
        names: names.to_vec(),
        beta: beta.iter().copied().collect(),
        se,
        covariance,
        sigma_u2: su2,
        sigma_e2: se2,
        log_likelihood: log_likelihood(&sums, su2, se2),
        log_likelihood_trace: trace,
        iterations,
        converged,
        n_obs,
        n_groups,
        wald: Vec::new(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MixedOutcome {
    Effort,
    Rwg,
}

/// Which pair of treatments enters the model: the effort direction shared
/// by an employer-chosen and a random-training treatment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Family {
    Positive,
    Negative,
}

impl Family {
    pub fn direction(self) -> EffortDirection {
        match self {
            Family::Positive => EffortDirection::Productive,
            Family::Negative => EffortDirection::Counterproductive,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Family::Positive => "EXO & ENDO",
            Family::Negative => "EXO_NEG & ENDO_NEG",
        }
    }
}

/// Level dummies, an employer-chosen-training dummy and their interactions,
/// with X0 and the random-training treatment as references. Wald tests ask
/// whether adjacent levels coincide in both treatments.
pub fn mixed_model_fit(
    table: &ObservationTable,
    params: &GameParams,
    outcome: MixedOutcome,
    family: Family,
) -> Result<MixedFit> {
    let levels = params.level_max as usize;
    let mut names = vec!["Constant".to_string(), "ENDO".to_string()];
    names.extend((1..=levels).map(|x| format!("X{x}")));
    names.extend((1..=levels).map(|x| format!("ENDO:X{x}")));
    let p = names.len();

    let plans: Vec<_> = table
        .plans(params)?
        .into_iter()
        .filter(|plan| plan.treatment.effort_direction == family.direction())
        .collect();
    let mut rows: Vec<f64> = Vec::new();
    let mut y = Vec::new();
    let mut groups = Vec::new();
    for (g, plan) in plans.iter().enumerate() {
        let endo = if plan.treatment.training_endogenous {
            1.0
        } else {
            0.0
        };
        for x in params.levels() {
            let xi = x as usize;
            let mut row = vec![0.0; p];
            row[0] = 1.0;
            row[1] = endo;
            if xi > 0 {
                row[1 + xi] = 1.0;
                row[1 + levels + xi] = endo;
            }
            rows.extend(row);
            y.push(match outcome {
                MixedOutcome::Effort => plan.effort[xi] as f64,
                MixedOutcome::Rwg => {
                    to_f64(relative_wage_gap(params.outside_wage(x)?, plan.maw[xi])?)
                }
            });
            groups.push(g);
        }
    }
    let design = DMatrix::from_row_slice(y.len(), p, &rows);
    let mut fit = fit_random_intercept(&y, &design, &groups, &names)?;
    for x in 1..levels {
        let (a, b) = (format!("X{x}"), format!("X{}", x + 1));
        let (ea, eb) = (format!("ENDO:{a}"), format!("ENDO:{b}"));
        let test = fit.wald_test(
            &format!("{a}={b}"),
            &[
                vec![(a.as_str(), 1.0), (b.as_str(), -1.0)],
                vec![
                    (a.as_str(), 1.0),
                    (b.as_str(), -1.0),
                    (ea.as_str(), 1.0),
                    (eb.as_str(), -1.0),
                ],
            ],
        )?;
        fit.wald.push(test);
    }
    Ok(fit)
}

/// Treatments included in a family's model.
pub fn family_treatments(family: Family) -> [TreatmentSpec; 2] {
    match family {
        Family::Positive => [TreatmentSpec::EXO, TreatmentSpec::ENDO],
        Family::Negative => [TreatmentSpec::EXO_NEG, TreatmentSpec::ENDO_NEG],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::ObservationRecord;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn names(list: &[&str]) -> Vec<String> {
        list.iter().map(|s| s.to_string()).collect()
    }

    /// 200 subjects observed at levels 0..=4, y = 2 + x + u + e.
    fn synthetic(sigma_u: f64, sigma_e: f64, seed: u64) -> (Vec<f64>, DMatrix<f64>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = Normal::new(0.0, sigma_u).unwrap();
        let e = Normal::new(0.0, sigma_e).unwrap();
        let (mut y, mut rows, mut groups) = (Vec::new(), Vec::new(), Vec::new());
        for g in 0..200 {
            let ug = u.sample(&mut rng);
            for x in 0..5 {
                let x = x as f64;
                y.push(2.0 + x + ug + e.sample(&mut rng));
                rows.extend([1.0, x]);
                groups.push(g);
            }
        }
        let n = y.len();
        (y, DMatrix::from_row_slice(n, 2, &rows), groups)
    }

    fn ols(y: &[f64], x: &DMatrix<f64>) -> DVector<f64> {
        let xt = x.transpose();
        (&xt * x).try_inverse().unwrap() * xt * DVector::from_column_slice(y)
    }

    #[test]
    fn recovers_known_coefficients() {
        let (y, x, g) = synthetic(1.0, 0.5, 42);
        let fit = fit_random_intercept(&y, &x, &g, &names(&["Constant", "x"])).unwrap();
        assert!(fit.converged);
        assert!((fit.beta[0] - 2.0).abs() < 0.1, "{:?}", fit.beta);
        assert!((fit.beta[1] - 1.0).abs() < 0.1, "{:?}", fit.beta);
        assert!((fit.sigma_u2.sqrt() - 1.0).abs() < 0.15, "{}", fit.sigma_u2);
        assert!((fit.sigma_e2.sqrt() - 0.5).abs() < 0.05, "{}", fit.sigma_e2);
        assert_eq!((fit.n_obs, fit.n_groups), (1000, 200));
    }

    #[test]
    fn collapses_to_ols_without_subject_effects() {
        let (y, x, g) = synthetic(0.0, 0.5, 7);
        let fit = fit_random_intercept(&y, &x, &g, &names(&["Constant", "x"])).unwrap();
        let b = ols(&y, &x);
        for i in 0..2 {
            assert!(
                (fit.beta[i] - b[i]).abs() < 1e-6,
                "{} vs {}",
                fit.beta[i],
                b[i]
            );
        }
        assert!(fit.sigma_u2 < 0.05, "{}", fit.sigma_u2);
    }

    #[test]
    fn unbalanced_design_with_no_subject_variance() {
        // a within-subject covariate that differs across subjects, so GLS
        // and OLS only agree as the intercept variance goes to zero
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let e = Normal::new(0.0, 1.0).unwrap();
        let (mut y, mut rows, mut groups) = (Vec::new(), Vec::new(), Vec::new());
        for g in 0..60 {
            for k in 0..(2 + g % 4) {
                let x = ((g * 7 + k * 3) % 11) as f64;
                y.push(1.0 + 0.5 * x + e.sample(&mut rng));
                rows.extend([1.0, x]);
                groups.push(g);
            }
        }
        let x = DMatrix::from_row_slice(y.len(), 2, &rows);
        let fit = fit_random_intercept(&y, &x, &groups, &names(&["Constant", "x"])).unwrap();
        let b = ols(&y, &x);
        if fit.sigma_u2 < 1e-8 {
            assert!((fit.beta[1] - b[1]).abs() < 1e-6);
        } else {
            assert!((fit.beta[1] - b[1]).abs() < 0.05);
        }
    }

    /// Gaussian log-likelihood from the dense covariance of each subject.
    fn dense_log_likelihood(
        y: &[f64],
        x: &DMatrix<f64>,
        groups: &[usize],
        beta: &[f64],
        su2: f64,
        se2: f64,
    ) -> f64 {
        let r = DVector::from_column_slice(y) - x * DVector::from_column_slice(beta);
        let mut ll = 0.0;
        let ids: std::collections::BTreeSet<usize> = groups.iter().copied().collect();
        for id in ids {
            let rows: Vec<usize> = (0..y.len()).filter(|&i| groups[i] == id).collect();
            let n = rows.len();
            let v = DMatrix::from_fn(n, n, |a, b| su2 + if a == b { se2 } else { 0.0 });
            let rj = DVector::from_iterator(n, rows.iter().map(|&i| r[i]));
            let quad = (rj.transpose() * v.clone().try_inverse().unwrap() * &rj)[(0, 0)];
            ll -=
                0.5 * (n as f64 * (2.0 * std::f64::consts::PI).ln() + v.determinant().ln() + quad);
        }
        ll
    }

    #[test]
    fn estimate_is_a_likelihood_maximum() {
        let (y, x, g) = synthetic(1.0, 0.5, 21);
        let fit = fit_random_intercept(&y, &x, &g, &names(&["Constant", "x"])).unwrap();
        let at_fit = dense_log_likelihood(&y, &x, &g, &fit.beta, fit.sigma_u2, fit.sigma_e2);
        assert!((at_fit - fit.log_likelihood).abs() < 1e-8 * at_fit.abs());
        for (du, de) in [(1.01, 1.0), (0.99, 1.0), (1.0, 1.01), (1.0, 0.99)] {
            let other =
                dense_log_likelihood(&y, &x, &g, &fit.beta, fit.sigma_u2 * du, fit.sigma_e2 * de);
            assert!(other <= at_fit, "{du} {de}");
        }
        for (j, step) in [(0, 1e-3), (0, -1e-3), (1, 1e-3), (1, -1e-3)] {
            let mut b = fit.beta.clone();
            b[j] += step;
            assert!(dense_log_likelihood(&y, &x, &g, &b, fit.sigma_u2, fit.sigma_e2) <= at_fit);
        }
    }

    #[test]
    fn likelihood_never_decreases() {
        for seed in [1, 2, 3] {
            let (y, x, g) = synthetic(0.7, 1.0, seed);
            let fit = fit_random_intercept(&y, &x, &g, &names(&["Constant", "x"])).unwrap();
            for w in fit.log_likelihood_trace.windows(2) {
                assert!(w[1] >= w[0] - 1e-9 * w[0].abs(), "{} -> {}", w[0], w[1]);
            }
            assert!(fit.log_likelihood >= *fit.log_likelihood_trace.last().unwrap() - 1e-9);
        }
    }

    #[test]
    fn single_contrast_wald_is_squared_z() {
        let (y, x, g) = synthetic(1.0, 0.5, 3);
        let fit = fit_random_intercept(&y, &x, &g, &names(&["Constant", "x"])).unwrap();
        let (b, se) = fit.coefficient("x").unwrap();
        let w = fit.wald_test("x=0", &[vec![("x", 1.0)]]).unwrap();
        assert!((w.chi2 - (b / se).powi(2)).abs() < 1e-8 * w.chi2);
        assert_eq!(w.df, 1);
        assert!(w.p_value < 1e-10);
        assert!(fit.wald_test("bad", &[vec![("nope", 1.0)]]).is_err());
    }

    #[test]
    fn rank_deficiency_names_columns() {
        let (y, x, g) = synthetic(1.0, 0.5, 5);
        let doubled = x.column(1) * 2.0;
        let x3 = x.insert_column(2, 0.0);
        let mut x3 = x3;
        x3.set_column(2, &doubled);
        let err =
            fit_random_intercept(&y, &x3, &g, &names(&["Constant", "x", "twice_x"])).unwrap_err();
        match err {
            Error::RankDeficient(cols) => assert_eq!(cols, vec!["twice_x".to_string()]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn needs_two_subjects_with_two_rows() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0]);
        let n = names(&["Constant", "x"]);
        assert!(fit_random_intercept(&[1.0, 2.0, 3.5], &x, &[0, 0, 0], &n).is_err());
        assert!(fit_random_intercept(&[1.0, 2.0, 3.5], &x, &[0, 0, 1], &n).is_err());
    }

    #[test]
    fn table_model_recovers_interaction() {
        // EXO workers: effort = 3 + x; ENDO workers: effort = 4 + 1.5x, plus noise
        let params = GameParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u = Normal::new(0.0, 0.5).unwrap();
        let e = Normal::new(0.0, 1.0).unwrap();
        let mut records = Vec::new();
        for i in 0..300 {
            let t = if i % 2 == 0 {
                TreatmentSpec::EXO
            } else {
                TreatmentSpec::ENDO
            };
            let ug = u.sample(&mut rng);
            for x in 0..5u32 {
                let mean = if t.training_endogenous {
                    1.0 + 1.5 * x as f64
                } else {
                    x as f64
                };
                let effort = (3.0 + mean + ug + e.sample(&mut rng))
                    .round()
                    .clamp(0.0, 12.0) as u32;
                records.push(ObservationRecord::worker(
                    t,
                    format!("s{i}"),
                    x,
                    params.outside_wage(x).unwrap(),
                    effort,
                ));
            }
        }
        let table = ObservationTable { records };
        let fit = mixed_model_fit(&table, &params, MixedOutcome::Effort, Family::Positive).unwrap();
        assert_eq!(fit.names.len(), 10);
        let (endo, _) = fit.coefficient("ENDO").unwrap();
        let (x4, _) = fit.coefficient("X4").unwrap();
        let (i4, _) = fit.coefficient("ENDO:X4").unwrap();
        assert!((endo - 1.0).abs() < 0.4, "{:?}", fit.beta);
        assert!((x4 - 4.0).abs() < 0.4, "{:?}", fit.beta);
        assert!((i4 - 2.0).abs() < 0.4, "{:?}", fit.beta);
        assert_eq!(fit.wald.len(), 3);
        assert!(fit.wald.iter().all(|w| w.df == 2 && w.p_value < 0.01));
        // RWG is identically zero: the residual variance collapses
        assert!(mixed_model_fit(&table, &params, MixedOutcome::Rwg, Family::Positive).is_err());
        // a single treatment makes the ENDO columns collinear
        let only_exo = ObservationTable {
            records: table
                .records
                .iter()
                .filter(|r| r.treatment == TreatmentSpec::EXO)
                .cloned()
                .collect(),
        };
        match mixed_model_fit(&only_exo, &params, MixedOutcome::Effort, Family::Positive) {
            Err(Error::RankDeficient(cols)) => assert_eq!(cols[0], "ENDO"),
            other => panic!("{other:?}"),
        }
    }
}
