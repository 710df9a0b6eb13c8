//! Quantities derived from worker plans: wage gaps against break-even
//! thresholds, effort patterns and the summary tables built from them.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{Effort, GameParams, Level, TreatmentSpec, Wage};
use crate::rational::{q, to_f64, Q};
use crate::stats::signed_rank_test;
use crate::table::{ObservationTable, PlanView};

/// `(v - maw) / v`. Positive values are discounts, negative ones premiums.
pub fn relative_wage_gap(v: Wage, maw: Wage) -> Result<Q> {
    if v <= 0 {
        return Err(Error::Domain {
            what: "market wage",
            value: v,
            min: 1,
            max: i64::MAX,
        });
    }
    Ok(Q::new((v - maw) as i128, v as i128))
}

/// `c(x) / v(x)`: the gap at which a discount exactly repays training.
pub fn break_even_threshold(params: &GameParams, x: Level) -> Result<Q> {
    if x == 0 {
        return Err(Error::Domain {
            what: "training level for break-even threshold",
            value: 0,
            min: 1,
            max: params.level_max as i64,
        });
    }
    let c = params.training_cost(x)?;
    let v = params.outside_wage(x)?;
    Ok(Q::new(c as i128, v as i128))
}

/// Whether the wage discount `v(x) - maw` strictly exceeds the training cost.
pub fn discount_covers_cost(params: &GameParams, x: Level, maw: Wage) -> Result<bool> {
    let v = params.outside_wage(x)?;
    Ok(v - maw > params.training_cost(x)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum PatternCategory {
    ConstantZero,
    PositiveConstant,
    WeaklyIncreasing,
    WeaklyDecreasing,
    Others,
}

impl PatternCategory {
    pub const ALL: [PatternCategory; 5] = [
        Self::ConstantZero,
        Self::PositiveConstant,
        Self::WeaklyIncreasing,
        Self::WeaklyDecreasing,
        Self::Others,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Self::ConstantZero => "constant zero",
            Self::PositiveConstant => "positive constant",
            Self::WeaklyIncreasing => "weakly increasing",
            Self::WeaklyDecreasing => "weakly decreasing",
            Self::Others => "others",
        }
    }
}

pub fn classify_pattern(params: &GameParams, efforts: &[Effort]) -> Result<PatternCategory> {
    let n = params.level_max as usize + 1;
    if efforts.len() != n {
        return Err(Error::Domain {
            what: "effort pattern length",
            value: efforts.len() as i64,
            min: n as i64,
            max: n as i64,
        });
    }
    for &e in efforts {
        params.check_effort(e)?;
    }
    let up = efforts.windows(2).any(|w| w[1] > w[0]);
    let down = efforts.windows(2).any(|w| w[1] < w[0]);
    Ok(match (up, down) {
        (false, false) if efforts[0] == 0 => PatternCategory::ConstantZero,
        (false, false) => PatternCategory::PositiveConstant,
        (true, false) => PatternCategory::WeaklyIncreasing,
        (false, true) => PatternCategory::WeaklyDecreasing,
        (true, true) => PatternCategory::Others,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatternShares {
    pub treatment: TreatmentSpec,
    pub n: usize,
    pub shares: Vec<(PatternCategory, f64)>,
}

/// Category shares per treatment, in treatment order of first appearance.
pub fn pattern_shares(table: &ObservationTable, params: &GameParams) -> Result<Vec<PatternShares>> {
    let mut out = Vec::new();
    for (treatment, plans) in group_plans(table, params)? {
        let mut counts = BTreeMap::new();
        for plan in &plans {
            *counts
                .entry(classify_pattern(params, &plan.effort)?)
                .or_insert(0usize) += 1;
        }
        let n = plans.len();
        let shares = PatternCategory::ALL
            .iter()
            .map(|c| (*c, counts.get(c).copied().unwrap_or(0) as f64 / n as f64))
            .collect();
        out.push(PatternShares {
            treatment,
            n,
            shares,
        });
    }
    Ok(out)
}

fn group_plans(
    table: &ObservationTable,
    params: &GameParams,
) -> Result<Vec<(TreatmentSpec, Vec<PlanView>)>> {
    let mut groups: Vec<(TreatmentSpec, Vec<PlanView>)> = Vec::new();
    for plan in table.plans(params)? {
        match groups.iter_mut().find(|(t, _)| *t == plan.treatment) {
            Some((_, plans)) => plans.push(plan),
            None => groups.push((plan.treatment, vec![plan])),
        }
    }
    Ok(groups)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OfferPolicy {
    /// The employer offer recorded in the table.
    AsObserved,
    /// The employer offers v(x).
    MarketWage,
    /// The employer, knowing the plan, offers the cheapest wage it accepts.
    SolverWage,
}

impl OfferPolicy {
    pub const ALL: [OfferPolicy; 3] = [Self::AsObserved, Self::MarketWage, Self::SolverWage];

    pub fn label(self) -> &'static str {
        match self {
            Self::AsObserved => "as_observed",
            Self::MarketWage => "market_wage",
            Self::SolverWage => "solver_wage",
        }
    }
}

/// Mean over workers of the employer's expected payoff at each level, with
/// the worker staying iff the offer reaches her MAW.
pub fn expected_profit_by_level(
    table: &ObservationTable,
    params: &GameParams,
    policy: OfferPolicy,
) -> Result<Vec<(TreatmentSpec, Vec<f64>)>> {
    let mut out = Vec::new();
    for (treatment, plans) in group_plans(table, params)? {
        let mut means = Vec::new();
        for x in params.levels() {
            let xi = x as usize;
            let v = params.outside_wage(x)?;
            let mut total = q(0);
            for plan in &plans {
                let offer = match policy {
                    OfferPolicy::AsObserved => plan.offer[xi].ok_or_else(|| {
                        Error::data(format!(
                            "subject {} has no employer offer at x={x}",
                            plan.subject_id
                        ))
                    })?,
                    OfferPolicy::MarketWage => v,
                    OfferPolicy::SolverWage => plan.maw[xi].clamp(params.wage_min, params.wage_max),
                };
                let stay = offer >= plan.maw[xi];
                total += params.employer_expected_payoff(
                    x,
                    offer,
                    stay,
                    plan.effort[xi],
                    treatment.effort_direction,
                )?;
            }
            means.push(to_f64(total / q(plans.len() as i64)));
        }
        out.push((treatment, means));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfitRow {
    pub treatment: TreatmentSpec,
    pub x: Level,
    pub as_observed: Option<f64>,
    pub market_wage: f64,
    pub solver_wage: f64,
}

/// All three offer policies side by side. The observed column is empty when
/// the table carries no employer offers.
pub fn profit_table(table: &ObservationTable, params: &GameParams) -> Result<Vec<ProfitRow>> {
    let observed = expected_profit_by_level(table, params, OfferPolicy::AsObserved).ok();
    let market = expected_profit_by_level(table, params, OfferPolicy::MarketWage)?;
    let solver = expected_profit_by_level(table, params, OfferPolicy::SolverWage)?;
    let mut rows = Vec::new();
    for (i, (treatment, m)) in market.iter().enumerate() {
        for (x, &mw) in m.iter().enumerate() {
            rows.push(ProfitRow {
                treatment: *treatment,
                x: x as Level,
                as_observed: observed.as_ref().map(|o| o[i].1[x]),
                market_wage: mw,
                solver_wage: solver[i].1[x],
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub treatment: TreatmentSpec,
    pub x: Level,
    pub n: usize,
    pub break_even: Option<f64>,
    pub sponsored_share: Option<f64>,
    pub effort_mean: f64,
    pub effort_sd: f64,
    pub rwg_mean: f64,
    pub rwg_sd: f64,
    pub signrank_p: f64,
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

pub fn summary_table(table: &ObservationTable, params: &GameParams) -> Result<Vec<SummaryRow>> {
    let mut rows = Vec::new();
    for (treatment, plans) in group_plans(table, params)? {
        let chosen: Vec<Level> = plans.iter().filter_map(|p| p.chosen).collect();
        for x in params.levels() {
            let xi = x as usize;
            let v = params.outside_wage(x)?;
            let efforts: Vec<f64> = plans.iter().map(|p| p.effort[xi] as f64).collect();
            let rwg = plans
                .iter()
                .map(|p| relative_wage_gap(v, p.maw[xi]).map(to_f64))
                .collect::<Result<Vec<f64>>>()?;
            let (effort_mean, effort_sd) = mean_sd(&efforts);
            let (rwg_mean, rwg_sd) = mean_sd(&rwg);
            let sponsored_share = (treatment.training_endogenous && !chosen.is_empty())
                .then(|| chosen.iter().filter(|&&c| c == x).count() as f64 / chosen.len() as f64);
            rows.push(SummaryRow {
                treatment,
                x,
                n: plans.len(),
                break_even: (x > 0)
                    .then(|| break_even_threshold(params, x).map(to_f64))
                    .transpose()?,
                sponsored_share,
                effort_mean,
                effort_sd,
                rwg_mean,
                rwg_sd,
                signrank_p: signed_rank_test(&rwg, 0.0).p_value,
            });
        }
    }
    Ok(rows)
}
