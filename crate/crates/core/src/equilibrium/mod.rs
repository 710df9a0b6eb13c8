//! Sequential reciprocity equilibrium of the training game.
//!
//! The worker's best responses have closed forms:
//! - she accepts a wage below the market wage only if the employer's offer
//!   is kind enough, `eta * lambda >= 1`, so her minimum acceptable wage is
//!   the smallest grid wage at or above `equitable_worker - w0 + 1/eta`
//!   when that lies below `v(x)`, and `v(x)` otherwise;
//! - effort maximizes a concave quadratic on the integer grid.
//!
//! The selfish employer pays the cheapest accepted wage and, when he picks
//! the training level, maximizes expected profit. [`oracle`] recomputes the
//! worker's side from first principles for cross-checking.

mod observations;
pub mod oracle;

pub use observations::{verify_observations, ObservationCheck, ObservationReport};
pub use oracle::brute_force_best_response;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{Effort, GameParams, Level, TreatmentSpec, Wage};
use crate::rational::{ceil_i64, q, Q};
use crate::reciprocity::{self, KindnessTerms, ReciprocityParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WageRegime {
    /// Offer equals the market wage.
    Market,
    /// Offer below the market wage, accepted out of reciprocity.
    Discount,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumProfile {
    pub treatment: TreatmentSpec,
    pub recip: ReciprocityParams,
    pub strong_reciprocity: bool,
    pub market_wage: Vec<Wage>,
    pub wage_schedule: Vec<Wage>,
    pub maw_schedule: Vec<Wage>,
    pub effort_schedule: Vec<Effort>,
    pub wage_regime: Vec<WageRegime>,
    /// Employer's expected profit at each level along the equilibrium path.
    pub expected_profit: Vec<Q>,
    pub chosen_training: Option<Level>,
    pub kindness: Vec<KindnessTerms>,
    pub belief_consistent: bool,
}

impl EquilibriumProfile {
    pub fn relative_wage_gap(&self, x: Level) -> Q {
        let v = self.market_wage[x as usize];
        Q::new((v - self.maw_schedule[x as usize]) as i128, v as i128)
    }
}

/// Lowest wage below the market wage that a reciprocal worker accepts,
/// before snapping to the grid: `equitable_worker - w0 + 1/eta`.
pub fn kind_wage_threshold(
    treatment: TreatmentSpec,
    params: &GameParams,
    recip: &ReciprocityParams,
    x: Level,
) -> Result<Option<Q>> {
    if recip.eta == Q::from_integer(0) {
        return Ok(None);
    }
    let equitable = reciprocity::equitable_worker_payoff(treatment, params, x)?;
    Ok(Some(equitable - q(params.w0) + recip.eta.recip()))
}

/// Minimum acceptable wage, closed form.
pub fn worker_maw(
    treatment: TreatmentSpec,
    params: &GameParams,
    recip: &ReciprocityParams,
    x: Level,
) -> Result<Wage> {
    let v = params.outside_wage(x)?;
    if v < params.wage_min || v > params.wage_max {
        return Err(Error::config(format!(
            "market wage {v} at x={x} is off the wage grid; no acceptable wage"
        )));
    }
    Ok(match kind_wage_threshold(treatment, params, recip, x)? {
        Some(threshold) if threshold < q(v) => ceil_i64(threshold).max(params.wage_min),
        _ => v,
    })
}

/// Integer argmax of `a*e - k1*e - k2*e^2` on `0..=effort_max`, ties to the
/// smaller effort.
pub(crate) fn best_effort(a: Q, recip: &ReciprocityParams, effort_max: Effort) -> Effort {
    let zero = Q::from_integer(0);
    let net = a - recip.k_linear;
    // gain from the first unit
    if net - recip.k_quad <= zero {
        return 0;
    }
    if recip.k_quad == zero {
        return effort_max;
    }
    let turning = (net + recip.k_quad) / (q(2) * recip.k_quad);
    let best = ceil_i64(turning) - 1;
    best.clamp(0, effort_max as i64) as Effort
}

/// Equilibrium effort given the wage the worker anticipates at level `x`.
pub fn worker_effort(
    treatment: TreatmentSpec,
    params: &GameParams,
    recip: &ReciprocityParams,
    x: Level,
    anticipated_wage: Wage,
) -> Result<Effort> {
    let terms = reciprocity::resolve_response(treatment, params, recip, x, anticipated_wage)?
        .ok_or(Error::Inconsistent {
            x,
            wage: anticipated_wage,
        })?;
    let a = recip.eta
        * terms.lambda_wew
        * params.benefit_slope()
        * q(treatment.effort_direction.sign());
    Ok(best_effort(a, recip, params.effort_max))
}

/// Cheapest wage on the grid that the worker accepts.
pub fn employer_wage(
    treatment: TreatmentSpec,
    params: &GameParams,
    recip: &ReciprocityParams,
    x: Level,
) -> Result<Wage> {
    for w1 in params.wages() {
        if let Some(terms) = reciprocity::resolve_response(treatment, params, recip, x, w1)? {
            if terms.anticipated_stay {
                return Ok(w1);
            }
        }
    }
    Err(Error::config(format!(
        "no acceptable wage on the grid at x={x}"
    )))
}

fn path_profit(
    treatment: TreatmentSpec,
    params: &GameParams,
    recip: &ReciprocityParams,
    x: Level,
) -> Result<(Wage, Effort, Q)> {
    let wage = employer_wage(treatment, params, recip, x)?;
    let effort = worker_effort(treatment, params, recip, x, wage)?;
    let profit =
        params.employer_expected_payoff(x, wage, true, effort, treatment.effort_direction)?;
    Ok((wage, effort, profit))
}

/// Profit-maximizing training level; ties go to the lower level.
pub fn employer_training(
    params: &GameParams,
    recip: &ReciprocityParams,
    treatment: TreatmentSpec,
) -> Result<Level> {
    if !treatment.training_endogenous {
        return Err(Error::config(format!(
            "{treatment}: the training level is drawn, not chosen"
        )));
    }
    let mut best: Option<(Level, Q)> = None;
    for x in params.levels() {
        let (_, _, profit) = path_profit(treatment, params, recip, x)?;
        if best.is_none_or(|(_, p)| profit > p) {
            best = Some((x, profit));
        }
    }
    Ok(best.expect("level grid is never empty").0)
}

pub fn solve(
    treatment: TreatmentSpec,
    params: &GameParams,
    recip: &ReciprocityParams,
) -> Result<EquilibriumProfile> {
    params.validate()?;
    recip.validate()?;
    let n = params.level_max as usize + 1;
    let mut profile = EquilibriumProfile {
        treatment,
        recip: *recip,
        strong_reciprocity: recip.is_strong(),
        market_wage: Vec::with_capacity(n),
        wage_schedule: Vec::with_capacity(n),
        maw_schedule: Vec::with_capacity(n),
        effort_schedule: Vec::with_capacity(n),
        wage_regime: Vec::with_capacity(n),
        expected_profit: Vec::with_capacity(n),
        chosen_training: None,
        kindness: Vec::with_capacity(n),
        belief_consistent: false,
    };
    for x in params.levels() {
        let v = params.outside_wage(x)?;
        let maw = worker_maw(treatment, params, recip, x)?;
        let (wage, effort, profit) = path_profit(treatment, params, recip, x)?;
        if wage != maw {
            return Err(Error::Inconsistent { x, wage });
        }
        let terms = reciprocity::resolve_response(treatment, params, recip, x, wage)?
            .filter(|t| t.anticipated_stay)
            .ok_or(Error::Inconsistent { x, wage })?;
        // minimality: one point lower must not be accepted
        if wage > params.wage_min {
            let below = reciprocity::resolve_response(treatment, params, recip, x, wage - 1)?;
            if below.is_some_and(|t| t.anticipated_stay) {
                return Err(Error::Inconsistent { x, wage: wage - 1 });
            }
        }
        profile.market_wage.push(v);
        profile.wage_schedule.push(wage);
        profile.maw_schedule.push(maw);
        profile.effort_schedule.push(effort);
        profile.wage_regime.push(if wage < v {
            WageRegime::Discount
        } else {
            WageRegime::Market
        });
        profile.expected_profit.push(profit);
        profile.kindness.push(terms);
    }
    if treatment.training_endogenous {
        profile.chosen_training = Some(employer_training(params, recip, treatment)?);
    }
    profile.belief_consistent = true;
    Ok(profile)
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SweepGrid {
    pub eta: Vec<Q>,
    pub k_linear: Vec<Q>,
    pub k_quad: Vec<Q>,
}

/// Solves every `(eta, k_linear, k_quad, treatment)` combination. Output
/// order is the nested loop order of the grid, whatever the scheduling.
pub fn sweep(
    params: &GameParams,
    treatments: &[TreatmentSpec],
    grid: &SweepGrid,
) -> Result<Vec<EquilibriumProfile>> {
    if grid.eta.is_empty() || grid.k_linear.is_empty() || grid.k_quad.is_empty() {
        return Err(Error::config("sweep grids must be nonempty"));
    }
    if treatments.is_empty() {
        return Err(Error::config("no treatments selected"));
    }
    let mut jobs = Vec::new();
    for &eta in &grid.eta {
        for &k1 in &grid.k_linear {
            for &k2 in &grid.k_quad {
                let recip = ReciprocityParams::new(eta, k1, k2)?;
                for &t in treatments {
                    jobs.push((t, recip));
                }
            }
        }
    }
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        jobs.par_iter().map(|(t, r)| solve(*t, params, r)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        jobs.iter().map(|(t, r)| solve(*t, params, r)).collect()
    }
}
