//! Kindness machinery for the reciprocal worker.
//!
//! The worker's perceived kindness compares the payoff she believes the
//! employer intends to give her with an equitable payoff (a midpoint between
//! the best and worst payoffs he could give her). Her own kindness compares
//! the employer's expected payoff under her strategy with the midpoint over
//! all her strategies. Utility adds `eta * perceived * own` to money.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{Effort, EffortDirection, GameParams, Level, Points, TreatmentSpec, Wage};
use crate::rational::{decimal_serde, from_decimal, q, Q};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReciprocityParams {
    #[serde(with = "decimal_serde")]
    pub eta: Q,
    #[serde(with = "decimal_serde")]
    pub k_linear: Q,
    #[serde(with = "decimal_serde")]
    pub k_quad: Q,
}

impl ReciprocityParams {
    pub fn new(eta: Q, k_linear: Q, k_quad: Q) -> Result<Self> {
        let params = ReciprocityParams {
            eta,
            k_linear,
            k_quad,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn from_f64(eta: f64, k_linear: f64, k_quad: f64) -> Result<Self> {
        Self::new(
            from_decimal(eta)?,
            from_decimal(k_linear)?,
            from_decimal(k_quad)?,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let zero = Q::from_integer(0);
        if self.eta < zero || self.k_linear < zero || self.k_quad < zero {
            return Err(Error::config(
                "eta, k_linear and k_quad must be nonnegative",
            ));
        }
        if self.k_linear + self.k_quad <= zero {
            return Err(Error::config(
                "effort disutility must be strictly increasing (k_linear + k_quad > 0)",
            ));
        }
        Ok(())
    }

    /// `eta > 1/25`, the regime in which the model's qualitative predictions
    /// are stated.
    pub fn is_strong(&self) -> bool {
        self.eta > Q::new(1, 25)
    }

    /// `k(e) = k_linear * e + k_quad * e^2`.
    pub fn disutility(&self, effort: Effort) -> Q {
        let e = Q::from_integer(effort as i128);
        self.k_linear * e + self.k_quad * e * e
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KindnessTerms {
    pub lambda_wew: Q,
    pub equitable_worker: Q,
    pub equitable_employer: Q,
    pub delta_kappa: Points,
    pub anticipated_stay: bool,
}

/// Equitable payoff to the worker: midpoint between the top wage the
/// employer could pay and the lowest payoff she accepts in equilibrium
/// (the untrained market wage when he picks the level, the market wage of
/// the drawn level otherwise).
pub fn equitable_worker_payoff(
    treatment: TreatmentSpec,
    params: &GameParams,
    x: Level,
) -> Result<Q> {
    params.check_level(x)?;
    let lowest = if treatment.training_endogenous {
        params.outside_wage(0)?
    } else {
        params.outside_wage(x)?
    };
    Ok(Q::new(
        (params.w0 + params.wage_max + params.w0 + lowest) as i128,
        2,
    ))
}

pub fn perceived_kindness(
    treatment: TreatmentSpec,
    params: &GameParams,
    x: Level,
    w1: Wage,
    anticipated_stay: bool,
) -> Result<Q> {
    let received = params.worker_total_payoff(x, w1, anticipated_stay)?;
    Ok(q(received) - equitable_worker_payoff(treatment, params, x)?)
}

/// Midpoint of the employer's expected payoffs over every worker strategy
/// (any effort, stay or quit) at the observed `(x, w1)`.
pub fn equitable_employer_payoff(
    params: &GameParams,
    x: Level,
    w1: Wage,
    direction: EffortDirection,
) -> Result<Q> {
    let mut lo: Option<Q> = None;
    let mut hi: Option<Q> = None;
    for e in params.efforts() {
        for stay in [true, false] {
            let m = params.employer_expected_payoff(x, w1, stay, e, direction)?;
            lo = Some(lo.map_or(m, |l| l.min(m)));
            hi = Some(hi.map_or(m, |h| h.max(m)));
        }
    }
    let (lo, hi) = lo.zip(hi).expect("effort grid is never empty");
    Ok((lo + hi) / q(2))
}

/// Relative kindness of staying versus quitting, `v(x) - w1`. Effort is sunk
/// at T1, so it cancels, and so does the equitable-employer midpoint.
pub fn relative_kindness(params: &GameParams, x: Level, w1: Wage) -> Result<Points> {
    params.check_wage(w1)?;
    Ok(params.outside_wage(x)? - w1)
}

/// `(w1 - v) + eta * lambda * (v - w1) >= 0`; indifference resolves to stay.
pub fn stay_condition(
    params: &GameParams,
    recip: &ReciprocityParams,
    x: Level,
    w1: Wage,
    lambda: Q,
) -> Result<bool> {
    let gap = q(w1 - params.outside_wage(x)?);
    params.check_wage(w1)?;
    let value = gap - recip.eta * lambda * gap;
    Ok(value >= Q::from_integer(0))
}

/// Effort-dependent part of the T0 decision utility:
/// `eta * lambda * (+/- slope) * e - k(e)`.
pub fn effort_decision_utility(
    params: &GameParams,
    recip: &ReciprocityParams,
    lambda: Q,
    effort: Effort,
    direction: EffortDirection,
) -> Result<Q> {
    params.check_effort(effort)?;
    let slope = params.benefit_slope() * q(direction.sign());
    Ok(recip.eta * lambda * slope * Q::from_integer(effort as i128) - recip.disutility(effort))
}

/// Resolves the worker's T1 response to `(x, w1)` under correct beliefs:
/// perceived kindness is evaluated at the anticipated response, and the
/// anticipation must agree with what the stay rule then prescribes. Staying
/// wins when both anticipations are self-consistent. Returns `None` when
/// neither is.
pub fn resolve_response(
    treatment: TreatmentSpec,
    params: &GameParams,
    recip: &ReciprocityParams,
    x: Level,
    w1: Wage,
) -> Result<Option<KindnessTerms>> {
    let equitable_worker = equitable_worker_payoff(treatment, params, x)?;
    let equitable_employer = equitable_employer_payoff(params, x, w1, treatment.effort_direction)?;
    let delta_kappa = relative_kindness(params, x, w1)?;
    for anticipated_stay in [true, false] {
        let lambda = perceived_kindness(treatment, params, x, w1, anticipated_stay)?;
        if stay_condition(params, recip, x, w1, lambda)? == anticipated_stay {
            return Ok(Some(KindnessTerms {
                lambda_wew: lambda,
                equitable_worker,
                equitable_employer,
                delta_kappa,
                anticipated_stay,
            }));
        }
    }
    Ok(None)
}
