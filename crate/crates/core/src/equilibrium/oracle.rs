//! Exhaustive best responses built only from payoffs and the kindness
//! definitions: every equitable payoff is a midpoint over a strategy set,
//! every decision compares full decision utilities.

use std::cell::RefCell;
use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::game::{Effort, GameParams, Level, TreatmentSpec, Wage};
use crate::rational::{q, Q};
use crate::reciprocity::ReciprocityParams;

struct Oracle<'a> {
    treatment: TreatmentSpec,
    params: &'a GameParams,
    recip: &'a ReciprocityParams,
    x: Level,
    equitable_worker: Q,
    midpoints: RefCell<HashMap<Wage, Q>>,
}

impl Oracle<'_> {
    /// Midpoint between the top payoff the employer can give the worker (the
    /// top of the wage grid) and the lowest payoff she accepts in
    /// equilibrium.
    fn equitable_worker(treatment: TreatmentSpec, p: &GameParams, x: Level) -> Result<Q> {
        let best = p.w0 + p.wage_max;
        let worst = if treatment.training_endogenous {
            let mut lowest = i64::MAX;
            for level in p.levels() {
                lowest = lowest.min(p.w0 + p.outside_wage(level)?);
            }
            lowest
        } else {
            p.w0 + p.outside_wage(x)?
        };
        Ok(Q::new((best + worst) as i128, 2))
    }

    fn employer_midpoint(&self, w1: Wage) -> Result<Q> {
        if let Some(m) = self.midpoints.borrow().get(&w1) {
            return Ok(*m);
        }
        let dir = self.treatment.effort_direction;
        let mut values = Vec::new();
        for e in self.params.efforts() {
            for stay in [true, false] {
                values.push(
                    self.params
                        .employer_expected_payoff(self.x, w1, stay, e, dir)?,
                );
            }
        }
        let lo = *values.iter().min().expect("nonempty");
        let hi = *values.iter().max().expect("nonempty");
        let mid = (lo + hi) / q(2);
        self.midpoints.borrow_mut().insert(w1, mid);
        Ok(mid)
    }

    fn kindness(&self, w1: Wage, stay: bool, effort: Effort) -> Result<Q> {
        let dir = self.treatment.effort_direction;
        Ok(self
            .params
            .employer_expected_payoff(self.x, w1, stay, effort, dir)?
            - self.employer_midpoint(w1)?)
    }

    fn perceived(&self, w1: Wage, anticipated_stay: bool) -> Result<Q> {
        let received = self
            .params
            .worker_total_payoff(self.x, w1, anticipated_stay)?;
        Ok(q(received) - self.equitable_worker)
    }

    /// T1 choice under a given anticipation, comparing decision utilities.
    fn prefers_stay(&self, w1: Wage, anticipated_stay: bool) -> Result<bool> {
        let lambda = self.perceived(w1, anticipated_stay)?;
        let eta = self.recip.eta;
        // effort is sunk; any level gives the same comparison
        let effort = 0;
        let stay_money = q(self.params.worker_total_payoff(self.x, w1, true)? - self.params.w0);
        let quit_money = q(self.params.worker_total_payoff(self.x, w1, false)? - self.params.w0);
        let u_stay = stay_money + eta * lambda * self.kindness(w1, true, effort)?;
        let u_quit = quit_money + eta * lambda * self.kindness(w1, false, effort)?;
        Ok(u_stay >= u_quit)
    }

    /// The self-consistent anticipation at `w1`, staying first.
    fn consistent_response(&self, w1: Wage) -> Result<Option<bool>> {
        for anticipated in [true, false] {
            if self.prefers_stay(w1, anticipated)? == anticipated {
                return Ok(Some(anticipated));
            }
        }
        Ok(None)
    }

    fn maw(&self) -> Result<Wage> {
        for w1 in self.params.wages() {
            if self.consistent_response(w1)? == Some(true) {
                return Ok(w1);
            }
        }
        Err(Error::config(format!(
            "no acceptable wage on the grid at x={}",
            self.x
        )))
    }

    fn effort(&self, anticipated_wage: Wage) -> Result<Effort> {
        let stays = self
            .consistent_response(anticipated_wage)?
            .ok_or(Error::Inconsistent {
                x: self.x,
                wage: anticipated_wage,
            })?;
        let lambda = self.perceived(anticipated_wage, stays)?;
        let base = q(self.params.w0);
        let mut best: Option<(Effort, Q)> = None;
        for e in self.params.efforts() {
            let u = base + self.recip.eta * lambda * self.kindness(anticipated_wage, stays, e)?
                - self.recip.disutility(e);
            if best.is_none_or(|(_, b)| u > b) {
                best = Some((e, u));
            }
        }
        Ok(best.expect("effort grid is never empty").0)
    }
}

/// Worker's minimum acceptable wage and effort at level `x` by exhaustive
/// search over the wage and effort grids.
pub fn brute_force_best_response(
    treatment: TreatmentSpec,
    params: &GameParams,
    recip: &ReciprocityParams,
    x: Level,
    anticipated_wage: Wage,
) -> Result<(Wage, Effort)> {
    params.check_level(x)?;
    let oracle = Oracle {
        treatment,
        params,
        recip,
        x,
        equitable_worker: Oracle::equitable_worker(treatment, params, x)?,
        midpoints: RefCell::new(HashMap::new()),
    };
    Ok((oracle.maw()?, oracle.effort(anticipated_wage)?))
}
