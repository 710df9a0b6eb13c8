use serde::Serialize;

use super::EquilibriumProfile;
use crate::game::{EffortDirection, Level, TreatmentSpec};
use crate::rational::{ceil_i64, q};

/// First training level at which the employer is perceived as kind in the
/// employer-chosen treatments under the default parameterization.
const KIND_LEVEL: Level = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ObservationCheck {
    pub id: &'static str,
    pub description: &'static str,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ObservationReport {
    pub treatment: TreatmentSpec,
    pub strong_reciprocity: bool,
    pub checks: Vec<ObservationCheck>,
}

impl ObservationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, id: &str) -> Option<&ObservationCheck> {
        self.checks.iter().find(|c| c.id == id)
    }
}

fn nonincreasing(values: &[u32]) -> bool {
    values.windows(2).all(|w| w[1] <= w[0])
}

/// Zero gap below the kind level; a discount at the smallest grid wage
/// reaching the kind-wage threshold from it on.
fn endo_gap_pattern(p: &EquilibriumProfile) -> bool {
    p.maw_schedule.iter().enumerate().all(|(x, &maw)| {
        let v = p.market_wage[x];
        if (x as Level) < KIND_LEVEL {
            return maw == v;
        }
        let terms = &p.kindness[x];
        if p.recip.eta == q(0) {
            return false;
        }
        // lambda = w0 + maw - equitable, so equitable - w0 + 1/eta = maw - lambda + 1/eta
        let threshold = q(maw) - terms.lambda_wew + p.recip.eta.recip();
        maw < v && maw == ceil_i64(threshold)
    })
}

fn endo_effort_pattern(p: &EquilibriumProfile) -> bool {
    p.effort_schedule.iter().enumerate().all(|(x, &e)| {
        if (x as Level) < KIND_LEVEL {
            e == 0
        } else {
            e > 0
        }
    })
}

pub fn verify_observations(profile: &EquilibriumProfile) -> ObservationReport {
    let t = profile.treatment;
    let mut checks = Vec::new();
    let market_gap = profile.maw_schedule == profile.market_wage;
    let zero_effort = profile.effort_schedule.iter().all(|&e| e == 0);
    match (t.training_endogenous, t.effort_direction) {
        (true, EffortDirection::Productive) => {
            checks.push(ObservationCheck {
                id: "O1",
                description: "RWG = 0 for x <= 2 and RWG > 0 for x >= 3",
                passed: endo_gap_pattern(profile),
            });
            checks.push(ObservationCheck {
                id: "O2",
                description: "DE = 0 for x <= 2 and DE > 0 for x >= 3",
                passed: endo_effort_pattern(profile),
            });
        }
        (false, EffortDirection::Productive) => {
            checks.push(ObservationCheck {
                id: "O3",
                description: "RWG = 0 at every level",
                passed: market_gap,
            });
            checks.push(ObservationCheck {
                id: "O4",
                description: "DE = 0 at every level",
                passed: zero_effort,
            });
        }
        (true, EffortDirection::Counterproductive) => {
            checks.push(ObservationCheck {
                id: "O1",
                description: "RWG = 0 for x <= 2 and RWG > 0 for x >= 3",
                passed: endo_gap_pattern(profile),
            });
            let effort = &profile.effort_schedule;
            checks.push(ObservationCheck {
                id: "N1",
                description: "CDE nonincreasing in x and 0 for x >= 3",
                passed: nonincreasing(effort)
                    && effort.iter().skip(KIND_LEVEL as usize).all(|&e| e == 0),
            });
        }
        (false, EffortDirection::Counterproductive) => {
            checks.push(ObservationCheck {
                id: "O3",
                description: "RWG = 0 at every level",
                passed: market_gap,
            });
            checks.push(ObservationCheck {
                id: "N2",
                description: "CDE nonincreasing in x",
                passed: nonincreasing(&profile.effort_schedule),
            });
        }
    }
    ObservationReport {
        treatment: t,
        strong_reciprocity: profile.strong_reciprocity,
        checks,
    }
}
