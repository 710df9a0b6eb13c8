//! Parameters and payoffs of the training game, plus the probability
//! schedule for the employer's long-term benefit.
//!
//! Timeline: at T0 the employer pays the initial wage and the training cost
//! and the worker privately chooses effort; at T1 the employer offers a new
//! wage and the worker stays or leaves for the market wage; at T2 the
//! long-term benefit is realized.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{decimal_serde, q, Q};

pub type Level = u32;
pub type Effort = u32;
pub type Wage = i64;
pub type Points = i64;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GameParams {
    /// Initial wage paid at T0.
    pub w0: Points,
    /// Untrained output `F`.
    pub output: Points,
    pub cost_per_level: Points,
    pub prod_per_level: Points,
    pub y_high: Points,
    pub y_low: Points,
    #[serde(with = "decimal_serde")]
    pub p_base: Q,
    #[serde(with = "decimal_serde")]
    pub p_slope: Q,
    pub level_max: Level,
    pub effort_max: Effort,
    pub wage_min: Wage,
    pub wage_max: Wage,
}

impl Default for GameParams {
    fn default() -> Self {
        GameParams {
            w0: 50,
            output: 100,
            cost_per_level: 20,
            prod_per_level: 100,
            y_high: 800,
            y_low: 0,
            p_base: Q::new(1, 5),
            p_slope: Q::new(1, 20),
            level_max: 4,
            effort_max: 12,
            wage_min: 50,
            wage_max: 600,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EffortDirection {
    Productive,
    Counterproductive,
}

impl EffortDirection {
    /// +1 when effort helps the employer, -1 when it hurts him.
    pub fn sign(self) -> i64 {
        match self {
            EffortDirection::Productive => 1,
            EffortDirection::Counterproductive => -1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TreatmentSpec {
    pub training_endogenous: bool,
    pub effort_direction: EffortDirection,
}

impl TreatmentSpec {
    pub const ENDO: TreatmentSpec = TreatmentSpec {
        training_endogenous: true,
        effort_direction: EffortDirection::Productive,
    };
    pub const EXO: TreatmentSpec = TreatmentSpec {
        training_endogenous: false,
        effort_direction: EffortDirection::Productive,
    };
    pub const ENDO_NEG: TreatmentSpec = TreatmentSpec {
        training_endogenous: true,
        effort_direction: EffortDirection::Counterproductive,
    };
    pub const EXO_NEG: TreatmentSpec = TreatmentSpec {
        training_endogenous: false,
        effort_direction: EffortDirection::Counterproductive,
    };
    pub const ALL: [TreatmentSpec; 4] = [Self::ENDO, Self::EXO, Self::ENDO_NEG, Self::EXO_NEG];

    pub fn label(self) -> &'static str {
        match (self.training_endogenous, self.effort_direction) {
            (true, EffortDirection::Productive) => "ENDO",
            (false, EffortDirection::Productive) => "EXO",
            (true, EffortDirection::Counterproductive) => "ENDO_NEG",
            (false, EffortDirection::Counterproductive) => "EXO_NEG",
        }
    }
}

impl fmt::Display for TreatmentSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for TreatmentSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().replace('-', "_").as_str() {
            "ENDO" => Ok(Self::ENDO),
            "EXO" => Ok(Self::EXO),
            "ENDO_NEG" => Ok(Self::ENDO_NEG),
            "EXO_NEG" => Ok(Self::EXO_NEG),
            other => Err(Error::config(format!("unknown treatment {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Benefit {
    High,
    Low,
}

impl Benefit {
    pub fn label(self) -> &'static str {
        match self {
            Benefit::High => "High",
            Benefit::Low => "Low",
        }
    }
}

impl FromStr for Benefit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "high" | "h" => Ok(Benefit::High),
            "low" | "l" => Ok(Benefit::Low),
            other => Err(Error::data(format!("unknown benefit {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    pub stay: bool,
    pub realized_benefit: Benefit,
}

fn check_range(what: &'static str, value: i64, min: i64, max: i64) -> Result<()> {
    if value < min || value > max {
        return Err(Error::Domain {
            what,
            value,
            min,
            max,
        });
    }
    Ok(())
}

impl GameParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.y_high > self.y_low && self.y_low >= 0) {
            return Err(Error::config("need y_high > y_low >= 0"));
        }
        if self.p_base < Q::from_integer(0) || self.p_slope <= Q::from_integer(0) {
            return Err(Error::config("need p_base >= 0 and p_slope > 0"));
        }
        if self.p_top() > Q::from_integer(1) {
            return Err(Error::config(
                "p_base + p_slope * effort_max exceeds 1; the probability schedule leaves [0, 1]",
            ));
        }
        if self.cost_per_level <= 0 || self.prod_per_level < 0 {
            return Err(Error::config("training cost must be strictly increasing"));
        }
        if self.wage_min > self.w0 {
            return Err(Error::config("wage_min must not exceed w0"));
        }
        let top = self.w0 + self.prod_per_level * self.level_max as i64;
        if self.wage_max < top {
            return Err(Error::config(format!(
                "wage_max {} is below the top market wage {top}",
                self.wage_max
            )));
        }
        Ok(())
    }

    fn p_top(&self) -> Q {
        self.p_base + self.p_slope * Q::from_integer(self.effort_max as i128)
    }

    pub fn check_level(&self, x: Level) -> Result<()> {
        check_range("training level", x as i64, 0, self.level_max as i64)
    }

    pub fn check_effort(&self, effort: Effort) -> Result<()> {
        check_range("effort", effort as i64, 0, self.effort_max as i64)
    }

    pub fn check_wage(&self, w1: Wage) -> Result<()> {
        check_range("wage", w1, self.wage_min, self.wage_max)
    }

    pub fn levels(&self) -> impl Iterator<Item = Level> {
        0..=self.level_max
    }

    pub fn efforts(&self) -> impl Iterator<Item = Effort> {
        0..=self.effort_max
    }

    pub fn wages(&self) -> impl Iterator<Item = Wage> {
        self.wage_min..=self.wage_max
    }

    /// `c(x)`.
    pub fn training_cost(&self, x: Level) -> Result<Points> {
        self.check_level(x)?;
        Ok(self.cost_per_level * x as i64)
    }

    /// `f(x)`.
    pub fn productivity(&self, x: Level) -> Result<Points> {
        self.check_level(x)?;
        Ok(self.output + self.prod_per_level * x as i64)
    }

    /// Market wage `v(x) = w0 + f(x) - f(0)`: the outside market values
    /// training fully.
    pub fn outside_wage(&self, x: Level) -> Result<Wage> {
        Ok(self.w0 + self.productivity(x)? - self.output)
    }

    /// Probability of the high long-term benefit given effort.
    pub fn success_probability(&self, effort: Effort, direction: EffortDirection) -> Result<Q> {
        self.check_effort(effort)?;
        let e = Q::from_integer(effort as i128);
        Ok(match direction {
            EffortDirection::Productive => self.p_base + self.p_slope * e,
            EffortDirection::Counterproductive => self.p_top() - self.p_slope * e,
        })
    }

    /// Change in the employer's expected benefit per unit of productive
    /// effort, `(y_high - y_low) * p_slope`.
    pub fn benefit_slope(&self) -> Q {
        q(self.y_high - self.y_low) * self.p_slope
    }

    pub fn worker_total_payoff(&self, x: Level, w1: Wage, stay: bool) -> Result<Points> {
        self.check_wage(w1)?;
        let v = self.outside_wage(x)?;
        Ok(self.w0 + if stay { w1 } else { v })
    }

    /// Employer's payoff before the benefit term: T0 profit plus T1 profit.
    /// A departing worker is replaced at `w0` with untrained output, and no
    /// renegotiated wage is paid.
    fn employer_base(&self, x: Level, w1: Wage, stay: bool) -> Result<Points> {
        self.check_wage(w1)?;
        let t0 = self.output - self.w0 - self.training_cost(x)?;
        let t1 = if stay {
            self.productivity(x)? - w1
        } else {
            self.output - self.w0
        };
        Ok(t0 + t1)
    }

    pub fn employer_total_payoff(
        &self,
        x: Level,
        w1: Wage,
        stay: bool,
        benefit: Benefit,
    ) -> Result<Points> {
        let y = match benefit {
            Benefit::High => self.y_high,
            Benefit::Low => self.y_low,
        };
        Ok(self.employer_base(x, w1, stay)? + y)
    }

    pub fn employer_expected_payoff(
        &self,
        x: Level,
        w1: Wage,
        stay: bool,
        effort: Effort,
        direction: EffortDirection,
    ) -> Result<Q> {
        let p = self.success_probability(effort, direction)?;
        Ok(q(self.employer_base(x, w1, stay)? + self.y_low) + q(self.y_high - self.y_low) * p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use EffortDirection::*;

    fn p() -> GameParams {
        GameParams::default()
    }

    #[test]
    fn defaults_are_valid() {
        p().validate().unwrap();
    }

    #[test]
    fn cost_productivity_market_wage() {
        let g = p();
        assert_eq!(g.training_cost(0).unwrap(), 0);
        assert_eq!(g.training_cost(3).unwrap(), 60);
        assert_eq!(g.training_cost(4).unwrap(), 80);
        assert_eq!(g.productivity(0).unwrap(), 100);
        assert_eq!(g.productivity(2).unwrap(), 300);
        assert_eq!(g.productivity(4).unwrap(), 500);
        assert_eq!(g.outside_wage(0).unwrap(), 50);
        assert_eq!(g.outside_wage(1).unwrap(), 150);
        assert_eq!(g.outside_wage(4).unwrap(), 450);
        assert!(matches!(g.training_cost(5), Err(Error::Domain { .. })));
        assert!(g.productivity(7).is_err());
        assert!(g.outside_wage(5).is_err());
    }

    #[test]
    fn probability_schedule() {
        let g = p();
        assert_eq!(g.success_probability(0, Productive).unwrap(), Q::new(1, 5));
        assert_eq!(g.success_probability(12, Productive).unwrap(), Q::new(4, 5));
        assert_eq!(
            g.success_probability(7, Counterproductive).unwrap(),
            Q::new(45, 100)
        );
        assert_eq!(
            g.success_probability(12, Counterproductive).unwrap(),
            Q::new(1, 5)
        );
        assert!(g.success_probability(13, Productive).is_err());
        assert_eq!(g.benefit_slope(), q(40));
    }

    #[test]
    fn worker_payoffs() {
        let g = p();
        assert_eq!(g.worker_total_payoff(0, 50, true).unwrap(), 100);
        assert_eq!(g.worker_total_payoff(3, 400, false).unwrap(), 400);
        assert_eq!(g.worker_total_payoff(4, 335, true).unwrap(), 385);
        assert!(g.worker_total_payoff(0, 49, true).is_err());
        assert!(g.worker_total_payoff(0, 601, false).is_err());
    }

    #[test]
    fn employer_payoffs() {
        let g = p();
        assert_eq!(
            g.employer_total_payoff(2, 250, true, Benefit::High)
                .unwrap(),
            860
        );
        assert_eq!(
            g.employer_total_payoff(1, 300, false, Benefit::Low)
                .unwrap(),
            80
        );
        assert_eq!(
            g.employer_total_payoff(0, 50, true, Benefit::Low).unwrap(),
            100
        );
        assert_eq!(
            g.employer_expected_payoff(0, 50, true, 0, Productive)
                .unwrap(),
            q(260)
        );
        assert_eq!(
            g.employer_expected_payoff(4, 335, true, 4, Productive)
                .unwrap(),
            q(455)
        );
        assert_eq!(
            g.employer_expected_payoff(0, 50, true, 12, Counterproductive)
                .unwrap(),
            q(260)
        );
        assert!(g
            .employer_expected_payoff(0, 20, true, 0, Productive)
            .is_err());
    }

    #[test]
    fn treatment_labels_roundtrip() {
        for t in TreatmentSpec::ALL {
            assert_eq!(t.label().parse::<TreatmentSpec>().unwrap(), t);
        }
        assert_eq!(
            "endo-neg".parse::<TreatmentSpec>().unwrap(),
            TreatmentSpec::ENDO_NEG
        );
        assert!("BOTH".parse::<TreatmentSpec>().is_err());
        let labels: std::collections::BTreeSet<_> =
            TreatmentSpec::ALL.iter().map(|t| t.label()).collect();
        assert_eq!(labels.len(), 4);
    }

    #[test]
    fn invalid_params_rejected() {
        let mut g = p();
        g.effort_max = 17;
        assert!(g.validate().is_err());
        let mut g = p();
        g.wage_max = 400;
        assert!(g.validate().is_err());
        let mut g = p();
        g.y_low = 900;
        assert!(g.validate().is_err());
        let mut g = p();
        g.wage_min = 60;
        assert!(g.validate().is_err());
    }

    #[test]
    fn exhaustive_payoff_identities() {
        let g = p();
        for x in g.levels() {
            assert_eq!(
                g.outside_wage(x).unwrap() - g.w0,
                g.productivity(x).unwrap() - g.productivity(0).unwrap()
            );
            for w1 in g.wages() {
                for stay in [true, false] {
                    let high = q(g.employer_total_payoff(x, w1, stay, Benefit::High).unwrap());
                    let low = q(g.employer_total_payoff(x, w1, stay, Benefit::Low).unwrap());
                    for dir in [Productive, Counterproductive] {
                        let mut prev: Option<Q> = None;
                        for e in g.efforts() {
                            let pr = g.success_probability(e, dir).unwrap();
                            let expected = g.employer_expected_payoff(x, w1, stay, e, dir).unwrap();
                            assert_eq!(expected, pr * high + (Q::from_integer(1) - pr) * low);
                            if let Some(before) = prev {
                                match dir {
                                    Productive => assert!(expected > before),
                                    Counterproductive => assert!(expected < before),
                                }
                            }
                            prev = Some(expected);
                        }
                    }
                }
            }
        }
        for b in [Benefit::High, Benefit::Low] {
            assert_eq!(
                g.employer_total_payoff(0, g.w0, true, b).unwrap(),
                g.employer_total_payoff(0, g.w0, false, b).unwrap()
            );
        }
    }
}
