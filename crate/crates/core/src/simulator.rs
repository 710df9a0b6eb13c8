//! Agent populations played under the strategy method.
//!
//! Each worker submits a minimum acceptable wage and an effort level for
//! every training level before the level is known. Random numbers come from
//! ChaCha8 (`rand_chacha::ChaCha8Rng::seed_from_u64`): stream 0 draws the
//! population and the pairing, pair `i` draws on its own stream `i + 1`, so
//! results do not depend on the order in which pairs are processed.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::equilibrium::{worker_effort, worker_maw};
use crate::error::{Error, Result};
use crate::game::{Benefit, Effort, EffortDirection, GameParams, Level, TreatmentSpec, Wage};
use crate::reciprocity::ReciprocityParams;
use crate::table::{ObservationRecord, ObservationTable, Role};

/// Identifier recorded in configs for the generator above.
pub const RNG_ALGORITHM: &str = "chacha8";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Behavior {
    Selfish,
    Reciprocal(ReciprocityParams),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Demographics {
    pub gender: Option<String>,
    pub svo: Option<String>,
    pub pos_recip: Option<f64>,
    pub neg_recip: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentProfile {
    pub agent_id: u32,
    pub behavior: Behavior,
    pub demographics: Demographics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscreteDist {
    pub support: Vec<f64>,
    pub weights: Vec<f64>,
}

impl DiscreteDist {
    pub fn point(value: f64) -> Self {
        DiscreteDist {
            support: vec![value],
            weights: vec![1.0],
        }
    }

    fn sampler(&self, name: &str) -> Result<WeightedIndex<f64>> {
        let bad = |why: &str| Error::config(format!("distribution for {name}: {why}"));
        if self.support.is_empty() || self.support.len() != self.weights.len() {
            return Err(bad(
                "support and weights must be nonempty and of equal length",
            ));
        }
        if self.weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(bad("weights must be finite and nonnegative"));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(bad(&format!("weights sum to {total}, not 1")));
        }
        WeightedIndex::new(&self.weights).map_err(|e| bad(&e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PopulationSpec {
    pub selfish: usize,
    pub reciprocal: usize,
    pub eta: DiscreteDist,
    pub k_linear: DiscreteDist,
    pub k_quad: DiscreteDist,
    pub seed: u64,
    /// Attach synthetic demographic columns.
    pub demographics: bool,
}

impl Default for PopulationSpec {
    fn default() -> Self {
        PopulationSpec {
            selfish: 0,
            reciprocal: 60,
            eta: DiscreteDist::point(0.1),
            k_linear: DiscreteDist::point(0.0),
            k_quad: DiscreteDist::point(5.0),
            seed: 42,
            demographics: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimOptions {
    /// Per-level probability that a worker's plan entry is replaced by a
    /// uniform draw from the wage and effort grids.
    pub tremble: f64,
    pub session: u32,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            tremble: 0.0,
            session: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkerPlan {
    pub maw: Vec<Wage>,
    pub effort: Vec<Effort>,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

pub fn draw_population(spec: &PopulationSpec) -> Result<Vec<AgentProfile>> {
    let eta = spec.eta.sampler("eta")?;
    let k1 = spec.k_linear.sampler("k_linear")?;
    let k2 = spec.k_quad.sampler("k_quad")?;
    let mut rng = stream(spec.seed, 0);
    let mut agents = Vec::with_capacity(spec.selfish + spec.reciprocal);
    for i in 0..spec.selfish + spec.reciprocal {
        let behavior = if i < spec.selfish {
            Behavior::Selfish
        } else {
            Behavior::Reciprocal(ReciprocityParams::from_f64(
                spec.eta.support[eta.sample(&mut rng)],
                spec.k_linear.support[k1.sample(&mut rng)],
                spec.k_quad.support[k2.sample(&mut rng)],
            )?)
        };
        let demographics = if spec.demographics {
            Demographics {
                gender: Some(if rng.random_bool(0.5) { "F" } else { "M" }.to_string()),
                svo: Some(
                    if rng.random_bool(0.6) {
                        "prosocial"
                    } else {
                        "individualistic"
                    }
                    .to_string(),
                ),
                pos_recip: Some(rng.random_range(100..=500) as f64 / 100.0),
                neg_recip: Some(rng.random_range(100..=500) as f64 / 100.0),
            }
        } else {
            Demographics::default()
        };
        agents.push(AgentProfile {
            agent_id: i as u32,
            behavior,
            demographics,
        });
    }
    Ok(agents)
}

/// Contingent plan an agent submits as a worker: market wage and no effort
/// if selfish, equilibrium responses if reciprocal.
pub fn worker_plan(
    agent: &AgentProfile,
    treatment: TreatmentSpec,
    params: &GameParams,
) -> Result<WorkerPlan> {
    let mut plan = WorkerPlan {
        maw: Vec::new(),
        effort: Vec::new(),
    };
    for x in params.levels() {
        let (maw, effort) = match &agent.behavior {
            Behavior::Selfish => (params.outside_wage(x)?, 0),
            Behavior::Reciprocal(recip) => {
                let maw = worker_maw(treatment, params, recip, x)?;
                (maw, worker_effort(treatment, params, recip, x, maw)?)
            }
        };
        plan.maw.push(maw);
        plan.effort.push(effort);
    }
    Ok(plan)
}

/// Bernoulli draw of the long-term benefit. The success probability is an
/// exact rational `n/d`; the draw is `uniform(0..d) < n`.
pub fn realize_benefit<R: Rng + ?Sized>(
    effort: Effort,
    direction: EffortDirection,
    params: &GameParams,
    rng: &mut R,
) -> Result<Benefit> {
    let p = params.success_probability(effort, direction)?;
    let numer = u64::try_from(*p.numer()).map_err(|_| Error::config("probability out of range"))?;
    let denom = u64::try_from(*p.denom()).map_err(|_| Error::config("probability out of range"))?;
    Ok(if rng.random_range(0..denom) < numer {
        Benefit::High
    } else {
        Benefit::Low
    })
}

fn best_level(
    treatment: TreatmentSpec,
    params: &GameParams,
    plan: &WorkerPlan,
    offers: &[Wage],
) -> Result<Level> {
    let mut best: Option<(Level, crate::Q)> = None;
    for x in params.levels() {
        let i = x as usize;
        let stay = offers[i] >= plan.maw[i];
        let profit = params.employer_expected_payoff(
            x,
            offers[i],
            stay,
            plan.effort[i],
            treatment.effort_direction,
        )?;
        if best.is_none_or(|(_, b)| profit > b) {
            best = Some((x, profit));
        }
    }
    Ok(best.expect("level grid is never empty").0)
}

pub fn run_treatment(
    population: &[AgentProfile],
    treatment: TreatmentSpec,
    params: &GameParams,
    seed: u64,
) -> Result<ObservationTable> {
    run_treatment_with(population, treatment, params, seed, &SimOptions::default())
}

/// Pairs agents at random, elicits each worker's full plan, lets the
/// employer pick (or draws) the training level, offers the worker's
/// minimum acceptable wage and realizes the benefit at the implemented
/// level. Emits one row per worker and level.
pub fn run_treatment_with(
    population: &[AgentProfile],
    treatment: TreatmentSpec,
    params: &GameParams,
    seed: u64,
    options: &SimOptions,
) -> Result<ObservationTable> {
    params.validate()?;
    if !population.len().is_multiple_of(2) {
        return Err(Error::config(format!(
            "population of {} agents cannot be paired",
            population.len()
        )));
    }
    if !(0.0..=1.0).contains(&options.tremble) {
        return Err(Error::config("tremble must lie in [0, 1]"));
    }
    let mut order: Vec<usize> = (0..population.len()).collect();
    order.shuffle(&mut stream(seed, 0));

    let mut records = Vec::with_capacity(population.len() / 2 * (params.level_max as usize + 1));
    for (pair, chunk) in order.chunks_exact(2).enumerate() {
        let worker = &population[chunk[1]];
        let mut rng = stream(seed, pair as u64 + 1);
        let mut plan = worker_plan(worker, treatment, params)?;
        if options.tremble > 0.0 {
            for i in 0..plan.maw.len() {
                if rng.random_bool(options.tremble) {
                    plan.maw[i] = rng.random_range(params.wage_min..=params.wage_max);
                    plan.effort[i] = rng.random_range(0..=params.effort_max);
                }
            }
        }
        let offers = plan.maw.clone();
        let chosen = if treatment.training_endogenous {
            best_level(treatment, params, &plan, &offers)?
        } else {
            rng.random_range(0..=params.level_max)
        };
        let c = chosen as usize;
        let stay = offers[c] >= plan.maw[c];
        let benefit =
            realize_benefit(plan.effort[c], treatment.effort_direction, params, &mut rng)?;
        for x in params.levels() {
            let i = x as usize;
            let implemented = x == chosen;
            records.push(ObservationRecord {
                treatment,
                session: Some(options.session),
                pair_id: Some(pair as u32),
                subject_id: worker.agent_id.to_string(),
                role: Role::Worker,
                x,
                maw: plan.maw[i],
                effort: plan.effort[i],
                employer_offer: Some(offers[i]),
                chosen_x: Some(implemented),
                stay: implemented.then_some(stay),
                realized_benefit: implemented.then_some(benefit),
                gender: worker.demographics.gender.clone(),
                svo: worker.demographics.svo.clone(),
                pos_recip: worker.demographics.pos_recip,
                neg_recip: worker.demographics.neg_recip,
            });
        }
    }
    Ok(ObservationTable { records })
}
