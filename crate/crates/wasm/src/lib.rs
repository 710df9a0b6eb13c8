//! Browser bindings. Every export takes plain numbers or strings and
//! returns a JSON string so the page can stay framework-free.

use serde::Serialize;
use trainrecip_core::equilibrium::{solve, verify_observations};
use trainrecip_core::metrics::{break_even_threshold, pattern_shares};
use trainrecip_core::rational::to_f64;
use trainrecip_core::simulator::{
    draw_population, run_treatment_with, DiscreteDist, PopulationSpec, SimOptions,
};
use trainrecip_core::table::ObservationTable;
use trainrecip_core::{GameParams, ReciprocityParams, TreatmentSpec};
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct Solved {
    treatment: &'static str,
    strong_reciprocity: bool,
    market_wage: Vec<i64>,
    maw: Vec<i64>,
    wage: Vec<i64>,
    effort: Vec<u32>,
    rwg: Vec<f64>,
    break_even: Vec<Option<f64>>,
    expected_profit: Vec<f64>,
    chosen_training: Option<u32>,
    observations: Vec<(String, bool)>,
}

#[derive(Serialize)]
struct CurvePoint {
    eta: f64,
    maw: Vec<i64>,
    effort: Vec<u32>,
}

#[derive(Serialize)]
struct Shares {
    treatment: &'static str,
    n: usize,
    shares: Vec<(&'static str, f64)>,
}

fn to_json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

fn parse_treatment(label: &str) -> Result<TreatmentSpec, String> {
    label
        .parse()
        .map_err(|e: trainrecip_core::Error| e.to_string())
}

pub fn solve_json(treatment: &str, eta: f64, k_linear: f64, k_quad: f64) -> Result<String, String> {
    let params = GameParams::default();
    let t = parse_treatment(treatment)?;
    let recip = ReciprocityParams::from_f64(eta, k_linear, k_quad).map_err(|e| e.to_string())?;
    let p = solve(t, &params, &recip).map_err(|e| e.to_string())?;
    let report = verify_observations(&p);
    let break_even = params
        .levels()
        .map(|x| {
            (x > 0)
                .then(|| break_even_threshold(&params, x).map(to_f64).ok())
                .flatten()
        })
        .collect();
    to_json(&Solved {
        treatment: t.label(),
        strong_reciprocity: p.strong_reciprocity,
        rwg: params
            .levels()
            .map(|x| to_f64(p.relative_wage_gap(x)))
            .collect(),
        expected_profit: p.expected_profit.iter().map(|&v| to_f64(v)).collect(),
        market_wage: p.market_wage,
        maw: p.maw_schedule,
        wage: p.wage_schedule,
        effort: p.effort_schedule,
        break_even,
        chosen_training: p.chosen_training,
        observations: report
            .checks
            .iter()
            .map(|c| (c.id.to_string(), c.passed))
            .collect(),
    })
}

pub fn eta_curve_json(
    treatment: &str,
    k_linear: f64,
    k_quad: f64,
    eta_max: f64,
    steps: u32,
) -> Result<String, String> {
    if !eta_max.is_finite() || eta_max <= 0.0 || steps == 0 || steps > 500 {
        return Err("need eta_max > 0 and 1..=500 steps".into());
    }
    let params = GameParams::default();
    let t = parse_treatment(treatment)?;
    let mut points = Vec::with_capacity(steps as usize + 1);
    for i in 0..=steps {
        // rounded to 1e-4 so the exact solver sees short decimals
        let eta = (eta_max * i as f64 / steps as f64 * 1e4).round() / 1e4;
        let recip =
            ReciprocityParams::from_f64(eta, k_linear, k_quad).map_err(|e| e.to_string())?;
        let p = solve(t, &params, &recip).map_err(|e| e.to_string())?;
        points.push(CurvePoint {
            eta,
            maw: p.maw_schedule,
            effort: p.effort_schedule,
        });
    }
    to_json(&points)
}

pub fn simulate_patterns_json(
    reciprocal: u32,
    selfish: u32,
    eta: f64,
    tremble: f64,
    seed: u64,
) -> Result<String, String> {
    let params = GameParams::default();
    let spec = PopulationSpec {
        selfish: selfish as usize,
        reciprocal: reciprocal as usize,
        eta: DiscreteDist::point(eta),
        seed,
        ..PopulationSpec::default()
    };
    let mut all = ObservationTable::default();
    for (i, t) in TreatmentSpec::ALL.into_iter().enumerate() {
        let population = draw_population(&PopulationSpec {
            seed: seed + i as u64,
            ..spec.clone()
        })
        .map_err(|e| e.to_string())?;
        let options = SimOptions {
            tremble,
            session: i as u32 + 1,
        };
        let table = run_treatment_with(&population, t, &params, seed + i as u64, &options)
            .map_err(|e| e.to_string())?;
        all.records.extend(table.records);
    }
    let shares = pattern_shares(&all, &params).map_err(|e| e.to_string())?;
    to_json(
        &shares
            .into_iter()
            .map(|s| Shares {
                treatment: s.treatment.label(),
                n: s.n,
                shares: s.shares.into_iter().map(|(c, v)| (c.label(), v)).collect(),
            })
            .collect::<Vec<_>>(),
    )
}

/// Equilibrium schedules for one treatment as JSON.
#[wasm_bindgen]
pub fn solve_equilibrium(
    treatment: &str,
    eta: f64,
    k_linear: f64,
    k_quad: f64,
) -> Result<String, JsValue> {
    solve_json(treatment, eta, k_linear, k_quad).map_err(|e| JsValue::from_str(&e))
}

/// MAW and effort by level across an evenly spaced eta grid.
#[wasm_bindgen]
pub fn eta_curve(
    treatment: &str,
    k_linear: f64,
    k_quad: f64,
    eta_max: f64,
    steps: u32,
) -> Result<String, JsValue> {
    eta_curve_json(treatment, k_linear, k_quad, eta_max, steps).map_err(|e| JsValue::from_str(&e))
}

/// Simulates all four treatments and returns effort-pattern shares.
#[wasm_bindgen]
pub fn simulate_patterns(
    reciprocal: u32,
    selfish: u32,
    eta: f64,
    tremble: f64,
    seed: u64,
) -> Result<String, JsValue> {
    simulate_patterns_json(reciprocal, selfish, eta, tremble, seed)
        .map_err(|e| JsValue::from_str(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    #[test]
    fn solve_reports_the_discount() {
        let v: Value = serde_json::from_str(&solve_json("ENDO", 0.1, 0.0, 5.0).unwrap()).unwrap();
        assert_eq!(v["maw"], serde_json::json!([50, 150, 250, 335, 335]));
        assert_eq!(v["chosen_training"], 4);
        assert!(solve_json("NOPE", 0.1, 0.0, 5.0).is_err());
    }

    #[test]
    fn curve_starts_selfish() {
        let v: Value =
            serde_json::from_str(&eta_curve_json("ENDO", 0.0, 5.0, 0.5, 10).unwrap()).unwrap();
        let pts = v.as_array().unwrap();
        assert_eq!(pts.len(), 11);
        assert_eq!(pts[0]["maw"], serde_json::json!([50, 150, 250, 350, 450]));
        assert!(eta_curve_json("ENDO", 0.0, 5.0, 0.5, 0).is_err());
    }

    #[test]
    fn shares_cover_all_treatments() {
        let v: Value =
            serde_json::from_str(&simulate_patterns_json(20, 10, 0.1, 0.1, 3).unwrap()).unwrap();
        let rows = v.as_array().unwrap();
        assert_eq!(rows.len(), 4);
        for r in rows {
            let total: f64 = r["shares"]
                .as_array()
                .unwrap()
                .iter()
                .map(|p| p[1].as_f64().unwrap())
                .sum();
            assert!((total - 1.0).abs() < 1e-9);
        }
        assert!(simulate_patterns_json(3, 0, 0.1, 0.0, 1).is_err());
    }
}
