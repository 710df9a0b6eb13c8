//! Simulated data through CSV and back into the analysis.

use trainrecip_core::metrics::{pattern_shares, profit_table, summary_table, PatternCategory};
use trainrecip_core::simulator::{draw_population, run_treatment_with, PopulationSpec, SimOptions};
use trainrecip_core::stats::{mixed_model_fit, Family, MixedOutcome};
use trainrecip_core::table::ObservationTable;
use trainrecip_core::{GameParams, TreatmentSpec};

fn simulated() -> ObservationTable {
    let params = GameParams::default();
    let mut all = ObservationTable::default();
    for (i, t) in TreatmentSpec::ALL.into_iter().enumerate() {
        let spec = PopulationSpec {
            selfish: 20,
            reciprocal: 60,
            seed: 100 + i as u64,
            ..PopulationSpec::default()
        };
        let pop = draw_population(&spec).unwrap();
        let options = SimOptions {
            tremble: 0.2,
            session: i as u32 + 1,
        };
        all.records.extend(
            run_treatment_with(&pop, t, &params, 100 + i as u64, &options)
                .unwrap()
                .records,
        );
    }
    let text = all.to_csv_string().unwrap();
    let back = ObservationTable::read_csv(text.as_bytes(), &params).unwrap();
    assert!(back.violations.is_empty());
    back.table
}

#[test]
fn analysis_recovers_the_reciprocity_pattern() {
    let params = GameParams::default();
    let table = simulated();

    let summary = summary_table(&table, &params).unwrap();
    assert_eq!(summary.len(), 20);
    let endo: Vec<_> = summary
        .iter()
        .filter(|r| r.treatment == TreatmentSpec::ENDO)
        .collect();
    let exo: Vec<_> = summary
        .iter()
        .filter(|r| r.treatment == TreatmentSpec::EXO)
        .collect();
    // kind employers at high training get effort and a wage discount
    assert!(endo[4].effort_mean > exo[4].effort_mean + 1.0);
    assert!(endo[4].rwg_mean > exo[4].rwg_mean);
    assert!(summary
        .iter()
        .all(|r| r.effort_sd >= 0.0 && r.rwg_sd >= 0.0));
    assert!(summary.iter().all(|r| (0.0..=1.0).contains(&r.signrank_p)));

    let fit = mixed_model_fit(&table, &params, MixedOutcome::Effort, Family::Positive).unwrap();
    assert!(fit.converged);
    assert!(fit.coefficient("ENDO:X4").unwrap().0 > 1.0);
    assert!(fit.sigma_u2 >= 0.0 && fit.sigma_e2 > 0.0);
    assert!(fit
        .log_likelihood_trace
        .windows(2)
        .all(|w| w[1] >= w[0] - 1e-9));
    assert!(fit.wald.iter().all(|w| (0.0..=1.0).contains(&w.p_value)));

    let neg = mixed_model_fit(&table, &params, MixedOutcome::Effort, Family::Negative).unwrap();
    assert!(neg.coefficient("ENDO:X4").unwrap().0 < -1.0);

    for s in pattern_shares(&table, &params).unwrap() {
        assert_eq!(s.shares.len(), PatternCategory::ALL.len());
        assert!(s.shares.iter().all(|(_, v)| (0.0..=1.0).contains(v)));
    }

    let profits = profit_table(&table, &params).unwrap();
    let endo4 = profits
        .iter()
        .find(|r| r.treatment == TreatmentSpec::ENDO && r.x == 4)
        .unwrap();
    // paying the plan's MAW can never cost more than paying the market wage
    assert!(endo4.solver_wage >= endo4.market_wage);
}
