use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use trainrecip_core::equilibrium::{self, verify_observations, EquilibriumProfile, WageRegime};
use trainrecip_core::metrics::{
    break_even_threshold, pattern_shares, profit_table, summary_table, PatternCategory, SummaryRow,
};
use trainrecip_core::rational::to_f64;
use trainrecip_core::simulator::{draw_population, run_treatment_with, SimOptions};
use trainrecip_core::stats::{
    family_treatments, mixed_model_fit, ols_by_level, stars, Family, MixedFit, MixedOutcome,
    OlsCell,
};
use trainrecip_core::table::{ingest, Ingested, ObservationTable};
use trainrecip_core::{GameParams, TreatmentSpec, Q};

use crate::config::RunConfig;
use crate::svg;

/// Text for stdout plus the files a command wrote.
#[derive(Debug, Clone, Default)]
pub struct CommandOutput {
    pub report: String,
    pub files: Vec<PathBuf>,
}

impl CommandOutput {
    fn write(&mut self, dir: &Path, name: &str, contents: &[u8]) -> anyhow::Result<()> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.files.push(path);
        Ok(())
    }
}

fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    Ok(w.into_inner()?)
}

fn dec(value: f64, decimals: usize) -> String {
    if value.is_nan() {
        "NA".into()
    } else {
        format!("{value:.decimals$}")
    }
}

fn num(value: f64) -> String {
    if value.is_nan() {
        String::new()
    } else {
        value.to_string()
    }
}

fn opt_num(value: Option<f64>) -> String {
    value.map(num).unwrap_or_default()
}

fn break_even_line(params: &GameParams, decimals: usize) -> anyhow::Result<String> {
    let values = (1..=params.level_max)
        .map(|x| Ok(dec(to_f64(break_even_threshold(params, x)?), decimals)))
        .collect::<anyhow::Result<Vec<_>>>()?;
    Ok(format!("BT = ({})", values.join(", ")))
}

fn reciprocity_label(p: &EquilibriumProfile) -> String {
    format!(
        "eta = {}, k_linear = {}, k_quad = {}",
        to_f64(p.recip.eta),
        to_f64(p.recip.k_linear),
        to_f64(p.recip.k_quad)
    )
}

fn profile_block(
    out: &mut String,
    p: &EquilibriumProfile,
    params: &GameParams,
    d: usize,
) -> anyhow::Result<()> {
    let chosen = p
        .chosen_training
        .map(|x| format!("x* = {x}"))
        .unwrap_or_else(|| "training drawn at random".into());
    let _ = writeln!(out, "{}: {chosen}", p.treatment);
    let _ = writeln!(
        out,
        "  {:>2} {:>6} {:>6} {:>6} {:>6} {:>8} {:>6} {:>9}",
        "x", "v", "offer", "MAW", "effort", "RWG", "BT", "profit"
    );
    for x in params.levels() {
        let i = x as usize;
        let bt = if x == 0 {
            "NA".to_string()
        } else {
            dec(to_f64(break_even_threshold(params, x)?), d)
        };
        let _ = writeln!(
            out,
            "  {:>2} {:>6} {:>6} {:>6} {:>6} {:>8} {:>6} {:>9}",
            x,
            p.market_wage[i],
            p.wage_schedule[i],
            p.maw_schedule[i],
            p.effort_schedule[i],
            dec(to_f64(p.relative_wage_gap(x)), d.max(3)),
            bt,
            dec(to_f64(p.expected_profit[i]), d)
        );
    }
    let _ = writeln!(
        out,
        "  MAW = {:?}, effort = {:?}",
        p.maw_schedule, p.effort_schedule
    );
    let report = verify_observations(p);
    let checks: Vec<String> = report
        .checks
        .iter()
        .map(|c| format!("{} {}", c.id, if c.passed { "pass" } else { "FAIL" }))
        .collect();
    let _ = writeln!(out, "  observations: {}", checks.join(", "));
    Ok(())
}

fn profile_rows(p: &EquilibriumProfile, params: &GameParams) -> anyhow::Result<Vec<Vec<String>>> {
    let mut rows = Vec::new();
    for x in params.levels() {
        let i = x as usize;
        let k = &p.kindness[i];
        rows.push(vec![
            num(to_f64(p.recip.eta)),
            num(to_f64(p.recip.k_linear)),
            num(to_f64(p.recip.k_quad)),
            p.treatment.label().to_string(),
            x.to_string(),
            p.market_wage[i].to_string(),
            p.wage_schedule[i].to_string(),
            p.maw_schedule[i].to_string(),
            p.effort_schedule[i].to_string(),
            num(to_f64(p.relative_wage_gap(x))),
            exact(p.relative_wage_gap(x)),
            if x == 0 {
                String::new()
            } else {
                exact(break_even_threshold(params, x)?)
            },
            num(to_f64(p.expected_profit[i])),
            (p.chosen_training == Some(x)).to_string(),
            match p.wage_regime[i] {
                WageRegime::Market => "market",
                WageRegime::Discount => "discount",
            }
            .to_string(),
            exact(k.lambda_wew),
            k.delta_kappa.to_string(),
        ]);
    }
    Ok(rows)
}

fn exact(value: Q) -> String {
    value.to_string()
}

const PROFILE_HEADER: [&str; 17] = [
    "eta",
    "k_linear",
    "k_quad",
    "treatment",
    "x",
    "market_wage",
    "offer",
    "maw",
    "effort",
    "rwg",
    "rwg_exact",
    "break_even_exact",
    "expected_profit",
    "chosen",
    "regime",
    "lambda",
    "delta_kappa",
];

pub fn cmd_solve(config: &RunConfig, out_dir: &Path) -> anyhow::Result<CommandOutput> {
    config.validate()?;
    let params = &config.game;
    let d = config.display_decimals;
    let treatments = config.treatment_specs()?;
    let mut out = CommandOutput::default();
    let mut text = String::new();
    let _ = writeln!(
        text,
        "Break-even thresholds for x = 1..{}: {}",
        params.level_max,
        break_even_line(params, d)?
    );
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for recip in config.reciprocity_params()? {
        let strength = if recip.is_strong() {
            "strong reciprocity"
        } else {
            "weak reciprocity"
        };
        let _ = writeln!(text);
        let mut header_done = false;
        for &t in &treatments {
            let profile =
                equilibrium::solve(t, params, &recip).with_context(|| format!("solving {t}"))?;
            if !header_done {
                let _ = writeln!(text, "[{}; {strength}]", reciprocity_label(&profile));
                header_done = true;
            }
            profile_block(&mut text, &profile, params, d)?;
            rows.extend(profile_rows(&profile, params)?);
            for c in verify_observations(&profile).checks {
                checks.push(vec![
                    num(to_f64(recip.eta)),
                    num(to_f64(recip.k_linear)),
                    num(to_f64(recip.k_quad)),
                    t.label().to_string(),
                    c.id.to_string(),
                    c.description.to_string(),
                    c.passed.to_string(),
                ]);
            }
        }
    }
    out.write(
        out_dir,
        "equilibrium.csv",
        &csv_bytes(&PROFILE_HEADER, &rows)?,
    )?;
    out.write(
        out_dir,
        "observation_checks.csv",
        &csv_bytes(
            &[
                "eta",
                "k_linear",
                "k_quad",
                "treatment",
                "id",
                "description",
                "passed",
            ],
            &checks,
        )?,
    )?;
    out.write(out_dir, "solve_report.txt", text.as_bytes())?;
    out.report = text;
    Ok(out)
}

pub fn cmd_sweep(config: &RunConfig, out_dir: &Path) -> anyhow::Result<CommandOutput> {
    config.validate()?;
    let params = &config.game;
    let treatments = config.treatment_specs()?;
    let grid = config.sweep_grid()?;
    let profiles = equilibrium::sweep(params, &treatments, &grid)?;
    let mut out = CommandOutput::default();
    let mut text = String::new();
    let mut rows = Vec::new();
    for p in &profiles {
        let passed = verify_observations(p).all_passed();
        let _ = writeln!(
            text,
            "{:<8} {}: MAW = {:?}, effort = {:?}, x* = {}, observations {}",
            p.treatment.label(),
            reciprocity_label(p),
            p.maw_schedule,
            p.effort_schedule,
            p.chosen_training
                .map(|x| x.to_string())
                .unwrap_or_else(|| "-".into()),
            if passed { "pass" } else { "FAIL" }
        );
        for mut row in profile_rows(p, params)? {
            row.push(passed.to_string());
            rows.push(row);
        }
    }
    let mut header = PROFILE_HEADER.to_vec();
    header.push("observations_pass");
    out.write(out_dir, "sweep.csv", &csv_bytes(&header, &rows)?)?;

    // RWG at the top level against eta, one line per treatment and k pair
    let top = params.level_max;
    let xs: Vec<f64> = grid.eta.iter().map(|&e| to_f64(e)).collect();
    let mut series: Vec<(String, Vec<f64>)> = Vec::new();
    let per_eta = grid.k_linear.len() * grid.k_quad.len() * treatments.len();
    for j in 0..per_eta {
        let first = &profiles[j];
        let mut name = first.treatment.label().to_string();
        if grid.k_linear.len() * grid.k_quad.len() > 1 {
            let _ = write!(
                name,
                " k=({}, {})",
                to_f64(first.recip.k_linear),
                to_f64(first.recip.k_quad)
            );
        }
        let ys = (0..grid.eta.len())
            .map(|i| to_f64(profiles[i * per_eta + j].relative_wage_gap(top)))
            .collect();
        series.push((name, ys));
    }
    let chart = svg::line_chart(
        &format!("Relative wage gap at x = {top} by reciprocity sensitivity"),
        "eta",
        "RWG",
        &xs,
        &series,
    );
    out.write(out_dir, "sweep.svg", chart.as_bytes())?;
    out.write(out_dir, "sweep_report.txt", text.as_bytes())?;
    out.report = text;
    Ok(out)
}

/// Per-treatment seed and session offsets follow the canonical treatment
/// order, so selecting a subset does not change any treatment's draws.
fn treatment_index(t: TreatmentSpec) -> u64 {
    TreatmentSpec::ALL
        .iter()
        .position(|&a| a == t)
        .expect("known treatment") as u64
}

pub fn simulate_table(config: &RunConfig) -> anyhow::Result<ObservationTable> {
    config.validate()?;
    let base = config.population_spec();
    let mut records = Vec::new();
    for t in config.treatment_specs()? {
        let i = treatment_index(t);
        let mut spec = base.clone();
        spec.seed = base.seed.wrapping_add(i);
        let population = draw_population(&spec)?;
        let options = SimOptions {
            tremble: config.population.tremble,
            session: i as u32 + 1,
        };
        let table = run_treatment_with(&population, t, &config.game, spec.seed, &options)
            .with_context(|| format!("simulating {t}"))?;
        records.extend(table.records);
    }
    Ok(ObservationTable { records })
}

pub fn cmd_simulate(config: &RunConfig, out_dir: &Path) -> anyhow::Result<CommandOutput> {
    let table = simulate_table(config)?;
    let mut out = CommandOutput::default();
    let mut text = String::new();
    let levels = config.game.level_max as usize + 1;
    for t in config.treatment_specs()? {
        let rows = table.records.iter().filter(|r| r.treatment == t).count();
        let _ = writeln!(
            text,
            "{t}: {} pairs, {rows} worker-level rows",
            rows / levels
        );
    }
    out.write(out_dir, "simulated.csv", table.to_csv_string()?.as_bytes())?;
    out.report = text;
    Ok(out)
}

fn load(config: &RunConfig, input: &Path) -> anyhow::Result<Ingested> {
    let file = fs::File::open(input).with_context(|| format!("opening {}", input.display()))?;
    Ok(match &config.ingest {
        Some(mapping) => ingest(file, mapping, &config.game)?,
        None => ObservationTable::read_csv(file, &config.game)?,
    })
}

pub fn cmd_ingest_check(config: &RunConfig, input: &Path) -> anyhow::Result<CommandOutput> {
    config.validate()?;
    let ingested = load(config, input)?;
    let mut text = format!(
        "{}: {} records, {} violations\n",
        input.display(),
        ingested.table.len(),
        ingested.violations.len()
    );
    for v in &ingested.violations {
        let _ = writeln!(text, "  line {}: {}", v.line, v.message);
    }
    Ok(CommandOutput {
        report: text,
        files: Vec::new(),
    })
}

fn present(table: &ObservationTable) -> Vec<TreatmentSpec> {
    let mut out: Vec<TreatmentSpec> = Vec::new();
    for r in &table.records {
        if !out.contains(&r.treatment) {
            out.push(r.treatment);
        }
    }
    out
}

fn regression_block(text: &mut String, label: &str, fit: &MixedFit, d: usize) {
    let _ = writeln!(text, "{label}");
    let p = fit.p_values();
    for (i, name) in fit.names.iter().enumerate() {
        let _ = writeln!(
            text,
            "  {:<10} {:>10}{:<3}",
            name,
            dec(fit.beta[i], d + 1),
            stars(p[i])
        );
        let _ = writeln!(
            text,
            "  {:<10} {:>10}",
            "",
            format!("({})", dec(fit.se[i], d + 1))
        );
    }
    for w in &fit.wald {
        let _ = writeln!(
            text,
            "  chi2 test {:<8} {}{} (df {})",
            w.label,
            dec(w.chi2, d),
            stars(w.p_value),
            w.df
        );
    }
    let _ = writeln!(
        text,
        "  observations {}, subjects {}, var(subject) {}, var(residual) {}, converged {}",
        fit.n_obs,
        fit.n_groups,
        dec(fit.sigma_u2, d + 2),
        dec(fit.sigma_e2, d + 2),
        fit.converged
    );
}

pub struct Analysis {
    pub summary: Vec<SummaryRow>,
    pub models: Vec<(Family, MixedOutcome, anyhow::Result<MixedFit>)>,
    pub ols: Vec<OlsCell>,
}

pub fn cmd_analyze(
    config: &RunConfig,
    input: &Path,
    out_dir: &Path,
) -> anyhow::Result<(CommandOutput, Analysis)> {
    config.validate()?;
    let params = &config.game;
    let d = config.display_decimals;
    let ingested = load(config, input)?;
    if !ingested.violations.is_empty() {
        let mut msg = format!("{} violates the observation schema:", input.display());
        for v in ingested.violations.iter().take(25) {
            let _ = write!(msg, "\n  line {}: {}", v.line, v.message);
        }
        if ingested.violations.len() > 25 {
            let _ = write!(msg, "\n  ... {} more", ingested.violations.len() - 25);
        }
        bail!(msg);
    }
    let table = ingested.table;
    if table.is_empty() {
        bail!("{} contains no observations", input.display());
    }
    let mut out = CommandOutput::default();
    let mut text = String::new();

    let summary = summary_table(&table, params)?;
    let _ = writeln!(text, "Summary by treatment and training level");
    let _ = writeln!(
        text,
        "  {:<8} {:>2} {:>4} {:>6} {:>9} {:>7} {:>7} {:>7} {:>7} {:>8}",
        "", "x", "n", "BT", "sponsored", "effort", "sd", "RWG", "sd", "p(RWG=0)"
    );
    let mut rows = Vec::new();
    for r in &summary {
        let _ = writeln!(
            text,
            "  {:<8} {:>2} {:>4} {:>6} {:>9} {:>7} {:>7} {:>7} {:>7} {:>8}",
            r.treatment.label(),
            r.x,
            r.n,
            r.break_even
                .map(|b| dec(b, d))
                .unwrap_or_else(|| "NA".into()),
            r.sponsored_share
                .map(|s| dec(s, d))
                .unwrap_or_else(|| "-".into()),
            dec(r.effort_mean, d),
            dec(r.effort_sd, d),
            dec(r.rwg_mean, d),
            dec(r.rwg_sd, d),
            format!("{}{}", dec(r.signrank_p, 3), stars(r.signrank_p)),
        );
        rows.push(vec![
            r.treatment.label().to_string(),
            r.x.to_string(),
            r.n.to_string(),
            opt_num(r.break_even),
            opt_num(r.sponsored_share),
            num(r.effort_mean),
            num(r.effort_sd),
            num(r.rwg_mean),
            num(r.rwg_sd),
            num(r.signrank_p),
        ]);
    }
    out.write(
        out_dir,
        "summary.csv",
        &csv_bytes(
            &[
                "treatment",
                "x",
                "n",
                "break_even",
                "sponsored_share",
                "effort_mean",
                "effort_sd",
                "rwg_mean",
                "rwg_sd",
                "signrank_p",
            ],
            &rows,
        )?,
    )?;

    let _ = writeln!(
        text,
        "\nMultilevel regressions: random intercept per subject, maximum likelihood via EM.\n\
         Variance components are ML estimates and run low in small samples.\n\
         References: X0 and the random-training treatment."
    );
    let treatments = present(&table);
    let mut rows = Vec::new();
    let mut models = Vec::new();
    for family in [Family::Positive, Family::Negative] {
        if !family_treatments(family)
            .iter()
            .all(|t| treatments.contains(t))
        {
            continue;
        }
        for outcome in [MixedOutcome::Effort, MixedOutcome::Rwg] {
            let outcome_label = match outcome {
                MixedOutcome::Effort => "effort",
                MixedOutcome::Rwg => "rwg",
            };
            let label = format!("{} / {outcome_label}", family.label());
            let fit = mixed_model_fit(&table, params, outcome, family).map_err(anyhow::Error::from);
            match &fit {
                Ok(fit) => {
                    regression_block(&mut text, &label, fit, d);
                    let p = fit.p_values();
                    for (i, name) in fit.names.iter().enumerate() {
                        rows.push(vec![
                            family.label().to_string(),
                            outcome_label.to_string(),
                            name.clone(),
                            num(fit.beta[i]),
                            num(fit.se[i]),
                            num(fit.beta[i] / fit.se[i]),
                            String::new(),
                            num(p[i]),
                        ]);
                    }
                    for w in &fit.wald {
                        rows.push(vec![
                            family.label().to_string(),
                            outcome_label.to_string(),
                            format!("chi2 {}", w.label),
                            String::new(),
                            String::new(),
                            num(w.chi2),
                            w.df.to_string(),
                            num(w.p_value),
                        ]);
                    }
                    for (name, value) in [
                        ("var_subject", fit.sigma_u2),
                        ("var_residual", fit.sigma_e2),
                        ("log_likelihood", fit.log_likelihood),
                        ("observations", fit.n_obs as f64),
                        ("subjects", fit.n_groups as f64),
                    ] {
                        rows.push(vec![
                            family.label().to_string(),
                            outcome_label.to_string(),
                            name.to_string(),
                            num(value),
                            String::new(),
                            String::new(),
                            String::new(),
                            String::new(),
                        ]);
                    }
                }
                Err(e) => {
                    let _ = writeln!(text, "{label}\n  not estimable: {e}");
                }
            }
            models.push((family, outcome, fit));
        }
    }
    if models.is_empty() {
        let _ = writeln!(text, "  (needs both treatments of a family in the table)");
    }
    out.write(
        out_dir,
        "regressions.csv",
        &csv_bytes(
            &[
                "family",
                "outcome",
                "term",
                "estimate",
                "std_error",
                "statistic",
                "df",
                "p_value",
            ],
            &rows,
        )?,
    )?;

    let _ = writeln!(
        text,
        "\nOLS of RWG on effort by treatment and level (slope, s.e.)"
    );
    let mut rows = Vec::new();
    let ols = ols_by_level(&table, params)?;
    for cell in &ols {
        let shown = match cell.fit {
            Some(f) => format!(
                "{}{} ({})",
                dec(f.slope, 3),
                stars(slope_p(f.slope, f.se_slope)),
                dec(f.se_slope, 3)
            ),
            None => "not estimable".into(),
        };
        let _ = writeln!(
            text,
            "  {:<8} X{} n={:<4} {shown}",
            cell.treatment.label(),
            cell.x,
            cell.n
        );
        rows.push(vec![
            cell.treatment.label().to_string(),
            cell.x.to_string(),
            cell.n.to_string(),
            opt_num(cell.fit.map(|f| f.slope)),
            opt_num(cell.fit.map(|f| f.se_slope)),
            cell.fit.is_some().to_string(),
        ]);
    }
    out.write(
        out_dir,
        "ols.csv",
        &csv_bytes(
            &["treatment", "x", "n", "slope", "std_error", "estimable"],
            &rows,
        )?,
    )?;

    let shares = pattern_shares(&table, params)?;
    let _ = writeln!(text, "\nEffort patterns across training levels (shares)");
    let mut rows = Vec::new();
    for s in &shares {
        let parts: Vec<String> = s
            .shares
            .iter()
            .map(|(c, v)| format!("{} {}", c.label(), dec(*v, d)))
            .collect();
        let _ = writeln!(
            text,
            "  {:<8} n={:<4} {}",
            s.treatment.label(),
            s.n,
            parts.join(", ")
        );
        for (c, v) in &s.shares {
            rows.push(vec![
                s.treatment.label().to_string(),
                c.label().to_string(),
                s.n.to_string(),
                num(*v),
            ]);
        }
    }
    out.write(
        out_dir,
        "patterns.csv",
        &csv_bytes(&["treatment", "category", "n", "share"], &rows)?,
    )?;
    let chart = svg::bar_chart(
        "Effort patterns by treatment",
        "share of workers",
        &PatternCategory::ALL
            .iter()
            .map(|c| c.label().to_string())
            .collect::<Vec<_>>(),
        &shares
            .iter()
            .map(|s| s.treatment.label().to_string())
            .collect::<Vec<_>>(),
        &shares
            .iter()
            .map(|s| s.shares.iter().map(|(_, v)| *v).collect())
            .collect::<Vec<_>>(),
    );
    out.write(out_dir, "patterns.svg", chart.as_bytes())?;

    let _ = writeln!(
        text,
        "\nEmployer expected profit by level under three offer policies"
    );
    let mut rows = Vec::new();
    for r in profit_table(&table, params)? {
        let _ = writeln!(
            text,
            "  {:<8} X{} observed {:>8} market {:>8} solver {:>8}",
            r.treatment.label(),
            r.x,
            r.as_observed
                .map(|v| dec(v, d))
                .unwrap_or_else(|| "-".into()),
            dec(r.market_wage, d),
            dec(r.solver_wage, d)
        );
        rows.push(vec![
            r.treatment.label().to_string(),
            r.x.to_string(),
            opt_num(r.as_observed),
            num(r.market_wage),
            num(r.solver_wage),
        ]);
    }
    out.write(
        out_dir,
        "profits.csv",
        &csv_bytes(
            &[
                "treatment",
                "x",
                "as_observed",
                "market_wage",
                "solver_wage",
            ],
            &rows,
        )?,
    )?;
    out.write(out_dir, "analysis_report.txt", text.as_bytes())?;
    out.report = text;
    Ok((
        out,
        Analysis {
            summary,
            models,
            ols,
        },
    ))
}

fn slope_p(slope: f64, se: f64) -> f64 {
    if se > 0.0 {
        // large-sample normal reference for the star annotation
        let z = (slope / se).abs();
        trainrecip_core::stats::two_sided_normal_p(z)
    } else {
        f64::NAN
    }
}
