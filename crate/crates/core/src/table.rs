//! Long-format observation table: one row per worker and training level.
//!
//! CSV schema (UTF-8, comma-delimited, header row, `.` decimal point, empty
//! cell for a missing value), columns in this order:
//!
//! | column            | type                                  | required |
//! |-------------------|---------------------------------------|----------|
//! | `treatment`       | `ENDO`, `EXO`, `ENDO_NEG`, `EXO_NEG`  | yes      |
//! | `session`         | unsigned integer                      |          |
//! | `pair_id`         | unsigned integer                      |          |
//! | `subject_id`      | text                                  | yes      |
//! | `role`            | `worker` or `employer`                |          |
//! | `x`               | training level `0..=level_max`        | yes      |
//! | `maw`             | integer points                        | yes      |
//! | `effort`          | integer `0..=effort_max`              | yes      |
//! | `employer_offer`  | integer points                        |          |
//! | `chosen_x`        | `true` / `false`                      |          |
//! | `stay`            | `true` / `false`                      |          |
//! | `realized_benefit`| `High` / `Low`                        |          |
//! | `gender`          | text                                  |          |
//! | `svo`             | text (`prosocial`, `individualistic`) |          |
//! | `pos_recip`       | real                                  |          |
//! | `neg_recip`       | real                                  |          |
//!
//! Files with other headers are read through a [`ColumnMapping`].

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{Benefit, Effort, GameParams, Level, TreatmentSpec, Wage};

pub const COLUMNS: [&str; 16] = [
    "treatment",
    "session",
    "pair_id",
    "subject_id",
    "role",
    "x",
    "maw",
    "effort",
    "employer_offer",
    "chosen_x",
    "stay",
    "realized_benefit",
    "gender",
    "svo",
    "pos_recip",
    "neg_recip",
];

const MANDATORY: [&str; 5] = ["treatment", "subject_id", "x", "maw", "effort"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Employer,
    Worker,
}

impl Role {
    pub fn label(self) -> &'static str {
        match self {
            Role::Employer => "employer",
            Role::Worker => "worker",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationRecord {
    pub treatment: TreatmentSpec,
    pub session: Option<u32>,
    pub pair_id: Option<u32>,
    pub subject_id: String,
    pub role: Role,
    pub x: Level,
    pub maw: Wage,
    pub effort: Effort,
    pub employer_offer: Option<Wage>,
    pub chosen_x: Option<bool>,
    pub stay: Option<bool>,
    pub realized_benefit: Option<Benefit>,
    pub gender: Option<String>,
    pub svo: Option<String>,
    pub pos_recip: Option<f64>,
    pub neg_recip: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ObservationTable {
    pub records: Vec<ObservationRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    /// 1-based line in the source file (the header is line 1).
    pub line: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub table: ObservationTable,
    pub violations: Vec<Violation>,
}

/// One worker's complete contingent plan, assembled from her rows.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanView {
    pub treatment: TreatmentSpec,
    pub subject_id: String,
    pub maw: Vec<Wage>,
    pub effort: Vec<Effort>,
    pub offer: Vec<Option<Wage>>,
    pub chosen: Option<Level>,
}

/// Maps canonical column names to the headers of a foreign file. Unset
/// entries default to the canonical name.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColumnMapping {
    pub columns: BTreeMap<String, String>,
    /// Recodes treatment cell values, e.g. `"1" = "ENDO"`.
    pub treatment_values: BTreeMap<String, String>,
}

fn opt<T: ToString>(value: &Option<T>) -> String {
    value.as_ref().map(ToString::to_string).unwrap_or_default()
}

impl ObservationRecord {
    /// A worker row with every optional column empty.
    pub fn worker(
        treatment: TreatmentSpec,
        subject_id: impl Into<String>,
        x: Level,
        maw: Wage,
        effort: Effort,
    ) -> Self {
        ObservationRecord {
            treatment,
            session: None,
            pair_id: None,
            subject_id: subject_id.into(),
            role: Role::Worker,
            x,
            maw,
            effort,
            employer_offer: None,
            chosen_x: None,
            stay: None,
            realized_benefit: None,
            gender: None,
            svo: None,
            pos_recip: None,
            neg_recip: None,
        }
    }

    fn cells(&self) -> [String; 16] {
        [
            self.treatment.label().to_string(),
            opt(&self.session),
            opt(&self.pair_id),
            self.subject_id.clone(),
            self.role.label().to_string(),
            self.x.to_string(),
            self.maw.to_string(),
            self.effort.to_string(),
            opt(&self.employer_offer),
            opt(&self.chosen_x),
            opt(&self.stay),
            self.realized_benefit
                .map(|b| b.label().to_string())
                .unwrap_or_default(),
            opt(&self.gender),
            opt(&self.svo),
            opt(&self.pos_recip),
            opt(&self.neg_recip),
        ]
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::data(e.to_string())
}

impl ObservationTable {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        out.write_record(COLUMNS).map_err(csv_error)?;
        for record in &self.records {
            out.write_record(record.cells()).map_err(csv_error)?;
        }
        out.flush().map_err(|e| Error::data(e.to_string()))
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::data(e.to_string()))
    }

    /// Reads a file in the canonical schema.
    pub fn read_csv<R: Read>(reader: R, params: &GameParams) -> Result<Ingested> {
        ingest(reader, &ColumnMapping::default(), params)
    }

    /// Invariant violations of an in-memory table; lines count as if the
    /// table were written in canonical form.
    pub fn validate(&self, params: &GameParams) -> Vec<Violation> {
        let lines: Vec<u64> = (0..self.records.len() as u64).map(|i| i + 2).collect();
        let mut violations = Vec::new();
        for (record, &line) in self.records.iter().zip(&lines) {
            violations.extend(value_violations(record, params, line));
        }
        violations.extend(completeness_violations(&self.records, &lines, params));
        violations.sort_by_key(|v| v.line);
        violations
    }

    /// Worker plans in order of first appearance; errors if any worker lacks
    /// a row for some level.
    pub fn plans(&self, params: &GameParams) -> Result<Vec<PlanView>> {
        let n = params.level_max as usize + 1;
        let mut index: HashMap<(TreatmentSpec, &str), usize> = HashMap::new();
        let mut plans: Vec<(PlanView, Vec<bool>)> = Vec::new();
        for r in self.records.iter().filter(|r| r.role == Role::Worker) {
            params
                .check_level(r.x)
                .map_err(|e| Error::data(format!("subject {}: {e}", r.subject_id)))?;
            let slot = *index
                .entry((r.treatment, r.subject_id.as_str()))
                .or_insert_with(|| {
                    plans.push((
                        PlanView {
                            treatment: r.treatment,
                            subject_id: r.subject_id.clone(),
                            maw: vec![0; n],
                            effort: vec![0; n],
                            offer: vec![None; n],
                            chosen: None,
                        },
                        vec![false; n],
                    ));
                    plans.len() - 1
                });
            let (plan, seen) = &mut plans[slot];
            let x = r.x as usize;
            if seen[x] {
                return Err(Error::data(format!(
                    "subject {} in {} has more than one row at x={}",
                    r.subject_id, r.treatment, r.x
                )));
            }
            seen[x] = true;
            plan.maw[x] = r.maw;
            plan.effort[x] = r.effort;
            plan.offer[x] = r.employer_offer;
            if r.chosen_x == Some(true) {
                plan.chosen = Some(r.x);
            }
        }
        plans
            .into_iter()
            .map(|(plan, seen)| {
                if let Some(x) = seen.iter().position(|s| !s) {
                    return Err(Error::data(format!(
                        "subject {} in {} has no row for x={x}",
                        plan.subject_id, plan.treatment
                    )));
                }
                Ok(plan)
            })
            .collect()
    }
}

fn value_violations(r: &ObservationRecord, params: &GameParams, line: u64) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |message: String| out.push(Violation { line, message });
    if r.x > params.level_max {
        push(format!("x={} outside 0..={}", r.x, params.level_max));
    }
    if r.effort > params.effort_max {
        push(format!(
            "effort={} outside 0..={}",
            r.effort, params.effort_max
        ));
    }
    if r.maw < 0 {
        push(format!("negative maw {}", r.maw));
    }
    if r.subject_id.is_empty() {
        push("empty subject_id".to_string());
    }
    out
}

fn completeness_violations(
    records: &[ObservationRecord],
    lines: &[u64],
    params: &GameParams,
) -> Vec<Violation> {
    let n = params.level_max as usize + 1;
    let mut groups: BTreeMap<(TreatmentSpec, &str), Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        if r.role == Role::Worker {
            groups
                .entry((r.treatment, &r.subject_id))
                .or_default()
                .push(i);
        }
    }
    let mut out = Vec::new();
    for ((treatment, subject), rows) in groups {
        let first_line = lines[rows[0]];
        let mut count = vec![0usize; n];
        for &i in &rows {
            if let Some(c) = count.get_mut(records[i].x as usize) {
                *c += 1;
            }
        }
        if rows.len() != n || count.iter().any(|&c| c != 1) {
            let cited: Vec<String> = rows.iter().map(|&i| lines[i].to_string()).collect();
            out.push(Violation {
                line: first_line,
                message: format!(
                    "strategy-method completeness: subject {subject} in {treatment} has {} rows \
                     (lines {}); expected exactly one per level 0..={}",
                    rows.len(),
                    cited.join(", "),
                    params.level_max
                ),
            });
            continue;
        }
        let flagged: Vec<&usize> = rows
            .iter()
            .filter(|&&i| records[i].chosen_x.is_some())
            .collect();
        if !flagged.is_empty() {
            let chosen = rows
                .iter()
                .filter(|&&i| records[i].chosen_x == Some(true))
                .count();
            if flagged.len() != rows.len() || chosen != 1 {
                out.push(Violation {
                    line: first_line,
                    message: format!(
                        "subject {subject} in {treatment}: chosen_x must be set on every row \
                         and true on exactly one (found {chosen})"
                    ),
                });
            }
        }
    }
    out
}

fn parse_bool(text: &str) -> std::result::Result<bool, String> {
    match text.trim().to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(format!("not a boolean: {other:?}")),
    }
}

fn parse_integer(text: &str) -> std::result::Result<i64, String> {
    let t = text.trim();
    if let Ok(v) = t.parse::<i64>() {
        return Ok(v);
    }
    match t.parse::<f64>() {
        Ok(v) if v.fract() == 0.0 && v.abs() < 1e15 => Ok(v as i64),
        _ => Err(format!("not an integer: {t:?}")),
    }
}

/// Reads a CSV through `mapping`. Missing mandatory columns are an error;
/// rows that cannot be parsed or break the table invariants are reported
/// with their line numbers. Unparseable rows are left out of the table.
pub fn ingest<R: Read>(
    reader: R,
    mapping: &ColumnMapping,
    params: &GameParams,
) -> Result<Ingested> {
    for key in mapping.columns.keys() {
        if !COLUMNS.contains(&key.as_str()) {
            return Err(Error::config(format!(
                "column mapping names unknown field {key:?}"
            )));
        }
    }
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(false)
        .from_reader(reader);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    let mut position: HashMap<&str, usize> = HashMap::new();
    let mut missing = Vec::new();
    for field in COLUMNS {
        let source = mapping
            .columns
            .get(field)
            .map(String::as_str)
            .unwrap_or(field);
        match headers.iter().position(|h| h.trim() == source) {
            Some(i) => {
                position.insert(field, i);
            }
            None if MANDATORY.contains(&field) => missing.push(field),
            None => {}
        }
    }
    if !missing.is_empty() {
        return Err(Error::data(format!(
            "missing mandatory column(s): {}",
            missing.join(", ")
        )));
    }

    let mut records = Vec::new();
    let mut lines = Vec::new();
    let mut violations = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(csv_error)?;
        let line = row.position().map_or(0, |p| p.line());
        let cell = |field: &str| -> Option<&str> {
            position
                .get(field)
                .and_then(|&i| row.get(i))
                .filter(|s| !s.trim().is_empty())
        };
        match parse_row(&cell, mapping) {
            Ok(record) => {
                violations.extend(value_violations(&record, params, line));
                records.push(record);
                lines.push(line);
            }
            Err(message) => violations.push(Violation { line, message }),
        }
    }
    violations.extend(completeness_violations(&records, &lines, params));
    violations.sort_by_key(|v| v.line);
    Ok(Ingested {
        table: ObservationTable { records },
        violations,
    })
}

fn parse_row<'a>(
    cell: &dyn Fn(&str) -> Option<&'a str>,
    mapping: &ColumnMapping,
) -> std::result::Result<ObservationRecord, String> {
    let required = |field: &str| cell(field).ok_or_else(|| format!("empty {field}"));
    let optional_int = |field: &str| -> std::result::Result<Option<i64>, String> {
        cell(field)
            .map(|t| parse_integer(t).map_err(|e| format!("{field}: {e}")))
            .transpose()
    };
    let optional_real = |field: &str| -> std::result::Result<Option<f64>, String> {
        cell(field)
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| format!("{field}: not a number: {t:?}"))
            })
            .transpose()
    };
    let optional_bool = |field: &str| -> std::result::Result<Option<bool>, String> {
        cell(field)
            .map(|t| parse_bool(t).map_err(|e| format!("{field}: {e}")))
            .transpose()
    };
    let nonneg = |field: &str, v: i64| -> std::result::Result<u32, String> {
        u32::try_from(v).map_err(|_| format!("{field}: {v} is not a nonnegative integer"))
    };

    let raw_treatment = required("treatment")?.trim();
    let treatment_text = mapping
        .treatment_values
        .get(raw_treatment)
        .map(String::as_str)
        .unwrap_or(raw_treatment);
    let treatment = treatment_text
        .parse::<TreatmentSpec>()
        .map_err(|e| e.to_string())?;
    let role = match cell("role").map(|r| r.trim().to_ascii_lowercase()) {
        None => Role::Worker,
        Some(r) if r == "worker" => Role::Worker,
        Some(r) if r == "employer" => Role::Employer,
        Some(r) => return Err(format!("role: unknown value {r:?}")),
    };
    let x = parse_integer(required("x")?).map_err(|e| format!("x: {e}"))?;
    let effort = parse_integer(required("effort")?).map_err(|e| format!("effort: {e}"))?;
    Ok(ObservationRecord {
        treatment,
        session: optional_int("session")?
            .map(|v| nonneg("session", v))
            .transpose()?,
        pair_id: optional_int("pair_id")?
            .map(|v| nonneg("pair_id", v))
            .transpose()?,
        subject_id: required("subject_id")?.trim().to_string(),
        role,
        x: nonneg("x", x)?,
        maw: parse_integer(required("maw")?).map_err(|e| format!("maw: {e}"))?,
        effort: nonneg("effort", effort)?,
        employer_offer: optional_int("employer_offer")?,
        chosen_x: optional_bool("chosen_x")?,
        stay: optional_bool("stay")?,
        realized_benefit: cell("realized_benefit")
            .map(|t| t.parse::<Benefit>().map_err(|e| e.to_string()))
            .transpose()?,
        gender: cell("gender").map(|t| t.trim().to_string()),
        svo: cell("svo").map(|t| t.trim().to_string()),
        pos_recip: optional_real("pos_recip")?,
        neg_recip: optional_real("neg_recip")?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g() -> GameParams {
        GameParams::default()
    }

    fn worker(subject: &str, x: u32) -> ObservationRecord {
        ObservationRecord {
            treatment: TreatmentSpec::ENDO,
            session: Some(1),
            pair_id: Some(0),
            subject_id: subject.to_string(),
            role: Role::Worker,
            x,
            maw: 50 + 100 * x as i64,
            effort: x,
            employer_offer: None,
            chosen_x: None,
            stay: None,
            realized_benefit: None,
            gender: None,
            svo: None,
            pos_recip: Some(4.25),
            neg_recip: None,
        }
    }

    fn table(subjects: &[&str]) -> ObservationTable {
        ObservationTable {
            records: subjects
                .iter()
                .flat_map(|s| (0..5).map(move |x| worker(s, x)))
                .collect(),
        }
    }

    #[test]
    fn canonical_roundtrip() {
        let t = table(&["a", "b"]);
        let text = t.to_csv_string().unwrap();
        assert!(text.starts_with("treatment,session,pair_id,subject_id,role,x,maw"));
        let back = ObservationTable::read_csv(text.as_bytes(), &g()).unwrap();
        assert!(back.violations.is_empty(), "{:?}", back.violations);
        assert_eq!(back.table, t);
        assert_eq!(back.table.to_csv_string().unwrap(), text);
    }

    #[test]
    fn ten_row_file() {
        let text = table(&["a", "b"]).to_csv_string().unwrap();
        let ing = ObservationTable::read_csv(text.as_bytes(), &g()).unwrap();
        assert_eq!(ing.table.len(), 10);
    }

    #[test]
    fn missing_mandatory_column_is_named() {
        let text = "treatment,subject_id,x,effort\nENDO,a,0,1\n";
        let err = ObservationTable::read_csv(text.as_bytes(), &g()).unwrap_err();
        assert!(err.to_string().contains("maw"), "{err}");
    }

    #[test]
    fn six_rows_for_one_worker() {
        let mut t = table(&["a"]);
        t.records.push(worker("a", 2));
        let text = t.to_csv_string().unwrap();
        let ing = ObservationTable::read_csv(text.as_bytes(), &g()).unwrap();
        assert_eq!(ing.violations.len(), 1);
        let v = &ing.violations[0];
        assert!(
            v.message.contains("strategy-method completeness"),
            "{}",
            v.message
        );
        assert!(v.message.contains("6 rows"));
        assert_eq!(v.line, 2);
        assert_eq!(t.validate(&g()), ing.violations);
    }

    #[test]
    fn bad_cells_are_reported_with_lines() {
        let text = "treatment,subject_id,x,maw,effort\n\
                    ENDO,a,0,50,0\nENDO,a,1,abc,0\nENDO,a,2,250,13\nMIXED,a,3,350,0\n";
        let ing = ObservationTable::read_csv(text.as_bytes(), &g()).unwrap();
        let lines: Vec<u64> = ing.violations.iter().map(|v| v.line).collect();
        assert!(lines.contains(&3));
        assert!(lines.contains(&4));
        assert!(lines.contains(&5));
    }

    #[test]
    fn mapped_foreign_layout() {
        let text = "Treat,ID,Level,MinWage,Effort,Sex\n\
                    1,s1,0,60,2,F\n1,s1,1,150,2,F\n1,s1,2,250,3,F\n1,s1,3,340,3,F\n1,s1,4,430,5,F\n";
        let mut mapping = ColumnMapping::default();
        for (k, v) in [
            ("treatment", "Treat"),
            ("subject_id", "ID"),
            ("x", "Level"),
            ("maw", "MinWage"),
            ("effort", "Effort"),
            ("gender", "Sex"),
        ] {
            mapping.columns.insert(k.into(), v.into());
        }
        mapping.treatment_values.insert("1".into(), "ENDO".into());
        let ing = ingest(text.as_bytes(), &mapping, &g()).unwrap();
        assert!(ing.violations.is_empty(), "{:?}", ing.violations);
        assert_eq!(ing.table.len(), 5);
        assert_eq!(ing.table.records[4].maw, 430);
        assert_eq!(ing.table.records[0].gender.as_deref(), Some("F"));
        let plans = ing.table.plans(&g()).unwrap();
        assert_eq!(plans[0].effort, vec![2, 2, 3, 3, 5]);
    }

    #[test]
    fn chosen_flag_must_be_unique() {
        let mut t = table(&["a"]);
        for r in &mut t.records {
            r.chosen_x = Some(r.x >= 3);
        }
        let v = t.validate(&g());
        assert_eq!(v.len(), 1);
        assert!(v[0].message.contains("chosen_x"));
    }

    #[test]
    fn plans_need_every_level() {
        let mut t = table(&["a"]);
        t.records.remove(2);
        assert!(t.plans(&g()).is_err());
    }
}
