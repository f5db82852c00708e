//! Adherence of simulated answers to human reference answers.
//!
//! A (respondent, question) pair matches when the simulated option equals
//! the human option, case-insensitively. Unparseable answers count toward
//! the total and never match. Percentages are rounded half-up to one
//! decimal.

mod human;
mod report;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::survey_runner::SimulatedResponse;

pub use human::{load_human_csv, parse_human_csv, CsvOptions, HumanResponseSet, RESPONDENT_COLUMN};
pub use report::{render_report, AdherenceReport, Aggregation, ReportFormat, ReportRow};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("malformed CSV at line {line}: {message}")]
    MalformedCsv { line: u64, message: String },
    #[error("missing column {0:?}")]
    MissingColumn(String),
    #[error("role {0} has no match in the role map or simulated responses")]
    UnmatchedRole(String),
    #[error("no human answer for respondent {respondent}, question {question}")]
    MissingHumanAnswer {
        respondent: String,
        question: String,
    },
    #[error("invalid role map: {0}")]
    InvalidMap(String),
    #[error("invalid report: {0}")]
    InvalidReport(String),
    #[error("{0}")]
    Io(String),
}

/// role id → respondent id; injective.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RoleMatchMap {
    pub pairs: BTreeMap<String, String>,
}

impl RoleMatchMap {
    pub fn new(pairs: BTreeMap<String, String>) -> Result<Self, EvalError> {
        let map = Self { pairs };
        map.validate()?;
        Ok(map)
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        let mut seen = BTreeSet::new();
        for (role, respondent) in &self.pairs {
            if !seen.insert(respondent) {
                return Err(EvalError::InvalidMap(format!(
                    "respondent {respondent} is mapped from more than one role (including {role})"
                )));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, EvalError> {
        let pairs = serde_json::from_str(text).map_err(|e| EvalError::InvalidMap(e.to_string()))?;
        Self::new(pairs)
    }

    pub fn load(path: &Path) -> Result<Self, EvalError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| EvalError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Tally {
    pub matched: u64,
    pub total: u64,
}

impl Tally {
    fn add(&mut self, matched: bool) {
        self.total += 1;
        self.matched += u64::from(matched);
    }

    pub fn pct(&self) -> f64 {
        pct_round1(self.matched, self.total)
    }
}

/// `100 * matched / total` rounded half-up to one decimal, computed in
/// integers; 0 when `total` is 0.
pub fn pct_round1(matched: u64, total: u64) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let tenths = (2000 * matched as u128 + total as u128) / (2 * total as u128);
    tenths as f64 / 10.0
}

/// Half-up rounding to one decimal for values that are not exact ratios.
pub fn round1(value: f64) -> f64 {
    ((value * 10.0) + 0.5 + 1e-9).floor() / 10.0
}

/// Per-pair outcomes grouped every way the report needs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Tallies {
    pub overall: Tally,
    pub unparseable: u64,
    pub per_question: BTreeMap<String, Tally>,
    pub per_topic: BTreeMap<String, Tally>,
    pub per_respondent: BTreeMap<String, Tally>,
}

pub fn tally(
    sim: &[SimulatedResponse],
    human: &HumanResponseSet,
    map: &RoleMatchMap,
) -> Result<Tallies, EvalError> {
    map.validate()?;
    let sim_roles: BTreeSet<&str> = sim.iter().map(|r| r.role_id.as_str()).collect();
    if let Some(role) = map.pairs.keys().find(|r| !sim_roles.contains(r.as_str())) {
        return Err(EvalError::UnmatchedRole(role.clone()));
    }
    let mut out = Tallies::default();
    for response in sim {
        let respondent = map
            .pairs
            .get(&response.role_id)
            .ok_or_else(|| EvalError::UnmatchedRole(response.role_id.clone()))?;
        let missing = || EvalError::MissingHumanAnswer {
            respondent: respondent.clone(),
            question: response.question_id.clone(),
        };
        let truth = human
            .answer(respondent, &response.question_id)
            .ok_or_else(missing)?;
        let topic = human
            .question_meta
            .get(&response.question_id)
            .ok_or_else(missing)?;
        let matched = response
            .parsed_option
            .label()
            .is_some_and(|label| label.to_lowercase() == truth.to_lowercase());
        out.overall.add(matched);
        out.unparseable += u64::from(response.parsed_option.label().is_none());
        out.per_question
            .entry(response.question_id.clone())
            .or_default()
            .add(matched);
        out.per_topic.entry(topic.clone()).or_default().add(matched);
        out.per_respondent
            .entry(respondent.clone())
            .or_default()
            .add(matched);
    }
    Ok(out)
}

/// Scores `sim` against `human` and labels the resulting table row.
pub fn adherence(
    sim: &[SimulatedResponse],
    human: &HumanResponseSet,
    map: &RoleMatchMap,
    label: &str,
) -> Result<AdherenceReport, EvalError> {
    let t = tally(sim, human, map)?;
    let macro_questions = if t.per_question.is_empty() {
        0.0
    } else {
        let sum: f64 = t
            .per_question
            .values()
            .map(|q| 100.0 * q.matched as f64 / q.total as f64)
            .sum();
        round1(sum / t.per_question.len() as f64)
    };
    let pcts = |m: &BTreeMap<String, Tally>| m.iter().map(|(k, v)| (k.clone(), v.pct())).collect();
    Ok(AdherenceReport {
        rows: vec![ReportRow {
            label: label.to_string(),
            overall_pct: t.overall.pct(),
            n_matched: t.overall.matched,
            n_total: t.overall.total,
            macro_questions_pct: macro_questions,
            n_unparseable: t.unparseable,
            unparse_rate: pct_round1(t.unparseable, t.overall.total),
        }],
        per_question: pcts(&t.per_question),
        per_topic: pcts(&t.per_topic),
        per_respondent: pcts(&t.per_respondent),
        headline: Aggregation::Micro,
    })
}
