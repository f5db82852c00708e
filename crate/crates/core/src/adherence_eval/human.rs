use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::survey_runner::Survey;

pub const RESPONDENT_COLUMN: &str = "respondent_id";

/// Human reference answers, keyed respondent → question → option label.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct HumanResponseSet {
    pub entries: BTreeMap<String, BTreeMap<String, String>>,
    /// question id → topic
    pub question_meta: BTreeMap<String, String>,
}

impl HumanResponseSet {
    pub fn answer(&self, respondent: &str, question: &str) -> Option<&str> {
        self.entries
            .get(respondent)?
            .get(question)
            .map(String::as_str)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CsvOptions {
    /// Skip columns that name no survey question instead of failing.
    pub ignore_extra: bool,
}

/// Parses the wide CSV layout: `respondent_id`, then one column per
/// question id whose cells hold option labels. Empty cells mean no answer.
/// Labels are matched to the survey's options case-insensitively and
/// stored in the survey's spelling.
pub fn parse_human_csv(
    text: &str,
    survey: &Survey,
    options: CsvOptions,
) -> Result<HumanResponseSet, EvalError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let malformed = |line: u64, message: String| EvalError::MalformedCsv { line, message };

    let headers = reader
        .headers()
        .map_err(|e| malformed(1, e.to_string()))?
        .clone();
    if headers.get(0) != Some(RESPONDENT_COLUMN) {
        return Err(EvalError::MissingColumn(RESPONDENT_COLUMN.into()));
    }

    let mut columns: Vec<Option<&crate::survey_runner::SurveyQuestion>> = vec![None];
    let mut seen = BTreeSet::new();
    let mut question_meta = BTreeMap::new();
    for name in headers.iter().skip(1) {
        if !seen.insert(name) {
            return Err(malformed(1, format!("duplicate column {name:?}")));
        }
        match survey.question(name) {
            Some(q) => {
                question_meta.insert(q.id.clone(), q.topic.clone());
                columns.push(Some(q));
            }
            None if options.ignore_extra => columns.push(None),
            None => return Err(malformed(1, format!("unknown question column {name:?}"))),
        }
    }

    let mut entries = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            malformed(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let respondent = record.get(0).unwrap_or("").to_string();
        if respondent.is_empty() {
            return Err(malformed(line, "empty respondent_id".into()));
        }
        let mut answers = BTreeMap::new();
        for (cell, column) in record.iter().zip(&columns).skip(1) {
            let Some(question) = column else { continue };
            if cell.is_empty() {
                continue;
            }
            let label = question.canonical_option(cell).ok_or_else(|| {
                malformed(
                    line,
                    format!(
                        "question {}: {cell:?} is not one of its options",
                        question.id
                    ),
                )
            })?;
            answers.insert(question.id.clone(), label.to_string());
        }
        if entries.insert(respondent.clone(), answers).is_some() {
            return Err(malformed(
                line,
                format!("duplicate respondent_id {respondent:?}"),
            ));
        }
    }
    Ok(HumanResponseSet {
        entries,
        question_meta,
    })
}

pub fn load_human_csv(
    path: &Path,
    survey: &Survey,
    options: CsvOptions,
) -> Result<HumanResponseSet, EvalError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| EvalError::Io(format!("{}: {e}", path.display())))?;
    parse_human_csv(&text, survey, options)
}
