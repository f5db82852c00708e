use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::EvalError;

const TABLE_HEADER: [&str; 3] = ["Model", "Parameters", "Adherence On Questions(%)"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    /// Over all (respondent, question) pairs.
    #[default]
    Micro,
    /// Mean of per-question percentages.
    MacroQuestions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    /// "Model (parameters)", e.g. "Role Creation + llama 3.3 (70b)".
    pub label: String,
    pub overall_pct: f64,
    pub n_matched: u64,
    pub n_total: u64,
    pub macro_questions_pct: f64,
    pub n_unparseable: u64,
    pub unparse_rate: f64,
}

impl ReportRow {
    /// A row from raw counts; the macro figure defaults to the micro one.
    pub fn from_counts(label: &str, n_matched: u64, n_total: u64) -> Self {
        let overall_pct = super::pct_round1(n_matched, n_total);
        Self {
            label: label.to_string(),
            overall_pct,
            n_matched,
            n_total,
            macro_questions_pct: overall_pct,
            n_unparseable: 0,
            unparse_rate: 0.0,
        }
    }

    /// Splits a trailing parenthesized parameter count off the label.
    pub fn model_and_parameters(&self) -> (&str, &str) {
        let label = self.label.trim();
        if let Some(open) = label.rfind(" (") {
            if let Some(inner) = label[open + 2..].strip_suffix(')') {
                return (&label[..open], inner);
            }
        }
        (label, "-")
    }

    fn headline(&self, aggregation: Aggregation) -> f64 {
        match aggregation {
            Aggregation::Micro => self.overall_pct,
            Aggregation::MacroQuestions => self.macro_questions_pct,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdherenceReport {
    pub rows: Vec<ReportRow>,
    pub per_question: BTreeMap<String, f64>,
    pub per_topic: BTreeMap<String, f64>,
    pub per_respondent: BTreeMap<String, f64>,
    /// Which row figure the text table shows.
    #[serde(default)]
    pub headline: Aggregation,
}

impl AdherenceReport {
    pub fn validate(&self) -> Result<(), EvalError> {
        let bad = |m: String| EvalError::InvalidReport(m);
        for row in &self.rows {
            if row.n_matched > row.n_total {
                return Err(bad(format!("{}: n_matched exceeds n_total", row.label)));
            }
            if row.overall_pct != super::pct_round1(row.n_matched, row.n_total) {
                return Err(bad(format!(
                    "{}: overall_pct disagrees with counts",
                    row.label
                )));
            }
        }
        let in_range = |v: &f64| (0.0..=100.0).contains(v);
        let all = self
            .rows
            .iter()
            .flat_map(|r| [r.overall_pct, r.macro_questions_pct, r.unparse_rate])
            .chain(self.per_question.values().copied())
            .chain(self.per_topic.values().copied())
            .chain(self.per_respondent.values().copied());
        for v in all {
            if !in_range(&v) {
                return Err(bad(format!("percentage {v} outside [0, 100]")));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, EvalError> {
        let report: Self =
            serde_json::from_str(text).map_err(|e| EvalError::InvalidReport(e.to_string()))?;
        report.validate()?;
        Ok(report)
    }
}

fn render_section(out: &mut String, title: &str, key_header: &str, values: &BTreeMap<String, f64>) {
    if values.is_empty() {
        return;
    }
    let _ = write!(out, "\n{title}\n{key_header} | Adherence(%)\n");
    for (key, pct) in values {
        let _ = writeln!(out, "{key} | {pct:.1}");
    }
}

fn render_text(report: &AdherenceReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", TABLE_HEADER.join(" | "));
    for row in &report.rows {
        let (model, params) = row.model_and_parameters();
        let _ = writeln!(
            out,
            "{model} | {params} | {:.1}",
            row.headline(report.headline)
        );
    }
    if !report.rows.is_empty() {
        out.push('\n');
    }
    for row in &report.rows {
        let _ = writeln!(
            out,
            "{}: {} of {} pairs matched; micro {:.1}%, macro over questions {:.1}%, unparseable {:.1}%",
            row.label, row.n_matched, row.n_total, row.overall_pct, row.macro_questions_pct, row.unparse_rate
        );
    }
    render_section(&mut out, "Per question", "Question", &report.per_question);
    render_section(&mut out, "Per topic", "Topic", &report.per_topic);
    render_section(
        &mut out,
        "Per respondent",
        "Respondent",
        &report.per_respondent,
    );
    out
}

pub fn render_report(report: &AdherenceReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Text => render_text(report),
        ReportFormat::Json => {
            let mut out = serde_json::to_string_pretty(report).expect("report serializes");
            out.push('\n');
            out
        }
    }
}
