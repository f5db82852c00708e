use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::PollError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FewShotExample {
    pub question: String,
    pub answer: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveyQuestion {
    pub id: String,
    pub topic: String,
    pub prompt: String,
    pub options: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub few_shot: Vec<FewShotExample>,
}

impl SurveyQuestion {
    pub fn validate(&self) -> Result<(), PollError> {
        let bad = |msg: String| PollError::InvalidSurvey(format!("question {:?}: {msg}", self.id));
        if self.id.trim().is_empty() {
            return Err(PollError::InvalidSurvey("question with empty id".into()));
        }
        if self.prompt.trim().is_empty() {
            return Err(bad("empty prompt".into()));
        }
        if self.options.len() < 2 {
            return Err(bad("needs at least two options".into()));
        }
        let mut seen = HashSet::new();
        for label in &self.options {
            if label.trim().is_empty() || label.trim() != label {
                return Err(bad(format!("option label {label:?} is empty or padded")));
            }
            if label.contains('|') || label.contains('\n') {
                return Err(bad(format!(
                    "option label {label:?} contains '|' or a newline"
                )));
            }
            if !seen.insert(label.to_lowercase()) {
                return Err(bad(format!("duplicate option label {label:?}")));
            }
        }
        Ok(())
    }

    /// The survey's spelling of `label`, matched case-insensitively.
    pub fn canonical_option(&self, label: &str) -> Option<&str> {
        let label = label.trim();
        self.options
            .iter()
            .find(|o| o.to_lowercase() == label.to_lowercase())
            .map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Survey {
    pub id: String,
    pub title: String,
    pub questions: Vec<SurveyQuestion>,
}

impl Survey {
    pub fn validate(&self) -> Result<(), PollError> {
        if self.questions.is_empty() {
            return Err(PollError::InvalidSurvey("survey has no questions".into()));
        }
        let mut ids = HashSet::new();
        for q in &self.questions {
            q.validate()?;
            if !ids.insert(q.id.as_str()) {
                return Err(PollError::InvalidSurvey(format!(
                    "duplicate question id {:?}",
                    q.id
                )));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, PollError> {
        let survey: Survey =
            serde_json::from_str(text).map_err(|e| PollError::InvalidSurvey(e.to_string()))?;
        survey.validate()?;
        Ok(survey)
    }

    pub fn load(path: &Path) -> Result<Self, PollError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PollError::InvalidSurvey(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn question(&self, id: &str) -> Option<&SurveyQuestion> {
        self.questions.iter().find(|q| q.id == id)
    }
}
