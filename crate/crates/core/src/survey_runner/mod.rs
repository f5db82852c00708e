//! Poll execution: one fresh, independent completion per (role, question).

mod jsonl;
mod parse;
mod prompt;
mod survey;

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicUsize, Ordering};

use parking_lot::Mutex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embed_index::{IndexError, RetrievalHit, RoleIndex};
use crate::llm_gateway::{BackendConfig, GatewayError, LlmBackend};

pub use jsonl::{read_responses, render_jsonl, write_responses, ResponseJournal};
pub use parse::{parse_answer, ParsedAnswer};
pub use prompt::{
    assemble_prompt, system_prompt, user_prompt, ANSWER_INSTRUCTION, ROLE_PLAY_PREAMBLE,
};
pub use survey::{FewShotExample, Survey, SurveyQuestion};

const ERROR_TAG_PREFIX: &str = "<error:";

#[derive(Debug, Error)]
pub enum PollError {
    #[error("invalid survey: {0}")]
    InvalidSurvey(String),
    #[error("k must be at least 1")]
    InvalidK,
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error("backend unreachable for all {attempted} requests: {last}")]
    BackendUnreachable {
        attempted: usize,
        last: GatewayError,
    },
    #[error("responses file line {line}: {message}")]
    MalformedResponses { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PollMode {
    /// Every indexed role answers every question with its own narrative.
    #[default]
    PerRole,
    /// Each question retrieves its profile excerpt from the whole store.
    Retrieval,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExcerptPolicy {
    /// Narrative of the rank-1 hit.
    #[default]
    TopHit,
    /// Narratives of all k hits in rank order, blank-line separated.
    ConcatTopK,
}

#[derive(Debug, Clone)]
pub struct PollOptions {
    pub mode: PollMode,
    pub k: usize,
    pub excerpt: ExcerptPolicy,
    pub concurrency: usize,
    /// (role_id, question_id) pairs to leave out, e.g. already answered.
    pub skip: BTreeSet<(String, String)>,
}

impl Default for PollOptions {
    fn default() -> Self {
        Self {
            mode: PollMode::PerRole,
            k: 1,
            excerpt: ExcerptPolicy::TopHit,
            concurrency: crate::llm_gateway::DEFAULT_MAX_IN_FLIGHT,
            skip: BTreeSet::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedResponse {
    pub question_id: String,
    pub role_id: String,
    pub raw_text: String,
    pub parsed_option: ParsedAnswer,
    pub hits: Vec<RetrievalHit>,
    pub prompt_hash: String,
}

impl SimulatedResponse {
    pub fn key(&self) -> (String, String) {
        (self.role_id.clone(), self.question_id.clone())
    }

    pub fn error_tag(&self) -> Option<&str> {
        self.raw_text
            .strip_prefix(ERROR_TAG_PREFIX)?
            .strip_suffix('>')
    }

    /// Failed because the backend could not be reached; worth retrying.
    pub fn is_transient_error(&self) -> bool {
        matches!(self.error_tag(), Some("timeout" | "unreachable"))
    }
}

fn error_text(err: &GatewayError) -> String {
    format!("{ERROR_TAG_PREFIX}{}>", err.tag())
}

struct Task<'a> {
    role_id: String,
    question: &'a crate::survey_runner::SurveyQuestion,
    excerpt: String,
    hits: Vec<RetrievalHit>,
}

fn excerpt_from_hits(store: &RoleIndex, hits: &[RetrievalHit], policy: ExcerptPolicy) -> String {
    let take = match policy {
        ExcerptPolicy::TopHit => 1,
        ExcerptPolicy::ConcatTopK => hits.len(),
    };
    hits.iter()
        .take(take)
        .filter_map(|h| store.get(&h.role_id))
        .map(|e| e.text_snapshot.trim())
        .collect::<Vec<_>>()
        .join("\n\n")
}

fn plan<'a>(
    survey: &'a Survey,
    store: &RoleIndex,
    options: &PollOptions,
) -> Result<Vec<Task<'a>>, PollError> {
    let mut tasks = Vec::new();
    match options.mode {
        PollMode::PerRole => {
            for entry in store.entries() {
                for question in &survey.questions {
                    tasks.push(Task {
                        role_id: entry.role_id.clone(),
                        question,
                        excerpt: entry.text_snapshot.clone(),
                        hits: Vec::new(),
                    });
                }
            }
        }
        PollMode::Retrieval => {
            for question in &survey.questions {
                let hits = store.retrieve(&question.prompt, options.k)?;
                tasks.push(Task {
                    role_id: hits[0].role_id.clone(),
                    question,
                    excerpt: excerpt_from_hits(store, &hits, options.excerpt),
                    hits,
                });
            }
        }
    }
    tasks.retain(|t| {
        !options
            .skip
            .contains(&(t.role_id.clone(), t.question.id.clone()))
    });
    Ok(tasks)
}

fn answer(task: &Task<'_>, gateway: &dyn LlmBackend) -> (SimulatedResponse, Option<GatewayError>) {
    let respond = |raw_text: String, parsed_option, prompt_hash| SimulatedResponse {
        question_id: task.question.id.clone(),
        role_id: task.role_id.clone(),
        raw_text,
        parsed_option,
        hits: task.hits.clone(),
        prompt_hash,
    };
    let request = match assemble_prompt(&task.excerpt, task.question, gateway.config()) {
        Ok(r) => r,
        Err(e) => {
            return (
                respond(error_text(&e), ParsedAnswer::Unparseable, String::new()),
                Some(e),
            )
        }
    };
    match gateway.complete(&request) {
        Ok(reply) => {
            let parsed = parse_answer(&reply.text, &task.question.options);
            (respond(reply.text, parsed, reply.prompt_hash), None)
        }
        Err(e) => (
            respond(
                error_text(&e),
                ParsedAnswer::Unparseable,
                request.prompt_hash(),
            ),
            Some(e),
        ),
    }
}

/// Runs every planned (role, question) call through `gateway`, at most
/// `options.concurrency` at a time.
///
/// Gateway failures become response records rather than aborting the run;
/// the poll fails only when every attempted request found the backend
/// unreachable. `on_response` sees each record as it completes, in
/// completion order. The returned list is sorted by (role_id, question_id).
pub fn run_poll(
    survey: &Survey,
    store: &RoleIndex,
    gateway: &dyn LlmBackend,
    options: &PollOptions,
    on_response: Option<&(dyn Fn(&SimulatedResponse) + Sync)>,
) -> Result<Vec<SimulatedResponse>, PollError> {
    survey.validate()?;
    if options.k == 0 {
        return Err(PollError::InvalidK);
    }
    if store.is_empty() {
        return Err(IndexError::EmptyStore.into());
    }
    let tasks = plan(survey, store, options)?;
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<(SimulatedResponse, Option<GatewayError>)>> =
        Mutex::new(Vec::with_capacity(tasks.len()));
    let workers = options.concurrency.max(1).min(tasks.len());

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(task) = tasks.get(i) else { break };
                let outcome = answer(task, gateway);
                if let Some(callback) = on_response {
                    callback(&outcome.0);
                }
                results.lock().push(outcome);
            });
        }
    });

    let results = results.into_inner();
    if !results.is_empty()
        && results
            .iter()
            .all(|(_, e)| e.as_ref().is_some_and(GatewayError::is_unreachable))
    {
        let last = results
            .last()
            .and_then(|(_, e)| e.clone())
            .expect("checked above");
        return Err(PollError::BackendUnreachable {
            attempted: results.len(),
            last,
        });
    }
    let mut responses: Vec<SimulatedResponse> = results.into_iter().map(|(r, _)| r).collect();
    responses.sort_by(|a, b| (&a.role_id, &a.question_id).cmp(&(&b.role_id, &b.question_id)));
    Ok(responses)
}

/// Rebuilds the request behind `response` and returns its hash, or `None`
/// when the response's role or question is no longer available.
pub fn replay_prompt_hash(
    response: &SimulatedResponse,
    survey: &Survey,
    store: &RoleIndex,
    backend: &BackendConfig,
    mode: PollMode,
    excerpt: ExcerptPolicy,
) -> Option<String> {
    let question = survey.question(&response.question_id)?;
    let text = match mode {
        PollMode::PerRole => store.get(&response.role_id)?.text_snapshot.clone(),
        PollMode::Retrieval => excerpt_from_hits(store, &response.hits, excerpt),
    };
    assemble_prompt(&text, question, backend)
        .ok()
        .map(|r| r.prompt_hash())
}
