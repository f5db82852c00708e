use crate::llm_gateway::{
    BackendConfig, ChatRequest, GatewayError, OPTIONS_PREFIX, OPTION_SEPARATOR,
};

use super::SurveyQuestion;

pub const ROLE_PLAY_PREAMBLE: &str = "You are taking part in a public opinion survey. Role-play the person described in the profile below and answer every question the way they would, in the first person, without breaking character.";
pub const ANSWER_INSTRUCTION: &str = "Answer with exactly one of the options above.";

pub fn system_prompt(profile_excerpt: &str) -> String {
    format!(
        "{ROLE_PLAY_PREAMBLE}\n\nProfile:\n{}",
        profile_excerpt.trim()
    )
}

/// Few-shot pairs first, then the question, its options, and the answer
/// instruction as the final line.
pub fn user_prompt(question: &SurveyQuestion) -> String {
    let mut out = String::new();
    for example in &question.few_shot {
        out.push_str("Example question: ");
        out.push_str(example.question.trim());
        out.push_str("\nExample answer: ");
        out.push_str(example.answer.trim());
        out.push_str("\n\n");
    }
    out.push_str("Question: ");
    out.push_str(question.prompt.trim());
    out.push('\n');
    out.push_str(OPTIONS_PREFIX);
    out.push(' ');
    out.push_str(&question.options.join(OPTION_SEPARATOR));
    out.push('\n');
    out.push_str(ANSWER_INSTRUCTION);
    out
}

pub fn assemble_prompt(
    profile_excerpt: &str,
    question: &SurveyQuestion,
    backend: &BackendConfig,
) -> Result<ChatRequest, GatewayError> {
    if profile_excerpt.trim().is_empty() {
        return Err(GatewayError::InvalidRequest("empty profile excerpt".into()));
    }
    backend.build_request(&system_prompt(profile_excerpt), &user_prompt(question))
}
