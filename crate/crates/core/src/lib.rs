//! Synthetic public-opinion polling with role-conditioned LLM respondents.
//!
//! The pipeline: build voter role profiles from HEXACO trait fragments and a
//! political leaning ([`role_forge`]), index them for similarity retrieval
//! ([`embed_index`]), pose survey questions to a chat backend in character
//! ([`survey_runner`] over [`llm_gateway`]), and score the simulated answers
//! against human reference responses ([`adherence_eval`]).

pub mod adherence_eval;
pub mod digest;
pub mod embed_index;
pub mod llm_gateway;
pub mod role_forge;
pub mod survey_runner;
