//! Maps free-text completions onto survey option labels.
//!
//! Three tiers, first match wins:
//! 1. the whole reply, trimmed of whitespace and punctuation, equals a label
//!    (case-insensitive);
//! 2. exactly one label occurs as a whole phrase in the first non-empty line;
//! 3. exactly one label occurs as a whole phrase anywhere in the reply.
//!
//! Two labels matching at the same tier make the reply unparseable. An
//! occurrence lying inside an occurrence of a longer matched label (e.g.
//! "agree" inside "strongly agree") does not count as a match.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "Option<String>", into = "Option<String>")]
pub enum ParsedAnswer {
    Option(String),
    Unparseable,
}

impl ParsedAnswer {
    pub fn label(&self) -> Option<&str> {
        match self {
            Self::Option(label) => Some(label),
            Self::Unparseable => None,
        }
    }
}

impl From<Option<String>> for ParsedAnswer {
    fn from(value: Option<String>) -> Self {
        value.map_or(Self::Unparseable, Self::Option)
    }
}

impl From<ParsedAnswer> for Option<String> {
    fn from(value: ParsedAnswer) -> Self {
        match value {
            ParsedAnswer::Option(label) => Some(label),
            ParsedAnswer::Unparseable => None,
        }
    }
}

fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation() || "“”‘’«»—–…¿¡·".contains(c)
}

fn trim_noise(s: &str) -> &str {
    s.trim_matches(|c: char| c.is_whitespace() || is_punctuation(c))
}

/// Byte spans of whole-phrase occurrences of `needle` in `haystack`. Both
/// must already be lowercased.
fn phrase_spans(haystack: &str, needle: &str) -> Vec<(usize, usize)> {
    if needle.is_empty() {
        return Vec::new();
    }
    haystack
        .match_indices(needle)
        .map(|(start, m)| (start, start + m.len()))
        .filter(|&(start, end)| {
            let before = haystack[..start].chars().next_back();
            let after = haystack[end..].chars().next();
            !before.is_some_and(char::is_alphanumeric) && !after.is_some_and(char::is_alphanumeric)
        })
        .collect()
}

enum TierResult {
    None,
    Unique(usize),
    Ambiguous,
}

fn phrase_tier(haystack: &str, labels: &[String]) -> TierResult {
    let spans: Vec<Vec<(usize, usize)>> =
        labels.iter().map(|l| phrase_spans(haystack, l)).collect();
    let counted: Vec<usize> = (0..labels.len())
        .filter(|&i| {
            spans[i].iter().any(|&(s, e)| {
                !spans.iter().enumerate().any(|(j, other)| {
                    j != i
                        && other
                            .iter()
                            .any(|&(os, oe)| os <= s && e <= oe && oe - os > e - s)
                })
            })
        })
        .collect();
    match counted.as_slice() {
        [] => TierResult::None,
        [only] => TierResult::Unique(*only),
        _ => TierResult::Ambiguous,
    }
}

pub fn parse_answer(raw: &str, options: &[String]) -> ParsedAnswer {
    let labels: Vec<String> = options
        .iter()
        .map(|o| trim_noise(o).to_lowercase())
        .collect();
    let pick = |i: usize| ParsedAnswer::Option(options[i].clone());

    let whole = trim_noise(raw).to_lowercase();
    let exact: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == whole).collect();
    match exact.as_slice() {
        [only] => return pick(*only),
        [] => {}
        _ => return ParsedAnswer::Unparseable,
    }

    let first_line = raw
        .lines()
        .find(|l| !l.trim().is_empty())
        .unwrap_or("")
        .to_lowercase();
    for haystack in [first_line, raw.to_lowercase()] {
        match phrase_tier(&haystack, &labels) {
            TierResult::Unique(i) => return pick(i),
            TierResult::Ambiguous => return ParsedAnswer::Unparseable,
            TierResult::None => {}
        }
    }
    ParsedAnswer::Unparseable
}
