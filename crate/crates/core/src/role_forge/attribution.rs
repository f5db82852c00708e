//! Text-to-role attribution: prompt and reply parsing.
//!
//! The reply protocol is two keyed lines, `LEANING: <value>` and
//! `CELLS: <comma-separated codes>`. A `/` is accepted as a line separator
//! so the pair may also arrive on one line.

use std::collections::BTreeSet;

use super::{HexacoDimension, PoliticalLeaning, RoleError};

pub const ATTRIBUTION_SYSTEM: &str =
    "You infer the political leaning and personality traits of a hypothetical voter from a text.";

const ATTRIBUTION_INSTRUCTION: &str = "Read the text below and describe the hypothetical voter most likely to engage with it (agree with it, share it, or have written it). Reply with exactly two lines and nothing else:
LEANING: <one of Conservative, Liberal, Populist>
CELLS: <1 to 6 comma-separated HEXACO codes from H, E, X, A, C, O that are most pronounced>";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attribution {
    pub leaning: PoliticalLeaning,
    pub dimensions: BTreeSet<HexacoDimension>,
}

pub fn attribution_prompt(text: &str) -> String {
    format!("{ATTRIBUTION_INSTRUCTION}\n\nText:\n{}", text.trim())
}

pub fn parse_attribution(reply: &str) -> Result<Attribution, RoleError> {
    let bad = |msg: String| RoleError::UnparseableAttribution(msg);
    let mut leaning = None;
    let mut dimensions = None;

    for segment in reply.split(['\n', '/']).map(str::trim) {
        if let Some(value) = segment.strip_prefix("LEANING:") {
            let parsed = PoliticalLeaning::parse(value)
                .ok_or_else(|| bad(format!("unknown leaning {:?}", value.trim())))?;
            if leaning.replace(parsed).is_some_and(|prev| prev != parsed) {
                return Err(bad("conflicting LEANING lines".into()));
            }
        } else if let Some(value) = segment.strip_prefix("CELLS:") {
            let mut set = BTreeSet::new();
            for code in value.split(',').map(str::trim) {
                let dim = HexacoDimension::from_code(code)
                    .ok_or_else(|| bad(format!("unknown HEXACO code {code:?}")))?;
                set.insert(dim);
            }
            if dimensions.replace(set).is_some() {
                return Err(bad("more than one CELLS line".into()));
            }
        }
    }

    let leaning = leaning.ok_or_else(|| bad("missing LEANING line".into()))?;
    let dimensions = dimensions.ok_or_else(|| bad("missing CELLS line".into()))?;
    if dimensions.is_empty() {
        return Err(bad("CELLS lists no codes".into()));
    }
    Ok(Attribution {
        leaning,
        dimensions,
    })
}
