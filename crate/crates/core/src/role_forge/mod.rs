//! Voter role profiles built from the HEXACO × leaning trait grid.
//!
//! Three routes produce a [`RoleProfile`]: directly from grid cells, from a
//! free-text document (the backend names a leaning and trait codes), and
//! from an existing role by swapping in grid cells for chosen dimensions.
//! Every route ends in one expansion call that turns the trait instruction
//! into a short first-person narrative.

mod attribution;
mod grid;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::digest::{canonical_digest, sha256_hex};
use crate::llm_gateway::{GatewayError, LlmBackend};

pub use attribution::{attribution_prompt, parse_attribution, Attribution, ATTRIBUTION_SYSTEM};
pub use grid::{attribute_grid, AttributeCell, AttributeGrid, HexacoDimension, PoliticalLeaning};

pub const ROLE_PROMPT_PREFIX: &str = "Respond as a voter with";
pub const EXPANSION_SYSTEM: &str =
    "You write short first-person voter personas for survey simulation.";
pub const EXPANSION_INSTRUCTION: &str = "You are building a voter persona. Expand the following trait instruction into a 3–5 sentence first-person persona description.";
pub const ROLE_FILE_EXTENSION: &str = ".role.json";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RoleError {
    #[error("no attribute cells given")]
    EmptyCells,
    #[error("cell {dimension:?}/{found} does not match leaning {expected}")]
    MixedLeaning {
        dimension: HexacoDimension,
        found: PoliticalLeaning,
        expected: PoliticalLeaning,
    },
    #[error("dimension {0:?} appears more than once")]
    DuplicateDimension(HexacoDimension),
    #[error("backend returned an empty narrative")]
    InvalidNarrative,
    #[error("unparseable attribution reply: {0}")]
    UnparseableAttribution(String),
    #[error("input text is empty")]
    EmptyText,
    #[error("perturbation set is empty")]
    EmptyPerturbation,
    #[error("attribute grid: {0}")]
    Grid(String),
    #[error("role file {path}: {message}")]
    RoleFile { path: String, message: String },
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RoleSource {
    Grid,
    TextDerived,
    RoleDerived,
}

/// A synthetic voter persona.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleProfile {
    /// SHA-256 of the canonical serialization of every other field.
    pub id: String,
    pub source: RoleSource,
    pub cells: Vec<AttributeCell>,
    pub leaning: PoliticalLeaning,
    pub narrative: String,
    #[serde(default)]
    pub demographics: Option<BTreeMap<String, String>>,
    /// Source-text digest or parent role id.
    #[serde(default)]
    pub provenance: Option<String>,
}

#[derive(Serialize)]
struct ProfileContent<'a> {
    source: RoleSource,
    cells: &'a [AttributeCell],
    leaning: PoliticalLeaning,
    narrative: &'a str,
    demographics: &'a Option<BTreeMap<String, String>>,
    provenance: &'a Option<String>,
}

impl RoleProfile {
    /// Builds a profile and stamps its content id.
    pub fn new(
        source: RoleSource,
        cells: Vec<AttributeCell>,
        leaning: PoliticalLeaning,
        narrative: String,
        demographics: Option<BTreeMap<String, String>>,
        provenance: Option<String>,
    ) -> Self {
        let mut profile = Self {
            id: String::new(),
            source,
            cells,
            leaning,
            narrative,
            demographics,
            provenance,
        };
        profile.id = profile.compute_id();
        profile
    }

    pub fn compute_id(&self) -> String {
        canonical_digest(&ProfileContent {
            source: self.source,
            cells: &self.cells,
            leaning: self.leaning,
            narrative: &self.narrative,
            demographics: &self.demographics,
            provenance: &self.provenance,
        })
    }

    pub fn dimensions(&self) -> BTreeSet<HexacoDimension> {
        self.cells.iter().map(|c| c.dimension).collect()
    }

    pub fn to_json_pretty(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("profile serializes");
        out.push('\n');
        out
    }

    pub fn file_name(&self) -> String {
        format!("{}{ROLE_FILE_EXTENSION}", self.id)
    }

    pub fn write_to_dir(&self, dir: &Path) -> std::io::Result<PathBuf> {
        let path = dir.join(self.file_name());
        std::fs::write(&path, self.to_json_pretty())?;
        Ok(path)
    }

    pub fn read_file(path: &Path) -> Result<Self, RoleError> {
        let err = |message: String| RoleError::RoleFile {
            path: path.display().to_string(),
            message,
        };
        let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        serde_json::from_str(&text).map_err(|e| err(e.to_string()))
    }
}

/// Every `*.role.json` file in `dir`, sorted by file name.
pub fn role_files(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.ends_with(ROLE_FILE_EXTENSION))
        })
        .collect();
    files.sort();
    Ok(files)
}

fn check_cells(cells: &[AttributeCell], leaning: PoliticalLeaning) -> Result<(), RoleError> {
    if cells.is_empty() {
        return Err(RoleError::EmptyCells);
    }
    if let Some(c) = cells.iter().find(|c| c.leaning != leaning) {
        return Err(RoleError::MixedLeaning {
            dimension: c.dimension,
            found: c.leaning,
            expected: leaning,
        });
    }
    Ok(())
}

/// Joins the cells' fragments behind the fixed "Respond as a voter with" prefix.
pub fn render_role_prompt(
    cells: &[AttributeCell],
    leaning: PoliticalLeaning,
) -> Result<String, RoleError> {
    check_cells(cells, leaning)?;
    let mut out = String::from(ROLE_PROMPT_PREFIX);
    for (i, cell) in cells.iter().enumerate() {
        out.push_str(if i == 0 { " " } else { " Also with " });
        out.push_str(cell.prompt_fragment.trim());
    }
    Ok(out)
}

/// The instruction sent to the backend to turn a rendered role prompt into a narrative.
pub fn expansion_prompt(rendered: &str) -> String {
    format!("{EXPANSION_INSTRUCTION} {rendered}")
}

fn canonical_cells(mut cells: Vec<AttributeCell>) -> Result<Vec<AttributeCell>, RoleError> {
    cells.sort_by_key(|c| c.dimension);
    if let Some(pair) = cells.windows(2).find(|p| p[0].dimension == p[1].dimension) {
        return Err(RoleError::DuplicateDimension(pair[0].dimension));
    }
    Ok(cells)
}

fn expand(
    cells: Vec<AttributeCell>,
    leaning: PoliticalLeaning,
    source: RoleSource,
    provenance: Option<String>,
    demographics: Option<BTreeMap<String, String>>,
    gateway: &dyn LlmBackend,
) -> Result<RoleProfile, RoleError> {
    check_cells(&cells, leaning)?;
    let cells = canonical_cells(cells)?;
    let rendered = render_role_prompt(&cells, leaning)?;
    let request = gateway.request(EXPANSION_SYSTEM, &expansion_prompt(&rendered))?;
    let narrative = gateway.complete(&request)?.text.trim().to_string();
    if narrative.is_empty() {
        return Err(RoleError::InvalidNarrative);
    }
    Ok(RoleProfile::new(
        source,
        cells,
        leaning,
        narrative,
        demographics,
        provenance,
    ))
}

/// Expands grid cells into a narrative persona. Cells are stored in
/// dimension order so the id does not depend on input order.
pub fn generate_role_from_grid(
    cells: Vec<AttributeCell>,
    leaning: PoliticalLeaning,
    gateway: &dyn LlmBackend,
) -> Result<RoleProfile, RoleError> {
    expand(cells, leaning, RoleSource::Grid, None, None, gateway)
}

/// Derives a role from a document: one attribution call, then expansion.
pub fn text_to_role(
    text: &str,
    grid: &AttributeGrid,
    gateway: &dyn LlmBackend,
) -> Result<RoleProfile, RoleError> {
    if text.trim().is_empty() {
        return Err(RoleError::EmptyText);
    }
    let request = gateway.request(ATTRIBUTION_SYSTEM, &attribution_prompt(text))?;
    let reply = gateway.complete(&request)?.text;
    let attribution = parse_attribution(&reply)?;
    let cells = attribution
        .dimensions
        .iter()
        .map(|d| grid.cell(*d, attribution.leaning).clone())
        .collect();
    expand(
        cells,
        attribution.leaning,
        RoleSource::TextDerived,
        Some(sha256_hex(text.as_bytes())),
        None,
        gateway,
    )
}

/// Replaces (or adds) the seed's cells for `perturbation` with the grid
/// cells under the seed's leaning, then regenerates the narrative.
pub fn role_to_role(
    seed: &RoleProfile,
    perturbation: &BTreeSet<HexacoDimension>,
    grid: &AttributeGrid,
    gateway: &dyn LlmBackend,
) -> Result<RoleProfile, RoleError> {
    if perturbation.is_empty() {
        return Err(RoleError::EmptyPerturbation);
    }
    let mut cells: Vec<AttributeCell> = seed
        .cells
        .iter()
        .filter(|c| !perturbation.contains(&c.dimension))
        .cloned()
        .collect();
    cells.extend(
        perturbation
            .iter()
            .map(|d| grid.cell(*d, seed.leaning).clone()),
    );
    expand(
        cells,
        seed.leaning,
        RoleSource::RoleDerived,
        Some(seed.id.clone()),
        seed.demographics.clone(),
        gateway,
    )
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    NoCells,
    EmptyNarrative,
    MixedLeaning,
    DuplicateDimension(HexacoDimension),
    EmptyFragment(HexacoDimension),
    StaleId,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NoCells => f.write_str("no cells"),
            Self::EmptyNarrative => f.write_str("empty narrative"),
            Self::MixedLeaning => f.write_str("mixed leaning"),
            Self::DuplicateDimension(d) => write!(f, "duplicate dimension {}", d.code()),
            Self::EmptyFragment(d) => write!(f, "empty prompt fragment for {}", d.code()),
            Self::StaleId => f.write_str("stale id"),
        }
    }
}

/// All invariant violations; empty means the profile is well formed.
pub fn validate_role(profile: &RoleProfile) -> Vec<Violation> {
    let mut out = Vec::new();
    if profile.cells.is_empty() {
        out.push(Violation::NoCells);
    }
    if profile.narrative.trim().is_empty() {
        out.push(Violation::EmptyNarrative);
    }
    if profile.cells.iter().any(|c| c.leaning != profile.leaning) {
        out.push(Violation::MixedLeaning);
    }
    let mut seen = BTreeSet::new();
    for cell in &profile.cells {
        if !seen.insert(cell.dimension) {
            out.push(Violation::DuplicateDimension(cell.dimension));
        }
        if cell.prompt_fragment.trim().is_empty() {
            out.push(Violation::EmptyFragment(cell.dimension));
        }
    }
    if profile.id != profile.compute_id() {
        out.push(Violation::StaleId);
    }
    out
}
