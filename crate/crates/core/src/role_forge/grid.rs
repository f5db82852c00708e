use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::RoleError;

const BUILTIN_GRID: &str = include_str!("../../resources/attribute_grid.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum HexacoDimension {
    H,
    E,
    X,
    A,
    C,
    O,
}

impl HexacoDimension {
    pub const ALL: [HexacoDimension; 6] = [Self::H, Self::E, Self::X, Self::A, Self::C, Self::O];

    pub fn code(self) -> char {
        match self {
            Self::H => 'H',
            Self::E => 'E',
            Self::X => 'X',
            Self::A => 'A',
            Self::C => 'C',
            Self::O => 'O',
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::H => "Honesty-Humility",
            Self::E => "Emotionality",
            Self::X => "eXtraversion",
            Self::A => "Agreeableness",
            Self::C => "Conscientiousness",
            Self::O => "Openness",
        }
    }

    /// Case-insensitive single-letter code.
    pub fn from_code(code: &str) -> Option<Self> {
        let mut chars = code.chars();
        let c = chars.next()?;
        if chars.next().is_some() {
            return None;
        }
        Self::ALL
            .into_iter()
            .find(|d| d.code() == c.to_ascii_uppercase())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PoliticalLeaning {
    Conservative,
    Liberal,
    Populist,
}

impl PoliticalLeaning {
    pub const ALL: [PoliticalLeaning; 3] = [Self::Conservative, Self::Liberal, Self::Populist];

    pub fn name(self) -> &'static str {
        match self {
            Self::Conservative => "Conservative",
            Self::Liberal => "Liberal",
            Self::Populist => "Populist",
        }
    }

    pub fn parse(value: &str) -> Option<Self> {
        let value = value.trim();
        Self::ALL
            .into_iter()
            .find(|l| l.name().eq_ignore_ascii_case(value))
    }
}

impl std::fmt::Display for PoliticalLeaning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One (dimension, leaning) entry and its "Respond as..." continuation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AttributeCell {
    pub dimension: HexacoDimension,
    pub leaning: PoliticalLeaning,
    pub prompt_fragment: String,
}

/// The complete 6×3 trait grid, dimension-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeGrid {
    cells: Vec<AttributeCell>,
}

impl AttributeGrid {
    /// Grid shipped in `resources/attribute_grid.json`.
    pub fn builtin() -> &'static AttributeGrid {
        static GRID: OnceLock<AttributeGrid> = OnceLock::new();
        GRID.get_or_init(|| Self::from_json(BUILTIN_GRID).expect("bundled attribute grid is valid"))
    }

    pub fn load(path: &Path) -> Result<Self, RoleError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RoleError::Grid(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, RoleError> {
        let cells: Vec<AttributeCell> =
            serde_json::from_str(text).map_err(|e| RoleError::Grid(e.to_string()))?;
        Self::from_cells(cells)
    }

    /// Accepts the cells in any order; rejects anything but the full 18-cell product.
    pub fn from_cells(mut cells: Vec<AttributeCell>) -> Result<Self, RoleError> {
        if cells.len() != HexacoDimension::ALL.len() * PoliticalLeaning::ALL.len() {
            return Err(RoleError::Grid(format!(
                "expected 18 cells, found {}",
                cells.len()
            )));
        }
        cells.sort_by_key(|c| (c.dimension, c.leaning));
        for pair in cells.windows(2) {
            if (pair[0].dimension, pair[0].leaning) == (pair[1].dimension, pair[1].leaning) {
                return Err(RoleError::Grid(format!(
                    "duplicate cell {}/{}",
                    pair[0].dimension.code(),
                    pair[0].leaning
                )));
            }
        }
        if let Some(c) = cells.iter().find(|c| c.prompt_fragment.trim().is_empty()) {
            return Err(RoleError::Grid(format!(
                "empty prompt fragment for {}/{}",
                c.dimension.code(),
                c.leaning
            )));
        }
        Ok(Self { cells })
    }

    pub fn cells(&self) -> &[AttributeCell] {
        &self.cells
    }

    pub fn cell(&self, dimension: HexacoDimension, leaning: PoliticalLeaning) -> &AttributeCell {
        self.cells
            .iter()
            .find(|c| c.dimension == dimension && c.leaning == leaning)
            .expect("grid holds the full product")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&self.cells).expect("grid serializes")
    }
}

/// The 18 built-in grid cells in dimension-major order
/// (H, E, X, A, C, O; Conservative, Liberal, Populist).
pub fn attribute_grid() -> Vec<AttributeCell> {
    AttributeGrid::builtin().cells().to_vec()
}
