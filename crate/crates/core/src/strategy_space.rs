//! The four strategy dimensions and the canonical 36-strategy enumeration.
//!
//! A strategy is one level from each of Target, Content, Tool and Resource,
//! written as dot-separated level codes (`D.R.A.PP`). The canonical order is
//! the order of the published score table: Tool is outermost (T, S, A), then
//! the pairs D.R, I.R, D.C, I.C, with Resource (Pu, Pr, PP) innermost.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Number of strategies in the full Cartesian product 2×2×3×3.
pub const STRATEGY_COUNT: usize = 36;

/// Canonical strategy order, one entry per row of the score table.
const CANONICAL_CODES: [&str; STRATEGY_COUNT] = [
    "D.R.T.Pu", "D.R.T.Pr", "D.R.T.PP", "I.R.T.Pu", "I.R.T.Pr", "I.R.T.PP",
    "D.C.T.Pu", "D.C.T.Pr", "D.C.T.PP", "I.C.T.Pu", "I.C.T.Pr", "I.C.T.PP",
    "D.R.S.Pu", "D.R.S.Pr", "D.R.S.PP", "I.R.S.Pu", "I.R.S.Pr", "I.R.S.PP",
    "D.C.S.Pu", "D.C.S.Pr", "D.C.S.PP", "I.C.S.Pu", "I.C.S.Pr", "I.C.S.PP",
    "D.R.A.Pu", "D.R.A.Pr", "D.R.A.PP", "I.R.A.Pu", "I.R.A.Pr", "I.R.A.PP",
    "D.C.A.Pu", "D.C.A.Pr", "D.C.A.PP", "I.C.A.Pu", "I.C.A.Pr", "I.C.A.PP",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DimensionKind {
    Target,
    Content,
    Tool,
    Resource,
}

impl DimensionKind {
    pub const ALL: [DimensionKind; 4] = [
        DimensionKind::Target,
        DimensionKind::Content,
        DimensionKind::Tool,
        DimensionKind::Resource,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DimensionKind::Target => "Target",
            DimensionKind::Content => "Content",
            DimensionKind::Tool => "Tool",
            DimensionKind::Resource => "Resource",
        }
    }

    /// Level codes in their listed order.
    pub fn levels(self) -> &'static [&'static str] {
        match self {
            DimensionKind::Target => &["D", "I"],
            DimensionKind::Content => &["R", "C"],
            DimensionKind::Tool => &["T", "S", "A"],
            DimensionKind::Resource => &["Pu", "Pr", "PP"],
        }
    }

    fn level_index(self, code: &str) -> Option<u8> {
        self.levels().iter().position(|l| *l == code).map(|i| i as u8)
    }
}

/// A strategy dimension together with its ordered level codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dimension {
    pub kind: DimensionKind,
    pub levels: &'static [&'static str],
}

impl Dimension {
    pub fn all() -> [Dimension; 4] {
        DimensionKind::ALL.map(|kind| Dimension {
            kind,
            levels: kind.levels(),
        })
    }
}

/// One coded strategy. Levels are stored as positions within their dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StrategyCode {
    target: u8,
    content: u8,
    tool: u8,
    resource: u8,
}

impl StrategyCode {
    pub fn target(&self) -> &'static str {
        DimensionKind::Target.levels()[self.target as usize]
    }

    pub fn content(&self) -> &'static str {
        DimensionKind::Content.levels()[self.content as usize]
    }

    pub fn tool(&self) -> &'static str {
        DimensionKind::Tool.levels()[self.tool as usize]
    }

    pub fn resource(&self) -> &'static str {
        DimensionKind::Resource.levels()[self.resource as usize]
    }

    pub fn level(&self, kind: DimensionKind) -> &'static str {
        match kind {
            DimensionKind::Target => self.target(),
            DimensionKind::Content => self.content(),
            DimensionKind::Tool => self.tool(),
            DimensionKind::Resource => self.resource(),
        }
    }

    /// Position in the canonical order.
    pub fn index(&self) -> usize {
        let pair = self.content as usize * 2 + self.target as usize;
        self.tool as usize * 12 + pair * 3 + self.resource as usize
    }

    /// Parses `T.C.L.R` with an optional trailing dot. Codes are case-sensitive.
    pub fn parse(text: &str) -> Result<Self> {
        let trimmed = text.trim();
        let body = trimmed.strip_suffix('.').unwrap_or(trimmed);
        let parts: Vec<&str> = body.split('.').collect();
        if parts.len() != 4 {
            return Err(Error::MalformedCode(text.to_string()));
        }
        let mut idx = [0u8; 4];
        for (slot, (kind, part)) in idx.iter_mut().zip(DimensionKind::ALL.iter().zip(&parts)) {
            *slot = kind.level_index(part).ok_or_else(|| Error::UnknownLevel {
                code: text.to_string(),
                dimension: kind.name(),
                level: part.to_string(),
            })?;
        }
        Ok(StrategyCode {
            target: idx[0],
            content: idx[1],
            tool: idx[2],
            resource: idx[3],
        })
    }
}

impl fmt::Display for StrategyCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}.{}.{}.{}",
            self.target(),
            self.content(),
            self.tool(),
            self.resource()
        )
    }
}

impl FromStr for StrategyCode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StrategyCode::parse(s)
    }
}

/// Shorthand for [`StrategyCode::parse`].
pub fn parse_code(text: &str) -> Result<StrategyCode> {
    StrategyCode::parse(text)
}

/// The ordered list of all 36 strategies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrategySpace {
    strategies: Vec<StrategyCode>,
}

impl StrategySpace {
    /// Shared canonical instance.
    pub fn canonical() -> &'static StrategySpace {
        static SPACE: OnceLock<StrategySpace> = OnceLock::new();
        SPACE.get_or_init(build_strategy_space)
    }

    pub fn len(&self) -> usize {
        self.strategies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strategies.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<&StrategyCode> {
        self.strategies.get(index)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, StrategyCode> {
        self.strategies.iter()
    }

    pub fn as_slice(&self) -> &[StrategyCode] {
        &self.strategies
    }

    pub fn index_of(&self, code: &str) -> Result<usize> {
        Ok(StrategyCode::parse(code)?.index())
    }

    /// Canonical indices of the strategies whose Tool level is `tool`.
    pub fn tool_block(&self, tool: &str) -> Vec<usize> {
        self.strategies
            .iter()
            .filter(|s| s.tool() == tool)
            .map(StrategyCode::index)
            .collect()
    }
}

impl std::ops::Index<usize> for StrategySpace {
    type Output = StrategyCode;

    fn index(&self, index: usize) -> &StrategyCode {
        &self.strategies[index]
    }
}

impl<'a> IntoIterator for &'a StrategySpace {
    type Item = &'a StrategyCode;
    type IntoIter = std::slice::Iter<'a, StrategyCode>;

    fn into_iter(self) -> Self::IntoIter {
        self.strategies.iter()
    }
}

pub fn build_strategy_space() -> StrategySpace {
    let strategies = CANONICAL_CODES
        .iter()
        .map(|c| StrategyCode::parse(c).expect("canonical code table is valid"))
        .collect();
    StrategySpace { strategies }
}

/// Display label for strategy `j` of a population with `n` strategies:
/// the strategy code for the canonical space, `S<j+1>` otherwise.
pub fn strategy_label(j: usize, n: usize) -> String {
    if n == STRATEGY_COUNT {
        StrategySpace::canonical()[j].to_string()
    } else {
        format!("S{}", j + 1)
    }
}

/// Display label for factor `i` (`Q1`, `Q2`, ...).
pub fn factor_label(i: usize) -> String {
    format!("Q{}", i + 1)
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use super::*;

    #[test]
    fn first_and_winner_positions() {
        let space = build_strategy_space();
        assert_eq!(space.len(), 36);
        assert_eq!(space[0].to_string(), "D.R.T.Pu");
        assert_eq!(space[26].to_string(), "D.R.A.PP");
        assert_eq!(space[35].to_string(), "I.C.A.PP");
    }

    #[test]
    fn all_codes_distinct() {
        let space = build_strategy_space();
        let set: HashSet<String> = space.iter().map(|s| s.to_string()).collect();
        assert_eq!(set.len(), 36);
    }

    #[test]
    fn covers_cartesian_product() {
        let space = build_strategy_space();
        let mut seen = HashSet::new();
        for t in DimensionKind::Target.levels() {
            for c in DimensionKind::Content.levels() {
                for l in DimensionKind::Tool.levels() {
                    for r in DimensionKind::Resource.levels() {
                        let code = format!("{t}.{c}.{l}.{r}");
                        let idx = space.index_of(&code).unwrap();
                        assert_eq!(space[idx].to_string(), code);
                        seen.insert(idx);
                    }
                }
            }
        }
        assert_eq!(seen.len(), 36);
    }

    #[test]
    fn list_position_matches_index() {
        for (i, s) in build_strategy_space().iter().enumerate() {
            assert_eq!(s.index(), i, "{s}");
        }
    }

    #[test]
    fn tool_blocks_of_twelve() {
        let space = build_strategy_space();
        assert_eq!(space.tool_block("T"), (0..12).collect::<Vec<_>>());
        assert_eq!(space.tool_block("S"), (12..24).collect::<Vec<_>>());
        assert_eq!(space.tool_block("A"), (24..36).collect::<Vec<_>>());
    }

    #[test]
    fn parse_examples() {
        let c = parse_code("I.R.T.Pu").unwrap();
        assert_eq!(
            (c.target(), c.content(), c.tool(), c.resource()),
            ("I", "R", "T", "Pu")
        );
        assert_eq!(c.index(), 3);
        assert_eq!(parse_code("D.R.T.Pu.").unwrap(), parse_code("D.R.T.Pu").unwrap());
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            parse_code("D.X.T.Pu"),
            Err(Error::UnknownLevel { dimension: "Content", .. })
        ));
        assert!(matches!(parse_code("D.R.T"), Err(Error::MalformedCode(_))));
        assert!(matches!(parse_code("D.R.T.Pu.x"), Err(Error::MalformedCode(_))));
        assert!(matches!(parse_code("d.r.t.pu"), Err(Error::UnknownLevel { .. })));
        assert!(matches!(parse_code(""), Err(Error::MalformedCode(_))));
    }

    #[test]
    fn labels() {
        assert_eq!(strategy_label(26, 36), "D.R.A.PP");
        assert_eq!(strategy_label(1, 2), "S2");
        assert_eq!(factor_label(0), "Q1");
    }
}
