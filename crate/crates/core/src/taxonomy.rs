//! Hierarchical code taxonomy (SITC-style: 1- to 5-digit codes, each with a
//! textual heading).

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::File;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};

pub const MAX_LEVEL: u8 = 5;

/// One heading. `code` is kept as a string: leading zeros are significant.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TaxonomyEntry {
    pub level: u8,
    pub code: String,
    pub heading: String,
}

impl TaxonomyEntry {
    pub fn new(level: u8, code: impl Into<String>, heading: impl Into<String>) -> Result<Self> {
        let code = code.into();
        let heading = heading.into().trim().to_string();
        if !(1..=MAX_LEVEL).contains(&level) {
            return Err(Error::RowError {
                row: 0,
                reason: format!("level {level} outside 1..={MAX_LEVEL}"),
            });
        }
        if code.len() != level as usize || !code.bytes().all(|b| b.is_ascii_digit()) {
            return Err(Error::RowError {
                row: 0,
                reason: format!("code {code:?} is not a {level}-digit code"),
            });
        }
        if heading.is_empty() {
            return Err(Error::RowError {
                row: 0,
                reason: format!("empty heading for code {code}"),
            });
        }
        Ok(Self {
            level,
            code,
            heading,
        })
    }
}

/// A (code, heading) pair from the label space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoryDoc {
    pub code: String,
    pub heading: String,
}

#[derive(Debug, Clone, Default)]
pub struct Taxonomy {
    by_level: BTreeMap<u8, BTreeMap<String, TaxonomyEntry>>,
    warnings: Vec<String>,
}

impl Taxonomy {
    /// Builds a taxonomy, rejecting duplicate codes within a level. Entries
    /// whose parent prefix is missing are accepted with a warning.
    pub fn from_entries(entries: impl IntoIterator<Item = TaxonomyEntry>) -> Result<Self> {
        let mut tax = Taxonomy::default();
        for (i, entry) in entries.into_iter().enumerate() {
            tax.insert(entry, i + 1)?;
        }
        tax.check_prefixes();
        Ok(tax)
    }

    fn insert(&mut self, entry: TaxonomyEntry, row: usize) -> Result<()> {
        let level = self.by_level.entry(entry.level).or_default();
        if level.contains_key(&entry.code) {
            return Err(Error::RowError {
                row,
                reason: format!("duplicate code {} at level {}", entry.code, entry.level),
            });
        }
        level.insert(entry.code.clone(), entry);
        Ok(())
    }

    fn check_prefixes(&mut self) {
        self.warnings.clear();
        for (&level, entries) in &self.by_level {
            if level == 1 {
                continue;
            }
            let parents: HashSet<&str> = self
                .by_level
                .get(&(level - 1))
                .map(|p| p.keys().map(String::as_str).collect())
                .unwrap_or_default();
            for code in entries.keys() {
                let prefix = &code[..level as usize - 1];
                if !parents.contains(prefix) {
                    self.warnings.push(format!(
                        "level {level} code {code} has no level {} parent {prefix}",
                        level - 1
                    ));
                }
            }
        }
    }

    /// Loads a `level,code,heading` CSV with a header row. Columns are
    /// located by name.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(file)
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| Error::SchemaError(e.to_string()))?
            .clone();
        let column = |name: &str| {
            headers
                .iter()
                .position(|h| h.trim().eq_ignore_ascii_case(name))
                .ok_or_else(|| Error::SchemaError(format!("missing column {name:?}")))
        };
        let (level_col, code_col, heading_col) =
            (column("level")?, column("code")?, column("heading")?);

        let mut tax = Taxonomy::default();
        for (i, record) in rdr.records().enumerate() {
            // header is row 1
            let row = i + 2;
            let record = record.map_err(|e| Error::RowError {
                row,
                reason: e.to_string(),
            })?;
            let field = |col: usize| {
                record
                    .get(col)
                    .map(str::trim)
                    .ok_or_else(|| Error::RowError {
                        row,
                        reason: format!("missing field {col}"),
                    })
            };
            let level: u8 = field(level_col)?.parse().map_err(|_| Error::RowError {
                row,
                reason: format!("invalid level {:?}", record.get(level_col).unwrap_or("")),
            })?;
            let entry =
                TaxonomyEntry::new(level, field(code_col)?, field(heading_col)?).map_err(|e| {
                    match e {
                        Error::RowError { reason, .. } => Error::RowError { row, reason },
                        other => other,
                    }
                })?;
            tax.insert(entry, row)?;
        }
        tax.check_prefixes();
        Ok(tax)
    }

    pub fn len(&self) -> usize {
        self.by_level.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of entries at each level present.
    pub fn level_counts(&self) -> BTreeMap<u8, usize> {
        self.by_level
            .iter()
            .map(|(&level, entries)| (level, entries.len()))
            .collect()
    }

    pub fn entries_at(&self, level: u8) -> impl Iterator<Item = &TaxonomyEntry> {
        self.by_level
            .get(&level)
            .into_iter()
            .flat_map(|m| m.values())
    }

    pub fn get(&self, code: &str) -> Option<&TaxonomyEntry> {
        u8::try_from(code.len())
            .ok()
            .and_then(|level| self.by_level.get(&level))
            .and_then(|m| m.get(code))
    }

    /// Parent-prefix violations found at load time.
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// The label space for the requested levels, ordered by level then code.
    pub fn category_documents(&self, levels: &BTreeSet<u8>) -> Result<Vec<CategoryDoc>> {
        let docs: Vec<CategoryDoc> = levels
            .iter()
            .flat_map(|&level| self.entries_at(level))
            .map(|e| CategoryDoc {
                code: e.code.clone(),
                heading: e.heading.clone(),
            })
            .collect();
        if docs.is_empty() {
            return Err(Error::EmptySelection(levels.iter().copied().collect()));
        }
        Ok(docs)
    }
}

/// Truncates a code to its ancestor at `target_level`.
pub fn rollup(code: &str, target_level: usize) -> Result<String> {
    if target_level == 0 || target_level > code.len() || !code.bytes().all(|b| b.is_ascii_digit()) {
        return Err(Error::InvalidRollup {
            code: code.to_string(),
            target_level,
        });
    }
    Ok(code[..target_level].to_string())
}
