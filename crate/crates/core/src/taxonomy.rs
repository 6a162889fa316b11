//! The four-level research keyword table (category / subcategory / field /
//! keyword) and keyword matching against free text.

use std::collections::{BTreeSet, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::{fold, nfc};

#[derive(Debug, Error)]
pub enum TaxonomyError {
    #[error("line {line}: expected 4 tab-separated columns, found {found}")]
    ColumnCount { line: usize, found: usize },
    #[error("line {line}: empty {column}")]
    EmptyField { line: usize, column: &'static str },
    #[error("line {line}: duplicate entry {entry:?}")]
    Duplicate { line: usize, entry: KeywordEntry },
    #[error("keyword table is missing its header row")]
    MissingHeader,
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct KeywordEntry {
    pub category: String,
    pub subcategory: String,
    pub field: String,
    pub keyword: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordTable {
    pub entries: Vec<KeywordEntry>,
    pub category_count: usize,
    pub subcategory_count: usize,
    pub field_count: usize,
    pub keyword_count: usize,
}

const COLUMNS: [&str; 4] = ["category", "subcategory", "field", "keyword"];

impl KeywordTable {
    pub fn from_entries(entries: Vec<KeywordEntry>) -> Result<Self, TaxonomyError> {
        let mut seen = HashSet::new();
        for (i, e) in entries.iter().enumerate() {
            if !seen.insert(e) {
                return Err(TaxonomyError::Duplicate {
                    line: i + 2,
                    entry: e.clone(),
                });
            }
        }
        // levels are counted as distinct paths, so equal subcategory names
        // under different categories count separately
        let categories: BTreeSet<_> = entries.iter().map(|e| &e.category).collect();
        let subcategories: BTreeSet<_> = entries.iter().map(|e| (&e.category, &e.subcategory)).collect();
        let fields: BTreeSet<_> = entries
            .iter()
            .map(|e| (&e.category, &e.subcategory, &e.field))
            .collect();
        Ok(Self {
            category_count: categories.len(),
            subcategory_count: subcategories.len(),
            field_count: fields.len(),
            keyword_count: entries.len(),
            entries,
        })
    }

    /// Parses a tab-separated table with a header row.
    pub fn parse(content: &str) -> Result<Self, TaxonomyError> {
        let mut lines = content.lines().enumerate();
        match lines.next() {
            Some((_, header)) if !header.trim().is_empty() => {}
            _ => return Err(TaxonomyError::MissingHeader),
        }
        let mut entries = Vec::new();
        for (idx, line) in lines {
            let line_no = idx + 1;
            let line = line.strip_suffix('\r').unwrap_or(line);
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 4 {
                return Err(TaxonomyError::ColumnCount {
                    line: line_no,
                    found: cols.len(),
                });
            }
            for (value, column) in cols.iter().zip(COLUMNS) {
                if value.trim().is_empty() {
                    return Err(TaxonomyError::EmptyField { line: line_no, column });
                }
            }
            let entry = KeywordEntry {
                category: nfc(cols[0].trim()),
                subcategory: nfc(cols[1].trim()),
                field: nfc(cols[2].trim()),
                keyword: nfc(cols[3].trim()),
            };
            entries.push((line_no, entry));
        }
        let mut seen = HashSet::new();
        for (line, e) in &entries {
            if !seen.insert(e) {
                return Err(TaxonomyError::Duplicate {
                    line: *line,
                    entry: e.clone(),
                });
            }
        }
        Self::from_entries(entries.into_iter().map(|(_, e)| e).collect())
    }

    pub fn load(path: &Path) -> Result<Self, TaxonomyError> {
        let content = std::fs::read_to_string(path).map_err(|source| TaxonomyError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&content)
    }

    /// Distinct keyword strings in table order, first spelling wins when
    /// several differ only by case.
    pub fn keywords(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.entries
            .iter()
            .filter(|e| seen.insert(fold(&e.keyword)))
            .map(|e| e.keyword.as_str())
            .collect()
    }
}

/// Keywords of `table` occurring in `text`.
///
/// Matching is case-folded substring occurrence, so appending text never
/// removes a match. Candidates are scanned longest first and each keyword
/// string is reported once in its table spelling.
pub fn match_keywords_in_text(table: &KeywordTable, text: &str) -> BTreeSet<String> {
    let haystack = fold(text);
    if haystack.is_empty() {
        return BTreeSet::new();
    }
    let mut candidates: Vec<(String, &str)> = table.keywords().into_iter().map(|k| (fold(k), k)).collect();
    candidates.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));
    candidates
        .into_iter()
        .filter(|(folded, _)| haystack.contains(folded.as_str()))
        .map(|(_, k)| k.to_owned())
        .collect()
}
