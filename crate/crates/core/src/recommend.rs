//! Weighted fusion of the two channels, threshold selection and reports.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assoc::{AssociationRule, HistoricalMatch};
use crate::relevance::SurfaceMatch;

/// `alpha + beta` may deviate from 1 by at most this much.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

/// Threshold used when none is given.
pub const DEFAULT_THRESHOLD: f64 = 0.4;

/// A shortlist longer than this is flagged in reports: the grant usually
/// accepts one recommendation letter per university.
pub const SHORTLIST_LIMIT: usize = 2;

#[derive(Debug, Error, PartialEq)]
pub enum RecommendError {
    #[error("invalid weights: alpha {alpha} + beta {beta} must equal 1")]
    InvalidWeights { alpha: f64, beta: f64 },
    #[error("`{field}` = {value} is outside [0, 1]")]
    OutOfRange { field: &'static str, value: f64 },
    #[error("unsupported report format `{0}` (expected `table` or `json`)")]
    UnsupportedFormat(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Researcher {
    pub id: String,
    pub display_name: String,
    pub kaken_keywords: BTreeSet<String>,
    #[serde(default)]
    pub paper_document_ids: BTreeSet<String>,
    #[serde(default)]
    pub past_kaken_document_ids: BTreeSet<String>,
}

fn check_unit(field: &'static str, value: f64) -> Result<f64, RecommendError> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(RecommendError::OutOfRange { field, value })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightParams {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for WeightParams {
    fn default() -> Self {
        Self { alpha: 0.5, beta: 0.5 }
    }
}

impl WeightParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self, RecommendError> {
        let params = Self { alpha, beta };
        params.validate()?;
        Ok(params)
    }

    /// `beta` is derived as `1 - alpha`.
    pub fn from_alpha(alpha: f64) -> Result<Self, RecommendError> {
        check_unit("alpha", alpha)?;
        Self::new(alpha, 1.0 - alpha)
    }

    pub fn validate(&self) -> Result<(), RecommendError> {
        check_unit("alpha", self.alpha)?;
        check_unit("beta", self.beta)?;
        if ((self.alpha + self.beta) - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(RecommendError::InvalidWeights {
                alpha: self.alpha,
                beta: self.beta,
            });
        }
        Ok(())
    }
}

/// `alpha * surface + beta * historical`.
pub fn total_score(surface: f64, historical: f64, params: &WeightParams) -> Result<f64, RecommendError> {
    params.validate()?;
    check_unit("surface", surface)?;
    check_unit("historical", historical)?;
    Ok(params.alpha * surface + params.beta * historical)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendationEntry {
    pub researcher_id: String,
    pub surface: f64,
    pub historical: f64,
    pub total: f64,
    pub selected: bool,
    #[serde(default)]
    pub matched_keywords: BTreeSet<String>,
    #[serde(default)]
    pub matched_rules: Vec<AssociationRule>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendationList {
    pub grant_id: String,
    pub params: WeightParams,
    pub threshold: f64,
    /// Sorted by total descending, then researcher id.
    pub entries: Vec<RecommendationEntry>,
    /// Ids of the entries with `total >= threshold`, in entry order.
    pub selected: Vec<String>,
}

impl RecommendationList {
    pub fn entry(&self, researcher_id: &str) -> Option<&RecommendationEntry> {
        self.entries.iter().find(|e| e.researcher_id == researcher_id)
    }

    pub fn exceeds_shortlist(&self) -> bool {
        self.selected.len() > SHORTLIST_LIMIT
    }
}

/// One entry per researcher present in either channel; a missing channel
/// contributes 0. Nothing is selected until [`apply_threshold`] runs (the
/// returned list uses threshold 0, which selects every entry).
pub fn rank_candidates(
    grant_id: &str,
    surface: &[SurfaceMatch],
    historical: &[HistoricalMatch],
    params: &WeightParams,
) -> Result<RecommendationList, RecommendError> {
    params.validate()?;
    let mut by_id: BTreeMap<&str, RecommendationEntry> = BTreeMap::new();
    let blank = |id: &str| RecommendationEntry {
        researcher_id: id.to_owned(),
        surface: 0.0,
        historical: 0.0,
        total: 0.0,
        selected: false,
        matched_keywords: BTreeSet::new(),
        matched_rules: Vec::new(),
    };
    for m in surface {
        let e = by_id.entry(&m.researcher_id).or_insert_with(|| blank(&m.researcher_id));
        e.surface = m.normalized_score;
        e.matched_keywords = m.matched_keywords.clone();
    }
    for m in historical {
        let e = by_id.entry(&m.researcher_id).or_insert_with(|| blank(&m.researcher_id));
        e.historical = m.normalized_score;
        e.matched_rules = m.matched_rules.clone();
    }
    let mut entries = Vec::with_capacity(by_id.len());
    for (_, mut e) in by_id {
        e.total = total_score(e.surface, e.historical, params)?;
        entries.push(e);
    }
    entries.sort_by(|a, b| {
        b.total
            .total_cmp(&a.total)
            .then_with(|| a.researcher_id.cmp(&b.researcher_id))
    });
    let list = RecommendationList {
        grant_id: grant_id.to_owned(),
        params: *params,
        threshold: 0.0,
        entries,
        selected: Vec::new(),
    };
    apply_threshold(&list, 0.0)
}

/// Re-selects `list` at `threshold`: every entry with `total >= threshold`,
/// order preserved.
pub fn apply_threshold(list: &RecommendationList, threshold: f64) -> Result<RecommendationList, RecommendError> {
    check_unit("threshold", threshold)?;
    let mut out = list.clone();
    out.threshold = threshold;
    out.selected.clear();
    for e in &mut out.entries {
        e.selected = e.total >= threshold;
        if e.selected {
            out.selected.push(e.researcher_id.clone());
        }
    }
    Ok(out)
}

/// Ranks and thresholds in one step.
pub fn recommend(
    grant_id: &str,
    surface: &[SurfaceMatch],
    historical: &[HistoricalMatch],
    params: &WeightParams,
    threshold: f64,
) -> Result<RecommendationList, RecommendError> {
    check_unit("threshold", threshold)?;
    apply_threshold(&rank_candidates(grant_id, surface, historical, params)?, threshold)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Table,
    Json,
}

impl FromStr for ReportFormat {
    type Err = RecommendError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "table" => Ok(ReportFormat::Table),
            "json" => Ok(ReportFormat::Json),
            _ => Err(RecommendError::UnsupportedFormat(s.to_owned())),
        }
    }
}

pub fn render_report(list: &RecommendationList, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => serde_json::to_string_pretty(list).expect("list serializes"),
        ReportFormat::Table => render_table(list),
    }
}

pub fn read_report_json(s: &str) -> serde_json::Result<RecommendationList> {
    serde_json::from_str(s)
}

/// Rules shown per row in the table report.
const TABLE_RULES: usize = 3;

fn join_rules(rules: &[AssociationRule]) -> String {
    let mut s = rules
        .iter()
        .take(TABLE_RULES)
        .map(|r| format!("{r} (lift {:.3})", r.lift))
        .collect::<Vec<_>>()
        .join("; ");
    if rules.len() > TABLE_RULES {
        s.push_str(&format!(" (+{} more)", rules.len() - TABLE_RULES));
    }
    s
}

fn render_table(list: &RecommendationList) -> String {
    let header = [
        "Researcher",
        "Surface",
        "Historical",
        "Total",
        "Selected",
        "Matched keywords",
        "Matched rules",
    ];
    let rows: Vec<[String; 7]> = list
        .entries
        .iter()
        .map(|e| {
            [
                e.researcher_id.clone(),
                format!("{:.3}", e.surface),
                format!("{:.3}", e.historical),
                format!("{:.3}", e.total),
                if e.selected { "*".into() } else { String::new() },
                e.matched_keywords.iter().cloned().collect::<Vec<_>>().join(", "),
                join_rules(&e.matched_rules),
            ]
        })
        .collect();

    let mut out = String::new();
    let _ = writeln!(
        out,
        "grant {}  alpha={:.2} beta={:.2}  threshold={:.2}",
        list.grant_id, list.params.alpha, list.params.beta, list.threshold
    );
    write_grid(&mut out, &header.map(String::from), &rows);
    if !list.entries.is_empty() {
        let _ = write!(out, "selected: {}", list.selected.len());
        if list.exceeds_shortlist() {
            let _ = write!(
                out,
                " (more than {SHORTLIST_LIMIT}; consider a higher threshold or different alpha)"
            );
        }
        out.push('\n');
    }
    out
}

/// Side-by-side totals of the same researchers under several weightings,
/// one column per list. Rows are ordered by researcher id; `*` marks a
/// selected entry.
pub fn render_totals_table(lists: &[RecommendationList]) -> String {
    let mut header = vec!["Researcher".to_string()];
    header.extend(
        lists
            .iter()
            .map(|l| format!("alpha={:.1}, beta={:.1}", l.params.alpha, l.params.beta)),
    );
    let ids: BTreeSet<&str> = lists
        .iter()
        .flat_map(|l| l.entries.iter().map(|e| e.researcher_id.as_str()))
        .collect();
    let rows: Vec<Vec<String>> = ids
        .into_iter()
        .map(|id| {
            let mut row = vec![id.to_string()];
            for l in lists {
                row.push(match l.entry(id) {
                    Some(e) if e.selected => format!("{:.3}*", e.total),
                    Some(e) => format!("{:.3}", e.total),
                    None => "-".into(),
                });
            }
            row
        })
        .collect();
    let mut out = String::new();
    write_grid(&mut out, &header, &rows);
    out
}

fn write_grid<R: AsRef<[String]>>(out: &mut String, header: &[String], rows: &[R]) {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row.as_ref()) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: &[String]| {
        let mut s = String::new();
        for (i, (cell, w)) in cells.iter().zip(&widths).enumerate() {
            if i > 0 {
                s.push_str("  ");
            }
            let _ = write!(s, "{cell:<w$}");
        }
        s.trim_end().to_owned()
    };
    let _ = writeln!(out, "{}", line(header));
    let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
    let _ = writeln!(out, "{}", line(&rule));
    for row in rows {
        let _ = writeln!(out, "{}", line(row.as_ref()));
    }
}
