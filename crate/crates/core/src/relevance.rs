//! TF-IDF weighting and the surface-channel score.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CleanDocument, Corpus, Owner};
use crate::recommend::Researcher;
use crate::taxonomy::{match_keywords_in_text, KeywordTable};
use crate::text::{collapse_whitespace, fold};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RelevanceError {
    #[error("unknown document `{0}`")]
    UnknownDocument(String),
    #[error("document `{0}` has no terms; term frequency is undefined")]
    EmptyDocument(String),
    #[error("grant `{0}` has no surface documents")]
    EmptyGrant(String),
    #[error("researcher `{0}` has no keywords")]
    NoKeywords(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermWeight {
    pub term: String,
    pub document_id: String,
    pub tf: f64,
    pub idf: f64,
    pub tfidf: f64,
}

/// `tf(t,d) * idf(t)` with `tf = n(t,d) / sum_k n(k,d)` and
/// `idf = ln(|D| / df(t))`. A term found in no document gets `df = 1`, which
/// leaves `tf = 0` and therefore a zero weight.
pub fn tfidf(term: &str, document_id: &str, corpus: &Corpus) -> Result<TermWeight, RelevanceError> {
    let counts = corpus
        .term_counts_of(document_id)
        .map_err(|_| RelevanceError::UnknownDocument(document_id.to_owned()))?;
    let total: u64 = counts.values().map(|&n| u64::from(n)).sum();
    if total == 0 {
        return Err(RelevanceError::EmptyDocument(document_id.to_owned()));
    }
    let term = collapse_whitespace(&fold(term));
    let occurrences = counts.get(&term).copied().unwrap_or(0);
    let tf = f64::from(occurrences) / total as f64;
    let df = corpus.document_frequency(&term).max(1);
    let idf = (corpus.document_count as f64 / df as f64).ln();
    Ok(TermWeight {
        tfidf: tf * idf,
        term,
        document_id: document_id.to_owned(),
        tf,
        idf,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceMatch {
    pub researcher_id: String,
    pub grant_id: String,
    pub matched_keywords: BTreeSet<String>,
    pub raw_score: f64,
    pub normalized_score: f64,
}

/// Keyword weights of one grant's surface documents.
///
/// Each table keyword found in the grant text carries its maximum TF-IDF
/// over the grant's surface documents; the sum over all of them is the
/// normalization mass for researcher scores.
#[derive(Debug, Clone, PartialEq)]
pub struct GrantSurface {
    grant_id: String,
    /// folded keyword -> weight
    weights: BTreeMap<String, f64>,
    mass: f64,
}

impl GrantSurface {
    pub fn build(grant_id: &str, corpus: &Corpus, table: &KeywordTable) -> Result<Self, RelevanceError> {
        let owner = Owner::Grant(grant_id.to_owned());
        let docs: Vec<&CleanDocument> = corpus.documents_of(&owner).collect();
        if docs.is_empty() {
            return Err(RelevanceError::EmptyGrant(grant_id.to_owned()));
        }
        let mut present = BTreeSet::new();
        for doc in &docs {
            present.extend(match_keywords_in_text(table, &doc.text));
        }
        let mut weights = BTreeMap::new();
        for keyword in present {
            let mut best = 0.0_f64;
            for doc in &docs {
                match tfidf(&keyword, &doc.id, corpus) {
                    Ok(w) => best = best.max(w.tfidf),
                    Err(RelevanceError::EmptyDocument(_)) => {}
                    Err(e) => return Err(e),
                }
            }
            weights.insert(fold(&keyword), best);
        }
        Ok(Self::from_weights(grant_id, weights))
    }

    /// Builds directly from per-keyword weights (keys are folded).
    pub fn from_weights(grant_id: &str, weights: BTreeMap<String, f64>) -> Self {
        let weights: BTreeMap<String, f64> = weights.into_iter().map(|(k, w)| (fold(&k), w)).collect();
        let mass = weights.values().sum();
        Self {
            grant_id: grant_id.to_owned(),
            weights,
            mass,
        }
    }

    pub fn weights(&self) -> &BTreeMap<String, f64> {
        &self.weights
    }

    pub fn score(&self, researcher: &Researcher) -> Result<SurfaceMatch, RelevanceError> {
        if researcher.kaken_keywords.is_empty() {
            return Err(RelevanceError::NoKeywords(researcher.id.clone()));
        }
        let mut matched = BTreeSet::new();
        let mut seen = BTreeSet::new();
        let mut raw = 0.0;
        for keyword in &researcher.kaken_keywords {
            let folded = fold(keyword);
            if let Some(w) = self.weights.get(&folded) {
                if seen.insert(folded) {
                    matched.insert(keyword.clone());
                    raw += w;
                }
            }
        }
        let normalized = if self.mass > 0.0 {
            (raw / self.mass).clamp(0.0, 1.0)
        } else {
            0.0
        };
        Ok(SurfaceMatch {
            researcher_id: researcher.id.clone(),
            grant_id: self.grant_id.clone(),
            matched_keywords: matched,
            raw_score: raw,
            normalized_score: normalized,
        })
    }
}

pub fn surface_score(
    researcher: &Researcher,
    grant_id: &str,
    corpus: &Corpus,
    table: &KeywordTable,
) -> Result<SurfaceMatch, RelevanceError> {
    GrantSurface::build(grant_id, corpus, table)?.score(researcher)
}

/// Surface matches of every researcher with at least one matched keyword,
/// best first. Researchers without keywords are skipped.
pub fn surface_rankings<'a>(
    grant_id: &str,
    researchers: impl IntoIterator<Item = &'a Researcher>,
    corpus: &Corpus,
    table: &KeywordTable,
) -> Result<Vec<SurfaceMatch>, RelevanceError> {
    let grant = GrantSurface::build(grant_id, corpus, table)?;
    let mut out = Vec::new();
    for r in researchers {
        if r.kaken_keywords.is_empty() {
            continue;
        }
        let m = grant.score(r)?;
        if !m.matched_keywords.is_empty() {
            out.push(m);
        }
    }
    sort_surface(&mut out);
    Ok(out)
}

/// Descending normalized score, then ascending researcher id.
pub fn sort_surface(matches: &mut [SurfaceMatch]) {
    matches.sort_by(|a, b| {
        b.normalized_score
            .total_cmp(&a.normalized_score)
            .then_with(|| a.researcher_id.cmp(&b.researcher_id))
    });
}
