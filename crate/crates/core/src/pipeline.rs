//! End-to-end flow: directory layout -> dataset -> per-grant channel scores.
//!
//! Input layout under a root directory:
//!
//! ```text
//! grants/<id>/title.txt             optional display title
//! grants/<id>/surface/*.html|txt    public call pages
//! grants/<id>/historical/*.html|txt past results and awardee abstracts
//! researchers/<id>/kaken.txt        header + optional abstract, see below
//! researchers/<id>/papers/*.html|txt
//! ```
//!
//! `kaken.txt` starts with `key: value` header lines (`name`, `keywords`;
//! keywords separated by `;`) and ends the header at the first blank line.
//! Anything after it is the researcher's past application abstract.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assoc::{
    build_transactions, historical_rankings, merge_dbs, mine_rules, AssocError, AssociationRule, HistoricalMatch,
    MiningParams, ResearcherItems, TransactionDB,
};
use crate::corpus::{ingest_corpus, Corpus, CorpusError, DocumentKind, Owner, RawDocument};
use crate::recommend::{recommend, RecommendError, RecommendationList, Researcher, WeightParams};
use crate::relevance::{surface_rankings, RelevanceError, SurfaceMatch};
use crate::taxonomy::{KeywordTable, TaxonomyError};
use crate::text::nfc;
use crate::tokenize::{ProfileError, TokenizerProfile};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Taxonomy(#[from] TaxonomyError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Relevance(#[from] RelevanceError),
    #[error(transparent)]
    Assoc(#[from] AssocError),
    #[error(transparent)]
    Recommend(#[from] RecommendError),
    #[error("{path}: {message}")]
    Layout { path: String, message: String },
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("unknown grant `{0}`")]
    UnknownGrant(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrantInfo {
    pub id: String,
    pub title: String,
    pub surface_documents: usize,
    pub historical_documents: usize,
}

/// A corpus together with the grants and researchers it describes.
/// Persisted as one JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    #[serde(flatten)]
    pub corpus: Corpus,
    pub grants: Vec<GrantInfo>,
    pub researchers: Vec<Researcher>,
}

/// Files of `dir` with an ingestible extension, sorted by name. A missing
/// directory yields nothing.
fn document_files(dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    if !dir.is_dir() {
        return Ok(Vec::new());
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && DocumentKind::from_path(p).is_some())
        .collect();
    files.sort();
    Ok(files)
}

fn subdirectories(dir: &Path) -> Result<Vec<(String, PathBuf)>, PipelineError> {
    if !dir.is_dir() {
        return Ok(Vec::new());
    }
    let mut out: Vec<(String, PathBuf)> = std::fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .filter_map(|p| Some((p.file_name()?.to_str()?.to_owned(), p)))
        .filter(|(name, _)| !name.starts_with('.'))
        .collect();
    out.sort();
    Ok(out)
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Parsed `kaken.txt`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KakenRecord {
    pub name: Option<String>,
    pub keywords: BTreeSet<String>,
    pub abstract_text: String,
}

pub fn parse_kaken(content: &str) -> Result<KakenRecord, String> {
    let mut name = None;
    let mut keywords = BTreeSet::new();
    let mut lines = content.lines();
    for line in lines.by_ref() {
        let line = line.trim();
        if line.is_empty() {
            break;
        }
        let (key, value) = line
            .split_once(':')
            .ok_or_else(|| format!("header line without `key:`: {line}"))?;
        match key.trim().to_ascii_lowercase().as_str() {
            "name" => name = Some(value.trim().to_owned()),
            "keywords" | "keyword" => {
                keywords.extend(value.split(';').map(|k| nfc(k.trim())).filter(|k| !k.is_empty()))
            }
            other => return Err(format!("unknown header key `{other}`")),
        }
    }
    let abstract_text = lines.collect::<Vec<_>>().join("\n").trim().to_owned();
    Ok(KakenRecord {
        name,
        keywords,
        abstract_text,
    })
}

impl Dataset {
    /// Reads the directory layout and ingests every document.
    ///
    /// The tokenizer lexicon is extended with every taxonomy and researcher
    /// keyword so each keyword is counted as one term.
    pub fn load(root: &Path, base: &TokenizerProfile, table: Option<&KeywordTable>) -> Result<Self, PipelineError> {
        let mut sources = Vec::new();
        let mut grants = Vec::new();
        let mut researchers = Vec::new();

        for (gid, dir) in subdirectories(&root.join("grants"))? {
            let title_path = dir.join("title.txt");
            let title = if title_path.is_file() {
                std::fs::read_to_string(&title_path)
                    .map_err(io_err(&title_path))?
                    .trim()
                    .to_owned()
            } else {
                gid.clone()
            };
            let mut info = GrantInfo {
                id: gid.clone(),
                title,
                surface_documents: 0,
                historical_documents: 0,
            };
            for path in document_files(&dir.join("surface"))? {
                let id = format!("grant/{gid}/surface/{}", file_name(&path));
                sources.push(RawDocument::from_file(id, &path, Owner::Grant(gid.clone()))?);
                info.surface_documents += 1;
            }
            for path in document_files(&dir.join("historical"))? {
                let id = format!("grant/{gid}/historical/{}", file_name(&path));
                sources.push(RawDocument::from_file(id, &path, Owner::Historical(gid.clone()))?);
                info.historical_documents += 1;
            }
            grants.push(info);
        }

        for (rid, dir) in subdirectories(&root.join("researchers"))? {
            let kaken_path = dir.join("kaken.txt");
            let record = if kaken_path.is_file() {
                let content = std::fs::read_to_string(&kaken_path).map_err(io_err(&kaken_path))?;
                parse_kaken(&content).map_err(|message| PipelineError::Layout {
                    path: kaken_path.display().to_string(),
                    message,
                })?
            } else {
                KakenRecord {
                    name: None,
                    keywords: BTreeSet::new(),
                    abstract_text: String::new(),
                }
            };
            let mut researcher = Researcher {
                id: rid.clone(),
                display_name: record.name.unwrap_or_else(|| rid.clone()),
                kaken_keywords: record.keywords,
                paper_document_ids: BTreeSet::new(),
                past_kaken_document_ids: BTreeSet::new(),
            };
            if !record.abstract_text.is_empty() {
                let id = format!("researcher/{rid}/kaken");
                sources.push(RawDocument {
                    id: id.clone(),
                    origin: kaken_path.display().to_string(),
                    kind: DocumentKind::PlainText,
                    body: record.abstract_text,
                    owner: Owner::Researcher(rid.clone()),
                });
                researcher.past_kaken_document_ids.insert(id);
            }
            for path in document_files(&dir.join("papers"))? {
                let id = format!("researcher/{rid}/papers/{}", file_name(&path));
                sources.push(RawDocument::from_file(
                    id.clone(),
                    &path,
                    Owner::Researcher(rid.clone()),
                )?);
                researcher.paper_document_ids.insert(id);
            }
            researchers.push(researcher);
        }

        let mut keywords: Vec<String> = table
            .map(|t| t.keywords().into_iter().map(str::to_owned).collect())
            .unwrap_or_default();
        keywords.extend(researchers.iter().flat_map(|r| r.kaken_keywords.iter().cloned()));
        let profile = base.extend_lexicon(keywords);

        Ok(Dataset {
            corpus: ingest_corpus(sources, &profile)?,
            grants,
            researchers,
        })
    }

    pub fn read(path: &Path) -> Result<Self, PipelineError> {
        let content = std::fs::read_to_string(path).map_err(io_err(path))?;
        serde_json::from_str(&content).map_err(|source| PipelineError::Json {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("dataset serializes")
    }

    pub fn grant(&self, id: &str) -> Option<&GrantInfo> {
        self.grants.iter().find(|g| g.id == id)
    }

    fn require_grant(&self, id: &str) -> Result<&GrantInfo, PipelineError> {
        self.grant(id).ok_or_else(|| PipelineError::UnknownGrant(id.to_owned()))
    }

    /// Surface matches for one grant. A grant without surface pages has none.
    pub fn surface_matches(&self, grant_id: &str, table: &KeywordTable) -> Result<Vec<SurfaceMatch>, PipelineError> {
        if self.require_grant(grant_id)?.surface_documents == 0 {
            return Ok(Vec::new());
        }
        Ok(surface_rankings(
            grant_id,
            &self.researchers,
            &self.surface_corpus(),
            table,
        )?)
    }

    /// Historical matches of every researcher against `rules`.
    pub fn historical_matches(&self, grant_id: &str, rules: &[AssociationRule]) -> Vec<HistoricalMatch> {
        let items: Vec<(&str, ResearcherItems)> = self
            .researchers
            .iter()
            .map(|r| (r.id.as_str(), self.researcher_items(r)))
            .collect();
        historical_rankings(grant_id, rules, items.iter().map(|(id, it)| (*id, it)))
    }

    /// Corpus of all grants' surface pages; document frequencies for the
    /// surface channel are taken over this collection.
    pub fn surface_corpus(&self) -> Corpus {
        self.corpus.restrict(|d| matches!(d.owner, Owner::Grant(_)))
    }

    pub fn researcher_items(&self, researcher: &Researcher) -> ResearcherItems {
        ResearcherItems::from_keywords(&researcher.kaken_keywords).with_documents(
            &self.corpus,
            researcher
                .paper_document_ids
                .iter()
                .chain(&researcher.past_kaken_document_ids),
            &self.corpus.profile,
        )
    }

    /// Transactions from every researcher paper and past application.
    pub fn researcher_transactions(&self) -> TransactionDB {
        build_transactions(
            &self.corpus,
            |o| matches!(o, Owner::Researcher(_)),
            &self.corpus.profile,
        )
    }

    pub fn historical_transactions(&self, grant_id: &str) -> TransactionDB {
        build_transactions(
            &self.corpus,
            |o| matches!(o, Owner::Historical(g) if g == grant_id),
            &self.corpus.profile,
        )
    }

    /// Rules for one grant under `source`. An empty database yields no rules.
    pub fn grant_rules(
        &self,
        grant_id: &str,
        params: &MiningParams,
        source: RuleSource,
        researcher_db: &TransactionDB,
    ) -> Result<(TransactionDB, Vec<AssociationRule>), PipelineError> {
        self.require_grant(grant_id)?;
        let historical = self.historical_transactions(grant_id);
        let db = match source {
            RuleSource::Merged => merge_dbs(researcher_db, &historical),
            RuleSource::HistoricalOnly => historical,
        };
        let rules = match mine_rules(&db, params) {
            Ok(rules) => rules,
            Err(AssocError::EmptyDb) => Vec::new(),
            Err(e) => return Err(e.into()),
        };
        Ok((db, rules))
    }
}

/// Which transactions the historical channel mines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleSource {
    /// Researcher papers and abstracts merged with the grant's historical
    /// documents.
    #[default]
    Merged,
    HistoricalOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrantScores {
    pub grant: GrantInfo,
    pub transaction_count: usize,
    pub rule_count: usize,
    pub surface: Vec<SurfaceMatch>,
    pub historical: Vec<HistoricalMatch>,
}

/// Channel scores for every grant. Fusion and thresholding are cheap and
/// run on demand through [`Analysis::recommend`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub mining: MiningParams,
    pub rule_source: RuleSource,
    pub grants: Vec<GrantScores>,
    pub researchers: Vec<Researcher>,
}

impl Analysis {
    pub fn compute(
        dataset: &Dataset,
        table: &KeywordTable,
        mining: &MiningParams,
        rule_source: RuleSource,
    ) -> Result<Self, PipelineError> {
        mining.validate()?;
        let surface_corpus = dataset.surface_corpus();
        let researcher_db = dataset.researcher_transactions();
        let items: Vec<(String, ResearcherItems)> = dataset
            .researchers
            .iter()
            .map(|r| (r.id.clone(), dataset.researcher_items(r)))
            .collect();

        let mut grants = Vec::with_capacity(dataset.grants.len());
        for info in &dataset.grants {
            let surface = if info.surface_documents == 0 {
                Vec::new()
            } else {
                surface_rankings(&info.id, &dataset.researchers, &surface_corpus, table)?
            };
            let (db, rules) = dataset.grant_rules(&info.id, mining, rule_source, &researcher_db)?;
            let historical = historical_rankings(&info.id, &rules, items.iter().map(|(id, it)| (id.as_str(), it)));
            grants.push(GrantScores {
                grant: info.clone(),
                transaction_count: db.transaction_count,
                rule_count: rules.len(),
                surface,
                historical,
            });
        }
        Ok(Self {
            mining: *mining,
            rule_source,
            grants,
            researchers: dataset.researchers.clone(),
        })
    }

    pub fn grant(&self, id: &str) -> Option<&GrantScores> {
        self.grants.iter().find(|g| g.grant.id == id)
    }

    pub fn researcher(&self, id: &str) -> Option<&Researcher> {
        self.researchers.iter().find(|r| r.id == id)
    }

    pub fn recommend(
        &self,
        grant_id: &str,
        params: &WeightParams,
        threshold: f64,
    ) -> Result<RecommendationList, PipelineError> {
        let g = self
            .grant(grant_id)
            .ok_or_else(|| PipelineError::UnknownGrant(grant_id.to_owned()))?;
        Ok(recommend(grant_id, &g.surface, &g.historical, params, threshold)?)
    }

    pub fn read(path: &Path) -> Result<Self, PipelineError> {
        let content = std::fs::read_to_string(path).map_err(io_err(path))?;
        serde_json::from_str(&content).map_err(|source| PipelineError::Json {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("analysis serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kaken_header_and_abstract() {
        let r = parse_kaken("name: Dr. A\nkeywords: Machine Learning; Neural Network ;\n\nWe study rules.\nMore.\n")
            .unwrap();
        assert_eq!(r.name.as_deref(), Some("Dr. A"));
        assert_eq!(r.keywords.len(), 2);
        assert_eq!(r.abstract_text, "We study rules.\nMore.");
    }

    #[test]
    fn kaken_header_only() {
        let r = parse_kaken("keywords: Robotics").unwrap();
        assert!(r.name.is_none());
        assert!(r.abstract_text.is_empty());
    }

    #[test]
    fn kaken_rejects_unknown_keys() {
        assert!(parse_kaken("colour: blue\n").is_err());
        assert!(parse_kaken("no colon here\n").is_err());
    }

    #[test]
    fn missing_directories_give_empty_dataset() {
        let dir = tempfile::tempdir().unwrap();
        let d = Dataset::load(dir.path(), &TokenizerProfile::default(), None).unwrap();
        assert!(d.grants.is_empty() && d.researchers.is_empty());
        assert_eq!(d.corpus.document_count, 0);
    }
}
