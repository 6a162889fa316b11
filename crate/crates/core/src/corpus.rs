//! Document acquisition, cleaning and the term/document index.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::{collapse_whitespace, nfc};
use crate::tokenize::{Tokenizer, TokenizerProfile};

/// Matches one HTML tag, including quoted attribute values containing `>`.
pub const HTML_TAG_PATTERN: &str = r#"<("[^"]*"|'[^']*'|[^'">])*>"#;

/// Sentence delimiters: Japanese and ASCII full stops, exclamation and
/// question marks, and newline.
pub const SENTENCE_DELIMITERS: &[char] = &['。', '．', '.', '！', '!', '？', '?', '\n'];

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("duplicate document id `{0}`")]
    DuplicateId(String),
    #[error("{0} is not valid UTF-8")]
    Undecodable(String),
    #[error("unsupported file type: {0}")]
    UnsupportedFile(String),
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("unknown document `{0}`")]
    UnknownDocument(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DocumentKind {
    Html,
    PlainText,
}

impl DocumentKind {
    /// `.html`/`.htm` are markup, `.txt` is plain text; anything else is not
    /// ingestible.
    pub fn from_path(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "html" | "htm" => Some(DocumentKind::Html),
            "txt" => Some(DocumentKind::PlainText),
            _ => None,
        }
    }
}

/// Which grant or researcher a document belongs to.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "role", content = "id", rename_all = "lowercase")]
pub enum Owner {
    /// Public call text of a grant (surface channel).
    Grant(String),
    /// A researcher's own papers and KAKEN abstract.
    Researcher(String),
    /// Past selection results and awardee abstracts of a grant.
    Historical(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawDocument {
    pub id: String,
    pub origin: String,
    pub kind: DocumentKind,
    pub body: String,
    pub owner: Owner,
}

impl RawDocument {
    /// Reads `path` as a document. The kind is inferred from the extension.
    pub fn from_file(id: impl Into<String>, path: &Path, owner: Owner) -> Result<Self, CorpusError> {
        let kind =
            DocumentKind::from_path(path).ok_or_else(|| CorpusError::UnsupportedFile(path.display().to_string()))?;
        let bytes = std::fs::read(path).map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let body = String::from_utf8(bytes).map_err(|_| CorpusError::Undecodable(path.display().to_string()))?;
        Ok(Self {
            id: id.into(),
            origin: path.display().to_string(),
            kind,
            body,
            owner,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanDocument {
    pub id: String,
    pub text: String,
    pub sentences: Vec<String>,
    pub owner: Owner,
}

fn tag_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(HTML_TAG_PATTERN).expect("valid tag pattern"))
}

/// Removes every HTML tag and collapses whitespace.
///
/// Tags are replaced by a space so words on either side stay apart. Removal
/// repeats until nothing matches, which makes the function idempotent.
pub fn strip_html(body: &str) -> String {
    let re = tag_regex();
    let mut text = body.to_owned();
    while re.is_match(&text) {
        text = re.replace_all(&text, " ").into_owned();
    }
    collapse_whitespace(&text)
}

/// Splits tag-free text into trimmed, non-empty sentences. Delimiters are
/// dropped and inner whitespace collapsed.
pub fn segment_sentences(text: &str) -> Vec<String> {
    text.split(SENTENCE_DELIMITERS)
        .map(collapse_whitespace)
        .filter(|s| !s.is_empty())
        .collect()
}

/// Strips markup (for HTML) and segments into sentences. Output is NFC.
pub fn clean(raw: &RawDocument) -> CleanDocument {
    let body = nfc(&raw.body);
    let (text, sentences) = match raw.kind {
        DocumentKind::Html => {
            let text = strip_html(&body);
            let sentences = segment_sentences(&text);
            (text, sentences)
        }
        // segment before collapsing so line breaks still delimit
        DocumentKind::PlainText => (collapse_whitespace(&body), segment_sentences(&body)),
    };
    CleanDocument {
        id: raw.id.clone(),
        text,
        sentences,
        owner: raw.owner.clone(),
    }
}

/// Cleaned documents plus the statistics TF-IDF needs.
///
/// Immutable once built. `term_counts` holds per-document term occurrence
/// counts under `profile`'s tokenization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub documents: Vec<CleanDocument>,
    pub document_count: usize,
    pub term_document_index: BTreeMap<String, BTreeSet<String>>,
    pub term_counts: BTreeMap<String, BTreeMap<String, u32>>,
    pub profile: TokenizerProfile,
}

/// Cleans and indexes `sources`. Documents are kept sorted by id.
pub fn ingest_corpus(sources: Vec<RawDocument>, profile: &TokenizerProfile) -> Result<Corpus, CorpusError> {
    let mut seen = BTreeSet::new();
    for raw in &sources {
        if !seen.insert(raw.id.as_str()) {
            return Err(CorpusError::DuplicateId(raw.id.clone()));
        }
    }
    let mut documents: Vec<CleanDocument> = sources.iter().map(clean).collect();
    documents.sort_by(|a, b| a.id.cmp(&b.id));

    let term_counts = documents
        .iter()
        .map(|doc| (doc.id.clone(), count_terms(doc, profile)))
        .collect();
    Ok(Corpus::assemble(documents, term_counts, profile.clone()))
}

fn count_terms(doc: &CleanDocument, tokenizer: &impl Tokenizer) -> BTreeMap<String, u32> {
    let mut counts = BTreeMap::new();
    for sentence in &doc.sentences {
        for token in tokenizer.tokens(sentence) {
            *counts.entry(token.surface).or_insert(0) += 1;
        }
    }
    counts
}

impl Corpus {
    fn assemble(
        documents: Vec<CleanDocument>,
        mut term_counts: BTreeMap<String, BTreeMap<String, u32>>,
        profile: TokenizerProfile,
    ) -> Self {
        term_counts.retain(|id, _| documents.iter().any(|d| &d.id == id));
        let mut term_document_index: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for (doc_id, counts) in &term_counts {
            for term in counts.keys() {
                term_document_index
                    .entry(term.clone())
                    .or_default()
                    .insert(doc_id.clone());
            }
        }
        Self {
            document_count: documents.len(),
            documents,
            term_document_index,
            term_counts,
            profile,
        }
    }

    pub fn empty(profile: TokenizerProfile) -> Self {
        Self::assemble(Vec::new(), BTreeMap::new(), profile)
    }

    pub fn document(&self, id: &str) -> Option<&CleanDocument> {
        self.documents
            .binary_search_by(|d| d.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.documents[i])
    }

    pub fn documents_of<'a>(&'a self, owner: &'a Owner) -> impl Iterator<Item = &'a CleanDocument> + 'a {
        self.documents.iter().filter(move |d| &d.owner == owner)
    }

    /// A corpus holding only the documents accepted by `keep`, with the
    /// index rebuilt over them.
    pub fn restrict(&self, keep: impl Fn(&CleanDocument) -> bool) -> Corpus {
        let documents: Vec<CleanDocument> = self.documents.iter().filter(|d| keep(d)).cloned().collect();
        Corpus::assemble(documents, self.term_counts.clone(), self.profile.clone())
    }

    /// Term occurrence counts of one document.
    pub fn term_counts_of(&self, document_id: &str) -> Result<&BTreeMap<String, u32>, CorpusError> {
        self.term_counts
            .get(document_id)
            .ok_or_else(|| CorpusError::UnknownDocument(document_id.to_owned()))
    }

    /// Number of documents containing `term`.
    pub fn document_frequency(&self, term: &str) -> usize {
        self.term_document_index.get(term).map_or(0, BTreeSet::len)
    }
}
