//! Sentence tokenization into noun items.
//!
//! The default [`TokenizerProfile`] approximates morphological analysis with
//! three cheap signals:
//!
//! * a noun lexicon whose phrases are matched longest-first and kept as single
//!   units, so `machine learning` is one item rather than two;
//! * a stopword list;
//! * script boundaries: runs of kanji/katakana are candidate nouns, hiragana
//!   (particles, inflections) and punctuation separate them.
//!
//! A real analyzer can be substituted by implementing [`Tokenizer`].

use std::collections::{BTreeSet, HashMap};
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::{collapse_whitespace, fold};

const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords.txt");

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("`{0}` is both a stopword and a lexicon phrase")]
    Overlap(String),
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// One unit produced by a [`Tokenizer`].
///
/// Surfaces are case-folded. Lexicon phrases keep their single internal
/// spaces; every other surface is whitespace-free.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub is_noun: bool,
}

/// Seam for plugging in a morphological analyzer.
pub trait Tokenizer {
    fn name(&self) -> &str;

    /// Ordered tokens of `sentence`, with multiplicity. These are the terms
    /// counted for term frequency.
    fn tokens(&self, sentence: &str) -> Vec<Token>;

    /// The noun itemset of `sentence`.
    fn nouns(&self, sentence: &str) -> BTreeSet<String> {
        self.tokens(sentence)
            .into_iter()
            .filter(|t| t.is_noun)
            .map(|t| fold(&t.surface))
            .collect()
    }
}

#[derive(Deserialize)]
struct ProfileRepr {
    name: String,
    stopwords: BTreeSet<String>,
    #[serde(default)]
    noun_lexicon: BTreeSet<String>,
}

/// Stopwords plus a noun lexicon. Both sets are stored case-folded.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "ProfileRepr")]
pub struct TokenizerProfile {
    name: String,
    stopwords: BTreeSet<String>,
    noun_lexicon: BTreeSet<String>,
    #[serde(skip)]
    index: OnceLock<LexiconIndex>,
}

impl PartialEq for TokenizerProfile {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.stopwords == other.stopwords && self.noun_lexicon == other.noun_lexicon
    }
}

impl TryFrom<ProfileRepr> for TokenizerProfile {
    type Error = ProfileError;

    fn try_from(r: ProfileRepr) -> Result<Self, Self::Error> {
        TokenizerProfile::new(r.name, r.stopwords, r.noun_lexicon)
    }
}

impl Default for TokenizerProfile {
    fn default() -> Self {
        Self::new("default", parse_phrase_list(DEFAULT_STOPWORDS), Vec::<String>::new())
            .expect("shipped stopword list is valid")
    }
}

fn normalize_phrase(s: &str) -> String {
    collapse_whitespace(&fold(s))
}

/// Parses a one-phrase-per-line file. Blank lines and `#` comments are skipped.
pub fn parse_phrase_list(content: &str) -> Vec<String> {
    content
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_owned)
        .collect()
}

fn read_phrase_file(path: &Path) -> Result<Vec<String>, ProfileError> {
    let content = std::fs::read_to_string(path).map_err(|source| ProfileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(parse_phrase_list(&content))
}

impl TokenizerProfile {
    pub fn new<S, L>(name: impl Into<String>, stopwords: S, noun_lexicon: L) -> Result<Self, ProfileError>
    where
        S: IntoIterator,
        S::Item: AsRef<str>,
        L: IntoIterator,
        L::Item: AsRef<str>,
    {
        let stopwords: BTreeSet<String> = stopwords
            .into_iter()
            .map(|s| normalize_phrase(s.as_ref()))
            .filter(|s| !s.is_empty())
            .collect();
        let noun_lexicon: BTreeSet<String> = noun_lexicon
            .into_iter()
            .map(|s| normalize_phrase(s.as_ref()))
            .filter(|s| !s.is_empty())
            .collect();
        if let Some(both) = stopwords.intersection(&noun_lexicon).next() {
            return Err(ProfileError::Overlap(both.clone()));
        }
        Ok(Self {
            name: name.into(),
            stopwords,
            noun_lexicon,
            index: OnceLock::new(),
        })
    }

    /// Builds a profile from the default stopword list, or from the given
    /// files when present.
    pub fn load(
        name: impl Into<String>,
        stopwords: Option<&Path>,
        lexicon: Option<&Path>,
    ) -> Result<Self, ProfileError> {
        let stop = match stopwords {
            Some(p) => read_phrase_file(p)?,
            None => parse_phrase_list(DEFAULT_STOPWORDS),
        };
        let lex = match lexicon {
            Some(p) => read_phrase_file(p)?,
            None => Vec::new(),
        };
        Self::new(name, stop, lex)
    }

    /// Returns a copy with `phrases` added to the lexicon. Phrases that are
    /// stopwords are skipped rather than rejected.
    pub fn extend_lexicon<I>(&self, phrases: I) -> Self
    where
        I: IntoIterator,
        I::Item: AsRef<str>,
    {
        let mut lexicon = self.noun_lexicon.clone();
        for p in phrases {
            let p = normalize_phrase(p.as_ref());
            if !p.is_empty() && !self.stopwords.contains(&p) {
                lexicon.insert(p);
            }
        }
        Self {
            name: self.name.clone(),
            stopwords: self.stopwords.clone(),
            noun_lexicon: lexicon,
            index: OnceLock::new(),
        }
    }

    pub fn stopwords(&self) -> &BTreeSet<String> {
        &self.stopwords
    }

    pub fn noun_lexicon(&self) -> &BTreeSet<String> {
        &self.noun_lexicon
    }

    fn index(&self) -> &LexiconIndex {
        self.index.get_or_init(|| LexiconIndex::build(&self.noun_lexicon))
    }

    fn is_stopword(&self, s: &str) -> bool {
        self.stopwords.contains(s)
    }

    /// Noun itemset of one sentence.
    ///
    /// Every lexicon phrase occurring in the sentence is an item, including
    /// phrases nested inside or overlapping longer ones. Text not covered by
    /// any lexicon occurrence contributes its words (and kanji/katakana runs)
    /// unless they are stopwords.
    pub fn extract_nouns(&self, sentence: &str) -> BTreeSet<String> {
        let chars: Vec<char> = normalize_phrase(sentence).chars().collect();
        let index = self.index();
        let mut covered = vec![false; chars.len()];
        let mut items = BTreeSet::new();

        for start in 0..chars.len() {
            if !is_boundary(&chars, start) {
                continue;
            }
            for phrase in index.candidates_at(&chars, start) {
                covered[start..start + phrase.len()].fill(true);
                items.insert(phrase.iter().collect::<String>());
            }
        }

        let mut i = 0;
        while i < chars.len() {
            if covered[i] {
                i += 1;
                continue;
            }
            let class = char_class(chars[i]);
            if matches!(class, CharClass::Word | CharClass::Ideograph) {
                let mut j = i;
                while j < chars.len() && !covered[j] && char_class(chars[j]) == class {
                    j += 1;
                }
                let unit: String = chars[i..j].iter().collect();
                if !self.is_stopword(&unit) {
                    items.insert(unit);
                }
                i = j;
            } else {
                i += 1;
            }
        }
        items
    }
}

impl Tokenizer for TokenizerProfile {
    fn name(&self) -> &str {
        &self.name
    }

    /// Greedy left-to-right partition: at each position the longest lexicon
    /// phrase wins, otherwise the word or ideograph run is taken whole.
    fn tokens(&self, sentence: &str) -> Vec<Token> {
        let chars: Vec<char> = normalize_phrase(sentence).chars().collect();
        let index = self.index();
        let mut out = Vec::new();
        let mut pending = String::new();

        let flush = |pending: &mut String, out: &mut Vec<Token>| {
            if !pending.is_empty() {
                let unit = std::mem::take(pending);
                if !self.is_stopword(&unit) {
                    out.push(Token {
                        surface: unit,
                        is_noun: true,
                    });
                }
            }
        };

        let mut i = 0;
        while i < chars.len() {
            if is_boundary(&chars, i) {
                if let Some(phrase) = index.candidates_at(&chars, i).next() {
                    flush(&mut pending, &mut out);
                    out.push(Token {
                        surface: phrase.iter().collect(),
                        is_noun: true,
                    });
                    i += phrase.len();
                    continue;
                }
            }
            match char_class(chars[i]) {
                CharClass::Word => {
                    flush(&mut pending, &mut out);
                    let mut j = i;
                    while j < chars.len() && char_class(chars[j]) == CharClass::Word {
                        j += 1;
                    }
                    pending.extend(&chars[i..j]);
                    flush(&mut pending, &mut out);
                    i = j;
                }
                CharClass::Ideograph => {
                    pending.push(chars[i]);
                    i += 1;
                }
                CharClass::Kana | CharClass::Other => {
                    flush(&mut pending, &mut out);
                    i += 1;
                }
            }
        }
        flush(&mut pending, &mut out);
        out
    }

    fn nouns(&self, sentence: &str) -> BTreeSet<String> {
        self.extract_nouns(sentence)
    }
}

/// Lexicon phrases bucketed by first character, longest first.
#[derive(Debug, Clone, Default)]
struct LexiconIndex {
    by_first: HashMap<char, Vec<Vec<char>>>,
}

impl LexiconIndex {
    fn build(lexicon: &BTreeSet<String>) -> Self {
        let mut by_first: HashMap<char, Vec<Vec<char>>> = HashMap::new();
        for phrase in lexicon {
            let chars: Vec<char> = phrase.chars().collect();
            if let Some(&first) = chars.first() {
                by_first.entry(first).or_default().push(chars);
            }
        }
        for bucket in by_first.values_mut() {
            bucket.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        }
        Self { by_first }
    }

    /// Phrases that occur at `start` and end on a boundary, longest first.
    fn candidates_at<'a>(&'a self, chars: &'a [char], start: usize) -> impl Iterator<Item = &'a [char]> + 'a {
        self.by_first
            .get(&chars[start])
            .into_iter()
            .flatten()
            .filter(move |p| {
                let end = start + p.len();
                end <= chars.len() && chars[start..end] == p[..] && is_boundary(chars, end)
            })
            .map(Vec::as_slice)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CharClass {
    /// Letters and digits of space-delimited scripts.
    Word,
    /// Kanji and katakana. Every position between two of them is a boundary.
    Ideograph,
    /// Hiragana; separates ideograph runs.
    Kana,
    Other,
}

fn char_class(c: char) -> CharClass {
    match c {
        '\u{3040}'..='\u{309f}' => CharClass::Kana,
        '\u{30a0}'..='\u{30ff}'
        | '\u{3400}'..='\u{4dbf}'
        | '\u{4e00}'..='\u{9fff}'
        | '\u{f900}'..='\u{faff}'
        | '\u{ff66}'..='\u{ff9f}'
        | '\u{3005}' => CharClass::Ideograph,
        c if c.is_alphanumeric() => CharClass::Word,
        _ => CharClass::Other,
    }
}

fn is_boundary(chars: &[char], i: usize) -> bool {
    if i == 0 || i >= chars.len() {
        return true;
    }
    !(char_class(chars[i - 1]) == CharClass::Word && char_class(chars[i]) == CharClass::Word)
}
