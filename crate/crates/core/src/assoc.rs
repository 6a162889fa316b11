//! Transactions, association-rule mining and the historical-channel score.
//!
//! Every sentence of a historical abstract is a transaction whose items are
//! its nouns. Rules `X -> Y` are mined level-wise (Apriori) and measured by
//!
//! ```text
//! sigma(Z)     = |{t in T : Z subset of t}|
//! support      = sigma(X u Y) / N
//! confidence   = sigma(X u Y) / sigma(X)
//! lift         = confidence / (sigma(Y) / N)
//! ```

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, Owner};
use crate::text::fold;
use crate::tokenize::Tokenizer;

pub type Itemset = BTreeSet<String>;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AssocError {
    #[error("invalid rule: {0}")]
    InvalidRule(&'static str),
    #[error("metric undefined: {0} never occurs")]
    UndefinedMetric(&'static str),
    #[error("transaction database is empty")]
    EmptyDb,
    #[error("invalid mining parameter `{field}`: {reason}")]
    InvalidParams { field: &'static str, reason: &'static str },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransactionSource {
    pub document_id: String,
    pub sentence_index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transaction {
    pub id: String,
    pub items: Itemset,
    pub source: Option<TransactionSource>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TransactionDB {
    pub transactions: Vec<Transaction>,
    pub transaction_count: usize,
    pub item_universe: Itemset,
}

impl TransactionDB {
    fn from_transactions(transactions: Vec<Transaction>) -> Self {
        let item_universe = transactions.iter().flat_map(|t| t.items.iter().cloned()).collect();
        Self {
            transaction_count: transactions.len(),
            transactions,
            item_universe,
        }
    }

    /// Builds a database from literal itemsets. Items are case-folded and
    /// empty itemsets are dropped.
    pub fn from_itemsets<I, S, T>(itemsets: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: IntoIterator<Item = T>,
        T: AsRef<str>,
    {
        let transactions = itemsets
            .into_iter()
            .map(|s| s.into_iter().map(|i| fold(i.as_ref())).collect::<Itemset>())
            .filter(|items| !items.is_empty())
            .enumerate()
            .map(|(i, items)| Transaction {
                id: format!("t{}", i + 1),
                items,
                source: None,
            })
            .collect();
        Self::from_transactions(transactions)
    }

    /// Number of transactions containing every item of `itemset`.
    pub fn support_count(&self, itemset: &Itemset) -> usize {
        self.transactions.iter().filter(|t| itemset.is_subset(&t.items)).count()
    }
}

/// One transaction per sentence with a non-empty noun set, over the documents
/// whose owner passes `filter`.
pub fn build_transactions(
    corpus: &Corpus,
    filter: impl Fn(&Owner) -> bool,
    tokenizer: &impl Tokenizer,
) -> TransactionDB {
    let mut transactions = Vec::new();
    for doc in corpus.documents.iter().filter(|d| filter(&d.owner)) {
        for (idx, sentence) in doc.sentences.iter().enumerate() {
            let items = tokenizer.nouns(sentence);
            if items.is_empty() {
                continue;
            }
            transactions.push(Transaction {
                id: format!("{}#{}", doc.id, idx),
                items,
                source: Some(TransactionSource {
                    document_id: doc.id.clone(),
                    sentence_index: idx,
                }),
            });
        }
    }
    TransactionDB::from_transactions(transactions)
}

/// Concatenates two databases. Transaction ids are renumbered `t1..tN`;
/// sources are kept.
pub fn merge_dbs(a: &TransactionDB, b: &TransactionDB) -> TransactionDB {
    let transactions = a
        .transactions
        .iter()
        .chain(&b.transactions)
        .enumerate()
        .map(|(i, t)| Transaction {
            id: format!("t{}", i + 1),
            items: t.items.clone(),
            source: t.source.clone(),
        })
        .collect();
    TransactionDB::from_transactions(transactions)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuleMetrics {
    pub support: f64,
    pub confidence: f64,
    pub lift: f64,
}

impl RuleMetrics {
    /// `n` transactions, `sx = sigma(X)`, `sy = sigma(Y)`, `sxy = sigma(X u Y)`.
    fn from_counts(n: usize, sx: usize, sy: usize, sxy: usize) -> Self {
        let n = n as f64;
        let confidence = sxy as f64 / sx as f64;
        Self {
            support: sxy as f64 / n,
            confidence,
            lift: confidence / (sy as f64 / n),
        }
    }
}

pub fn rule_metrics(db: &TransactionDB, x: &Itemset, y: &Itemset) -> Result<RuleMetrics, AssocError> {
    if x.is_empty() || y.is_empty() {
        return Err(AssocError::InvalidRule("antecedent and consequent must be non-empty"));
    }
    if !x.is_disjoint(y) {
        return Err(AssocError::InvalidRule("antecedent and consequent overlap"));
    }
    if db.transaction_count == 0 {
        return Err(AssocError::EmptyDb);
    }
    let x: Itemset = x.iter().map(|i| fold(i)).collect();
    let y: Itemset = y.iter().map(|i| fold(i)).collect();
    let sx = db.support_count(&x);
    if sx == 0 {
        return Err(AssocError::UndefinedMetric("antecedent"));
    }
    let sy = db.support_count(&y);
    if sy == 0 {
        return Err(AssocError::UndefinedMetric("consequent"));
    }
    let xy: Itemset = x.union(&y).cloned().collect();
    Ok(RuleMetrics::from_counts(
        db.transaction_count,
        sx,
        sy,
        db.support_count(&xy),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssociationRule {
    pub antecedent: Itemset,
    pub consequent: Itemset,
    pub support: f64,
    pub confidence: f64,
    pub lift: f64,
}

impl fmt::Display for AssociationRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |s: &Itemset| s.iter().map(String::as_str).collect::<Vec<_>>().join(", ");
        write!(f, "{{{}}} → {{{}}}", join(&self.antecedent), join(&self.consequent))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MiningParams {
    pub min_support: f64,
    pub min_confidence: f64,
    pub max_itemset_width: usize,
}

impl Default for MiningParams {
    fn default() -> Self {
        Self {
            min_support: 0.05,
            min_confidence: 0.5,
            max_itemset_width: 3,
        }
    }
}

pub const MAX_ITEMSET_WIDTH: usize = 8;

impl MiningParams {
    pub fn validate(&self) -> Result<(), AssocError> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !unit(self.min_support) {
            return Err(AssocError::InvalidParams {
                field: "min_support",
                reason: "must lie in [0, 1]",
            });
        }
        if !unit(self.min_confidence) {
            return Err(AssocError::InvalidParams {
                field: "min_confidence",
                reason: "must lie in [0, 1]",
            });
        }
        if !(1..=MAX_ITEMSET_WIDTH).contains(&self.max_itemset_width) {
            return Err(AssocError::InvalidParams {
                field: "max_itemset_width",
                reason: "must lie in [1, 8]",
            });
        }
        Ok(())
    }
}

/// Mines every rule `X -> Y` with `|X u Y| <= max_itemset_width`,
/// `support >= min_support` and `confidence >= min_confidence`.
///
/// Only itemsets observed in at least one transaction are considered, so a
/// zero `min_support` does not produce never-seen rules. Output is sorted by
/// antecedent, then consequent.
pub fn mine_rules(db: &TransactionDB, params: &MiningParams) -> Result<Vec<AssociationRule>, AssocError> {
    params.validate()?;
    if db.transaction_count == 0 {
        return Err(AssocError::EmptyDb);
    }
    let frequent = frequent_itemsets(db, params.min_support, params.max_itemset_width);
    let n = db.transaction_count;

    let mut rules = Vec::new();
    for (itemset, &sz) in &frequent.counts {
        let width = itemset.len();
        if width < 2 {
            continue;
        }
        // every non-empty proper subset as antecedent
        for mask in 1..(1u32 << width) - 1 {
            let (x, y): (Vec<u32>, Vec<u32>) = {
                let mut x = Vec::new();
                let mut y = Vec::new();
                for (bit, &item) in itemset.iter().enumerate() {
                    if mask & (1 << bit) != 0 {
                        x.push(item);
                    } else {
                        y.push(item);
                    }
                }
                (x, y)
            };
            let sx = frequent.counts[&x];
            let sy = frequent.counts[&y];
            let metrics = RuleMetrics::from_counts(n, sx, sy, sz);
            if metrics.confidence < params.min_confidence {
                continue;
            }
            rules.push(AssociationRule {
                antecedent: frequent.names(&x),
                consequent: frequent.names(&y),
                support: metrics.support,
                confidence: metrics.confidence,
                lift: metrics.lift,
            });
        }
    }
    rules.sort_by(|a, b| {
        a.antecedent
            .cmp(&b.antecedent)
            .then_with(|| a.consequent.cmp(&b.consequent))
    });
    Ok(rules)
}

struct FrequentItemsets {
    items: Vec<String>,
    counts: HashMap<Vec<u32>, usize>,
}

impl FrequentItemsets {
    fn names(&self, ids: &[u32]) -> Itemset {
        ids.iter().map(|&i| self.items[i as usize].clone()).collect()
    }
}

/// Level-wise search. Candidates of width k join two frequent (k-1)-itemsets
/// sharing their first k-2 items and survive only if every (k-1)-subset is
/// frequent.
fn frequent_itemsets(db: &TransactionDB, min_support: f64, max_width: usize) -> FrequentItemsets {
    let items: Vec<String> = db.item_universe.iter().cloned().collect();
    let id_of: HashMap<&str, u32> = items.iter().enumerate().map(|(i, s)| (s.as_str(), i as u32)).collect();
    let transactions: Vec<Vec<u32>> = db
        .transactions
        .iter()
        .map(|t| t.items.iter().map(|i| id_of[i.as_str()]).collect())
        .collect();
    let n = db.transaction_count as f64;
    let is_frequent = |count: usize| count >= 1 && count as f64 / n >= min_support;

    let mut counts: HashMap<Vec<u32>, usize> = HashMap::new();
    let mut level: Vec<Vec<u32>> = {
        let mut singles = vec![0usize; items.len()];
        for t in &transactions {
            for &i in t {
                singles[i as usize] += 1;
            }
        }
        singles
            .into_iter()
            .enumerate()
            .filter(|&(_, c)| is_frequent(c))
            .map(|(i, c)| {
                counts.insert(vec![i as u32], c);
                vec![i as u32]
            })
            .collect()
    };

    let mut width = 1;
    while width < max_width && level.len() > 1 {
        let previous: HashSet<&Vec<u32>> = level.iter().collect();
        let mut candidates = Vec::new();
        for (a_idx, a) in level.iter().enumerate() {
            for b in &level[a_idx + 1..] {
                if a[..width - 1] != b[..width - 1] {
                    // level is sorted, so no later b shares a's prefix
                    break;
                }
                let mut candidate = a.clone();
                candidate.push(b[width - 1]);
                let all_subsets_frequent = (0..candidate.len()).all(|skip| {
                    let subset: Vec<u32> = candidate
                        .iter()
                        .enumerate()
                        .filter(|&(i, _)| i != skip)
                        .map(|(_, &v)| v)
                        .collect();
                    previous.contains(&subset)
                });
                if all_subsets_frequent {
                    candidates.push(candidate);
                }
            }
        }
        let mut next = Vec::new();
        for candidate in candidates {
            let count = transactions.iter().filter(|t| is_sorted_subset(&candidate, t)).count();
            if is_frequent(count) {
                counts.insert(candidate.clone(), count);
                next.push(candidate);
            }
        }
        next.sort();
        level = next;
        width += 1;
    }
    FrequentItemsets { items, counts }
}

fn is_sorted_subset(needle: &[u32], haystack: &[u32]) -> bool {
    let mut h = haystack.iter();
    needle.iter().all(|n| h.any(|x| x == n))
}

/// The items a researcher is considered to cover: their keywords plus the
/// nouns of their own papers and abstracts. Stored case-folded.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResearcherItems(BTreeSet<String>);

impl ResearcherItems {
    pub fn from_keywords<I, S>(keywords: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self(keywords.into_iter().map(|k| fold(k.as_ref())).collect())
    }

    /// Adds the nouns of every sentence of the given documents. Unknown ids
    /// are ignored.
    pub fn with_documents<'a>(
        mut self,
        corpus: &Corpus,
        document_ids: impl IntoIterator<Item = &'a String>,
        tokenizer: &impl Tokenizer,
    ) -> Self {
        for id in document_ids {
            if let Some(doc) = corpus.document(id) {
                for sentence in &doc.sentences {
                    self.0.extend(tokenizer.nouns(sentence));
                }
            }
        }
        self
    }

    pub fn contains_all(&self, items: &Itemset) -> bool {
        items.iter().all(|i| self.0.contains(&fold(i)))
    }

    pub fn items(&self) -> &BTreeSet<String> {
        &self.0
    }
}

/// Rules whose whole consequent is covered by the researcher, highest lift
/// first.
pub fn match_rules_to_researcher(rules: &[AssociationRule], researcher: &ResearcherItems) -> Vec<AssociationRule> {
    let mut matched: Vec<AssociationRule> = rules
        .iter()
        .filter(|r| researcher.contains_all(&r.consequent))
        .cloned()
        .collect();
    matched.sort_by(|a, b| {
        b.lift
            .total_cmp(&a.lift)
            .then_with(|| a.antecedent.cmp(&b.antecedent))
            .then_with(|| a.consequent.cmp(&b.consequent))
    });
    matched
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoricalMatch {
    pub researcher_id: String,
    pub grant_id: String,
    pub matched_rules: Vec<AssociationRule>,
    pub raw_score: f64,
    pub normalized_score: f64,
}

/// Sum of lift over the rules matched by the researcher, normalized by the
/// lift mass of all of the grant's rules.
pub fn historical_score(
    researcher_id: &str,
    grant_id: &str,
    rules: &[AssociationRule],
    researcher: &ResearcherItems,
) -> HistoricalMatch {
    let matched = match_rules_to_researcher(rules, researcher);
    let raw: f64 = matched.iter().map(|r| r.lift).sum();
    let mass: f64 = rules.iter().map(|r| r.lift).sum();
    let normalized = if matched.is_empty() || mass <= 0.0 {
        0.0
    } else {
        (raw / mass).clamp(0.0, 1.0)
    };
    HistoricalMatch {
        researcher_id: researcher_id.to_owned(),
        grant_id: grant_id.to_owned(),
        raw_score: if matched.is_empty() { 0.0 } else { raw },
        matched_rules: matched,
        normalized_score: normalized,
    }
}

/// Historical matches with at least one rule, best first (ties by id).
pub fn historical_rankings<'a>(
    grant_id: &str,
    rules: &[AssociationRule],
    researchers: impl IntoIterator<Item = (&'a str, &'a ResearcherItems)>,
) -> Vec<HistoricalMatch> {
    let mut out: Vec<HistoricalMatch> = researchers
        .into_iter()
        .map(|(id, items)| historical_score(id, grant_id, rules, items))
        .filter(|m| !m.matched_rules.is_empty())
        .collect();
    out.sort_by(|a, b| {
        b.normalized_score
            .total_cmp(&a.normalized_score)
            .then_with(|| a.researcher_id.cmp(&b.researcher_id))
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{ingest_corpus, DocumentKind, RawDocument};
    use crate::tokenize::TokenizerProfile;

    fn set(items: &[&str]) -> Itemset {
        items.iter().map(|s| fold(s)).collect()
    }

    /// The five-transaction example database. The fifth row's
    /// "Neural Network Information Retrieval" is two items, and the fourth
    /// row's "Knowledge Acquisitions" is read as "Knowledge Acquisition".
    fn example_db() -> TransactionDB {
        TransactionDB::from_itemsets([
            vec!["Machine Learning", "Neural Network"],
            vec![
                "Machine Learning",
                "Information Retrieval",
                "Knowledge Acquisition",
                "Industrial Engineering",
            ],
            vec![
                "Neural Network",
                "Information Retrieval",
                "Knowledge Acquisition",
                "Information Theory",
            ],
            vec![
                "Machine Learning",
                "Neural Network",
                "Information Retrieval",
                "Knowledge Acquisition",
            ],
            vec![
                "Machine Learning",
                "Neural Network",
                "Information Retrieval",
                "Information Theory",
            ],
        ])
    }

    #[test]
    fn example_metrics() {
        let m = rule_metrics(&example_db(), &set(&["machine learning"]), &set(&["neural network"])).unwrap();
        assert_eq!(m.support, 0.6);
        assert_eq!(m.confidence, 0.75);
        assert_eq!(m.lift, 0.9375);
    }

    #[test]
    fn metric_errors() {
        let db = example_db();
        assert!(matches!(
            rule_metrics(&db, &set(&["a"]), &set(&["a"])),
            Err(AssocError::InvalidRule(_))
        ));
        assert_eq!(
            rule_metrics(&db, &set(&["quantum"]), &set(&["neural network"])),
            Err(AssocError::UndefinedMetric("antecedent"))
        );
        assert_eq!(
            rule_metrics(&TransactionDB::default(), &set(&["a"]), &set(&["b"])),
            Err(AssocError::EmptyDb)
        );
    }

    #[test]
    fn ubiquitous_items_are_independent() {
        let db = TransactionDB::from_itemsets([vec!["a", "b"], vec!["a", "b", "c"]]);
        let m = rule_metrics(&db, &set(&["a"]), &set(&["b"])).unwrap();
        assert_eq!((m.confidence, m.lift), (1.0, 1.0));
    }

    #[test]
    fn mining_example_db() {
        let params = MiningParams {
            min_support: 0.6,
            min_confidence: 0.7,
            max_itemset_width: 2,
        };
        let rules = mine_rules(&example_db(), &params).unwrap();
        let ml_nn = rules
            .iter()
            .find(|r| r.antecedent == set(&["machine learning"]) && r.consequent == set(&["neural network"]))
            .expect("rule present");
        assert_eq!((ml_nn.support, ml_nn.confidence, ml_nn.lift), (0.6, 0.75, 0.9375));

        let none = mine_rules(
            &example_db(),
            &MiningParams {
                min_support: 1.0,
                ..params
            },
        )
        .unwrap();
        assert!(none.is_empty());
    }

    #[test]
    fn single_transaction_pair() {
        let db = TransactionDB::from_itemsets([vec!["a", "b"]]);
        let rules = mine_rules(
            &db,
            &MiningParams {
                min_support: 0.0,
                min_confidence: 0.0,
                max_itemset_width: 2,
            },
        )
        .unwrap();
        assert_eq!(rules.len(), 2);
        for r in &rules {
            assert_eq!((r.support, r.confidence, r.lift), (1.0, 1.0, 1.0));
        }
        assert_eq!(rules[0].to_string(), "{a} → {b}");
    }

    #[test]
    fn mining_rejects_bad_input() {
        assert_eq!(
            mine_rules(&TransactionDB::default(), &MiningParams::default()),
            Err(AssocError::EmptyDb)
        );
        let bad = MiningParams {
            min_support: 1.5,
            ..MiningParams::default()
        };
        assert!(matches!(
            mine_rules(&example_db(), &bad),
            Err(AssocError::InvalidParams {
                field: "min_support",
                ..
            })
        ));
    }

    #[test]
    fn merge_counts_and_universe() {
        let a = example_db();
        let b = TransactionDB::from_itemsets([vec!["x"], vec!["machine learning"], vec!["y", "z"]]);
        let m = merge_dbs(&a, &b);
        assert_eq!(m.transaction_count, 8);
        assert_eq!(m.item_universe.len(), a.item_universe.len() + 3);
        let ids: Vec<_> = m.transactions.iter().map(|t| t.id.as_str()).collect();
        assert_eq!(ids.last(), Some(&"t8"));

        let same = merge_dbs(&a, &TransactionDB::default());
        assert_eq!(same.item_universe, a.item_universe);
        let items: Vec<_> = same.transactions.iter().map(|t| &t.items).collect();
        let orig: Vec<_> = a.transactions.iter().map(|t| &t.items).collect();
        assert_eq!(items, orig);
    }

    #[test]
    fn transactions_from_sentences() {
        let profile = TokenizerProfile::new("t", ["the", "of", "we"], ["machine learning", "neural network"]).unwrap();
        let corpus = ingest_corpus(
            vec![RawDocument {
                id: "h1".into(),
                origin: "h1".into(),
                kind: DocumentKind::PlainText,
                body: "Machine learning of the neural network. The of. We".into(),
                owner: Owner::Historical("g".into()),
            }],
            &profile,
        )
        .unwrap();
        let db = build_transactions(&corpus, |o| matches!(o, Owner::Historical(g) if g == "g"), &profile);
        assert_eq!(db.transaction_count, 1);
        assert_eq!(db.transactions[0].items, set(&["machine learning", "neural network"]));
        assert_eq!(db.transactions[0].id, "h1#0");

        let none = build_transactions(&corpus, |o| matches!(o, Owner::Grant(_)), &profile);
        assert_eq!(none.transaction_count, 0);
    }

    fn rule(a: &[&str], c: &[&str], lift: f64) -> AssociationRule {
        AssociationRule {
            antecedent: set(a),
            consequent: set(c),
            support: 0.1,
            confidence: 0.5,
            lift,
        }
    }

    #[test]
    fn consequent_containment_matching() {
        let rules = vec![
            rule(&["Reinforcement Learning"], &["Machine Learning"], 1.2),
            rule(&["Reinforcement Learning"], &["Neural Network"], 1.5),
            rule(&["LMS Algorithm"], &["Robotics"], 2.0),
        ];
        let who = ResearcherItems::from_keywords(["Machine Learning", "Neural Network"]);
        let matched = match_rules_to_researcher(&rules, &who);
        assert_eq!(matched.len(), 2);
        assert_eq!(matched[0].lift, 1.5);

        let nobody = ResearcherItems::from_keywords(["Botany"]);
        assert!(match_rules_to_researcher(&rules, &nobody).is_empty());
    }

    #[test]
    fn paper_items_extend_the_match_set() {
        let profile = TokenizerProfile::new("t", ["we"], ["machine learning"]).unwrap();
        let corpus = ingest_corpus(
            vec![RawDocument {
                id: "p1".into(),
                origin: "p1".into(),
                kind: DocumentKind::PlainText,
                body: "We revisit machine learning.".into(),
                owner: Owner::Researcher("f".into()),
            }],
            &profile,
        )
        .unwrap();
        let who = ResearcherItems::from_keywords(["Botany"]).with_documents(&corpus, &["p1".to_string()], &profile);
        let rules = vec![rule(&["LMS Algorithm"], &["Machine Learning"], 1.0)];
        assert_eq!(match_rules_to_researcher(&rules, &who).len(), 1);
    }

    #[test]
    fn historical_normalization() {
        let rules = vec![
            rule(&["a"], &["x"], 2.0),
            rule(&["b"], &["y"], 1.0),
            rule(&["c"], &["z"], 1.0),
        ];
        let m = historical_score("r", "g", &rules, &ResearcherItems::from_keywords(["x"]));
        assert_eq!(m.raw_score, 2.0);
        assert_eq!(m.normalized_score, 0.5);

        let none = historical_score("r", "g", &rules, &ResearcherItems::from_keywords(["q"]));
        assert!(none.matched_rules.is_empty());
        assert_eq!((none.raw_score, none.normalized_score), (0.0, 0.0));
    }
}
