//! Matching of university researchers against external grant calls.
//!
//! Two scoring channels are computed per grant and fused into a single
//! ranking:
//!
//! * the **surface** channel ([`relevance`]) sums the TF-IDF weight of every
//!   taxonomy keyword a researcher shares with the grant's public pages;
//! * the **historical** channel ([`assoc`]) mines association rules from past
//!   abstracts and sums the lift of the rules whose consequent the researcher
//!   covers.
//!
//! [`recommend`] combines both as `alpha * surface + beta * historical` with
//! `alpha + beta = 1` and selects candidates above a threshold. [`pipeline`]
//! wires the whole flow together starting from a directory of documents.

pub mod api;
pub mod assoc;
pub mod corpus;
pub mod pipeline;
pub mod recommend;
pub mod relevance;
pub mod sample;
pub mod taxonomy;
pub mod text;
pub mod tokenize;

pub use assoc::{AssociationRule, HistoricalMatch, MiningParams, Transaction, TransactionDB};
pub use corpus::{CleanDocument, Corpus, DocumentKind, Owner, RawDocument};
pub use pipeline::{Analysis, Dataset, GrantInfo, GrantScores};
pub use recommend::{RecommendationEntry, RecommendationList, Researcher, WeightParams};
pub use relevance::{SurfaceMatch, TermWeight};
pub use taxonomy::{KeywordEntry, KeywordTable};
pub use tokenize::{Token, Tokenizer, TokenizerProfile};
