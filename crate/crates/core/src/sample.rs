//! A small precomputed analysis for demos and tests: one informatics grant
//! with five surface matches and two historical matches.
//!
//! Only the channel scores, matched keywords and the items of the matched
//! rules are known for this sample; rule metrics are left at zero.

use std::collections::BTreeSet;

use crate::assoc::{AssociationRule, HistoricalMatch, MiningParams};
use crate::pipeline::{Analysis, GrantInfo, GrantScores, RuleSource};
use crate::recommend::Researcher;
use crate::relevance::SurfaceMatch;
use crate::text::fold;

pub const SAMPLE_GRANT: &str = "kayamori";

fn strings(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

fn surface(id: &str, keywords: &[&str], score: f64) -> SurfaceMatch {
    SurfaceMatch {
        researcher_id: id.into(),
        grant_id: SAMPLE_GRANT.into(),
        matched_keywords: strings(keywords),
        raw_score: score,
        normalized_score: score,
    }
}

fn rule(antecedent: &str, consequent: &str) -> AssociationRule {
    AssociationRule {
        antecedent: BTreeSet::from([fold(antecedent)]),
        consequent: BTreeSet::from([fold(consequent)]),
        support: 0.0,
        confidence: 0.0,
        lift: 0.0,
    }
}

fn historical(id: &str, rules: Vec<AssociationRule>, score: f64) -> HistoricalMatch {
    HistoricalMatch {
        researcher_id: id.into(),
        grant_id: SAMPLE_GRANT.into(),
        matched_rules: rules,
        raw_score: score,
        normalized_score: score,
    }
}

pub fn surface_matches() -> Vec<SurfaceMatch> {
    vec![
        surface(
            "1-A",
            &[
                "Information Retrieval",
                "Natural Language Processing",
                "Knowledge Acquisition",
            ],
            0.708,
        ),
        surface("1-B", &["Information Theory", "Industrial Engineering"], 0.608),
        surface("1-C", &["Machine Learning", "Neural Network"], 0.377),
        surface("1-D", &["Knowledge Acquisition", "Neural Network"], 0.350),
        surface("1-E", &["Neuroinformatics", "Computational Neuroscience"], 0.250),
    ]
}

/// Historical matches of 1-C only.
pub fn historical_matches() -> Vec<HistoricalMatch> {
    vec![historical(
        "1-C",
        vec![
            rule("Reinforcement Learning", "Machine Learning"),
            rule("Reinforcement Learning", "Neural Network"),
        ],
        0.759,
    )]
}

/// 1-F matched a single rule through their papers but has no surface match.
pub fn historical_match_1f() -> HistoricalMatch {
    historical("1-F", vec![rule("LMS Algorithm", "Machine Learning")], 0.256)
}

pub fn grant_scores() -> GrantScores {
    let mut historical = historical_matches();
    historical.push(historical_match_1f());
    GrantScores {
        grant: GrantInfo {
            id: SAMPLE_GRANT.into(),
            title: "Kayamori Foundation of Informational Science Advancement".into(),
            surface_documents: 1,
            historical_documents: 1,
        },
        transaction_count: 0,
        rule_count: 3,
        surface: surface_matches(),
        historical,
    }
}

pub fn analysis() -> Analysis {
    let researchers = ["1-A", "1-B", "1-C", "1-D", "1-E", "1-F"]
        .iter()
        .map(|id| {
            let keywords = surface_matches()
                .into_iter()
                .find(|m| m.researcher_id == *id)
                .map(|m| m.matched_keywords)
                .unwrap_or_default();
            Researcher {
                id: id.to_string(),
                display_name: format!("Researcher {id}"),
                kaken_keywords: keywords,
                paper_document_ids: BTreeSet::new(),
                past_kaken_document_ids: BTreeSet::new(),
            }
        })
        .collect();
    Analysis {
        mining: MiningParams::default(),
        rule_source: RuleSource::Merged,
        grants: vec![grant_scores()],
        researchers,
    }
}
