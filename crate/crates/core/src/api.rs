//! JSON bodies exchanged between the HTTP service and its clients.

use serde::{Deserialize, Serialize};

use crate::pipeline::{Analysis, GrantScores};
use crate::recommend::Researcher;

/// One record of `GET /grants`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrantSummary {
    pub grant_id: String,
    pub title: String,
    pub surface_documents: usize,
    pub historical_documents: usize,
    pub rule_count: usize,
}

impl From<&GrantScores> for GrantSummary {
    fn from(g: &GrantScores) -> Self {
        Self {
            grant_id: g.grant.id.clone(),
            title: g.grant.title.clone(),
            surface_documents: g.grant.surface_documents,
            historical_documents: g.grant.historical_documents,
            rule_count: g.rule_count,
        }
    }
}

/// Channel scores of one researcher on one grant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelScores {
    pub grant_id: String,
    pub surface: f64,
    pub historical: f64,
}

/// Body of `GET /researchers/{id}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResearcherProfile {
    #[serde(flatten)]
    pub researcher: Researcher,
    /// Grants where the researcher scored in at least one channel.
    pub scores: Vec<ChannelScores>,
}

impl ResearcherProfile {
    pub fn from_analysis(analysis: &Analysis, researcher: &Researcher) -> Self {
        let id = researcher.id.as_str();
        let scores = analysis
            .grants
            .iter()
            .filter_map(|g| {
                let surface = g
                    .surface
                    .iter()
                    .find(|m| m.researcher_id == id)
                    .map(|m| m.normalized_score);
                let historical = g
                    .historical
                    .iter()
                    .find(|m| m.researcher_id == id)
                    .map(|m| m.normalized_score);
                (surface.is_some() || historical.is_some()).then(|| ChannelScores {
                    grant_id: g.grant.id.clone(),
                    surface: surface.unwrap_or(0.0),
                    historical: historical.unwrap_or(0.0),
                })
            })
            .collect();
        Self {
            researcher: researcher.clone(),
            scores,
        }
    }
}

/// Body of `POST /reload`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReloadSummary {
    pub grants: usize,
    pub researchers: usize,
}

/// Body of every error response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
}
