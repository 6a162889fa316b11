//! Service configuration: a TOML file plus `GRANTMATCH_*` environment
//! overrides.
//!
//! ```toml
//! bind = "127.0.0.1:8080"
//! default_threshold = 0.4
//! corpus = "data/"            # layout directory or an ingested dataset JSON
//! table = "data/keywords.tsv"
//! # analysis = "analysis.json" # precomputed channel scores, used instead of corpus
//! rule_source = "merged"
//!
//! [mining]
//! min_support = 0.05
//! min_confidence = 0.5
//! max_itemset_width = 3
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use grantmatch_core::assoc::MiningParams;
use grantmatch_core::pipeline::RuleSource;
use grantmatch_core::recommend::DEFAULT_THRESHOLD;

use crate::ServiceError;

pub const DEFAULT_BIND: &str = "127.0.0.1:8080";

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    #[serde(default = "default_bind")]
    pub bind: String,
    #[serde(default = "default_threshold")]
    pub default_threshold: f64,
    #[serde(default)]
    pub corpus: Option<PathBuf>,
    #[serde(default)]
    pub table: Option<PathBuf>,
    #[serde(default)]
    pub analysis: Option<PathBuf>,
    #[serde(default)]
    pub mining: MiningParams,
    #[serde(default)]
    pub rule_source: RuleSource,
}

fn default_bind() -> String {
    DEFAULT_BIND.to_owned()
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            bind: default_bind(),
            default_threshold: DEFAULT_THRESHOLD,
            corpus: None,
            table: None,
            analysis: None,
            mining: MiningParams::default(),
            rule_source: RuleSource::default(),
        }
    }
}

impl ServiceConfig {
    pub fn parse(content: &str) -> Result<Self, ServiceError> {
        toml::from_str(content).map_err(|e| ServiceError::Config(e.to_string()))
    }

    /// Relative paths in the file are resolved against the file's directory.
    pub fn load(path: &Path) -> Result<Self, ServiceError> {
        let content =
            std::fs::read_to_string(path).map_err(|e| ServiceError::Config(format!("{}: {e}", path.display())))?;
        let mut config = Self::parse(&content)?;
        if let Some(base) = path.parent() {
            for p in [&mut config.corpus, &mut config.table, &mut config.analysis]
                .into_iter()
                .flatten()
            {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        Ok(config)
    }

    /// Applies `GRANTMATCH_BIND`, `GRANTMATCH_CORPUS`, `GRANTMATCH_TABLE`,
    /// `GRANTMATCH_ANALYSIS` and `GRANTMATCH_THRESHOLD`.
    pub fn with_overrides<F>(mut self, var: F) -> Result<Self, ServiceError>
    where
        F: Fn(&str) -> Option<String>,
    {
        if let Some(v) = var("GRANTMATCH_BIND") {
            self.bind = v;
        }
        if let Some(v) = var("GRANTMATCH_CORPUS") {
            self.corpus = Some(v.into());
        }
        if let Some(v) = var("GRANTMATCH_TABLE") {
            self.table = Some(v.into());
        }
        if let Some(v) = var("GRANTMATCH_ANALYSIS") {
            self.analysis = Some(v.into());
        }
        if let Some(v) = var("GRANTMATCH_THRESHOLD") {
            self.default_threshold = v
                .parse()
                .map_err(|_| ServiceError::Config(format!("GRANTMATCH_THRESHOLD: not a number: {v}")))?;
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), ServiceError> {
        if !(0.0..=1.0).contains(&self.default_threshold) {
            return Err(ServiceError::Config(format!(
                "default_threshold {} is outside [0, 1]",
                self.default_threshold
            )));
        }
        self.mining
            .validate()
            .map_err(|e| ServiceError::Config(e.to_string()))?;
        Ok(())
    }
}
