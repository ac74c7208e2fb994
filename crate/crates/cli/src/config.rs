//! Run configuration: TOML file with per-stage sections, overridable by
//! command-line flags (flags win). Defaults reproduce the reference
//! hyperparameters, and every stochastic stage has an explicit seed.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub paths: PathsConfig,
    pub partition: PartitionConfig,
    pub keywords: KeywordsConfig,
    pub embedding: EmbeddingConfig,
    pub tsne: TsneConfigSection,
    pub analytics: AnalyticsConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub papers: PathBuf,
    pub citations: PathBuf,
    /// Omitted or empty: the bundled taxonomy.
    pub taxonomy: Option<PathBuf>,
    pub output_dir: PathBuf,
}

impl Default for PathsConfig {
    fn default() -> Self {
        PathsConfig {
            papers: "papers.jsonl".into(),
            citations: "citations.jsonl".into(),
            taxonomy: None,
            output_dir: "out".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PartitionConfig {
    /// "periods" or "yearly"; ignored when explicit boundaries are given.
    pub preset: String,
    /// Explicit ISO dates, strictly increasing.
    pub boundaries: Vec<String>,
}

impl Default for PartitionConfig {
    fn default() -> Self {
        PartitionConfig { preset: "periods".into(), boundaries: Vec::new() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KeywordsConfig {
    /// "fallback" or "command".
    pub extractor: String,
    /// argv for the external extractor when `extractor = "command"`.
    pub command: Vec<String>,
    /// "title", "abstract", or "both".
    pub source: String,
    pub min_count: u32,
}

impl Default for KeywordsConfig {
    fn default() -> Self {
        KeywordsConfig {
            extractor: "fallback".into(),
            command: Vec::new(),
            source: "title".into(),
            min_count: 3,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingConfig {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub output_dim: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub negative_ratio: f64,
    pub seed: u64,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig {
            input_dim: 64,
            hidden_dim: 64,
            output_dim: 64,
            epochs: 50,
            learning_rate: 0.01,
            negative_ratio: 1.0,
            seed: 17,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TsneConfigSection {
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TsneConfigSection {
    fn default() -> Self {
        TsneConfigSection { perplexity: 30.0, iterations: 1000, learning_rate: 200.0, seed: 23 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyticsConfig {
    /// "primary_group" or "any_shared_group".
    pub homophily_mode: String,
    /// Topic diversity pooling: "pooled" or "mean".
    pub topic_mode: String,
    pub topics: Vec<String>,
    pub trajectory_keywords: Vec<String>,
    pub neighbor_keywords: Vec<String>,
    pub neighbor_k: usize,
    pub aoc_bins: usize,
    /// "natural", "2", or "10".
    pub shannon_log_base: String,
    pub louvain_seed: u64,
    pub rank_top_k: Option<usize>,
}

impl Default for AnalyticsConfig {
    fn default() -> Self {
        AnalyticsConfig {
            homophily_mode: "primary_group".into(),
            topic_mode: "pooled".into(),
            topics: Vec::new(),
            trajectory_keywords: Vec::new(),
            neighbor_keywords: Vec::new(),
            neighbor_k: 10,
            aoc_bins: 20,
            shannon_log_base: "natural".into(),
            louvain_seed: 11,
            rank_top_k: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Validation(format!("cannot read config {}: {e}", path.display()))
        })?;
        let config: RunConfig = toml::from_str(&text)
            .map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    /// Field-path-labelled validation of every section.
    pub fn validate(&self) -> Result<(), CliError> {
        let mut problems = Vec::new();

        match self.partition.preset.as_str() {
            "periods" | "yearly" => {}
            other => problems.push(format!("partition.preset: unknown preset {other:?}")),
        }
        let mut parsed = Vec::new();
        for (i, raw) in self.partition.boundaries.iter().enumerate() {
            match chrono::NaiveDate::parse_from_str(raw, "%Y-%m-%d") {
                Ok(d) => parsed.push(d),
                Err(_) => problems
                    .push(format!("partition.boundaries[{i}]: {raw:?} is not an ISO date")),
            }
        }
        if !self.partition.boundaries.is_empty() && parsed.len() == self.partition.boundaries.len()
        {
            if parsed.len() < 2 {
                problems.push("partition.boundaries: need at least two dates".into());
            } else if parsed.windows(2).any(|w| w[0] >= w[1]) {
                problems.push("partition.boundaries: must be strictly increasing".into());
            }
        }

        match self.keywords.extractor.as_str() {
            "fallback" => {}
            "command" => {
                if self.keywords.command.is_empty() {
                    problems.push("keywords.command: required when extractor = \"command\"".into());
                }
            }
            other => problems.push(format!("keywords.extractor: unknown extractor {other:?}")),
        }
        if self.keywords.source.parse::<scievo_core::keywords::SourceField>().is_err() {
            problems.push(format!(
                "keywords.source: {:?} is not title|abstract|both",
                self.keywords.source
            ));
        }
        if self.keywords.min_count == 0 {
            problems.push("keywords.min_count: must be >= 1".into());
        }

        if self.embedding.epochs == 0 {
            problems.push("embedding.epochs: must be >= 1".into());
        }
        if self.embedding.learning_rate <= 0.0 {
            problems.push("embedding.learning_rate: must be > 0".into());
        }
        for (name, value) in [
            ("embedding.input_dim", self.embedding.input_dim),
            ("embedding.hidden_dim", self.embedding.hidden_dim),
            ("embedding.output_dim", self.embedding.output_dim),
        ] {
            if value == 0 {
                problems.push(format!("{name}: must be >= 1"));
            }
        }
        if self.embedding.negative_ratio <= 0.0 {
            problems.push("embedding.negative_ratio: must be > 0".into());
        }

        if self.tsne.perplexity <= 0.0 {
            problems.push("tsne.perplexity: must be > 0".into());
        }
        if self.tsne.iterations == 0 {
            problems.push("tsne.iterations: must be >= 1".into());
        }
        if self.tsne.learning_rate <= 0.0 {
            problems.push("tsne.learning_rate: must be > 0".into());
        }

        if self.analytics.homophily_mode.parse::<scievo_core::analytics::HomophilyMode>().is_err()
        {
            problems.push(format!(
                "analytics.homophily_mode: {:?} is not primary_group|any_shared_group",
                self.analytics.homophily_mode
            ));
        }
        if !matches!(self.analytics.topic_mode.as_str(), "pooled" | "mean") {
            problems.push(format!(
                "analytics.topic_mode: {:?} is not pooled|mean",
                self.analytics.topic_mode
            ));
        }
        if !matches!(self.analytics.shannon_log_base.as_str(), "natural" | "2" | "10") {
            problems.push(format!(
                "analytics.shannon_log_base: {:?} is not natural|2|10",
                self.analytics.shannon_log_base
            ));
        }
        if self.analytics.neighbor_k == 0 {
            problems.push("analytics.neighbor_k: must be >= 1".into());
        }
        if self.analytics.aoc_bins == 0 {
            problems.push("analytics.aoc_bins: must be >= 1".into());
        }

        if problems.is_empty() {
            Ok(())
        } else {
            Err(CliError::Validation(problems.join("; ")))
        }
    }

    /// Hash of everything except file locations, so identical parameters
    /// hash identically regardless of where inputs and outputs live.
    pub fn semantic_hash(&self) -> String {
        let semantic = serde_json::json!({
            "partition": self.partition,
            "keywords": self.keywords,
            "embedding": self.embedding,
            "tsne": self.tsne,
            "analytics": self.analytics,
        });
        let digest = Sha256::digest(semantic.to_string().as_bytes());
        format!("sha256:{}", hex::encode(digest))
    }

    pub fn shannon_log_base_value(&self) -> f64 {
        match self.analytics.shannon_log_base.as_str() {
            "2" => 2.0,
            "10" => 10.0,
            _ => std::f64::consts::E,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_reproduce_reference_hyperparameters() {
        let config = RunConfig::default();
        assert_eq!(config.embedding.epochs, 50);
        assert_eq!(config.embedding.learning_rate, 0.01);
        assert_eq!(config.embedding.negative_ratio, 1.0);
        assert_eq!(config.embedding.input_dim, 64);
        assert_eq!(config.embedding.hidden_dim, 64);
        assert_eq!(config.embedding.output_dim, 64);
        assert_eq!(config.tsne.perplexity, 30.0);
        assert_eq!(config.tsne.iterations, 1000);
        assert_eq!(config.keywords.min_count, 3);
        config.validate().unwrap();
    }

    #[test]
    fn validation_names_field_paths() {
        let mut config = RunConfig::default();
        config.embedding.epochs = 0;
        config.tsne.perplexity = -1.0;
        let err = config.validate().unwrap_err().to_string();
        assert!(err.contains("embedding.epochs"), "{err}");
        assert!(err.contains("tsne.perplexity"), "{err}");
    }

    #[test]
    fn semantic_hash_ignores_paths_but_not_parameters() {
        let base = RunConfig::default();
        let mut moved = base.clone();
        moved.paths.output_dir = "elsewhere".into();
        assert_eq!(base.semantic_hash(), moved.semantic_hash());

        let mut tweaked = base.clone();
        tweaked.embedding.seed = 99;
        assert_ne!(base.semantic_hash(), tweaked.semantic_hash());
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        let err = toml::from_str::<RunConfig>("[embedding]\nlr = 0.1\n").unwrap_err();
        assert!(err.to_string().contains("lr"));
    }
}
