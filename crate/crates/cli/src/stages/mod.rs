//! Pipeline stages and their orchestration. Every stage hashes its inputs,
//! skips itself when already up to date, writes outputs atomically, and
//! finishes with a manifest.

mod build;
mod embed;
mod metrics;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use scievo_core::corpus::{load_corpus_with_taxonomy, Corpus, Taxonomy};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::manifest::{sha256_file, stage_up_to_date, StageManifest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Ingest,
    Keywords,
    Snapshot,
    Rank,
    Cooccur,
    Embed,
    Align,
    Trajectory,
    Neighbors,
    Diversity,
    Aoc,
    Homophily,
    Communities,
    Stats,
}

impl Stage {
    pub const ALL: [Stage; 14] = [
        Stage::Ingest,
        Stage::Keywords,
        Stage::Snapshot,
        Stage::Rank,
        Stage::Cooccur,
        Stage::Embed,
        Stage::Align,
        Stage::Trajectory,
        Stage::Neighbors,
        Stage::Diversity,
        Stage::Aoc,
        Stage::Homophily,
        Stage::Communities,
        Stage::Stats,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Keywords => "keywords",
            Stage::Snapshot => "snapshot",
            Stage::Rank => "rank",
            Stage::Cooccur => "cooccur",
            Stage::Embed => "embed",
            Stage::Align => "align",
            Stage::Trajectory => "trajectory",
            Stage::Neighbors => "neighbors",
            Stage::Diversity => "diversity",
            Stage::Aoc => "aoc",
            Stage::Homophily => "homophily",
            Stage::Communities => "communities",
            Stage::Stats => "stats",
        }
    }

    /// Human name of the artifact this stage produces, for error messages.
    pub fn artifact_name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingested corpus",
            Stage::Keywords => "keywords",
            Stage::Snapshot => "snapshots",
            Stage::Rank => "rank tables",
            Stage::Cooccur => "cooccurrence",
            Stage::Embed => "embeddings",
            Stage::Align => "aligned embeddings",
            Stage::Trajectory => "trajectories",
            Stage::Neighbors => "neighbors",
            Stage::Diversity => "diversity",
            Stage::Aoc => "aoc",
            Stage::Homophily => "homophily",
            Stage::Communities => "communities",
            Stage::Stats => "stats",
        }
    }
}

impl std::str::FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ALL
            .into_iter()
            .find(|stage| stage.name() == s)
            .ok_or_else(|| format!("unknown stage {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageStatus {
    Ran,
    Skipped,
}

pub struct StageContext<'a> {
    pub config: &'a RunConfig,
    pub config_hash: String,
}

impl<'a> StageContext<'a> {
    pub fn new(config: &'a RunConfig) -> StageContext<'a> {
        StageContext { config_hash: config.semantic_hash(), config }
    }

    pub fn out_dir(&self) -> &Path {
        &self.config.paths.output_dir
    }

    pub fn stage_dir(&self, stage: Stage) -> PathBuf {
        self.out_dir().join(stage.name())
    }

    pub fn artifact(&self, stage: Stage, file: &str) -> PathBuf {
        self.stage_dir(stage).join(file)
    }

    /// Manifest key for an input path: relative to the output dir for
    /// pipeline artifacts, as configured for external files. Keys must not
    /// depend on where the output dir lives.
    pub fn input_key(&self, path: &Path) -> String {
        match path.strip_prefix(self.out_dir()) {
            Ok(inside) => inside.to_string_lossy().into_owned(),
            Err(_) => path.to_string_lossy().into_owned(),
        }
    }

    /// Hash a pipeline artifact produced by `owner`; missing file means the
    /// prerequisite stage has not run.
    pub fn require_artifact(
        &self,
        owner: Stage,
        file: &str,
        inputs: &mut BTreeMap<String, String>,
    ) -> Result<PathBuf, CliError> {
        let path = self.artifact(owner, file);
        let hash = sha256_file(&path).map_err(|_| CliError::MissingArtifact {
            artifact: owner.artifact_name().to_owned(),
            run_first: owner.name().to_owned(),
        })?;
        inputs.insert(self.input_key(&path), hash);
        Ok(path)
    }

    /// Hash an external input file; missing file is a validation error.
    pub fn require_external(
        &self,
        path: &Path,
        inputs: &mut BTreeMap<String, String>,
    ) -> Result<(), CliError> {
        let hash = sha256_file(path).map_err(|e| {
            CliError::Validation(format!("cannot read {}: {e}", path.display()))
        })?;
        inputs.insert(self.input_key(path), hash);
        Ok(())
    }

    pub fn taxonomy(&self) -> Result<Taxonomy, CliError> {
        match &self.config.paths.taxonomy {
            Some(path) if !path.as_os_str().is_empty() => Ok(Taxonomy::load(path)?),
            _ => Ok(Taxonomy::builtin().clone()),
        }
    }

    /// Load the pipeline corpus: papers from the given stage's artifact,
    /// citations from ingest.
    pub fn load_corpus_from(
        &self,
        papers_stage: Stage,
        inputs: &mut BTreeMap<String, String>,
    ) -> Result<Corpus, CliError> {
        let papers = self.require_artifact(papers_stage, "papers.jsonl", inputs)?;
        let citations = self.require_artifact(Stage::Ingest, "citations.jsonl", inputs)?;
        let loaded = load_corpus_with_taxonomy(&papers, &citations, self.taxonomy()?)?;
        Ok(loaded.corpus)
    }

    pub fn finish_stage(
        &self,
        stage: Stage,
        inputs: BTreeMap<String, String>,
        outputs: Vec<(String, Vec<u8>)>,
        seed: Option<u64>,
    ) -> Result<StageStatus, CliError> {
        let stage_dir = self.stage_dir(stage);
        let mut manifest = StageManifest::new(stage.name(), &self.config_hash);
        manifest.inputs = inputs;
        manifest.seed = seed;
        for (name, bytes) in &outputs {
            crate::manifest::atomic_write(&stage_dir.join(name), bytes)?;
            manifest.outputs.insert(name.clone(), crate::manifest::sha256_bytes(bytes));
        }
        manifest.write(&stage_dir)?;
        Ok(StageStatus::Ran)
    }

    pub fn is_up_to_date(&self, stage: Stage, inputs: &BTreeMap<String, String>) -> bool {
        stage_up_to_date(&self.stage_dir(stage), &self.config_hash, inputs)
    }
}

/// Run one stage (no-op when already up to date).
pub fn run_stage(ctx: &StageContext, stage: Stage) -> Result<StageStatus, CliError> {
    match stage {
        Stage::Ingest => build::ingest(ctx),
        Stage::Keywords => build::keywords(ctx),
        Stage::Snapshot => build::snapshot(ctx),
        Stage::Rank => build::rank(ctx),
        Stage::Cooccur => build::cooccur(ctx),
        Stage::Stats => build::stats(ctx),
        Stage::Embed => embed::embed(ctx),
        Stage::Align => embed::align(ctx),
        Stage::Trajectory => embed::trajectory(ctx),
        Stage::Neighbors => embed::neighbors(ctx),
        Stage::Diversity => metrics::diversity(ctx),
        Stage::Aoc => metrics::aoc(ctx),
        Stage::Homophily => metrics::homophily(ctx),
        Stage::Communities => metrics::communities(ctx),
    }
}

/// Run the requested stages in canonical order.
pub fn run_pipeline(
    ctx: &StageContext,
    stages: &[Stage],
) -> Result<Vec<(Stage, StageStatus)>, CliError> {
    let mut results = Vec::new();
    for stage in Stage::ALL {
        if stages.contains(&stage) {
            let status = run_stage(ctx, stage)?;
            results.push((stage, status));
        }
    }
    Ok(results)
}
