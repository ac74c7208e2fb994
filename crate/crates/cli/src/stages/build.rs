//! Corpus-side stages: ingest, keyword extraction, temporal snapshots,
//! rank tables, co-occurrence graphs, and summary statistics.

use std::collections::BTreeMap;

use chrono::Datelike;
use scievo_core::corpus::{
    corpus_stats, load_corpus_with_taxonomy, write_citations, write_papers, Corpus,
};
use scievo_core::keywords::{
    build_vocabulary, CommandExtractor, FallbackExtractor, KeywordExtractor, SourceField,
};
use scievo_core::snapshot::{
    build_cooccurrence, keyword_ranks, partition_with_labels, period_boundaries, period_labels,
    yearly_boundaries, PartitionOutcome, PartitionPreset,
};

use super::{Stage, StageContext, StageStatus};
use crate::error::CliError;

fn keyword_source(ctx: &StageContext) -> SourceField {
    ctx.config.keywords.source.parse().expect("validated config")
}

pub fn ingest(ctx: &StageContext) -> Result<StageStatus, CliError> {
    let mut inputs = BTreeMap::new();
    ctx.require_external(&ctx.config.paths.papers, &mut inputs)?;
    ctx.require_external(&ctx.config.paths.citations, &mut inputs)?;
    if let Some(tax) = &ctx.config.paths.taxonomy {
        if !tax.as_os_str().is_empty() {
            ctx.require_external(tax, &mut inputs)?;
        }
    }
    if ctx.is_up_to_date(Stage::Ingest, &inputs) {
        return Ok(StageStatus::Skipped);
    }

    let loaded = load_corpus_with_taxonomy(
        &ctx.config.paths.papers,
        &ctx.config.paths.citations,
        ctx.taxonomy()?,
    )?;
    let mut papers = Vec::new();
    write_papers(&loaded.corpus, &mut papers)?;
    let mut citations = Vec::new();
    write_citations(&loaded.corpus, &mut citations)?;
    let report = serde_json::to_vec_pretty(&loaded.report)?;

    ctx.finish_stage(
        Stage::Ingest,
        inputs,
        vec![
            ("papers.jsonl".into(), papers),
            ("citations.jsonl".into(), citations),
            ("report.json".into(), report),
        ],
        None,
    )
}

pub fn keywords(ctx: &StageContext) -> Result<StageStatus, CliError> {
    let mut inputs = BTreeMap::new();
    let papers_path = ctx.require_artifact(Stage::Ingest, "papers.jsonl", &mut inputs)?;
    let citations_path = ctx.require_artifact(Stage::Ingest, "citations.jsonl", &mut inputs)?;
    if ctx.is_up_to_date(Stage::Keywords, &inputs) {
        return Ok(StageStatus::Skipped);
    }

    let loaded = load_corpus_with_taxonomy(&papers_path, &citations_path, ctx.taxonomy()?)?;
    let extractor: Box<dyn KeywordExtractor> = match ctx.config.keywords.extractor.as_str() {
        "command" => Box::new(CommandExtractor::new(ctx.config.keywords.command.clone())?),
        _ => Box::new(FallbackExtractor::new()),
    };

    // Extract only where the record came without keywords; re-running the
    // stage never overwrites supplied ones.
    let mut papers: Vec<_> = loaded.corpus.papers().cloned().collect();
    let pending: Vec<usize> = papers
        .iter()
        .enumerate()
        .filter(|(_, p)| {
            p.title_keywords.is_empty()
                && p.abstract_keywords.is_empty()
                && !p.title.trim().is_empty()
        })
        .map(|(i, _)| i)
        .collect();
    let documents: Vec<(String, String)> = pending
        .iter()
        .map(|&i| (papers[i].title.clone(), papers[i].abstract_text.clone()))
        .collect();
    let extracted = extractor.extract_batch(&documents)?;
    for (&i, (title_kw, abstract_kw)) in pending.iter().zip(extracted) {
        papers[i].title_keywords = title_kw;
        papers[i].abstract_keywords = abstract_kw;
    }
    let skipped_empty_title =
        papers.iter().filter(|p| p.title.trim().is_empty()).count();

    let corpus = Corpus::new(papers, loaded.corpus.citations().to_vec(), ctx.taxonomy()?);
    let mut papers_out = Vec::new();
    write_papers(&corpus, &mut papers_out)?;
    let report = serde_json::to_vec_pretty(&serde_json::json!({
        "extracted": pending.len(),
        "kept_existing": corpus.len() - pending.len() - skipped_empty_title,
        "skipped_empty_title": skipped_empty_title,
        "extractor": ctx.config.keywords.extractor,
    }))?;

    ctx.finish_stage(
        Stage::Keywords,
        inputs,
        vec![("papers.jsonl".into(), papers_out), ("report.json".into(), report)],
        None,
    )
}

/// Partition boundaries and labels from config: explicit boundaries win,
/// otherwise the named preset (yearly spans the corpus' publication years).
fn partition_spec(
    ctx: &StageContext,
    corpus: &Corpus,
) -> Result<(Vec<chrono::NaiveDate>, Option<Vec<String>>), CliError> {
    if !ctx.config.partition.boundaries.is_empty() {
        let boundaries: Vec<chrono::NaiveDate> = ctx
            .config
            .partition
            .boundaries
            .iter()
            .map(|raw| {
                chrono::NaiveDate::parse_from_str(raw, "%Y-%m-%d").map_err(|_| {
                    CliError::Validation(format!("partition.boundaries: bad date {raw:?}"))
                })
            })
            .collect::<Result<_, _>>()?;
        return Ok((boundaries, None));
    }
    match ctx.config.partition.preset.parse::<PartitionPreset>() {
        Ok(PartitionPreset::Periods) => Ok((period_boundaries(), Some(period_labels()))),
        Ok(PartitionPreset::Yearly) => {
            let years: Vec<i32> = corpus.papers().map(|p| p.published_at.year()).collect();
            let start = years.iter().copied().min().unwrap_or(1991);
            let end = years.iter().copied().max().unwrap_or(start);
            Ok((yearly_boundaries(start, end), None))
        }
        Err(e) => Err(CliError::Validation(format!("partition.preset: {e}"))),
    }
}

pub fn snapshot(ctx: &StageContext) -> Result<StageStatus, CliError> {
    let mut inputs = BTreeMap::new();
    let corpus = ctx.load_corpus_from(Stage::Keywords, &mut inputs)?;
    if ctx.is_up_to_date(Stage::Snapshot, &inputs) {
        return Ok(StageStatus::Skipped);
    }

    let (boundaries, labels) = partition_spec(ctx, &corpus)?;
    let outcome = partition_with_labels(&corpus, &boundaries, labels.as_deref())?;
    let json = serde_json::to_vec_pretty(&outcome)?;
    ctx.finish_stage(Stage::Snapshot, inputs, vec![("snapshots.json".into(), json)], None)
}

pub fn load_snapshots(
    ctx: &StageContext,
    inputs: &mut BTreeMap<String, String>,
) -> Result<PartitionOutcome, CliError> {
    let path = ctx.require_artifact(Stage::Snapshot, "snapshots.json", inputs)?;
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn rank(ctx: &StageContext) -> Result<StageStatus, CliError> {
    let mut inputs = BTreeMap::new();
    let corpus = ctx.load_corpus_from(Stage::Keywords, &mut inputs)?;
    let outcome = load_snapshots(ctx, &mut inputs)?;
    if ctx.is_up_to_date(Stage::Rank, &inputs) {
        return Ok(StageStatus::Skipped);
    }

    let source = keyword_source(ctx);
    let mut csv = csv::Writer::from_writer(Vec::new());
    csv.write_record(["snapshot", "keyword", "frequency", "rank"])
        .map_err(|e| CliError::Validation(e.to_string()))?;
    for snapshot in &outcome.snapshots {
        let table = keyword_ranks(&corpus, snapshot, source, ctx.config.analytics.rank_top_k);
        for row in &table.rows {
            csv.write_record([
                table.label.as_str(),
                row.keyword.surface(),
                &row.frequency.to_string(),
                &row.rank.to_string(),
            ])
            .map_err(|e| CliError::Validation(e.to_string()))?;
        }
    }
    let bytes = csv.into_inner().map_err(|e| CliError::Validation(e.to_string()))?;
    ctx.finish_stage(Stage::Rank, inputs, vec![("ranks.csv".into(), bytes)], None)
}

#[derive(serde::Serialize, serde::Deserialize)]
pub struct CooccurLabel {
    pub label: String,
    pub nodes: usize,
    pub edges: usize,
}

pub fn cooccur(ctx: &StageContext) -> Result<StageStatus, CliError> {
    let mut inputs = BTreeMap::new();
    let corpus = ctx.load_corpus_from(Stage::Keywords, &mut inputs)?;
    let outcome = load_snapshots(ctx, &mut inputs)?;
    if ctx.is_up_to_date(Stage::Cooccur, &inputs) {
        return Ok(StageStatus::Skipped);
    }

    let source = keyword_source(ctx);
    let min_count = ctx.config.keywords.min_count;
    let mut outputs: Vec<(String, Vec<u8>)> = Vec::new();
    let mut labels = Vec::new();
    for snapshot in &outcome.snapshots {
        let papers = snapshot.papers.iter().filter_map(|id| corpus.paper(id));
        let vocab = build_vocabulary(papers, source, min_count);
        let graph = build_cooccurrence(&corpus, snapshot, &vocab);
        let mut nodes = Vec::new();
        graph.write_nodes(&mut nodes)?;
        let mut edges = Vec::new();
        graph.write_edge_list(&mut edges)?;
        labels.push(CooccurLabel {
            label: snapshot.label.clone(),
            nodes: graph.node_count(),
            edges: graph.edge_count(),
        });
        outputs.push((format!("{}.nodes.tsv", snapshot.label), nodes));
        outputs.push((format!("{}.edges.tsv", snapshot.label), edges));
    }
    outputs.push(("labels.json".into(), serde_json::to_vec_pretty(&labels)?));

    ctx.finish_stage(Stage::Cooccur, inputs, outputs, None)
}

pub fn stats(ctx: &StageContext) -> Result<StageStatus, CliError> {
    let mut inputs = BTreeMap::new();
    let corpus = ctx.load_corpus_from(Stage::Keywords, &mut inputs)?;
    if ctx.is_up_to_date(Stage::Stats, &inputs) {
        return Ok(StageStatus::Skipped);
    }
    let stats = corpus_stats(&corpus);
    let json = serde_json::to_vec_pretty(&stats)?;
    ctx.finish_stage(Stage::Stats, inputs, vec![("stats.json".into(), json)], None)
}
