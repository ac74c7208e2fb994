//! Canonical data types for papers, the category taxonomy, and citations,
//! with line-oriented persistence and total validation.
//!
//! A [`Corpus`] is immutable after loading; analytics never mutate it.
//! Papers iterate in ascending id order, so every downstream computation
//! sees a deterministic sequence.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::LazyLock;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::keywords::{normalize_keyword, Keyword};

/// Fraction of invalid input lines beyond which loading aborts.
const MAX_INVALID_FRACTION: f64 = 0.10;

static BUILTIN_TAXONOMY: LazyLock<Taxonomy> = LazyLock::new(|| {
    Taxonomy::from_json(include_str!("../assets/taxonomy.json"))
        .expect("bundled taxonomy asset is valid")
});

/// Opaque paper identifier (arXiv-style, e.g. `2401.01234`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PaperId(pub String);

impl PaperId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for PaperId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for PaperId {
    fn from(s: &str) -> Self {
        PaperId(s.to_owned())
    }
}

/// One publication record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Paper {
    pub id: PaperId,
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    /// Category codes in upstream order; the first one is the primary.
    pub categories: Vec<String>,
    pub published_at: NaiveDate,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub updated_at: Option<NaiveDate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub external_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub venue: Option<String>,
    #[serde(default)]
    pub title_keywords: Vec<Keyword>,
    #[serde(default)]
    pub abstract_keywords: Vec<Keyword>,
}

impl Paper {
    /// Keywords drawn from the requested source, deduplicated, in first-seen order.
    pub fn keywords(&self, source: crate::keywords::SourceField) -> Vec<&Keyword> {
        use crate::keywords::SourceField;
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        let iter: Box<dyn Iterator<Item = &Keyword>> = match source {
            SourceField::Title => Box::new(self.title_keywords.iter()),
            SourceField::Abstract => Box::new(self.abstract_keywords.iter()),
            SourceField::Both => {
                Box::new(self.title_keywords.iter().chain(self.abstract_keywords.iter()))
            }
        };
        for kw in iter {
            if seen.insert(kw) {
                out.push(kw);
            }
        }
        out
    }
}

/// The category taxonomy: 8 groups covering 156 categories.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Taxonomy {
    groups: BTreeMap<String, BTreeSet<String>>,
    category_to_group: BTreeMap<String, String>,
}

impl Taxonomy {
    /// The taxonomy shipped with the library.
    pub fn builtin() -> &'static Taxonomy {
        &BUILTIN_TAXONOMY
    }

    /// Parse a `{"group": ["category", ...]}` JSON map.
    ///
    /// Fails if a category is listed under more than one group.
    pub fn from_json(json: &str) -> Result<Taxonomy, CorpusError> {
        let groups: BTreeMap<String, BTreeSet<String>> = serde_json::from_str(json)
            .map_err(|e| CorpusError::TaxonomyFormat(e.to_string()))?;
        let mut category_to_group = BTreeMap::new();
        for (group, categories) in &groups {
            for category in categories {
                if let Some(previous) =
                    category_to_group.insert(category.clone(), group.clone())
                {
                    return Err(CorpusError::TaxonomyFormat(format!(
                        "category {category} listed under both {previous} and {group}"
                    )));
                }
            }
        }
        Ok(Taxonomy { groups, category_to_group })
    }

    pub fn load(path: &Path) -> Result<Taxonomy, CorpusError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CorpusError::Unreadable { path: path.display().to_string(), source: e })?;
        Taxonomy::from_json(&text)
    }

    pub fn group_of(&self, category: &str) -> Option<&str> {
        self.category_to_group.get(category).map(String::as_str)
    }

    pub fn group_codes(&self) -> impl Iterator<Item = &str> {
        self.groups.keys().map(String::as_str)
    }

    pub fn group_count(&self) -> usize {
        self.groups.len()
    }

    pub fn category_count(&self) -> usize {
        self.category_to_group.len()
    }
}

/// One citation record. `cited` may point outside the corpus; such edges
/// still carry the year and field labels needed by reference-level metrics.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CitationEdge {
    pub citing: PaperId,
    pub cited: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cited_year: Option<i32>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub cited_fields: BTreeSet<String>,
}

/// An id-indexed paper collection plus its citations and taxonomy.
#[derive(Debug, Clone)]
pub struct Corpus {
    papers: BTreeMap<PaperId, Paper>,
    citations: Vec<CitationEdge>,
    taxonomy: Taxonomy,
}

impl Corpus {
    pub fn new(
        papers: impl IntoIterator<Item = Paper>,
        citations: Vec<CitationEdge>,
        taxonomy: Taxonomy,
    ) -> Corpus {
        let papers = papers.into_iter().map(|p| (p.id.clone(), p)).collect();
        Corpus { papers, citations, taxonomy }
    }

    pub fn len(&self) -> usize {
        self.papers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.papers.is_empty()
    }

    pub fn paper(&self, id: &PaperId) -> Option<&Paper> {
        self.papers.get(id)
    }

    pub fn contains(&self, id: &PaperId) -> bool {
        self.papers.contains_key(id)
    }

    /// Papers in ascending id order.
    pub fn papers(&self) -> impl Iterator<Item = &Paper> {
        self.papers.values()
    }

    pub fn citations(&self) -> &[CitationEdge] {
        &self.citations
    }

    pub fn taxonomy(&self) -> &Taxonomy {
        &self.taxonomy
    }

    /// Group of the first-listed (primary) category.
    pub fn primary_group(&self, paper: &Paper) -> Result<&str, CorpusError> {
        primary_group(paper, &self.taxonomy)
    }

    /// All groups the paper's categories map into.
    pub fn groups_of(&self, paper: &Paper) -> BTreeSet<&str> {
        paper
            .categories
            .iter()
            .filter_map(|c| self.taxonomy.group_of(c))
            .collect()
    }

    /// Paper counts keyed by primary group.
    pub fn group_histogram(&self) -> BTreeMap<String, usize> {
        let mut hist = BTreeMap::new();
        for paper in self.papers.values() {
            if let Ok(group) = self.primary_group(paper) {
                *hist.entry(group.to_owned()).or_insert(0) += 1;
            }
        }
        hist
    }
}

/// Group of the first-listed category (arXiv lists the primary first).
pub fn primary_group<'t>(paper: &Paper, taxonomy: &'t Taxonomy) -> Result<&'t str, CorpusError> {
    let category = paper
        .categories
        .first()
        .ok_or_else(|| CorpusError::UnknownCategory { category: String::new() })?;
    taxonomy
        .group_of(category)
        .ok_or_else(|| CorpusError::UnknownCategory { category: category.clone() })
}

/// A named invariant violation found while validating one input record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    InvalidJson { message: String },
    MissingField { field: &'static str },
    EmptyId,
    EmptyCategories,
    UnknownCategory { category: String },
    InvalidDate { field: &'static str, value: String },
    /// `updated_at` earlier than `published_at`.
    TimeOrder,
    DuplicateId { id: String },
    BadKeyword { value: String, reason: String },
    InvalidField { field: &'static str, message: String },
    SelfCitation { id: String },
    UnknownCiting { id: String },
}

impl Violation {
    /// Stable snake_case name used in reports.
    pub fn name(&self) -> &'static str {
        match self {
            Violation::InvalidJson { .. } => "invalid_json",
            Violation::MissingField { .. } => "missing_field",
            Violation::EmptyId => "empty_id",
            Violation::EmptyCategories => "empty_categories",
            Violation::UnknownCategory { .. } => "unknown_category",
            Violation::InvalidDate { .. } => "invalid_date",
            Violation::TimeOrder => "time_order",
            Violation::DuplicateId { .. } => "duplicate_id",
            Violation::BadKeyword { .. } => "bad_keyword",
            Violation::InvalidField { .. } => "invalid_field",
            Violation::SelfCitation { .. } => "self_citation",
            Violation::UnknownCiting { .. } => "unknown_citing",
        }
    }
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::InvalidJson { message } => write!(f, "invalid_json: {message}"),
            Violation::MissingField { field } => write!(f, "missing_field: {field}"),
            Violation::EmptyId => write!(f, "empty_id"),
            Violation::EmptyCategories => write!(f, "empty_categories"),
            Violation::UnknownCategory { category } => {
                write!(f, "unknown_category: {category}")
            }
            Violation::InvalidDate { field, value } => {
                write!(f, "invalid_date: {field}={value}")
            }
            Violation::TimeOrder => write!(f, "time_order: updated_at < published_at"),
            Violation::DuplicateId { id } => write!(f, "duplicate_id: {id}"),
            Violation::BadKeyword { value, reason } => {
                write!(f, "bad_keyword: {value:?} ({reason})")
            }
            Violation::InvalidField { field, message } => {
                write!(f, "invalid_field: {field} ({message})")
            }
            Violation::SelfCitation { id } => write!(f, "self_citation: {id}"),
            Violation::UnknownCiting { id } => write!(f, "unknown_citing: {id}"),
        }
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Unreadable {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("empty corpus: {path} contains no records")]
    EmptyCorpus { path: String },
    #[error("{invalid} of {total} lines in {path} are invalid (>{limit:.0}% aborts)")]
    TooManyInvalid { path: String, invalid: usize, total: usize, limit: f64 },
    #[error("unknown category {category:?}")]
    UnknownCategory { category: String },
    #[error("malformed taxonomy: {0}")]
    TaxonomyFormat(String),
    #[error("write failed: {0}")]
    Write(#[from] std::io::Error),
}

/// Validation outcome for every rejected line of an input file.
#[derive(Debug, Clone, Default, Serialize)]
pub struct LoadReport {
    pub paper_violations: Vec<LineViolations>,
    pub citation_violations: Vec<LineViolations>,
    pub papers_loaded: usize,
    pub citations_loaded: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct LineViolations {
    pub line: usize,
    pub violations: Vec<String>,
}

impl LoadReport {
    pub fn is_clean(&self) -> bool {
        self.paper_violations.is_empty() && self.citation_violations.is_empty()
    }
}

#[derive(Debug)]
pub struct LoadedCorpus {
    pub corpus: Corpus,
    pub report: LoadReport,
}

fn parse_date(value: &str) -> Option<NaiveDate> {
    if let Ok(d) = NaiveDate::parse_from_str(value, "%Y-%m-%d") {
        return Some(d);
    }
    chrono::DateTime::parse_from_rfc3339(value)
        .ok()
        .map(|dt| dt.naive_utc().date())
}

fn string_field(
    record: &serde_json::Value,
    field: &'static str,
    required: bool,
    violations: &mut Vec<Violation>,
) -> Option<String> {
    match record.get(field) {
        Some(serde_json::Value::String(s)) => Some(s.clone()),
        Some(serde_json::Value::Null) | None => {
            if required {
                violations.push(Violation::MissingField { field });
            }
            None
        }
        Some(_) => {
            violations.push(Violation::InvalidField { field, message: "expected string".into() });
            None
        }
    }
}

fn keyword_list(
    record: &serde_json::Value,
    field: &'static str,
    violations: &mut Vec<Violation>,
) -> Vec<Keyword> {
    let mut out = Vec::new();
    match record.get(field) {
        None | Some(serde_json::Value::Null) => {}
        Some(serde_json::Value::Array(items)) => {
            for item in items {
                match item.as_str() {
                    Some(raw) => match normalize_keyword(raw) {
                        Ok(kw) => out.push(kw),
                        Err(e) => violations.push(Violation::BadKeyword {
                            value: raw.to_owned(),
                            reason: e.to_string(),
                        }),
                    },
                    None => violations.push(Violation::InvalidField {
                        field,
                        message: "expected string entries".into(),
                    }),
                }
            }
        }
        Some(_) => {
            violations.push(Violation::InvalidField { field, message: "expected array".into() })
        }
    }
    out
}

/// Validate one parsed input line. Total: every record yields either a
/// [`Paper`] satisfying all invariants or a non-empty violation list.
pub fn validate_record(
    record: &serde_json::Value,
    taxonomy: &Taxonomy,
) -> Result<Paper, Vec<Violation>> {
    let mut violations = Vec::new();

    let id = string_field(record, "id", true, &mut violations);
    if let Some(id) = &id {
        if id.trim().is_empty() {
            violations.push(Violation::EmptyId);
        }
    }
    let title = string_field(record, "title", true, &mut violations).unwrap_or_default();
    let abstract_text =
        string_field(record, "abstract", true, &mut violations).unwrap_or_default();

    let mut categories = Vec::new();
    match record.get("categories") {
        Some(serde_json::Value::Array(items)) if !items.is_empty() => {
            for item in items {
                match item.as_str() {
                    Some(cat) => {
                        if taxonomy.group_of(cat).is_none() {
                            violations
                                .push(Violation::UnknownCategory { category: cat.to_owned() });
                        } else {
                            categories.push(cat.to_owned());
                        }
                    }
                    None => violations.push(Violation::InvalidField {
                        field: "categories",
                        message: "expected string entries".into(),
                    }),
                }
            }
        }
        Some(serde_json::Value::Array(_)) => violations.push(Violation::EmptyCategories),
        Some(_) => violations.push(Violation::InvalidField {
            field: "categories",
            message: "expected array".into(),
        }),
        None => violations.push(Violation::MissingField { field: "categories" }),
    }

    let published_at = match string_field(record, "published_at", true, &mut violations) {
        Some(raw) => match parse_date(&raw) {
            Some(d) => Some(d),
            None => {
                violations.push(Violation::InvalidDate { field: "published_at", value: raw });
                None
            }
        },
        None => None,
    };
    let updated_at = match string_field(record, "updated_at", false, &mut violations) {
        Some(raw) => match parse_date(&raw) {
            Some(d) => Some(d),
            None => {
                violations.push(Violation::InvalidDate { field: "updated_at", value: raw });
                None
            }
        },
        None => None,
    };
    if let (Some(p), Some(u)) = (published_at, updated_at) {
        if u < p {
            violations.push(Violation::TimeOrder);
        }
    }

    let title_keywords = keyword_list(record, "title_keywords", &mut violations);
    let abstract_keywords = keyword_list(record, "abstract_keywords", &mut violations);
    let external_id = string_field(record, "external_id", false, &mut violations);
    let venue = string_field(record, "venue", false, &mut violations);

    if !violations.is_empty() {
        return Err(violations);
    }
    Ok(Paper {
        id: PaperId(id.expect("validated")),
        title,
        abstract_text,
        categories,
        published_at: published_at.expect("validated"),
        updated_at,
        external_id,
        venue,
        title_keywords,
        abstract_keywords,
    })
}

fn validate_citation(
    record: &serde_json::Value,
    papers: &BTreeMap<PaperId, Paper>,
) -> Result<CitationEdge, Vec<Violation>> {
    let mut violations = Vec::new();
    let citing = string_field(record, "citing", true, &mut violations);
    let cited = string_field(record, "cited", true, &mut violations);
    let cited_year = match record.get("cited_year") {
        None | Some(serde_json::Value::Null) => None,
        Some(v) => match v.as_i64() {
            Some(y) => Some(y as i32),
            None => {
                violations.push(Violation::InvalidField {
                    field: "cited_year",
                    message: "expected integer".into(),
                });
                None
            }
        },
    };
    let mut cited_fields = BTreeSet::new();
    match record.get("cited_fields") {
        None | Some(serde_json::Value::Null) => {}
        Some(serde_json::Value::Array(items)) => {
            for item in items {
                match item.as_str() {
                    Some(s) => {
                        cited_fields.insert(s.to_owned());
                    }
                    None => violations.push(Violation::InvalidField {
                        field: "cited_fields",
                        message: "expected string entries".into(),
                    }),
                }
            }
        }
        Some(_) => violations.push(Violation::InvalidField {
            field: "cited_fields",
            message: "expected array".into(),
        }),
    }

    if let (Some(citing), Some(cited)) = (&citing, &cited) {
        if citing == cited {
            violations.push(Violation::SelfCitation { id: citing.clone() });
        }
        if !papers.contains_key(&PaperId(citing.clone())) {
            violations.push(Violation::UnknownCiting { id: citing.clone() });
        }
    }

    if !violations.is_empty() {
        return Err(violations);
    }
    Ok(CitationEdge {
        citing: PaperId(citing.expect("validated")),
        cited: cited.expect("validated"),
        cited_year,
        cited_fields,
    })
}

/// Load a corpus from line-oriented JSON files using the builtin taxonomy.
pub fn load_corpus(papers_path: &Path, citations_path: &Path) -> Result<LoadedCorpus, CorpusError> {
    load_corpus_with_taxonomy(papers_path, citations_path, Taxonomy::builtin().clone())
}

/// Load a corpus, collecting invalid lines into the report. Aborts when more
/// than 10% of either file's lines are invalid, or when no valid paper
/// remains.
pub fn load_corpus_with_taxonomy(
    papers_path: &Path,
    citations_path: &Path,
    taxonomy: Taxonomy,
) -> Result<LoadedCorpus, CorpusError> {
    let mut report = LoadReport::default();
    let mut papers: BTreeMap<PaperId, Paper> = BTreeMap::new();

    let mut total_lines = 0usize;
    for (line_no, line) in read_lines(papers_path)?.enumerate() {
        let line = line.map_err(|e| CorpusError::Unreadable {
            path: papers_path.display().to_string(),
            source: e,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        total_lines += 1;
        let violations = match serde_json::from_str::<serde_json::Value>(&line) {
            Ok(value) => match validate_record(&value, &taxonomy) {
                Ok(paper) => {
                    if papers.contains_key(&paper.id) {
                        vec![Violation::DuplicateId { id: paper.id.0.clone() }]
                    } else {
                        papers.insert(paper.id.clone(), paper);
                        continue;
                    }
                }
                Err(v) => v,
            },
            Err(e) => vec![Violation::InvalidJson { message: e.to_string() }],
        };
        report.paper_violations.push(LineViolations {
            line: line_no + 1,
            violations: violations.iter().map(|v| v.to_string()).collect(),
        });
    }

    if total_lines == 0 || papers.is_empty() {
        return Err(CorpusError::EmptyCorpus { path: papers_path.display().to_string() });
    }
    let invalid = report.paper_violations.len();
    if invalid as f64 > MAX_INVALID_FRACTION * total_lines as f64 {
        return Err(CorpusError::TooManyInvalid {
            path: papers_path.display().to_string(),
            invalid,
            total: total_lines,
            limit: MAX_INVALID_FRACTION * 100.0,
        });
    }

    let mut citations = Vec::new();
    let mut citation_lines = 0usize;
    for (line_no, line) in read_lines(citations_path)?.enumerate() {
        let line = line.map_err(|e| CorpusError::Unreadable {
            path: citations_path.display().to_string(),
            source: e,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        citation_lines += 1;
        let violations = match serde_json::from_str::<serde_json::Value>(&line) {
            Ok(value) => match validate_citation(&value, &papers) {
                Ok(edge) => {
                    citations.push(edge);
                    continue;
                }
                Err(v) => v,
            },
            Err(e) => vec![Violation::InvalidJson { message: e.to_string() }],
        };
        report.citation_violations.push(LineViolations {
            line: line_no + 1,
            violations: violations.iter().map(|v| v.to_string()).collect(),
        });
    }
    let invalid = report.citation_violations.len();
    if citation_lines > 0 && invalid as f64 > MAX_INVALID_FRACTION * citation_lines as f64 {
        return Err(CorpusError::TooManyInvalid {
            path: citations_path.display().to_string(),
            invalid,
            total: citation_lines,
            limit: MAX_INVALID_FRACTION * 100.0,
        });
    }

    report.papers_loaded = papers.len();
    report.citations_loaded = citations.len();
    Ok(LoadedCorpus { corpus: Corpus { papers, citations, taxonomy }, report })
}

fn read_lines(path: &Path) -> Result<std::io::Lines<BufReader<File>>, CorpusError> {
    let file = File::open(path)
        .map_err(|e| CorpusError::Unreadable { path: path.display().to_string(), source: e })?;
    Ok(BufReader::new(file).lines())
}

/// Papers in canonical form: ascending id, one JSON object per line.
pub fn write_papers(corpus: &Corpus, mut w: impl Write) -> std::io::Result<()> {
    for paper in corpus.papers() {
        serde_json::to_writer(&mut w, paper).map_err(std::io::Error::other)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Citations in canonical form: sorted by (citing, cited), one per line.
pub fn write_citations(corpus: &Corpus, mut w: impl Write) -> std::io::Result<()> {
    let mut edges: Vec<&CitationEdge> = corpus.citations.iter().collect();
    edges.sort_by(|a, b| (&a.citing, &a.cited).cmp(&(&b.citing, &b.cited)));
    for edge in edges {
        serde_json::to_writer(&mut w, edge).map_err(std::io::Error::other)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Write the corpus back out in canonical form. Canonical output makes
/// load -> save -> load bit-stable.
pub fn save_corpus(
    corpus: &Corpus,
    papers_path: &Path,
    citations_path: &Path,
) -> Result<(), CorpusError> {
    let mut w = BufWriter::new(File::create(papers_path)?);
    write_papers(corpus, &mut w)?;
    w.flush()?;
    let mut w = BufWriter::new(File::create(citations_path)?);
    write_citations(corpus, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Mean and population standard deviation of one corpus feature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SummaryStat {
    pub mean: f64,
    pub sd: f64,
}

pub fn mean_sd(values: &[f64]) -> SummaryStat {
    if values.is_empty() {
        return SummaryStat { mean: 0.0, sd: 0.0 };
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    SummaryStat { mean, sd: var.sqrt() }
}

/// Dataset-level summary statistics.
#[derive(Debug, Clone, Serialize)]
pub struct CorpusStats {
    pub papers: usize,
    pub citations: usize,
    pub first_published: NaiveDate,
    pub last_published: NaiveDate,
    pub groups: usize,
    pub categories: usize,
    pub categories_per_paper: SummaryStat,
    pub title_words: SummaryStat,
    pub abstract_words: SummaryStat,
    pub title_keywords: SummaryStat,
    pub abstract_keywords: SummaryStat,
}

pub fn corpus_stats(corpus: &Corpus) -> CorpusStats {
    let mut categories_per_paper = Vec::with_capacity(corpus.len());
    let mut title_words = Vec::with_capacity(corpus.len());
    let mut abstract_words = Vec::with_capacity(corpus.len());
    let mut title_kw = Vec::with_capacity(corpus.len());
    let mut abstract_kw = Vec::with_capacity(corpus.len());
    let mut groups = BTreeSet::new();
    let mut categories = BTreeSet::new();
    let mut first = None;
    let mut last = None;

    for paper in corpus.papers() {
        categories_per_paper.push(paper.categories.len() as f64);
        title_words.push(paper.title.split_whitespace().count() as f64);
        abstract_words.push(paper.abstract_text.split_whitespace().count() as f64);
        title_kw.push(paper.title_keywords.len() as f64);
        abstract_kw.push(paper.abstract_keywords.len() as f64);
        for cat in &paper.categories {
            categories.insert(cat.clone());
            if let Some(g) = corpus.taxonomy.group_of(cat) {
                groups.insert(g.to_owned());
            }
        }
        first = Some(first.map_or(paper.published_at, |f: NaiveDate| f.min(paper.published_at)));
        last = Some(last.map_or(paper.published_at, |l: NaiveDate| l.max(paper.published_at)));
    }

    CorpusStats {
        papers: corpus.len(),
        citations: corpus.citations.len(),
        first_published: first.unwrap_or_default(),
        last_published: last.unwrap_or_default(),
        groups: groups.len(),
        categories: categories.len(),
        categories_per_paper: mean_sd(&categories_per_paper),
        title_words: mean_sd(&title_words),
        abstract_words: mean_sd(&abstract_words),
        title_keywords: mean_sd(&title_kw),
        abstract_keywords: mean_sd(&abstract_kw),
    }
}
