//! Keyword extraction, normalization, and per-snapshot vocabulary building.
//!
//! Extraction is pluggable: the deterministic fallback chunker is the
//! default, and [`CommandExtractor`] adapts any external program speaking
//! one JSON object per line on stdin/stdout.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{BufRead, BufReader, Write};
use std::process::{Command, Stdio};
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Paper;

/// Keywords kept per title by the fallback extractor.
pub const TITLE_KEYWORD_LIMIT: usize = 4;
/// Keywords kept per abstract by the fallback extractor.
pub const ABSTRACT_KEYWORD_LIMIT: usize = 15;
/// Maximum tokens in a keyword phrase.
pub const MAX_KEYWORD_TOKENS: usize = 6;

static BUILTIN_STOPWORDS: LazyLock<HashSet<&'static str>> =
    LazyLock::new(|| include_str!("../assets/stopwords.txt").lines().collect());

#[derive(Debug, Error, PartialEq, Eq)]
pub enum KeywordError {
    #[error("empty title")]
    EmptyTitle,
    #[error("keyword is empty after normalization")]
    EmptyAfterNormalization,
    #[error("keyword has {got} tokens (maximum {MAX_KEYWORD_TOKENS})")]
    TooManyTokens { got: usize },
    #[error("external extractor failed: {0}")]
    ExternalExtractor(String),
}

/// A normalized keyword phrase: lowercased, single-spaced, 1..=6 tokens.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct Keyword(String);

impl Keyword {
    pub fn surface(&self) -> &str {
        &self.0
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.0.split_whitespace()
    }

    pub fn token_count(&self) -> usize {
        self.tokens().count()
    }
}

impl std::fmt::Display for Keyword {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::str::FromStr for Keyword {
    type Err = KeywordError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        normalize_keyword(s)
    }
}

impl<'de> Deserialize<'de> for Keyword {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        normalize_keyword(&raw).map_err(serde::de::Error::custom)
    }
}

/// Lowercase, collapse internal whitespace, strip surrounding punctuation.
/// Idempotent: normalizing an already-normalized phrase is a no-op.
pub fn normalize_keyword(raw: &str) -> Result<Keyword, KeywordError> {
    let lowered = raw.to_lowercase();
    let collapsed: Vec<&str> = lowered.split_whitespace().collect();
    let joined = collapsed.join(" ");
    let stripped = joined.trim_matches(|c: char| !c.is_alphanumeric());
    if stripped.is_empty() {
        return Err(KeywordError::EmptyAfterNormalization);
    }
    let tokens = stripped.split_whitespace().count();
    if tokens > MAX_KEYWORD_TOKENS {
        return Err(KeywordError::TooManyTokens { got: tokens });
    }
    Ok(Keyword(stripped.to_owned()))
}

/// Which text field(s) keywords are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceField {
    Title,
    Abstract,
    Both,
}

impl std::str::FromStr for SourceField {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "title" => Ok(SourceField::Title),
            "abstract" => Ok(SourceField::Abstract),
            "both" => Ok(SourceField::Both),
            other => Err(format!("unknown keyword source {other:?} (title|abstract|both)")),
        }
    }
}

/// Pluggable keyword extraction.
pub trait KeywordExtractor {
    /// Extract (title_keywords, abstract_keywords) from one document.
    fn extract(
        &self,
        title: &str,
        abstract_text: &str,
    ) -> Result<(Vec<Keyword>, Vec<Keyword>), KeywordError>;

    /// Batch variant; the default loops over [`KeywordExtractor::extract`].
    fn extract_batch(
        &self,
        documents: &[(String, String)],
    ) -> Result<Vec<(Vec<Keyword>, Vec<Keyword>)>, KeywordError> {
        documents.iter().map(|(t, a)| self.extract(t, a)).collect()
    }
}

/// Deterministic stopword-delimited chunker.
///
/// The text is lowercased and split on punctuation and stopwords; each
/// maximal non-stopword run of 1..=6 tokens is a candidate, ranked by
/// in-document frequency and then earliest position.
#[derive(Debug, Clone, Default)]
pub struct FallbackExtractor {
    extra_stopwords: HashSet<String>,
}

impl FallbackExtractor {
    pub fn new() -> Self {
        Self::default()
    }

    /// Add stopwords on top of the bundled list.
    pub fn with_extra_stopwords(words: impl IntoIterator<Item = String>) -> Self {
        FallbackExtractor { extra_stopwords: words.into_iter().collect() }
    }

    fn is_stopword(&self, token: &str) -> bool {
        BUILTIN_STOPWORDS.contains(token) || self.extra_stopwords.contains(token)
    }

    fn candidates(&self, text: &str) -> Vec<Keyword> {
        // Token stream with punctuation breaks; whitespace does not break a run.
        let mut tokens: Vec<(String, bool)> = Vec::new();
        let mut current = String::new();
        let mut break_before = false;
        let flush = |current: &mut String, break_before: &mut bool, tokens: &mut Vec<(String, bool)>| {
            if !current.is_empty() {
                let trimmed = current.trim_matches('-');
                if trimmed.is_empty() {
                    // Bare punctuation like "--" acts as a break.
                    *break_before = true;
                } else {
                    tokens.push((trimmed.to_owned(), *break_before));
                    *break_before = false;
                }
                current.clear();
            }
        };
        for c in text.to_lowercase().chars() {
            if c.is_alphanumeric() || c == '-' {
                current.push(c);
            } else if c.is_whitespace() {
                flush(&mut current, &mut break_before, &mut tokens);
            } else {
                flush(&mut current, &mut break_before, &mut tokens);
                break_before = true;
            }
        }
        flush(&mut current, &mut break_before, &mut tokens);

        // Maximal non-stopword runs, each annotated with its start index.
        let mut runs: Vec<(usize, Vec<&str>)> = Vec::new();
        let mut run: Vec<&str> = Vec::new();
        let mut run_start = 0usize;
        for (idx, (token, breaks)) in tokens.iter().enumerate() {
            if *breaks && !run.is_empty() {
                runs.push((run_start, std::mem::take(&mut run)));
            }
            if self.is_stopword(token) {
                if !run.is_empty() {
                    runs.push((run_start, std::mem::take(&mut run)));
                }
            } else {
                if run.is_empty() {
                    run_start = idx;
                }
                run.push(token);
            }
        }
        if !run.is_empty() {
            runs.push((run_start, run));
        }

        // Candidate = run of 1..=6 tokens; rank by (frequency desc, first position asc).
        let mut first_pos: HashMap<String, usize> = HashMap::new();
        let mut freq: HashMap<String, usize> = HashMap::new();
        for (start, run) in &runs {
            if run.is_empty() || run.len() > MAX_KEYWORD_TOKENS {
                continue;
            }
            let phrase = run.join(" ");
            first_pos.entry(phrase.clone()).or_insert(*start);
            *freq.entry(phrase).or_insert(0) += 1;
        }
        let mut ranked: Vec<(String, usize, usize)> = freq
            .into_iter()
            .map(|(phrase, f)| {
                let pos = first_pos[&phrase];
                (phrase, f, pos)
            })
            .collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)));
        ranked.into_iter().map(|(phrase, _, _)| Keyword(phrase)).collect()
    }
}

impl KeywordExtractor for FallbackExtractor {
    fn extract(
        &self,
        title: &str,
        abstract_text: &str,
    ) -> Result<(Vec<Keyword>, Vec<Keyword>), KeywordError> {
        if title.trim().is_empty() {
            return Err(KeywordError::EmptyTitle);
        }
        let mut title_keywords = self.candidates(title);
        title_keywords.truncate(TITLE_KEYWORD_LIMIT);
        let mut abstract_keywords =
            if abstract_text.trim().is_empty() { Vec::new() } else { self.candidates(abstract_text) };
        abstract_keywords.truncate(ABSTRACT_KEYWORD_LIMIT);
        Ok((title_keywords, abstract_keywords))
    }
}

#[derive(Serialize)]
struct ExtractorRequest<'a> {
    title: &'a str,
    #[serde(rename = "abstract")]
    abstract_text: &'a str,
}

#[derive(Deserialize)]
struct ExtractorResponse {
    title_keywords: Vec<String>,
    abstract_keywords: Vec<String>,
}

/// Adapter for a user-supplied extractor process.
///
/// Protocol: one `{"title", "abstract"}` JSON object per line on the child's
/// stdin, one `{"title_keywords", "abstract_keywords"}` object per line on
/// its stdout, in the same order.
#[derive(Debug, Clone)]
pub struct CommandExtractor {
    argv: Vec<String>,
}

impl CommandExtractor {
    pub fn new(argv: Vec<String>) -> Result<Self, KeywordError> {
        if argv.is_empty() {
            return Err(KeywordError::ExternalExtractor("empty command".into()));
        }
        Ok(CommandExtractor { argv })
    }
}

impl KeywordExtractor for CommandExtractor {
    fn extract(
        &self,
        title: &str,
        abstract_text: &str,
    ) -> Result<(Vec<Keyword>, Vec<Keyword>), KeywordError> {
        let mut out =
            self.extract_batch(&[(title.to_owned(), abstract_text.to_owned())])?;
        Ok(out.remove(0))
    }

    fn extract_batch(
        &self,
        documents: &[(String, String)],
    ) -> Result<Vec<(Vec<Keyword>, Vec<Keyword>)>, KeywordError> {
        let mut child = Command::new(&self.argv[0])
            .args(&self.argv[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| KeywordError::ExternalExtractor(format!("spawn: {e}")))?;

        let mut stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let requests: Vec<String> = documents
            .iter()
            .map(|(title, abstract_text)| {
                serde_json::to_string(&ExtractorRequest { title, abstract_text })
                    .expect("request serializes")
            })
            .collect();
        // Writer thread avoids deadlock when the child interleaves reads and writes.
        let writer = std::thread::spawn(move || -> std::io::Result<()> {
            for line in requests {
                stdin.write_all(line.as_bytes())?;
                stdin.write_all(b"\n")?;
            }
            Ok(())
        });

        let mut results = Vec::with_capacity(documents.len());
        for line in BufReader::new(stdout).lines() {
            let line =
                line.map_err(|e| KeywordError::ExternalExtractor(format!("read: {e}")))?;
            if line.trim().is_empty() {
                continue;
            }
            let response: ExtractorResponse = serde_json::from_str(&line)
                .map_err(|e| KeywordError::ExternalExtractor(format!("bad response: {e}")))?;
            let normalize_all = |raw: Vec<String>| -> Result<Vec<Keyword>, KeywordError> {
                raw.iter().map(|s| normalize_keyword(s)).collect()
            };
            results.push((
                normalize_all(response.title_keywords)?,
                normalize_all(response.abstract_keywords)?,
            ));
        }
        writer
            .join()
            .map_err(|_| KeywordError::ExternalExtractor("writer thread panicked".into()))?
            .map_err(|e| KeywordError::ExternalExtractor(format!("write: {e}")))?;
        let status = child
            .wait()
            .map_err(|e| KeywordError::ExternalExtractor(format!("wait: {e}")))?;
        if !status.success() {
            return Err(KeywordError::ExternalExtractor(format!("exit status {status}")));
        }
        if results.len() != documents.len() {
            return Err(KeywordError::ExternalExtractor(format!(
                "got {} responses for {} documents",
                results.len(),
                documents.len()
            )));
        }
        Ok(results)
    }
}

/// Keyword frequencies within one snapshot, ordered by descending frequency
/// then lexicographically. Entries below `min_count` are dropped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    entries: Vec<(Keyword, u32)>,
    index: BTreeMap<Keyword, usize>,
    min_count: u32,
    source: SourceField,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, keyword: &Keyword) -> bool {
        self.index.contains_key(keyword)
    }

    pub fn index_of(&self, keyword: &Keyword) -> Option<usize> {
        self.index.get(keyword).copied()
    }

    pub fn keyword(&self, index: usize) -> &Keyword {
        &self.entries[index].0
    }

    pub fn frequency(&self, keyword: &Keyword) -> Option<u32> {
        self.index.get(keyword).map(|&i| self.entries[i].1)
    }

    /// `(keyword, frequency)` pairs in vocabulary order.
    pub fn iter(&self) -> impl Iterator<Item = (&Keyword, u32)> {
        self.entries.iter().map(|(k, f)| (k, *f))
    }

    pub fn keywords(&self) -> impl Iterator<Item = &Keyword> {
        self.entries.iter().map(|(k, _)| k)
    }

    pub fn min_count(&self) -> u32 {
        self.min_count
    }

    pub fn source(&self) -> SourceField {
        self.source
    }

    pub fn total_frequency(&self) -> u64 {
        self.entries.iter().map(|(_, f)| *f as u64).sum()
    }

    /// Rebuild a vocabulary from already-counted entries (graph import path).
    pub fn from_entries(
        entries: Vec<(Keyword, u32)>,
        min_count: u32,
        source: SourceField,
    ) -> Vocabulary {
        let mut entries: Vec<(Keyword, u32)> =
            entries.into_iter().filter(|(_, f)| *f >= min_count).collect();
        entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let index = entries.iter().enumerate().map(|(i, (k, _))| (k.clone(), i)).collect();
        Vocabulary { entries, index, min_count, source }
    }
}

/// Count keyword occurrences across papers (one count per paper per keyword)
/// and keep entries with frequency >= `min_count`.
pub fn build_vocabulary<'a>(
    papers: impl IntoIterator<Item = &'a Paper>,
    source: SourceField,
    min_count: u32,
) -> Vocabulary {
    let mut counts: BTreeMap<&Keyword, u32> = BTreeMap::new();
    for paper in papers {
        for kw in paper.keywords(source) {
            *counts.entry(kw).or_insert(0) += 1;
        }
    }
    let mut entries: Vec<(Keyword, u32)> = counts
        .into_iter()
        .filter(|(_, f)| *f >= min_count)
        .map(|(k, f)| (k.clone(), f))
        .collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let index = entries.iter().enumerate().map(|(i, (k, _))| (k.clone(), i)).collect();
    Vocabulary { entries, index, min_count, source }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Paper, PaperId};
    use chrono::NaiveDate;

    fn surfaces(keywords: &[Keyword]) -> Vec<&str> {
        keywords.iter().map(|k| k.surface()).collect()
    }

    #[test]
    fn fallback_splits_on_stopwords() {
        let (title, _) =
            FallbackExtractor::new().extract("Deep Learning for Graph Neural Networks", "").unwrap();
        assert_eq!(surfaces(&title), ["deep learning", "graph neural networks"]);
    }

    #[test]
    fn fallback_drops_leading_function_words() {
        let (title, _) =
            FallbackExtractor::new().extract("On the Structure of Proofs", "").unwrap();
        assert_eq!(surfaces(&title), ["structure", "proofs"]);
    }

    #[test]
    fn empty_abstract_yields_no_abstract_keywords() {
        let (_, abstract_kw) = FallbackExtractor::new().extract("A Title Term", "").unwrap();
        assert!(abstract_kw.is_empty());
    }

    #[test]
    fn empty_title_is_an_error() {
        let err = FallbackExtractor::new().extract("   ", "text").unwrap_err();
        assert_eq!(err, KeywordError::EmptyTitle);
    }

    #[test]
    fn frequency_outranks_position() {
        let (title, _) = FallbackExtractor::new()
            .extract("Spectral Methods and Kernels and Kernels", "")
            .unwrap();
        assert_eq!(surfaces(&title), ["kernels", "spectral methods"]);
    }

    #[test]
    fn punctuation_breaks_runs() {
        let (title, _) =
            FallbackExtractor::new().extract("Deep Learning: Graph Kernels", "").unwrap();
        assert_eq!(surfaces(&title), ["deep learning", "graph kernels"]);
    }

    #[test]
    fn runs_longer_than_six_tokens_are_not_candidates() {
        let (title, _) = FallbackExtractor::new()
            .extract("alpha beta gamma delta epsilon zeta eta: short run", "")
            .unwrap();
        assert_eq!(surfaces(&title), ["short run"]);
    }

    #[test]
    fn title_keyword_limit_is_four() {
        let (title, _) = FallbackExtractor::new()
            .extract("alpha, beta, gamma, delta, epsilon, zeta", "")
            .unwrap();
        assert_eq!(title.len(), TITLE_KEYWORD_LIMIT);
        assert_eq!(surfaces(&title), ["alpha", "beta", "gamma", "delta"]);
    }

    #[test]
    fn normalize_collapses_and_strips() {
        assert_eq!(
            normalize_keyword(" Large  Language Models. ").unwrap().surface(),
            "large language models"
        );
        assert_eq!(normalize_keyword("COVID-19").unwrap().surface(), "covid-19");
        assert_eq!(
            normalize_keyword("---").unwrap_err(),
            KeywordError::EmptyAfterNormalization
        );
    }

    #[test]
    fn normalize_is_idempotent() {
        for raw in [" Mixed CASE  phrase ", "(parenthesized term)", "covid-19", "a b c d e f"] {
            let once = normalize_keyword(raw).unwrap();
            let twice = normalize_keyword(once.surface()).unwrap();
            assert_eq!(once, twice);
        }
    }

    fn paper_with_keywords(id: &str, title_kw: &[&str], abstract_kw: &[&str]) -> Paper {
        Paper {
            id: PaperId(id.to_owned()),
            title: "t".into(),
            abstract_text: "a".into(),
            categories: vec!["cs.LG".into()],
            published_at: NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(),
            updated_at: None,
            external_id: None,
            venue: None,
            title_keywords: title_kw.iter().map(|s| normalize_keyword(s).unwrap()).collect(),
            abstract_keywords: abstract_kw.iter().map(|s| normalize_keyword(s).unwrap()).collect(),
        }
    }

    #[test]
    fn vocabulary_keeps_min_count_boundary_and_drops_below() {
        let papers = vec![
            paper_with_keywords("1", &["gcn"], &[]),
            paper_with_keywords("2", &["gcn", "svm"], &[]),
            paper_with_keywords("3", &["gcn", "svm"], &[]),
        ];
        let vocab = build_vocabulary(&papers, SourceField::Title, 3);
        assert_eq!(vocab.frequency(&normalize_keyword("gcn").unwrap()), Some(3));
        assert!(!vocab.contains(&normalize_keyword("svm").unwrap()));
    }

    #[test]
    fn vocabulary_counts_once_per_paper() {
        // "gcn" listed twice in each abstract still counts once per paper.
        let papers: Vec<Paper> = (0..4)
            .map(|i| paper_with_keywords(&i.to_string(), &[], &["gcn", "gcn"]))
            .collect();
        let vocab = build_vocabulary(&papers, SourceField::Abstract, 3);
        assert_eq!(vocab.frequency(&normalize_keyword("gcn").unwrap()), Some(4));
    }

    #[test]
    fn vocabulary_order_is_frequency_then_lexicographic() {
        let papers = vec![
            paper_with_keywords("1", &["beta", "alpha"], &[]),
            paper_with_keywords("2", &["beta", "alpha"], &[]),
            paper_with_keywords("3", &["beta"], &[]),
        ];
        let vocab = build_vocabulary(&papers, SourceField::Title, 1);
        let order: Vec<&str> = vocab.keywords().map(|k| k.surface()).collect();
        assert_eq!(order, ["beta", "alpha"]);
    }

    #[cfg(unix)]
    #[test]
    fn command_extractor_round_trips() {
        let script = r#"while read -r line; do echo '{"title_keywords":["Alpha Beta"],"abstract_keywords":[]}'; done"#;
        let extractor =
            CommandExtractor::new(vec!["/bin/sh".into(), "-c".into(), script.into()]).unwrap();
        let out = extractor
            .extract_batch(&[("one".into(), String::new()), ("two".into(), String::new())])
            .unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].0[0].surface(), "alpha beta");
    }
}
