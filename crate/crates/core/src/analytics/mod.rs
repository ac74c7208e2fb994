//! Citation analytics: topical diversity indices over reference profiles,
//! age-of-citation distributions, and disciplinary homophily.

pub mod community;

use std::collections::BTreeMap;

use chrono::{Datelike, NaiveDate};
use serde::Serialize;
use thiserror::Error;

use crate::corpus::{CitationEdge, Corpus, PaperId};
use crate::keywords::{Keyword, SourceField};

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error("profile has no subjects (k = 0)")]
    EmptyProfile,
    #[error("no citation edges with both endpoints in the corpus")]
    NoResolvableEdges,
    #[error("graph has no edges")]
    EmptyGraph,
    #[error("partition covers {got} nodes, graph has {expected}")]
    PartitionMismatch { got: usize, expected: usize },
}

/// Per-paper subject contributions: each reference distributes exactly one
/// unit across its field labels, so contributions sum to the number of
/// valid references.
#[derive(Debug, Clone, Serialize)]
pub struct ReferenceProfile {
    pub contributions: BTreeMap<String, f64>,
    pub reference_count: usize,
    /// References with an empty field set, excluded with a warning count.
    pub skipped_empty_fields: usize,
}

impl ReferenceProfile {
    /// Number of subjects with positive contribution (k).
    pub fn subject_count(&self) -> usize {
        self.contributions.len()
    }

    pub fn total_contribution(&self) -> f64 {
        self.contributions.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.contributions.is_empty()
    }

    pub fn merge(&mut self, other: &ReferenceProfile) {
        for (subject, c) in &other.contributions {
            *self.contributions.entry(subject.clone()).or_insert(0.0) += c;
        }
        self.reference_count += other.reference_count;
        self.skipped_empty_fields += other.skipped_empty_fields;
    }
}

/// Split each reference's unit contribution evenly across its fields.
pub fn subject_contributions<'a>(
    references: impl IntoIterator<Item = &'a CitationEdge>,
) -> ReferenceProfile {
    let mut contributions: BTreeMap<String, f64> = BTreeMap::new();
    let mut reference_count = 0;
    let mut skipped_empty_fields = 0;
    for edge in references {
        if edge.cited_fields.is_empty() {
            skipped_empty_fields += 1;
            continue;
        }
        reference_count += 1;
        let share = 1.0 / edge.cited_fields.len() as f64;
        for field in &edge.cited_fields {
            *contributions.entry(field.clone()).or_insert(0.0) += share;
        }
    }
    ReferenceProfile { contributions, reference_count, skipped_empty_fields }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiversityScores {
    pub simpson: f64,
    pub shannon: f64,
    pub gini: f64,
}

/// Simpson, Shannon (natural log), and Gini over one reference profile.
///
/// Simpson and Shannon consume proportions `p_s = C(i,s) / sum_t C(i,t)`;
/// Gini is scale-free by construction.
pub fn diversity_scores(profile: &ReferenceProfile) -> Result<DiversityScores, AnalyticsError> {
    diversity_scores_with_log_base(profile, std::f64::consts::E)
}

pub fn diversity_scores_with_log_base(
    profile: &ReferenceProfile,
    log_base: f64,
) -> Result<DiversityScores, AnalyticsError> {
    let k = profile.subject_count();
    if k == 0 {
        return Err(AnalyticsError::EmptyProfile);
    }
    let total = profile.total_contribution();
    let mut simpson = 0.0;
    let mut shannon = 0.0;
    for c in profile.contributions.values() {
        let p = c / total;
        simpson += p * p;
        if p > 0.0 {
            shannon -= p * (p.ln() / log_base.ln());
        }
    }
    let simpson = 1.0 - simpson;

    // Gini via the sorted-prefix identity; the brute-force double sum is the
    // independent oracle in the test suites.
    let mut sorted: Vec<f64> = profile.contributions.values().copied().collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("contributions are finite"));
    let kf = k as f64;
    let weighted: f64 = sorted
        .iter()
        .enumerate()
        .map(|(idx, c)| (2.0 * (idx as f64 + 1.0) - 1.0 - kf) * c)
        .sum();
    let gini = weighted / (kf * total);

    Ok(DiversityScores { simpson, shannon, gini })
}

/// Cited works carrying only a year are placed at July 1 (midpoint).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CitedDate {
    Date(NaiveDate),
    Year(i32),
}

impl CitedDate {
    fn resolve(self) -> NaiveDate {
        match self {
            CitedDate::Date(d) => d,
            CitedDate::Year(y) => NaiveDate::from_ymd_opt(y, 7, 1)
                .unwrap_or(NaiveDate::MIN),
        }
    }
}

fn add_years(date: NaiveDate, years: i32) -> NaiveDate {
    let target = date.year() + years;
    NaiveDate::from_ymd_opt(target, date.month(), date.day())
        // Feb 29 in a non-leap target year clamps to Feb 28.
        .unwrap_or_else(|| NaiveDate::from_ymd_opt(target, 2, 28).expect("valid clamp"))
}

/// Publication gap in fractional years: whole anniversary years plus the
/// leftover days over 365.25. Anniversaries land on exact integers; the gap
/// is negative when the cited work is newer.
pub fn age_of_citation(citing: NaiveDate, cited: CitedDate) -> f64 {
    let cited = cited.resolve();
    if citing < cited {
        return -age_between(citing, cited);
    }
    age_between(cited, citing)
}

fn age_between(earlier: NaiveDate, later: NaiveDate) -> f64 {
    let mut years = later.year() - earlier.year();
    if add_years(earlier, years) > later {
        years -= 1;
    }
    let anniversary = add_years(earlier, years);
    let leftover = (later - anniversary).num_days() as f64;
    years as f64 + leftover / 365.25
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct AocCounters {
    pub negative_aoc: usize,
    pub missing_year: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct HistogramBin {
    pub start: f64,
    pub end: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct GroupAoc {
    pub count: usize,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub histogram: Vec<HistogramBin>,
}

impl GroupAoc {
    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AocReport {
    pub groups: BTreeMap<String, GroupAoc>,
    pub counters: AocCounters,
    /// Groups with zero valid ages, omitted from `groups`.
    pub omitted: Vec<String>,
}

/// How citation ages are grouped.
#[derive(Debug, Clone)]
pub enum AocGroupBy {
    /// Primary subject group of the citing paper.
    SubjectGroup,
    /// Topic keywords matched against the citing paper's keywords.
    Topics(Vec<Keyword>),
}

/// Histogram binning rule.
#[derive(Debug, Clone)]
pub enum Bins {
    /// Equal-width bins over `[0, max]`.
    Count(usize),
    /// Explicit ascending edges; values land in `[e_k, e_k+1)`, the final
    /// bin also takes values equal to the last edge.
    Edges(Vec<f64>),
}

/// Quantile with linear interpolation between order statistics.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = (sorted.len() - 1) as f64 * q;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

fn histogram(sorted: &[f64], bins: &Bins) -> Vec<HistogramBin> {
    let edges: Vec<f64> = match bins {
        Bins::Edges(e) => e.clone(),
        Bins::Count(n) => {
            let n = (*n).max(1);
            let hi = sorted.last().copied().unwrap_or(0.0);
            let width = if hi > 0.0 { hi / n as f64 } else { 1.0 };
            (0..=n).map(|i| i as f64 * width).collect()
        }
    };
    let mut out: Vec<HistogramBin> = edges
        .windows(2)
        .map(|w| HistogramBin { start: w[0], end: w[1], count: 0 })
        .collect();
    let last_edge = *edges.last().unwrap_or(&0.0);
    for &v in sorted {
        if v == last_edge {
            if let Some(bin) = out.last_mut() {
                bin.count += 1;
            }
            continue;
        }
        if let Some(idx) = edges.windows(2).position(|w| w[0] <= v && v < w[1]) {
            out[idx].count += 1;
        }
    }
    out
}

fn group_summary(mut values: Vec<f64>, bins: &Bins) -> GroupAoc {
    values.sort_by(|a, b| a.partial_cmp(b).expect("ages are finite"));
    GroupAoc {
        count: values.len(),
        median: quantile(&values, 0.5),
        q1: quantile(&values, 0.25),
        q3: quantile(&values, 0.75),
        histogram: histogram(&values, bins),
    }
}

/// Resolve the cited side of an edge to a date, preferring in-corpus papers.
pub fn cited_date(corpus: &Corpus, edge: &CitationEdge) -> Option<CitedDate> {
    if let Some(paper) = corpus.paper(&PaperId(edge.cited.clone())) {
        return Some(CitedDate::Date(paper.published_at));
    }
    edge.cited_year.map(CitedDate::Year)
}

/// Per-group age-of-citation histograms with medians and quartiles.
/// Negative gaps and year-less references are dropped into counters.
pub fn aoc_distribution(corpus: &Corpus, group_by: &AocGroupBy, bins: &Bins) -> AocReport {
    let mut counters = AocCounters::default();
    let mut per_group: BTreeMap<String, Vec<f64>> = BTreeMap::new();

    for edge in corpus.citations() {
        let Some(citing) = corpus.paper(&edge.citing) else { continue };
        let Some(cited) = cited_date(corpus, edge) else {
            counters.missing_year += 1;
            continue;
        };
        let age = age_of_citation(citing.published_at, cited);
        if age < 0.0 {
            counters.negative_aoc += 1;
            continue;
        }
        match group_by {
            AocGroupBy::SubjectGroup => {
                if let Ok(group) = corpus.primary_group(citing) {
                    per_group.entry(group.to_owned()).or_default().push(age);
                }
            }
            AocGroupBy::Topics(topics) => {
                let keywords = citing.keywords(SourceField::Both);
                for topic in topics {
                    if keywords.iter().any(|k| *k == topic) {
                        per_group.entry(topic.surface().to_owned()).or_default().push(age);
                    }
                }
            }
        }
    }

    let mut omitted: Vec<String> = match group_by {
        AocGroupBy::SubjectGroup => corpus
            .taxonomy()
            .group_codes()
            .filter(|g| !per_group.contains_key(*g))
            .map(str::to_owned)
            .collect(),
        AocGroupBy::Topics(topics) => topics
            .iter()
            .filter(|t| !per_group.contains_key(t.surface()))
            .map(|t| t.surface().to_owned())
            .collect(),
    };
    omitted.sort();

    let groups = per_group
        .into_iter()
        .map(|(group, values)| (group, group_summary(values, bins)))
        .collect();
    AocReport { groups, counters, omitted }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HomophilyMode {
    PrimaryGroup,
    AnySharedGroup,
}

impl std::str::FromStr for HomophilyMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "primary_group" => Ok(HomophilyMode::PrimaryGroup),
            "any_shared_group" => Ok(HomophilyMode::AnySharedGroup),
            other => Err(format!(
                "unknown homophily mode {other:?} (primary_group|any_shared_group)"
            )),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HomophilyReport {
    pub mode: HomophilyMode,
    pub ratio: f64,
    pub intra: usize,
    pub total: usize,
    /// Citing-group x cited-group counts over primary groups.
    pub matrix: BTreeMap<String, BTreeMap<String, usize>>,
}

/// Fraction of in-corpus citations staying within a discipline, plus the
/// full group-by-group citation matrix.
pub fn homophily_ratio(
    corpus: &Corpus,
    mode: HomophilyMode,
) -> Result<HomophilyReport, AnalyticsError> {
    let mut intra = 0;
    let mut total = 0;
    let mut matrix: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();

    for edge in corpus.citations() {
        let Some(citing) = corpus.paper(&edge.citing) else { continue };
        let Some(cited) = corpus.paper(&PaperId(edge.cited.clone())) else { continue };
        let (Ok(citing_group), Ok(cited_group)) =
            (corpus.primary_group(citing), corpus.primary_group(cited))
        else {
            continue;
        };
        total += 1;
        *matrix
            .entry(citing_group.to_owned())
            .or_default()
            .entry(cited_group.to_owned())
            .or_insert(0) += 1;
        let same = match mode {
            HomophilyMode::PrimaryGroup => citing_group == cited_group,
            HomophilyMode::AnySharedGroup => {
                let citing_groups = corpus.groups_of(citing);
                let cited_groups = corpus.groups_of(cited);
                citing_groups.intersection(&cited_groups).next().is_some()
            }
        };
        if same {
            intra += 1;
        }
    }

    if total == 0 {
        return Err(AnalyticsError::NoResolvableEdges);
    }
    Ok(HomophilyReport { mode, ratio: intra as f64 / total as f64, intra, total, matrix })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Paper, Taxonomy};
    use crate::keywords::normalize_keyword;
    use std::collections::BTreeSet;

    fn edge(citing: &str, cited: &str, year: Option<i32>, fields: &[&str]) -> CitationEdge {
        CitationEdge {
            citing: PaperId(citing.to_owned()),
            cited: cited.to_owned(),
            cited_year: year,
            cited_fields: fields.iter().map(|s| s.to_string()).collect::<BTreeSet<_>>(),
        }
    }

    #[test]
    fn contributions_split_across_fields() {
        let refs =
            vec![edge("p", "r1", None, &["CS"]), edge("p", "r2", None, &["CS", "Math"])];
        let profile = subject_contributions(&refs);
        assert_eq!(profile.contributions["CS"], 1.5);
        assert_eq!(profile.contributions["Math"], 0.5);
        assert_eq!(profile.subject_count(), 2);
        assert_eq!(profile.reference_count, 2);
    }

    #[test]
    fn three_fields_get_thirds() {
        let refs = vec![edge("p", "r", None, &["A", "B", "C"])];
        let profile = subject_contributions(&refs);
        for c in profile.contributions.values() {
            assert!((c - 1.0 / 3.0).abs() < 1e-15);
        }
        assert!((profile.total_contribution() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_references_make_empty_profile() {
        let profile = subject_contributions(&[]);
        assert!(profile.is_empty());
        assert!(matches!(diversity_scores(&profile), Err(AnalyticsError::EmptyProfile)));
    }

    #[test]
    fn empty_field_sets_are_counted_and_skipped() {
        let refs = vec![edge("p", "r1", None, &[]), edge("p", "r2", None, &["CS"])];
        let profile = subject_contributions(&refs);
        assert_eq!(profile.skipped_empty_fields, 1);
        assert_eq!(profile.reference_count, 1);
    }

    #[test]
    fn symmetric_split_scores() {
        let refs = vec![edge("p", "r1", None, &["A"]), edge("p", "r2", None, &["B"])];
        let scores = diversity_scores(&subject_contributions(&refs)).unwrap();
        assert!((scores.simpson - 0.5).abs() < 1e-12);
        assert!((scores.shannon - std::f64::consts::LN_2).abs() < 1e-12);
        assert!(scores.gini.abs() < 1e-12);
    }

    #[test]
    fn single_subject_scores_are_zero() {
        let refs = vec![edge("p", "r1", None, &["A"]), edge("p", "r2", None, &["A"])];
        let scores = diversity_scores(&subject_contributions(&refs)).unwrap();
        assert_eq!(scores.simpson, 0.0);
        assert_eq!(scores.shannon, 0.0);
        assert_eq!(scores.gini, 0.0);
    }

    #[test]
    fn skewed_profile_matches_hand_computation() {
        // C = (2, 1, 1): Simpson 0.625, Shannon ~1.039721, Gini 1/6.
        let refs = vec![
            edge("p", "r1", None, &["A"]),
            edge("p", "r2", None, &["A"]),
            edge("p", "r3", None, &["B"]),
            edge("p", "r4", None, &["C"]),
        ];
        let scores = diversity_scores(&subject_contributions(&refs)).unwrap();
        assert!((scores.simpson - 0.625).abs() < 1e-12);
        assert!((scores.shannon - 1.0397207708399179).abs() < 1e-9);
        assert!((scores.gini - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn anniversary_gaps_are_exact_integers() {
        let citing = NaiveDate::from_ymd_opt(2020, 6, 1).unwrap();
        let cited = CitedDate::Date(NaiveDate::from_ymd_opt(2015, 6, 1).unwrap());
        assert_eq!(age_of_citation(citing, cited), 5.0);
        assert_eq!(age_of_citation(citing, CitedDate::Date(citing)), 0.0);
    }

    #[test]
    fn year_only_references_sit_at_midyear() {
        let citing = NaiveDate::from_ymd_opt(2020, 7, 1).unwrap();
        assert_eq!(age_of_citation(citing, CitedDate::Year(2015)), 5.0);
        let earlier = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
        let age = age_of_citation(earlier, CitedDate::Year(2019));
        assert!(age > 0.0 && age < 1.0);
    }

    #[test]
    fn newer_cited_work_gives_negative_gap() {
        let citing = NaiveDate::from_ymd_opt(2019, 6, 1).unwrap();
        assert!(age_of_citation(citing, CitedDate::Year(2021)) < 0.0);
    }

    fn paper(id: &str, cats: &[&str], year: i32, title_kw: &[&str]) -> Paper {
        Paper {
            id: PaperId(id.to_owned()),
            title: "t".into(),
            abstract_text: "a".into(),
            categories: cats.iter().map(|s| s.to_string()).collect(),
            published_at: NaiveDate::from_ymd_opt(year, 6, 1).unwrap(),
            updated_at: None,
            external_id: None,
            venue: None,
            title_keywords: title_kw.iter().map(|s| normalize_keyword(s).unwrap()).collect(),
            abstract_keywords: vec![],
        }
    }

    #[test]
    fn aoc_distribution_medians_and_counters() {
        // Gaps planted as 1, 2, 3, 10 years plus one negative and one
        // missing-year edge.
        let papers = vec![paper("a", &["cs.LG"], 2020, &[])];
        let citations = vec![
            edge("a", "x1", Some(2019), &[]),
            edge("a", "x2", Some(2018), &[]),
            edge("a", "x3", Some(2017), &[]),
            edge("a", "x4", Some(2010), &[]),
            edge("a", "x5", Some(2024), &[]),
            edge("a", "x6", None, &[]),
        ];
        let corpus = Corpus::new(papers, citations, Taxonomy::builtin().clone());
        // Year-only references sit at July 1; citing June 1 makes the gaps
        // fractional, so bin around the planted integers.
        let bins = Bins::Edges(vec![0.0, 1.5, 2.5, 3.5, 11.0]);
        let report = aoc_distribution(&corpus, &AocGroupBy::SubjectGroup, &bins);
        let cs = &report.groups["cs"];
        assert_eq!(cs.count, 4);
        let counts: Vec<usize> = cs.histogram.iter().map(|b| b.count).collect();
        assert_eq!(counts, vec![1, 1, 1, 1]);
        // Each gap is k years minus the July->June remainder of 336 days.
        let expected_median = 1.5 + 336.0 / 365.25;
        assert!((cs.median - expected_median).abs() < 1e-9);
        assert_eq!(report.counters.negative_aoc, 1);
        assert_eq!(report.counters.missing_year, 1);
        assert!(report.omitted.contains(&"math".to_owned()));
    }

    #[test]
    fn equal_gaps_have_zero_iqr() {
        let papers = vec![paper("a", &["cs.LG"], 2020, &[])];
        let citations: Vec<CitationEdge> = (0..5)
            .map(|i| edge("a", &format!("x{i}"), Some(2016), &[]))
            .collect();
        let corpus = Corpus::new(papers, citations, Taxonomy::builtin().clone());
        let report = aoc_distribution(&corpus, &AocGroupBy::SubjectGroup, &Bins::Count(4));
        let cs = &report.groups["cs"];
        assert_eq!(cs.iqr(), 0.0);
        assert_eq!(cs.median, cs.q1);
    }

    fn homophily_corpus(intra: usize, cross: usize) -> Corpus {
        let mut papers = vec![
            paper("cs1", &["cs.LG"], 2020, &[]),
            paper("cs2", &["cs.CL"], 2019, &[]),
            paper("m1", &["math.CO"], 2019, &[]),
        ];
        papers.push(paper("src", &["cs.AI"], 2021, &[]));
        let mut citations = Vec::new();
        for i in 0..intra {
            citations.push(edge("src", if i % 2 == 0 { "cs1" } else { "cs2" }, None, &[]));
        }
        for _ in 0..cross {
            citations.push(edge("src", "m1", None, &[]));
        }
        Corpus::new(papers, citations, Taxonomy::builtin().clone())
    }

    #[test]
    fn all_intra_edges_give_ratio_one() {
        let corpus = homophily_corpus(5, 0);
        let report = homophily_ratio(&corpus, HomophilyMode::PrimaryGroup).unwrap();
        assert_eq!(report.ratio, 1.0);
    }

    #[test]
    fn nine_intra_one_cross_gives_point_nine() {
        let corpus = homophily_corpus(9, 1);
        let report = homophily_ratio(&corpus, HomophilyMode::PrimaryGroup).unwrap();
        assert_eq!(report.ratio, 0.9);
        assert_eq!(report.matrix["cs"]["math"], 1);
    }

    #[test]
    fn shared_group_ratio_dominates_primary_ratio() {
        // cs.LG + stat.ML citing stat.TH shares "stat" but differs in primary.
        let papers = vec![
            paper("a", &["cs.LG", "stat.ML"], 2020, &[]),
            paper("b", &["stat.TH"], 2019, &[]),
        ];
        let citations = vec![edge("a", "b", None, &[])];
        let corpus = Corpus::new(papers, citations, Taxonomy::builtin().clone());
        let primary = homophily_ratio(&corpus, HomophilyMode::PrimaryGroup).unwrap();
        let shared = homophily_ratio(&corpus, HomophilyMode::AnySharedGroup).unwrap();
        assert_eq!(primary.ratio, 0.0);
        assert_eq!(shared.ratio, 1.0);
        assert!(shared.ratio >= primary.ratio);
    }

    #[test]
    fn no_resolvable_edges_is_an_error() {
        let corpus = Corpus::new(
            vec![paper("a", &["cs.LG"], 2020, &[])],
            vec![edge("a", "external-only", Some(2010), &[])],
            Taxonomy::builtin().clone(),
        );
        assert!(matches!(
            homophily_ratio(&corpus, HomophilyMode::PrimaryGroup),
            Err(AnalyticsError::NoResolvableEdges)
        ));
    }
}
