//! Temporal partitioning, per-snapshot keyword ranking, and keyword
//! co-occurrence graphs built by expanding each paper's keyword set into
//! all pairwise edges.

use std::collections::BTreeMap;
use std::io::Write;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, PaperId};
use crate::keywords::{build_vocabulary, Keyword, SourceField, Vocabulary};

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("boundaries must be strictly increasing")]
    UnsortedBoundaries,
    #[error("need at least two boundaries, got {got}")]
    TooFewBoundaries { got: usize },
    #[error("label count {labels} does not match window count {windows}")]
    LabelMismatch { labels: usize, windows: usize },
    #[error("snapshot export failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed graph file: {0}")]
    GraphFormat(String),
}

/// Papers published within one half-open window `[start, end)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub label: String,
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub papers: Vec<PaperId>,
}

impl Snapshot {
    pub fn contains_date(&self, date: NaiveDate) -> bool {
        self.start <= date && date < self.end
    }
}

/// A partition of the corpus plus the papers falling outside every window.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartitionOutcome {
    pub snapshots: Vec<Snapshot>,
    pub out_of_range: Vec<PaperId>,
}

fn derived_label(start: NaiveDate, end: NaiveDate) -> String {
    use chrono::Datelike;
    let last = end.pred_opt().unwrap_or(end);
    if start.month() == 1 && start.day() == 1 && end.month() == 1 && end.day() == 1 {
        if end.year() - start.year() == 1 {
            return start.year().to_string();
        }
        return format!("{}-{}", start.year(), end.year() - 1);
    }
    format!("{}..{}", start, last)
}

/// Assign papers to half-open windows `[b_k, b_k+1)` by `published_at`.
/// Out-of-range papers are reported, never silently dropped.
pub fn partition_by_time(
    corpus: &Corpus,
    boundaries: &[NaiveDate],
) -> Result<PartitionOutcome, SnapshotError> {
    partition_with_labels(corpus, boundaries, None)
}

/// Like [`partition_by_time`] with explicit window labels.
pub fn partition_with_labels(
    corpus: &Corpus,
    boundaries: &[NaiveDate],
    labels: Option<&[String]>,
) -> Result<PartitionOutcome, SnapshotError> {
    if boundaries.len() < 2 {
        return Err(SnapshotError::TooFewBoundaries { got: boundaries.len() });
    }
    if boundaries.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SnapshotError::UnsortedBoundaries);
    }
    let windows = boundaries.len() - 1;
    if let Some(labels) = labels {
        if labels.len() != windows {
            return Err(SnapshotError::LabelMismatch { labels: labels.len(), windows });
        }
    }

    let mut snapshots: Vec<Snapshot> = (0..windows)
        .map(|k| Snapshot {
            label: labels
                .map(|l| l[k].clone())
                .unwrap_or_else(|| derived_label(boundaries[k], boundaries[k + 1])),
            start: boundaries[k],
            end: boundaries[k + 1],
            papers: Vec::new(),
        })
        .collect();
    let mut out_of_range = Vec::new();

    for paper in corpus.papers() {
        let date = paper.published_at;
        // partition_point gives the first boundary > date; window index is one less.
        let idx = boundaries.partition_point(|b| *b <= date);
        if idx == 0 || idx == boundaries.len() && date >= *boundaries.last().unwrap() {
            out_of_range.push(paper.id.clone());
        } else {
            snapshots[idx - 1].papers.push(paper.id.clone());
        }
    }
    Ok(PartitionOutcome { snapshots, out_of_range })
}

/// Named partition presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartitionPreset {
    /// The eight publication eras used for period-level reporting.
    Periods,
    /// One window per calendar year.
    Yearly,
}

impl std::str::FromStr for PartitionPreset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "periods" => Ok(PartitionPreset::Periods),
            "yearly" => Ok(PartitionPreset::Yearly),
            other => Err(format!("unknown partition preset {other:?} (periods|yearly)")),
        }
    }
}

fn jan1(year: i32) -> NaiveDate {
    NaiveDate::from_ymd_opt(year, 1, 1).expect("valid year")
}

/// Boundaries of the period preset: ~1994, 1995-2004, 2005-2014, 2015-2017,
/// 2018-2019, 2020-2021, 2022-2023, 2024~.
pub fn period_boundaries() -> Vec<NaiveDate> {
    [1991, 1995, 2005, 2015, 2018, 2020, 2022, 2024, 2025].map(jan1).to_vec()
}

pub fn period_labels() -> Vec<String> {
    ["~1994", "1995-2004", "2005-2014", "2015-2017", "2018-2019", "2020-2021", "2022-2023",
     "2024~"]
        .map(String::from)
        .to_vec()
}

/// Yearly boundaries covering `[start_year, end_year]` inclusive.
pub fn yearly_boundaries(start_year: i32, end_year: i32) -> Vec<NaiveDate> {
    (start_year..=end_year + 1).map(jan1).collect()
}

/// One ranked keyword-frequency row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankRow {
    pub keyword: Keyword,
    pub frequency: u32,
    pub rank: u32,
}

/// Dense 1-based ranks by descending frequency (lexicographic tie-break).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankTable {
    pub label: String,
    pub rows: Vec<RankRow>,
}

impl RankTable {
    pub fn rank_of(&self, keyword: &Keyword) -> Option<u32> {
        self.rows.iter().find(|r| &r.keyword == keyword).map(|r| r.rank)
    }
}

/// Rank a snapshot's keywords by frequency (counted once per paper).
pub fn keyword_ranks(
    corpus: &Corpus,
    snapshot: &Snapshot,
    source: SourceField,
    top_k: Option<usize>,
) -> RankTable {
    let papers = snapshot.papers.iter().filter_map(|id| corpus.paper(id));
    let vocab = build_vocabulary(papers, source, 1);
    let mut rows: Vec<RankRow> = vocab
        .iter()
        .enumerate()
        .map(|(i, (k, f))| RankRow { keyword: k.clone(), frequency: f, rank: (i + 1) as u32 })
        .collect();
    if let Some(k) = top_k {
        rows.truncate(k);
    }
    RankTable { label: snapshot.label.clone(), rows }
}

/// Per-snapshot rank of one keyword; `None` where it is unranked.
pub fn rank_trajectory(
    keyword: &Keyword,
    tables: &[RankTable],
) -> Vec<(String, Option<u32>)> {
    tables.iter().map(|t| (t.label.clone(), t.rank_of(keyword))).collect()
}

/// Undirected weighted co-occurrence graph over a snapshot vocabulary.
///
/// Edge weight = number of papers in which both keywords occur. Nodes are
/// vocabulary indices; isolated in-vocabulary keywords stay as degree-0
/// nodes.
#[derive(Debug, Clone)]
pub struct CooccurrenceGraph {
    label: String,
    vocab: Vocabulary,
    /// (i, j) with i < j -> weight.
    edges: BTreeMap<(u32, u32), u32>,
}

impl CooccurrenceGraph {
    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn node_count(&self) -> usize {
        self.vocab.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn weight(&self, a: u32, b: u32) -> Option<u32> {
        let key = if a < b { (a, b) } else { (b, a) };
        self.edges.get(&key).copied()
    }

    /// Edges as `(i, j, weight)` with `i < j`, ascending.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32, u32)> + '_ {
        self.edges.iter().map(|(&(a, b), &w)| (a, b, w))
    }

    pub fn total_edge_weight(&self) -> u64 {
        self.edges.values().map(|&w| w as u64).sum()
    }

    /// `keyword_a<TAB>keyword_b<TAB>weight` rows in ascending node order.
    pub fn write_edge_list(&self, mut w: impl Write) -> std::io::Result<()> {
        for (a, b, weight) in self.edges() {
            writeln!(
                w,
                "{}\t{}\t{}",
                self.vocab.keyword(a as usize),
                self.vocab.keyword(b as usize),
                weight
            )?;
        }
        Ok(())
    }

    /// `keyword<TAB>frequency` rows in vocabulary order.
    pub fn write_nodes(&self, mut w: impl Write) -> std::io::Result<()> {
        for (keyword, frequency) in self.vocab.iter() {
            writeln!(w, "{keyword}\t{frequency}")?;
        }
        Ok(())
    }

    /// Rebuild a graph from the node/edge exports.
    pub fn from_tsv(
        label: &str,
        nodes_text: &str,
        edges_text: &str,
        min_count: u32,
        source: SourceField,
    ) -> Result<CooccurrenceGraph, SnapshotError> {
        let mut entries = Vec::new();
        for (no, line) in nodes_text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (kw, freq) = line
                .split_once('\t')
                .ok_or_else(|| SnapshotError::GraphFormat(format!("nodes line {}", no + 1)))?;
            let keyword = kw
                .parse::<Keyword>()
                .map_err(|e| SnapshotError::GraphFormat(format!("nodes line {}: {e}", no + 1)))?;
            let frequency: u32 = freq
                .trim()
                .parse()
                .map_err(|_| SnapshotError::GraphFormat(format!("nodes line {}", no + 1)))?;
            entries.push((keyword, frequency));
        }
        let vocab = Vocabulary::from_entries(entries, min_count, source);
        let mut edges = BTreeMap::new();
        for (no, line) in edges_text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split('\t').collect();
            if parts.len() != 3 {
                return Err(SnapshotError::GraphFormat(format!("edges line {}", no + 1)));
            }
            let idx = |s: &str| -> Result<u32, SnapshotError> {
                let kw = s.parse::<Keyword>().map_err(|e| {
                    SnapshotError::GraphFormat(format!("edges line {}: {e}", no + 1))
                })?;
                vocab
                    .index_of(&kw)
                    .map(|i| i as u32)
                    .ok_or_else(|| {
                        SnapshotError::GraphFormat(format!("edges line {}: unknown node", no + 1))
                    })
            };
            let a = idx(parts[0])?;
            let b = idx(parts[1])?;
            let weight: u32 = parts[2]
                .trim()
                .parse()
                .map_err(|_| SnapshotError::GraphFormat(format!("edges line {}", no + 1)))?;
            if a == b {
                return Err(SnapshotError::GraphFormat(format!("edges line {}: self-loop", no + 1)));
            }
            let key = if a < b { (a, b) } else { (b, a) };
            edges.insert(key, weight);
        }
        Ok(CooccurrenceGraph { label: label.to_owned(), vocab, edges })
    }
}

/// Expand each paper's in-vocabulary keyword set into all unordered pairs,
/// adding +1 weight per paper.
pub fn build_cooccurrence(
    corpus: &Corpus,
    snapshot: &Snapshot,
    vocab: &Vocabulary,
) -> CooccurrenceGraph {
    let mut edges: BTreeMap<(u32, u32), u32> = BTreeMap::new();
    for id in &snapshot.papers {
        let Some(paper) = corpus.paper(id) else { continue };
        let mut members: Vec<u32> = paper
            .keywords(vocab.source())
            .into_iter()
            .filter_map(|k| vocab.index_of(k))
            .map(|i| i as u32)
            .collect();
        members.sort_unstable();
        members.dedup();
        for i in 0..members.len() {
            for j in (i + 1)..members.len() {
                *edges.entry((members[i], members[j])).or_insert(0) += 1;
            }
        }
    }
    CooccurrenceGraph { label: snapshot.label.clone(), vocab: vocab.clone(), edges }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Paper, Taxonomy};
    use crate::keywords::normalize_keyword;

    fn paper(id: &str, year: i32, title_kw: &[&str]) -> Paper {
        Paper {
            id: PaperId(id.to_owned()),
            title: "t".into(),
            abstract_text: "a".into(),
            categories: vec!["cs.LG".into()],
            published_at: NaiveDate::from_ymd_opt(year, 6, 1).unwrap(),
            updated_at: None,
            external_id: None,
            venue: None,
            title_keywords: title_kw.iter().map(|s| normalize_keyword(s).unwrap()).collect(),
            abstract_keywords: vec![],
        }
    }

    fn corpus(papers: Vec<Paper>) -> Corpus {
        Corpus::new(papers, vec![], Taxonomy::builtin().clone())
    }

    fn kw(s: &str) -> Keyword {
        normalize_keyword(s).unwrap()
    }

    #[test]
    fn partition_assigns_half_open_windows() {
        let c = corpus(vec![paper("a", 1993, &[]), paper("b", 1999, &[]), paper("c", 2005, &[])]);
        let boundaries = [1991, 1995, 2005, 2015].map(jan1);
        let outcome = partition_by_time(&c, &boundaries).unwrap();
        assert_eq!(outcome.snapshots.len(), 3);
        assert_eq!(outcome.snapshots[0].papers, vec![PaperId("a".into())]);
        assert_eq!(outcome.snapshots[1].papers, vec![PaperId("b".into())]);
        assert_eq!(outcome.snapshots[2].papers, vec![PaperId("c".into())]);
        assert!(outcome.out_of_range.is_empty());
    }

    #[test]
    fn partition_reports_out_of_range() {
        let c = corpus(vec![paper("old", 1989, &[])]);
        let boundaries = [1991, 1995].map(jan1);
        let outcome = partition_by_time(&c, &boundaries).unwrap();
        assert_eq!(outcome.out_of_range, vec![PaperId("old".into())]);
        assert!(outcome.snapshots[0].papers.is_empty());
    }

    #[test]
    fn yearly_boundaries_1991_to_2024_make_34_windows() {
        let c = corpus(vec![paper("a", 2000, &[])]);
        let outcome = partition_by_time(&c, &yearly_boundaries(1991, 2024)).unwrap();
        assert_eq!(outcome.snapshots.len(), 34);
        assert_eq!(outcome.snapshots[0].label, "1991");
        assert_eq!(outcome.snapshots[33].label, "2024");
    }

    #[test]
    fn unsorted_boundaries_are_rejected() {
        let c = corpus(vec![paper("a", 2000, &[])]);
        let boundaries = [1995, 1991].map(jan1);
        assert!(matches!(
            partition_by_time(&c, &boundaries),
            Err(SnapshotError::UnsortedBoundaries)
        ));
    }

    #[test]
    fn period_preset_has_eight_labelled_windows() {
        assert_eq!(period_boundaries().len(), 9);
        assert_eq!(period_labels().len(), 8);
    }

    #[test]
    fn ranks_are_dense_with_lexicographic_tie_break() {
        let c = corpus(vec![
            paper("1", 2020, &["a", "b", "c"]),
            paper("2", 2020, &["a", "b", "c"]),
            paper("3", 2020, &["a", "b", "c"]),
            paper("4", 2020, &["a"]),
            paper("5", 2020, &["a"]),
        ]);
        let outcome = partition_by_time(&c, &[jan1(2020), jan1(2021)]).unwrap();
        let table = keyword_ranks(&c, &outcome.snapshots[0], SourceField::Title, None);
        let got: Vec<(&str, u32, u32)> =
            table.rows.iter().map(|r| (r.keyword.surface(), r.frequency, r.rank)).collect();
        assert_eq!(got, vec![("a", 5, 1), ("b", 3, 2), ("c", 3, 3)]);
    }

    #[test]
    fn single_keyword_gets_rank_one() {
        let c = corpus(vec![paper("1", 2020, &["solo"])]);
        let outcome = partition_by_time(&c, &[jan1(2020), jan1(2021)]).unwrap();
        let table = keyword_ranks(&c, &outcome.snapshots[0], SourceField::Title, None);
        assert_eq!(table.rows.len(), 1);
        assert_eq!(table.rows[0].rank, 1);
    }

    #[test]
    fn rank_trajectory_tracks_rises_and_absences() {
        let t1 = RankTable {
            label: "1".into(),
            rows: vec![
                RankRow { keyword: kw("x"), frequency: 9, rank: 1 },
                RankRow { keyword: kw("y"), frequency: 5, rank: 2 },
            ],
        };
        let t2 = RankTable {
            label: "2".into(),
            rows: vec![RankRow { keyword: kw("y"), frequency: 8, rank: 1 }],
        };
        let tables = [t1, t2];
        assert_eq!(
            rank_trajectory(&kw("y"), &tables),
            vec![("1".into(), Some(2)), ("2".into(), Some(1))]
        );
        assert_eq!(
            rank_trajectory(&kw("zz"), &tables),
            vec![("1".into(), None), ("2".into(), None)]
        );
    }

    fn one_snapshot(papers: Vec<Paper>) -> (Corpus, Snapshot) {
        let c = corpus(papers);
        let outcome = partition_by_time(&c, &[jan1(2019), jan1(2030)]).unwrap();
        (c, outcome.snapshots.into_iter().next().unwrap())
    }

    #[test]
    fn one_paper_expands_into_a_clique() {
        let (c, snap) = one_snapshot(vec![paper("1", 2020, &["a", "b", "c"])]);
        let vocab = build_vocabulary(c.papers(), SourceField::Title, 1);
        let g = build_cooccurrence(&c, &snap, &vocab);
        assert_eq!(g.edge_count(), 3);
        assert!(g.edges().all(|(_, _, w)| w == 1));
    }

    #[test]
    fn repeated_pairs_accumulate_weight() {
        let (c, snap) =
            one_snapshot(vec![paper("1", 2020, &["a", "b"]), paper("2", 2021, &["a", "b"])]);
        let vocab = build_vocabulary(c.papers(), SourceField::Title, 1);
        let g = build_cooccurrence(&c, &snap, &vocab);
        assert_eq!(g.edge_count(), 1);
        let ia = vocab.index_of(&kw("a")).unwrap() as u32;
        let ib = vocab.index_of(&kw("b")).unwrap() as u32;
        assert_eq!(g.weight(ia, ib), Some(2));
    }

    #[test]
    fn single_keyword_paper_leaves_isolated_node() {
        let (c, snap) = one_snapshot(vec![paper("1", 2020, &["a"])]);
        let vocab = build_vocabulary(c.papers(), SourceField::Title, 1);
        let g = build_cooccurrence(&c, &snap, &vocab);
        assert_eq!(g.node_count(), 1);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn edge_weight_sum_matches_per_paper_pair_counts() {
        let papers = vec![
            paper("1", 2020, &["a", "b", "c"]),   // C(3,2) = 3
            paper("2", 2020, &["a", "b"]),        // C(2,2) = 1
            paper("3", 2020, &["a", "b", "c", "d"]), // C(4,2) = 6
        ];
        let (c, snap) = one_snapshot(papers);
        let vocab = build_vocabulary(c.papers(), SourceField::Title, 1);
        let g = build_cooccurrence(&c, &snap, &vocab);
        assert_eq!(g.total_edge_weight(), 3 + 1 + 6);
    }

    #[test]
    fn graph_round_trips_through_tsv() {
        let (c, snap) = one_snapshot(vec![
            paper("1", 2020, &["graph theory", "spectral methods"]),
            paper("2", 2020, &["graph theory", "spectral methods", "random walks"]),
        ]);
        let vocab = build_vocabulary(c.papers(), SourceField::Title, 1);
        let g = build_cooccurrence(&c, &snap, &vocab);
        let mut nodes = Vec::new();
        let mut edges = Vec::new();
        g.write_nodes(&mut nodes).unwrap();
        g.write_edge_list(&mut edges).unwrap();
        let restored = CooccurrenceGraph::from_tsv(
            g.label(),
            std::str::from_utf8(&nodes).unwrap(),
            std::str::from_utf8(&edges).unwrap(),
            1,
            SourceField::Title,
        )
        .unwrap();
        assert_eq!(restored.node_count(), g.node_count());
        let restored_edges: Vec<_> = restored.edges().collect();
        let original_edges: Vec<_> = g.edges().collect();
        assert_eq!(restored_edges, original_edges);
    }
}
