//! Cross-module invariants checked with randomized inputs.

use std::collections::BTreeSet;

use chrono::NaiveDate;
use proptest::prelude::*;

use scievo_core::analytics::{
    diversity_scores, homophily_ratio, subject_contributions, HomophilyMode,
};
use scievo_core::corpus::{CitationEdge, Corpus, Paper, PaperId, Taxonomy};
use scievo_core::keywords::{build_vocabulary, normalize_keyword, Keyword, SourceField};
use scievo_core::snapshot::{
    build_cooccurrence, keyword_ranks, partition_by_time, rank_trajectory, yearly_boundaries,
    RankTable,
};

fn kw(s: &str) -> Keyword {
    normalize_keyword(s).unwrap()
}

fn paper(id: &str, year: i32, month: u32, cats: Vec<String>, kws: &[String]) -> Paper {
    Paper {
        id: PaperId(id.to_owned()),
        title: "t".into(),
        abstract_text: "a".into(),
        categories: cats,
        published_at: NaiveDate::from_ymd_opt(year, month, 1).unwrap(),
        updated_at: None,
        external_id: None,
        venue: None,
        title_keywords: kws.iter().map(|s| kw(s)).collect(),
        abstract_keywords: vec![],
    }
}

/// Literal evaluation of the three diversity definitions, including the
/// full double sum for Gini. Kept independent of the library formulas.
fn brute_force_diversity(contributions: &[f64]) -> (f64, f64, f64) {
    let k = contributions.len();
    let total: f64 = contributions.iter().sum();
    let proportions: Vec<f64> = contributions.iter().map(|c| c / total).collect();
    let simpson = 1.0 - proportions.iter().map(|p| p * p).sum::<f64>();
    let shannon = -proportions
        .iter()
        .filter(|p| **p > 0.0)
        .map(|p| p * p.ln())
        .sum::<f64>();
    let mut double_sum = 0.0;
    for a in contributions {
        for b in contributions {
            double_sum += (a - b).abs();
        }
    }
    let gini = double_sum / (2.0 * k as f64 * total);
    (simpson, shannon, gini)
}

fn reference(citing: &str, idx: usize, fields: &[usize]) -> CitationEdge {
    CitationEdge {
        citing: PaperId(citing.to_owned()),
        cited: format!("ref{idx}"),
        cited_year: None,
        cited_fields: fields.iter().map(|f| format!("field{f}")).collect::<BTreeSet<_>>(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn normalization_is_idempotent(raw in ".{0,40}") {
        if let Ok(once) = normalize_keyword(&raw) {
            let twice = normalize_keyword(once.surface()).unwrap();
            prop_assert_eq!(once, twice);
        }
    }

    #[test]
    fn diversity_matches_brute_force(field_sets in prop::collection::vec(
        prop::collection::btree_set(0usize..10, 1..4), 1..50,
    )) {
        let refs: Vec<CitationEdge> = field_sets
            .iter()
            .enumerate()
            .map(|(i, fields)| {
                let fields: Vec<usize> = fields.iter().copied().collect();
                reference("p", i, &fields)
            })
            .collect();
        let profile = subject_contributions(&refs);
        // Contributions sum to the number of valid references.
        prop_assert!((profile.total_contribution() - refs.len() as f64).abs() <= 1e-12);

        let scores = diversity_scores(&profile).unwrap();
        let contributions: Vec<f64> = profile.contributions.values().copied().collect();
        let (simpson, shannon, gini) = brute_force_diversity(&contributions);
        prop_assert!((scores.simpson - simpson).abs() <= 1e-12);
        prop_assert!((scores.shannon - shannon).abs() <= 1e-12);
        prop_assert!((scores.gini - gini).abs() <= 1e-12);

        // Range invariants: 0 <= simpson, gini <= 1 - 1/k.
        let k = profile.subject_count() as f64;
        prop_assert!(scores.simpson >= -1e-12 && scores.simpson <= 1.0 - 1.0 / k + 1e-12);
        prop_assert!(scores.gini >= -1e-12 && scores.gini <= 1.0 - 1.0 / k + 1e-12);
        prop_assert!(scores.shannon >= -1e-12);
    }

    #[test]
    fn diversity_is_scale_invariant(
        counts in prop::collection::vec(1usize..20, 2..8),
        scale in 1usize..5,
    ) {
        // Scaling every reference multiset by an integer factor scales all
        // contributions by the factor; the three indices must not move.
        let base: Vec<CitationEdge> = counts
            .iter()
            .enumerate()
            .flat_map(|(f, n)| (0..*n).map(move |i| (f, i)))
            .enumerate()
            .map(|(idx, (f, _))| reference("p", idx, &[f]))
            .collect();
        let scaled: Vec<CitationEdge> = counts
            .iter()
            .enumerate()
            .flat_map(|(f, n)| (0..*n * scale).map(move |i| (f, i)))
            .enumerate()
            .map(|(idx, (f, _))| reference("p", idx, &[f]))
            .collect();
        let a = diversity_scores(&subject_contributions(&base)).unwrap();
        let b = diversity_scores(&subject_contributions(&scaled)).unwrap();
        prop_assert!((a.simpson - b.simpson).abs() <= 1e-12);
        prop_assert!((a.shannon - b.shannon).abs() <= 1e-12);
        prop_assert!((a.gini - b.gini).abs() <= 1e-12);
    }

    #[test]
    fn partition_is_a_set_partition(years in prop::collection::vec(1989i32..2027, 1..60)) {
        let papers: Vec<Paper> = years
            .iter()
            .enumerate()
            .map(|(i, &y)| paper(&format!("p{i:03}"), y, 6, vec!["cs.LG".into()], &[]))
            .collect();
        let corpus = Corpus::new(papers, vec![], Taxonomy::builtin().clone());
        let boundaries = yearly_boundaries(1991, 2024);
        let outcome = partition_by_time(&corpus, &boundaries).unwrap();

        let mut seen = BTreeSet::new();
        let mut assigned = 0usize;
        for snap in &outcome.snapshots {
            for id in &snap.papers {
                prop_assert!(seen.insert(id.clone()), "paper in two snapshots");
                assigned += 1;
            }
        }
        prop_assert_eq!(assigned + outcome.out_of_range.len(), corpus.len());
    }

    #[test]
    fn cooccurrence_weight_sum_matches_paper_pair_counts(
        keyword_sets in prop::collection::vec(prop::collection::btree_set(0usize..12, 0..7), 1..30),
    ) {
        let names: Vec<String> = (0..12).map(|i| format!("topic{i:02}")).collect();
        let papers: Vec<Paper> = keyword_sets
            .iter()
            .enumerate()
            .map(|(i, set)| {
                let kws: Vec<String> = set.iter().map(|&k| names[k].clone()).collect();
                paper(&format!("p{i:03}"), 2020, 6, vec!["cs.LG".into()], &kws)
            })
            .collect();
        let corpus = Corpus::new(papers, vec![], Taxonomy::builtin().clone());
        let boundaries = [NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(),
                          NaiveDate::from_ymd_opt(2021, 1, 1).unwrap()];
        let outcome = partition_by_time(&corpus, &boundaries).unwrap();
        let vocab = build_vocabulary(corpus.papers(), SourceField::Title, 1);
        let graph = build_cooccurrence(&corpus, &outcome.snapshots[0], &vocab);

        let expected: u64 = keyword_sets
            .iter()
            .map(|set| {
                let m = set.len() as u64;
                m * m.saturating_sub(1) / 2
            })
            .sum();
        prop_assert_eq!(graph.total_edge_weight(), expected);

        // Vocabulary frequencies equal the (paper, keyword) incidence count.
        let incidence: u64 = keyword_sets.iter().map(|s| s.len() as u64).sum();
        prop_assert_eq!(vocab.total_frequency(), incidence);
    }

    #[test]
    fn shared_group_homophily_dominates(
        edges in prop::collection::vec((0usize..12, 0usize..12), 1..40),
        cat_picks in prop::collection::vec(prop::collection::vec(0usize..6, 1..3), 12),
    ) {
        let cats = ["cs.LG", "math.CO", "stat.ML", "hep-th", "econ.EM", "q-bio.NC"];
        let papers: Vec<Paper> = cat_picks
            .iter()
            .enumerate()
            .map(|(i, picks)| {
                let mut chosen: Vec<String> =
                    picks.iter().map(|&c| cats[c].to_string()).collect();
                chosen.dedup();
                paper(&format!("p{i:02}"), 2015, 6, chosen, &[])
            })
            .collect();
        let citations: Vec<CitationEdge> = edges
            .iter()
            .filter(|(a, b)| a != b)
            .map(|&(a, b)| CitationEdge {
                citing: PaperId(format!("p{a:02}")),
                cited: format!("p{b:02}"),
                cited_year: None,
                cited_fields: BTreeSet::new(),
            })
            .collect();
        prop_assume!(!citations.is_empty());
        let corpus = Corpus::new(papers, citations, Taxonomy::builtin().clone());
        let primary = homophily_ratio(&corpus, HomophilyMode::PrimaryGroup).unwrap();
        let shared = homophily_ratio(&corpus, HomophilyMode::AnySharedGroup).unwrap();
        prop_assert!(shared.ratio >= primary.ratio - 1e-15);
    }

    #[test]
    fn group_histogram_sums_to_paper_count(cat_picks in prop::collection::vec(0usize..6, 1..40)) {
        let cats = ["cs.LG", "math.CO", "stat.ML", "hep-th", "econ.EM", "q-bio.NC"];
        let papers: Vec<Paper> = cat_picks
            .iter()
            .enumerate()
            .map(|(i, &c)| paper(&format!("p{i:02}"), 2015, 6, vec![cats[c].into()], &[]))
            .collect();
        let corpus = Corpus::new(papers, vec![], Taxonomy::builtin().clone());
        let total: usize = corpus.group_histogram().values().sum();
        prop_assert_eq!(total, corpus.len());
    }

    #[test]
    fn validation_is_total(payload in ".{0,120}") {
        // Arbitrary JSON values never panic the validator.
        if let Ok(value) = serde_json::from_str::<serde_json::Value>(&payload) {
            let _ = scievo_core::corpus::validate_record(&value, Taxonomy::builtin());
        }
    }
}

#[test]
fn growing_keyword_count_never_worsens_rank() {
    // One keyword gains frequency monotonically across snapshots while the
    // background vocabulary stays fixed.
    let mut papers = Vec::new();
    let mut id = 0;
    for (snap_idx, year) in (2018..2022).enumerate() {
        for _ in 0..=snap_idx {
            papers.push(paper(
                &format!("r{id:03}"),
                year,
                6,
                vec!["cs.LG".into()],
                &["rising term".into()],
            ));
            id += 1;
        }
        for background in ["alpha", "beta", "gamma"] {
            for _ in 0..2 {
                papers.push(paper(
                    &format!("r{id:03}"),
                    year,
                    6,
                    vec!["cs.LG".into()],
                    &[background.into()],
                ));
                id += 1;
            }
        }
    }
    let corpus = Corpus::new(papers, vec![], Taxonomy::builtin().clone());
    let outcome = partition_by_time(&corpus, &yearly_boundaries(2018, 2021)).unwrap();
    let tables: Vec<RankTable> = outcome
        .snapshots
        .iter()
        .map(|s| keyword_ranks(&corpus, s, SourceField::Title, None))
        .collect();
    let ranks = rank_trajectory(&kw("rising term"), &tables);
    let values: Vec<u32> = ranks.iter().map(|(_, r)| r.unwrap()).collect();
    assert!(values.windows(2).all(|w| w[1] <= w[0]), "ranks {values:?} increased");
}

#[test]
fn rank_tables_are_reproducible() {
    let papers: Vec<Paper> = (0..20)
        .map(|i| {
            let kws = vec![format!("term{}", i % 5), format!("term{}", i % 3)];
            paper(&format!("p{i:02}"), 2020, 6, vec!["cs.LG".into()], &kws)
        })
        .collect();
    let corpus = Corpus::new(papers, vec![], Taxonomy::builtin().clone());
    let boundaries = yearly_boundaries(2020, 2020);
    let a = partition_by_time(&corpus, &boundaries).unwrap();
    let b = partition_by_time(&corpus, &boundaries).unwrap();
    let ta = keyword_ranks(&corpus, &a.snapshots[0], SourceField::Title, None);
    let tb = keyword_ranks(&corpus, &b.snapshots[0], SourceField::Title, None);
    assert_eq!(ta, tb);
}
