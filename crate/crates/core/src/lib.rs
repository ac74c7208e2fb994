//! Core library of the scievo toolkit: canonical corpus types, keyword
//! extraction, temporal snapshots with keyword co-occurrence graphs,
//! diachronic keyword embeddings, and citation analytics.
//!
//! Everything here is deterministic: all stochastic operations funnel
//! through explicit seeds, and every collection with observable iteration
//! order is ordered.

pub mod analytics;
pub mod corpus;
pub mod embedding;
pub mod keywords;
pub mod snapshot;

pub use corpus::{Corpus, CorpusError, Paper, PaperId, Taxonomy};
pub use keywords::{Keyword, KeywordError, Vocabulary};
pub use snapshot::{CooccurrenceGraph, RankTable, Snapshot};
