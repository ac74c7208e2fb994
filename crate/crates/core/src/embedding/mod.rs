//! Diachronic keyword embeddings: per-snapshot graph-convolutional training,
//! orthogonal alignment across snapshots, trajectories, nearest neighbors,
//! and 2D projection.

mod gcn;
mod procrustes;
mod tsne;

pub use gcn::{
    gcn_forward, link_prediction_auc, link_prediction_loss, link_prediction_loss_and_grads,
    negative_sample, train_link_prediction, GcnDims, GcnGradients, GcnParams,
    NormalizedAdjacency, TrainOutcome, TrainingConfig,
};
pub use procrustes::{
    align_series, alignment_residual, procrustes_align, procrustes_rotation, random_orthogonal,
    shared_vocabulary,
};
pub use tsne::{tsne_project, TsneConfig, TsneResult};

use std::io::Write;

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::keywords::Keyword;

/// Tolerance for the rotation orthogonality invariant.
pub const ORTHOGONALITY_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },
    #[error("graph has no edges")]
    EmptyEdgeSet,
    #[error("requested {requested} negative pairs but only {available} non-edges exist")]
    NotEnoughNonEdges { requested: usize, available: usize },
    #[error("shared vocabulary has {shared} keywords, need at least {needed}")]
    SharedVocabTooSmall { shared: usize, needed: usize },
    #[error("need at least two snapshots to align")]
    TooFewSnapshots,
    #[error("matrix is not orthogonal (defect {defect:.3e})")]
    NotOrthogonal { defect: f64 },
    #[error("keyword {keyword:?} not found in any snapshot")]
    KeywordNotFound { keyword: String },
    #[error("keyword {keyword:?} not in vocabulary")]
    NotInVocabulary { keyword: String },
    #[error("query row for {keyword:?} has zero norm")]
    ZeroNormRow { keyword: String },
    #[error("series is not aligned; run alignment first")]
    NotAligned,
    #[error("projection needs at least 4 points, got {got}")]
    TooFewPoints { got: usize },
    #[error("input contains non-finite values")]
    NonFiniteInput,
    #[error("optimization diverged to non-finite values")]
    Diverged,
    #[error("malformed embedding file: {0}")]
    Format(String),
}

/// Embeddings for one snapshot: row `i` of `matrix` belongs to `vocab[i]`.
#[derive(Debug, Clone)]
pub struct EmbeddingMatrix {
    pub label: String,
    pub vocab: Vec<Keyword>,
    pub matrix: Array2<f64>,
}

impl EmbeddingMatrix {
    pub fn new(
        label: String,
        vocab: Vec<Keyword>,
        matrix: Array2<f64>,
    ) -> Result<Self, EmbeddingError> {
        if vocab.len() != matrix.nrows() {
            return Err(EmbeddingError::DimensionMismatch {
                context: format!("{} keywords vs {} rows", vocab.len(), matrix.nrows()),
            });
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(EmbeddingError::NonFiniteInput);
        }
        Ok(EmbeddingMatrix { label, vocab, matrix })
    }

    pub fn dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn index_of(&self, keyword: &Keyword) -> Option<usize> {
        self.vocab.iter().position(|k| k == keyword)
    }

    pub fn row_of(&self, keyword: &Keyword) -> Option<ArrayView1<'_, f64>> {
        self.index_of(keyword).map(|i| self.matrix.row(i))
    }

    /// Header `vocab_size<TAB>dim<TAB>label`, then one
    /// `keyword<TAB>v1 v2 ... vd` line per keyword, 9 significant digits.
    pub fn write_text(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "{}\t{}\t{}", self.vocab.len(), self.dim(), self.label)?;
        for (i, keyword) in self.vocab.iter().enumerate() {
            let values: Vec<String> =
                self.matrix.row(i).iter().map(|v| format!("{v:.8e}")).collect();
            writeln!(w, "{}\t{}", keyword, values.join(" "))?;
        }
        Ok(())
    }

    pub fn read_text(text: &str) -> Result<EmbeddingMatrix, EmbeddingError> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| EmbeddingError::Format("empty file".into()))?;
        let parts: Vec<&str> = header.split('\t').collect();
        if parts.len() != 3 {
            return Err(EmbeddingError::Format("header must be size<TAB>dim<TAB>label".into()));
        }
        let size: usize =
            parts[0].parse().map_err(|_| EmbeddingError::Format("bad vocab size".into()))?;
        let dim: usize =
            parts[1].parse().map_err(|_| EmbeddingError::Format("bad dimension".into()))?;
        let label = parts[2].to_owned();

        let mut vocab = Vec::with_capacity(size);
        let mut data = Vec::with_capacity(size * dim);
        for (no, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (kw, values) = line
                .split_once('\t')
                .ok_or_else(|| EmbeddingError::Format(format!("line {}", no + 2)))?;
            let keyword = kw
                .parse::<Keyword>()
                .map_err(|e| EmbeddingError::Format(format!("line {}: {e}", no + 2)))?;
            let mut count = 0;
            for v in values.split_whitespace() {
                let value: f64 = v
                    .parse()
                    .map_err(|_| EmbeddingError::Format(format!("line {}: bad value", no + 2)))?;
                data.push(value);
                count += 1;
            }
            if count != dim {
                return Err(EmbeddingError::Format(format!(
                    "line {}: expected {dim} values, got {count}",
                    no + 2
                )));
            }
            vocab.push(keyword);
        }
        if vocab.len() != size {
            return Err(EmbeddingError::Format(format!(
                "expected {size} rows, got {}",
                vocab.len()
            )));
        }
        let matrix = Array2::from_shape_vec((size, dim), data)
            .map_err(|e| EmbeddingError::Format(e.to_string()))?;
        EmbeddingMatrix::new(label, vocab, matrix)
    }
}

/// An orthogonal d x d rotation, validated on construction.
#[derive(Debug, Clone)]
pub struct RotationMatrix(Array2<f64>);

impl RotationMatrix {
    pub fn new(matrix: Array2<f64>) -> Result<Self, EmbeddingError> {
        let defect = orthogonality_defect(&matrix);
        if defect > ORTHOGONALITY_TOL {
            return Err(EmbeddingError::NotOrthogonal { defect });
        }
        Ok(RotationMatrix(matrix))
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    /// `self * other`, without re-validating strictly (compositions stay
    /// orthogonal within a looser tolerance).
    pub fn compose(&self, other: &RotationMatrix) -> RotationMatrix {
        RotationMatrix(self.0.dot(&other.0))
    }

    pub fn as_rows(&self) -> Vec<Vec<f64>> {
        self.0.rows().into_iter().map(|r| r.to_vec()).collect()
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, EmbeddingError> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in &rows {
            if row.len() != n {
                return Err(EmbeddingError::DimensionMismatch {
                    context: "rotation rows must form a square matrix".into(),
                });
            }
            data.extend_from_slice(row);
        }
        let matrix = Array2::from_shape_vec((n, n), data)
            .map_err(|e| EmbeddingError::Format(e.to_string()))?;
        RotationMatrix::new(matrix)
    }
}

/// Max-norm of `R^T R - I`.
pub fn orthogonality_defect(matrix: &Array2<f64>) -> f64 {
    let gram = matrix.t().dot(matrix);
    let n = gram.nrows();
    let mut defect: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            defect = defect.max((gram[[i, j]] - target).abs());
        }
    }
    defect
}

/// Per-snapshot embedding matrices plus the pairwise alignment rotations.
#[derive(Debug, Clone)]
pub struct EmbeddingSeries {
    pub matrices: Vec<EmbeddingMatrix>,
    pub rotations: Vec<RotationMatrix>,
    pub aligned: bool,
}

impl EmbeddingSeries {
    pub fn unaligned(matrices: Vec<EmbeddingMatrix>) -> EmbeddingSeries {
        EmbeddingSeries { matrices, rotations: Vec::new(), aligned: false }
    }
}

/// A keyword's aligned position per snapshot; `vector` is `None` where the
/// keyword is outside that snapshot's vocabulary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub label: String,
    pub vector: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub keyword: Keyword,
    pub points: Vec<TrajectoryPoint>,
    /// 2D projection per present snapshot, filled by the projection stage.
    pub projected: Option<Vec<(String, [f64; 2])>>,
}

/// Aligned per-snapshot vectors for one keyword.
pub fn build_trajectory(
    keyword: &Keyword,
    series: &EmbeddingSeries,
) -> Result<Trajectory, EmbeddingError> {
    if !series.aligned {
        return Err(EmbeddingError::NotAligned);
    }
    let points: Vec<TrajectoryPoint> = series
        .matrices
        .iter()
        .map(|m| TrajectoryPoint {
            label: m.label.clone(),
            vector: m.row_of(keyword).map(|r| r.to_vec()),
        })
        .collect();
    if points.iter().all(|p| p.vector.is_none()) {
        return Err(EmbeddingError::KeywordNotFound { keyword: keyword.surface().to_owned() });
    }
    Ok(Trajectory { keyword: keyword.clone(), points, projected: None })
}

fn cosine(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    let dot = a.dot(&b);
    let na = a.dot(&a).sqrt();
    let nb = b.dot(&b).sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot / (na * nb)
}

/// Top-k cosine neighbors of `keyword`, excluding the query itself;
/// ties broken lexicographically.
pub fn nearest_keywords(
    embedding: &EmbeddingMatrix,
    keyword: &Keyword,
    k: usize,
) -> Result<Vec<(Keyword, f64)>, EmbeddingError> {
    let query_idx = embedding
        .index_of(keyword)
        .ok_or_else(|| EmbeddingError::NotInVocabulary { keyword: keyword.surface().to_owned() })?;
    let query = embedding.matrix.row(query_idx);
    if query.dot(&query) == 0.0 {
        return Err(EmbeddingError::ZeroNormRow { keyword: keyword.surface().to_owned() });
    }
    let mut scored: Vec<(Keyword, f64)> = embedding
        .vocab
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != query_idx)
        .map(|(i, kw)| (kw.clone(), cosine(query, embedding.matrix.row(i))))
        .collect();
    scored.sort_by(|a, b| {
        b.1.partial_cmp(&a.1).expect("cosines are finite").then_with(|| a.0.cmp(&b.0))
    });
    scored.truncate(k);
    Ok(scored)
}
