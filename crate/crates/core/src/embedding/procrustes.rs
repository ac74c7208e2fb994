//! Orthogonal Procrustes alignment between consecutive snapshot embeddings.
//!
//! The rotation minimizing `|X Q - Y|_F` over orthogonal Q is `U V^T` where
//! `U S V^T` is the SVD of `X^T Y`. Snapshots share only part of their
//! vocabularies, so the cross-product is taken over shared rows and the
//! resulting rotation is applied to every row.

use nalgebra::DMatrix;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{EmbeddingError, EmbeddingMatrix, EmbeddingSeries, RotationMatrix};

/// Row pairs `(index in a, index in b)` for keywords present in both
/// vocabularies, in `a`'s vocabulary order.
pub fn shared_vocabulary(a: &EmbeddingMatrix, b: &EmbeddingMatrix) -> Vec<(usize, usize)> {
    let b_index: std::collections::BTreeMap<_, usize> =
        b.vocab.iter().enumerate().map(|(i, k)| (k.clone(), i)).collect();
    a.vocab
        .iter()
        .enumerate()
        .filter_map(|(i, k)| b_index.get(k).map(|&j| (i, j)))
        .collect()
}

fn to_nalgebra(m: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[[i, j]])
}

fn to_ndarray(m: &DMatrix<f64>) -> Array2<f64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

/// Optimal rotation for two row-aligned matrices with equal shape.
pub fn procrustes_rotation(
    x: &Array2<f64>,
    y: &Array2<f64>,
) -> Result<RotationMatrix, EmbeddingError> {
    if x.nrows() != y.nrows() || x.ncols() != y.ncols() {
        return Err(EmbeddingError::DimensionMismatch {
            context: format!("{:?} vs {:?}", x.dim(), y.dim()),
        });
    }
    let cross = x.t().dot(y);
    let svd = to_nalgebra(&cross).svd(true, true);
    let u = svd.u.ok_or_else(|| EmbeddingError::DimensionMismatch {
        context: "svd did not produce U".into(),
    })?;
    let v_t = svd.v_t.ok_or_else(|| EmbeddingError::DimensionMismatch {
        context: "svd did not produce V^T".into(),
    })?;
    RotationMatrix::new(to_ndarray(&(u * v_t)))
}

/// Rotation aligning `a` toward `b` over their shared vocabulary.
///
/// Errors when fewer shared keywords exist than embedding dimensions.
pub fn procrustes_align(
    a: &EmbeddingMatrix,
    b: &EmbeddingMatrix,
) -> Result<RotationMatrix, EmbeddingError> {
    if a.dim() != b.dim() {
        return Err(EmbeddingError::DimensionMismatch {
            context: format!("dims {} vs {}", a.dim(), b.dim()),
        });
    }
    let shared = shared_vocabulary(a, b);
    if shared.len() < a.dim() {
        return Err(EmbeddingError::SharedVocabTooSmall { shared: shared.len(), needed: a.dim() });
    }
    let mut x = Array2::zeros((shared.len(), a.dim()));
    let mut y = Array2::zeros((shared.len(), b.dim()));
    for (row, &(ia, ib)) in shared.iter().enumerate() {
        x.row_mut(row).assign(&a.matrix.row(ia));
        y.row_mut(row).assign(&b.matrix.row(ib));
    }
    procrustes_rotation(&x, &y)
}

/// Frobenius norm of `X R - Y`.
pub fn alignment_residual(x: &Array2<f64>, rotation: &RotationMatrix, y: &Array2<f64>) -> f64 {
    let aligned = x.dot(rotation.matrix());
    (&aligned - y).mapv(|v| v * v).sum().sqrt()
}

/// Chain every snapshot into the latest snapshot's space: pairwise rotations
/// are computed on consecutive shared vocabularies and composed, and each
/// composed rotation is applied to all rows of its snapshot.
pub fn align_series(series: EmbeddingSeries) -> Result<EmbeddingSeries, EmbeddingError> {
    let count = series.matrices.len();
    if count < 2 {
        return Err(EmbeddingError::TooFewSnapshots);
    }
    let mut rotations = Vec::with_capacity(count - 1);
    for k in 0..count - 1 {
        rotations.push(procrustes_align(&series.matrices[k], &series.matrices[k + 1])?);
    }

    let mut matrices = series.matrices;
    // Suffix products: snapshot t gets R_t * R_t+1 * ... * R_T-2.
    let dim = matrices[0].dim();
    let mut suffix = RotationMatrix::new(Array2::eye(dim)).expect("identity is orthogonal");
    for t in (0..count - 1).rev() {
        suffix = rotations[t].compose(&suffix);
        matrices[t].matrix = matrices[t].matrix.dot(suffix.matrix());
    }
    Ok(EmbeddingSeries { matrices, rotations, aligned: true })
}

/// Seeded random orthogonal matrix (QR of a Gaussian matrix).
pub fn random_orthogonal(dim: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gaussian = DMatrix::from_fn(dim, dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    let q = gaussian.qr().q();
    to_ndarray(&q)
}
