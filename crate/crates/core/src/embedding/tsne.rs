//! Exact t-SNE for projecting keyword embeddings and trajectories to 2D.
//!
//! Per-point bandwidths are binary-searched to match the target perplexity,
//! the joint distribution is symmetrized, and gradient descent runs with
//! early exaggeration (factor 12) and a momentum switch, both ending at
//! iteration 250. The implementation consumes pairwise distances only.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::EmbeddingError;

const P_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub early_exaggeration: f64,
    /// Exaggeration stops and momentum switches at this iteration.
    pub exaggeration_end: usize,
    pub initial_momentum: f64,
    pub final_momentum: f64,
    pub seed: u64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        TsneConfig {
            perplexity: 30.0,
            iterations: 1000,
            learning_rate: 200.0,
            early_exaggeration: 12.0,
            exaggeration_end: 250,
            initial_momentum: 0.5,
            final_momentum: 0.8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TsneResult {
    /// N x 2 projection.
    pub points: Array2<f64>,
    /// KL divergence right after early exaggeration ends (true P).
    pub kl_after_exaggeration: f64,
    /// KL divergence at the final iteration.
    pub kl_final: f64,
    pub effective_perplexity: f64,
}

/// Pairwise squared distances from explicit coordinate differences.
fn squared_distances(data: &Array2<f64>) -> Array2<f64> {
    let n = data.nrows();
    let mut d = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let mut acc = 0.0;
            for c in 0..data.ncols() {
                let diff = data[[i, c]] - data[[j, c]];
                acc += diff * diff;
            }
            d[[i, j]] = acc;
            d[[j, i]] = acc;
        }
    }
    d
}

/// Conditional distribution row for point `i` whose entropy matches
/// `ln(perplexity)`, found by binary search over the precision beta.
fn conditional_row(distances: &Array2<f64>, i: usize, target_entropy: f64) -> Vec<f64> {
    let n = distances.nrows();
    // Shift by the smallest distance so the sum stays >= 1.
    let mut dmin = f64::INFINITY;
    for j in 0..n {
        if j != i {
            dmin = dmin.min(distances[[i, j]]);
        }
    }
    let mut beta = 1.0f64;
    let mut beta_min = f64::NEG_INFINITY;
    let mut beta_max = f64::INFINITY;
    let mut row = vec![0.0; n];

    for _ in 0..50 {
        let mut sum_p = 0.0;
        let mut sum_dp = 0.0;
        for j in 0..n {
            if j == i {
                row[j] = 0.0;
                continue;
            }
            let shifted = distances[[i, j]] - dmin;
            let p = (-beta * shifted).exp();
            row[j] = p;
            sum_p += p;
            sum_dp += shifted * p;
        }
        let entropy = sum_p.ln() + beta * sum_dp / sum_p;
        let diff = entropy - target_entropy;
        if diff.abs() < 1e-5 {
            break;
        }
        if diff > 0.0 {
            // Entropy too high: sharpen.
            beta_min = beta;
            beta = if beta_max.is_infinite() { beta * 2.0 } else { (beta + beta_max) / 2.0 };
        } else {
            beta_max = beta;
            beta = if beta_min.is_infinite() { beta / 2.0 } else { (beta + beta_min) / 2.0 };
        }
    }
    let sum_p: f64 = row.iter().sum();
    if sum_p > 0.0 {
        for p in &mut row {
            *p /= sum_p;
        }
    }
    row
}

fn kl_divergence(p: &Array2<f64>, q_num: &Array2<f64>, q_norm: f64) -> f64 {
    let n = p.nrows();
    let mut kl = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let pij = p[[i, j]].max(P_FLOOR);
            let qij = (q_num[[i, j]] / q_norm).max(P_FLOOR);
            kl += pij * (pij / qij).ln();
        }
    }
    kl
}

/// Student-t numerators `1 / (1 + |y_i - y_j|^2)` and their total.
fn student_t_numerators(y: &Array2<f64>) -> (Array2<f64>, f64) {
    let n = y.nrows();
    let mut num = Array2::zeros((n, n));
    let mut total = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = y[[i, 0]] - y[[j, 0]];
            let dy = y[[i, 1]] - y[[j, 1]];
            let v = 1.0 / (1.0 + dx * dx + dy * dy);
            num[[i, j]] = v;
            num[[j, i]] = v;
            total += 2.0 * v;
        }
    }
    (num, total)
}

/// Project `data` (N x d) to N x 2.
pub fn tsne_project(data: &Array2<f64>, config: &TsneConfig) -> Result<TsneResult, EmbeddingError> {
    let n = data.nrows();
    if n < 4 {
        return Err(EmbeddingError::TooFewPoints { got: n });
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(EmbeddingError::NonFiniteInput);
    }
    let max_perplexity = n as f64 / 3.0;
    let effective_perplexity = if config.perplexity < max_perplexity {
        config.perplexity.max(1.0)
    } else {
        let lowered = ((n - 1) as f64 / 3.0).max(1.0);
        log::warn!(
            "perplexity {} too large for {} points; lowered to {:.2}",
            config.perplexity,
            n,
            lowered
        );
        lowered
    };

    let distances = squared_distances(data);
    let target_entropy = effective_perplexity.ln();
    let mut p = Array2::zeros((n, n));
    for i in 0..n {
        let row = conditional_row(&distances, i, target_entropy);
        for j in 0..n {
            p[[i, j]] = row[j];
        }
    }
    // Symmetrize and normalize to a joint distribution.
    let mut joint = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            joint[[i, j]] = (p[[i, j]] + p[[j, i]]) / (2.0 * n as f64);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut y = Array2::from_shape_fn((n, 2), |_| 1e-4 * rng.sample::<f64, _>(StandardNormal));
    let mut velocity = Array2::<f64>::zeros((n, 2));
    let mut gains = Array2::<f64>::from_elem((n, 2), 1.0);
    let mut grad = Array2::<f64>::zeros((n, 2));

    let exaggeration_end = config.exaggeration_end.min(config.iterations);
    let mut kl_after_exaggeration = f64::NAN;

    for iteration in 0..config.iterations {
        let exaggeration =
            if iteration < exaggeration_end { config.early_exaggeration } else { 1.0 };
        let momentum =
            if iteration < exaggeration_end { config.initial_momentum } else { config.final_momentum };

        let (num, total) = student_t_numerators(&y);
        grad.fill(0.0);
        for i in 0..n {
            for j in (i + 1)..n {
                let pij = (joint[[i, j]] * exaggeration).max(P_FLOOR);
                let qij = (num[[i, j]] / total).max(P_FLOOR);
                let f = 4.0 * (pij - qij) * num[[i, j]];
                let dx = y[[i, 0]] - y[[j, 0]];
                let dy = y[[i, 1]] - y[[j, 1]];
                grad[[i, 0]] += f * dx;
                grad[[i, 1]] += f * dy;
                grad[[j, 0]] -= f * dx;
                grad[[j, 1]] -= f * dy;
            }
        }

        for i in 0..n {
            for c in 0..2 {
                let g = grad[[i, c]];
                let gain = if (g > 0.0) == (velocity[[i, c]] > 0.0) {
                    (gains[[i, c]] * 0.8).max(0.01)
                } else {
                    gains[[i, c]] + 0.2
                };
                gains[[i, c]] = gain;
                velocity[[i, c]] = momentum * velocity[[i, c]] - config.learning_rate * gain * g;
                y[[i, c]] += velocity[[i, c]];
            }
        }
        // Re-center so the embedding does not drift.
        for c in 0..2 {
            let mean = y.column(c).sum() / n as f64;
            y.column_mut(c).mapv_inplace(|v| v - mean);
        }

        if iteration + 1 == exaggeration_end {
            let (num, total) = student_t_numerators(&y);
            kl_after_exaggeration = kl_divergence(&joint, &num, total);
        }
    }

    if y.iter().any(|v| !v.is_finite()) {
        return Err(EmbeddingError::Diverged);
    }
    let (num, total) = student_t_numerators(&y);
    let kl_final = kl_divergence(&joint, &num, total);
    let kl_after_exaggeration =
        if kl_after_exaggeration.is_nan() { kl_final } else { kl_after_exaggeration };

    Ok(TsneResult { points: y, kl_after_exaggeration, kl_final, effective_perplexity })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Two Gaussian clusters in `dim` dimensions, `separation` sigmas apart,
    /// coordinates quantized to a 2^-10 grid so translation stays exact.
    fn two_clusters(per_cluster: usize, dim: usize, separation: f64, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut data = Array2::zeros((2 * per_cluster, dim));
        for i in 0..2 * per_cluster {
            let offset = if i < per_cluster { 0.0 } else { separation };
            for c in 0..dim {
                let z: f64 = rng.sample(StandardNormal);
                let value = z + if c == 0 { offset } else { 0.0 };
                data[[i, c]] = (value * 1024.0).round() / 1024.0;
            }
        }
        data
    }

    fn one_nn_purity(points: &Array2<f64>, boundary: usize) -> f64 {
        let n = points.nrows();
        let mut pure = 0;
        for i in 0..n {
            let mut best = usize::MAX;
            let mut best_d = f64::INFINITY;
            for j in 0..n {
                if i == j {
                    continue;
                }
                let dx = points[[i, 0]] - points[[j, 0]];
                let dy = points[[i, 1]] - points[[j, 1]];
                let d = dx * dx + dy * dy;
                if d < best_d {
                    best_d = d;
                    best = j;
                }
            }
            if (i < boundary) == (best < boundary) {
                pure += 1;
            }
        }
        pure as f64 / n as f64
    }

    #[test]
    fn rejects_tiny_and_non_finite_inputs() {
        let too_small = Array2::zeros((3, 2));
        assert!(matches!(
            tsne_project(&too_small, &TsneConfig::default()),
            Err(EmbeddingError::TooFewPoints { got: 3 })
        ));
        let mut bad = Array2::zeros((5, 2));
        bad[[1, 1]] = f64::NAN;
        assert!(matches!(
            tsne_project(&bad, &TsneConfig::default()),
            Err(EmbeddingError::NonFiniteInput)
        ));
    }

    #[test]
    fn same_seed_gives_identical_output() {
        let data = two_clusters(6, 4, 8.0, 5);
        let config = TsneConfig { iterations: 300, seed: 3, ..TsneConfig::default() };
        let a = tsne_project(&data, &config).unwrap();
        let b = tsne_project(&data, &config).unwrap();
        assert_eq!(a.points, b.points);
    }

    #[test]
    fn translation_leaves_output_unchanged() {
        // Grid-quantized inputs plus a power-of-two shift keep every pairwise
        // difference bit-identical, so the whole run must match exactly.
        let data = two_clusters(6, 4, 8.0, 11);
        let shifted = data.mapv(|v| v + 16.0);
        let config = TsneConfig { iterations: 300, seed: 7, ..TsneConfig::default() };
        let a = tsne_project(&data, &config).unwrap();
        let b = tsne_project(&shifted, &config).unwrap();
        assert_eq!(a.points, b.points);
    }

    #[test]
    fn separated_clusters_stay_pure_in_2d() {
        let data = two_clusters(10, 10, 20.0, 13);
        let result = tsne_project(&data, &TsneConfig { seed: 1, ..TsneConfig::default() }).unwrap();
        assert!(result.effective_perplexity < 20.0 / 3.0);
        let purity = one_nn_purity(&result.points, 10);
        assert!(purity >= 0.95, "purity {purity}");
    }

    #[test]
    fn kl_does_not_regress_after_exaggeration() {
        let data = two_clusters(8, 6, 6.0, 17);
        let result = tsne_project(&data, &TsneConfig { seed: 2, ..TsneConfig::default() }).unwrap();
        assert!(
            result.kl_final <= result.kl_after_exaggeration,
            "final {} vs post-exaggeration {}",
            result.kl_final,
            result.kl_after_exaggeration
        );
        assert!(result.points.iter().all(|v| v.is_finite()));
    }
}
