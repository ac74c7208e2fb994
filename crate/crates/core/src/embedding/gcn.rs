//! Two-layer graph-convolutional encoder trained with a link-prediction
//! objective, with hand-derived gradients (no autograd) so training stays
//! fully deterministic.
//!
//! Forward pass: `E = A_hat * relu(A_hat * X * W1) * W2` where `A_hat` is
//! the symmetric-normalized adjacency with self-loops over the binarized
//! co-occurrence graph and `X` is a learnable per-keyword feature table.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::collections::HashSet;

use super::{EmbeddingError, EmbeddingMatrix};
use crate::snapshot::CooccurrenceGraph;

/// Layer widths: feature table d0, hidden h, output d.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GcnDims {
    pub feature: usize,
    pub hidden: usize,
    pub output: usize,
}

impl Default for GcnDims {
    fn default() -> Self {
        GcnDims { feature: 64, hidden: 64, output: 64 }
    }
}

/// Learnable parameters: input embedding table plus the two layer weights.
#[derive(Debug, Clone)]
pub struct GcnParams {
    pub features: Array2<f64>,
    pub w1: Array2<f64>,
    pub w2: Array2<f64>,
}

impl GcnParams {
    /// Seeded init: features ~ N(0, 0.1), weights Glorot-uniform.
    pub fn init(n_nodes: usize, dims: GcnDims, rng: &mut ChaCha8Rng) -> GcnParams {
        let features = Array2::from_shape_fn((n_nodes, dims.feature), |_| {
            let z: f64 = rng.sample(StandardNormal);
            0.1 * z
        });
        let glorot = |rows: usize, cols: usize, rng: &mut ChaCha8Rng| {
            let limit = (6.0 / (rows + cols) as f64).sqrt();
            Array2::from_shape_fn((rows, cols), |_| (rng.random::<f64>() * 2.0 - 1.0) * limit)
        };
        let w1 = glorot(dims.feature, dims.hidden, rng);
        let w2 = glorot(dims.hidden, dims.output, rng);
        GcnParams { features, w1, w2 }
    }

    pub fn dims(&self) -> GcnDims {
        GcnDims {
            feature: self.features.ncols(),
            hidden: self.w1.ncols(),
            output: self.w2.ncols(),
        }
    }
}

/// Gradients with the same shapes as [`GcnParams`].
#[derive(Debug, Clone)]
pub struct GcnGradients {
    pub features: Array2<f64>,
    pub w1: Array2<f64>,
    pub w2: Array2<f64>,
}

/// `D^-1/2 (A + I) D^-1/2` over the binarized graph, stored CSR.
#[derive(Debug, Clone)]
pub struct NormalizedAdjacency {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl NormalizedAdjacency {
    pub fn from_graph(graph: &CooccurrenceGraph) -> NormalizedAdjacency {
        let edges: Vec<(u32, u32)> = graph.edges().map(|(a, b, _)| (a, b)).collect();
        NormalizedAdjacency::from_edges(graph.node_count(), &edges)
    }

    /// Build from undirected edges; duplicates and self-loops are ignored
    /// (every node already gets its own self-loop).
    pub fn from_edges(n: usize, edges: &[(u32, u32)]) -> NormalizedAdjacency {
        let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut seen = HashSet::new();
        for &(a, b) in edges {
            let (a, b) = (a as usize, b as usize);
            if a == b || !seen.insert((a.min(b), a.max(b))) {
                continue;
            }
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        for (i, list) in neighbors.iter_mut().enumerate() {
            list.push(i); // self-loop
            list.sort_unstable();
        }
        let degree: Vec<f64> = neighbors.iter().map(|l| l.len() as f64).collect();

        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for (i, list) in neighbors.iter().enumerate() {
            for &j in list {
                col_idx.push(j);
                // Exactly 1.0 on the diagonal of an edgeless graph.
                if i == j && list.len() == 1 {
                    values.push(1.0);
                } else {
                    values.push(1.0 / (degree[i] * degree[j]).sqrt());
                }
            }
            row_ptr.push(col_idx.len());
        }
        NormalizedAdjacency { n, row_ptr, col_idx, values }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    /// Sparse-dense product `A_hat * X` with fixed summation order.
    pub fn apply(&self, x: &Array2<f64>) -> Array2<f64> {
        let cols = x.ncols();
        let mut out = Array2::zeros((self.n, cols));
        for i in 0..self.n {
            for idx in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[idx];
                let w = self.values[idx];
                for c in 0..cols {
                    out[[i, c]] += w * x[[j, c]];
                }
            }
        }
        out
    }
}

struct ForwardCache {
    m1: Array2<f64>, // A_hat X
    h1: Array2<f64>, // M1 W1
    m2: Array2<f64>, // A_hat relu(H1)
    emb: Array2<f64>,
}

fn forward(params: &GcnParams, adj: &NormalizedAdjacency) -> ForwardCache {
    let m1 = adj.apply(&params.features);
    let h1 = m1.dot(&params.w1);
    let z1 = h1.mapv(|v| v.max(0.0));
    let m2 = adj.apply(&z1);
    let emb = m2.dot(&params.w2);
    ForwardCache { m1, h1, m2, emb }
}

fn check_dims(params: &GcnParams, adj: &NormalizedAdjacency) -> Result<(), EmbeddingError> {
    if params.features.nrows() != adj.node_count() {
        return Err(EmbeddingError::DimensionMismatch {
            context: format!(
                "feature table has {} rows, graph has {} nodes",
                params.features.nrows(),
                adj.node_count()
            ),
        });
    }
    if params.features.ncols() != params.w1.nrows() || params.w1.ncols() != params.w2.nrows() {
        return Err(EmbeddingError::DimensionMismatch {
            context: "layer widths do not chain".into(),
        });
    }
    Ok(())
}

/// One forward pass of the two-layer encoder.
pub fn gcn_forward(
    params: &GcnParams,
    adj: &NormalizedAdjacency,
) -> Result<Array2<f64>, EmbeddingError> {
    check_dims(params, adj)?;
    Ok(forward(params, adj).emb)
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Mean binary cross-entropy of `sigma(e_u . e_v)` over labelled pairs.
pub fn link_prediction_loss(
    params: &GcnParams,
    adj: &NormalizedAdjacency,
    positives: &[(u32, u32)],
    negatives: &[(u32, u32)],
) -> Result<f64, EmbeddingError> {
    check_dims(params, adj)?;
    let cache = forward(params, adj);
    Ok(pair_loss(&cache.emb, positives, negatives))
}

fn pair_loss(emb: &Array2<f64>, positives: &[(u32, u32)], negatives: &[(u32, u32)]) -> f64 {
    let total = (positives.len() + negatives.len()) as f64;
    let mut loss = 0.0;
    for &(u, v) in positives {
        let s = emb.row(u as usize).dot(&emb.row(v as usize));
        loss += softplus(-s);
    }
    for &(u, v) in negatives {
        let s = emb.row(u as usize).dot(&emb.row(v as usize));
        loss += softplus(s);
    }
    loss / total
}

/// Loss plus analytic gradients for every parameter tensor.
pub fn link_prediction_loss_and_grads(
    params: &GcnParams,
    adj: &NormalizedAdjacency,
    positives: &[(u32, u32)],
    negatives: &[(u32, u32)],
) -> Result<(f64, GcnGradients), EmbeddingError> {
    check_dims(params, adj)?;
    let cache = forward(params, adj);
    let emb = &cache.emb;
    let total = (positives.len() + negatives.len()) as f64;

    let loss = pair_loss(emb, positives, negatives);

    // dL/dE accumulated pair by pair: g = (sigma(s) - y) / total.
    let mut grad_emb = Array2::<f64>::zeros(emb.raw_dim());
    let mut accumulate = |u: usize, v: usize, label: f64| {
        let s = emb.row(u).dot(&emb.row(v));
        let g = (sigmoid(s) - label) / total;
        let (ru, rv) = (emb.row(u).to_owned(), emb.row(v).to_owned());
        grad_emb.row_mut(u).scaled_add(g, &rv);
        grad_emb.row_mut(v).scaled_add(g, &ru);
    };
    for &(u, v) in positives {
        accumulate(u as usize, v as usize, 1.0);
    }
    for &(u, v) in negatives {
        accumulate(u as usize, v as usize, 0.0);
    }

    // Backprop through E = M2 W2, M2 = A Z1, Z1 = relu(H1), H1 = M1 W1, M1 = A X.
    let grad_w2 = cache.m2.t().dot(&grad_emb);
    let grad_z1 = adj.apply(&grad_emb.dot(&params.w2.t()));
    let mut grad_h1 = grad_z1;
    grad_h1.zip_mut_with(&cache.h1, |g, &h| {
        if h <= 0.0 {
            *g = 0.0;
        }
    });
    let grad_w1 = cache.m1.t().dot(&grad_h1);
    let grad_features = adj.apply(&grad_h1.dot(&params.w1.t()));

    Ok((loss, GcnGradients { features: grad_features, w1: grad_w1, w2: grad_w2 }))
}

/// Uniform sample without replacement among unordered non-adjacent pairs.
pub fn negative_sample(
    graph: &CooccurrenceGraph,
    count: usize,
    seed: u64,
) -> Result<Vec<(u32, u32)>, EmbeddingError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edges: HashSet<(u32, u32)> = graph.edges().map(|(a, b, _)| (a, b)).collect();
    sample_non_edges(graph.node_count(), &edges, count, &mut rng)
}

fn sample_non_edges(
    n: usize,
    edges: &HashSet<(u32, u32)>,
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<(u32, u32)>, EmbeddingError> {
    let total_pairs = n * n.saturating_sub(1) / 2;
    let available = total_pairs - edges.len();
    if count > available {
        return Err(EmbeddingError::NotEnoughNonEdges { requested: count, available });
    }
    if count == 0 {
        return Ok(Vec::new());
    }

    // Dense case: enumerate and shuffle a prefix. Sparse case: rejection
    // sampling, which stays uniform-without-replacement and terminates fast
    // while non-edges outnumber the request.
    if available < 2 * count || n < 64 {
        let mut non_edges: Vec<(u32, u32)> = Vec::with_capacity(available);
        for a in 0..n as u32 {
            for b in (a + 1)..n as u32 {
                if !edges.contains(&(a, b)) {
                    non_edges.push((a, b));
                }
            }
        }
        for i in 0..count {
            let j = rng.random_range(i..non_edges.len());
            non_edges.swap(i, j);
        }
        non_edges.truncate(count);
        Ok(non_edges)
    } else {
        let mut picked = HashSet::with_capacity(count);
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let a = rng.random_range(0..n as u32);
            let b = rng.random_range(0..n as u32);
            if a == b {
                continue;
            }
            let pair = (a.min(b), a.max(b));
            if edges.contains(&pair) || !picked.insert(pair) {
                continue;
            }
            out.push(pair);
        }
        Ok(out)
    }
}

/// Training hyperparameters. Defaults: 50 epochs, Adam(lr 0.01) with linear
/// decay to zero, 1:1 negative sampling, 64-dimensional layers.
#[derive(Debug, Clone)]
pub struct TrainingConfig {
    pub dims: GcnDims,
    pub epochs: usize,
    pub learning_rate: f64,
    pub negative_ratio: f64,
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            dims: GcnDims::default(),
            epochs: 50,
            learning_rate: 0.01,
            negative_ratio: 1.0,
            seed: 0,
        }
    }
}

struct Adam {
    m: Vec<Array2<f64>>,
    v: Vec<Array2<f64>>,
    t: i32,
    beta1: f64,
    beta2: f64,
    eps: f64,
}

impl Adam {
    fn new(shapes: &[&Array2<f64>]) -> Adam {
        Adam {
            m: shapes.iter().map(|a| Array2::zeros(a.raw_dim())).collect(),
            v: shapes.iter().map(|a| Array2::zeros(a.raw_dim())).collect(),
            t: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    fn step(&mut self, params: &mut [&mut Array2<f64>], grads: &[&Array2<f64>], lr: f64) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t);
        let bc2 = 1.0 - self.beta2.powi(self.t);
        for ((param, grad), (m, v)) in
            params.iter_mut().zip(grads).zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            m.zip_mut_with(grad, |m, &g| *m = self.beta1 * *m + (1.0 - self.beta1) * g);
            v.zip_mut_with(grad, |v, &g| *v = self.beta2 * *v + (1.0 - self.beta2) * g * g);
            for ((p, m), v) in param.iter_mut().zip(m.iter()).zip(v.iter()) {
                *p -= lr * (m / bc1) / ((v / bc2).sqrt() + self.eps);
            }
        }
    }
}

/// Trained embedding plus the per-epoch loss curve.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub embedding: EmbeddingMatrix,
    pub losses: Vec<f64>,
}

/// Train the encoder on the binarized graph. Deterministic given
/// (graph, config): parameter init and per-epoch negative resampling both
/// draw from one seeded stream.
pub fn train_link_prediction(
    graph: &CooccurrenceGraph,
    config: &TrainingConfig,
) -> Result<TrainOutcome, EmbeddingError> {
    let positives: Vec<(u32, u32)> = graph.edges().map(|(a, b, _)| (a, b)).collect();
    if positives.is_empty() {
        return Err(EmbeddingError::EmptyEdgeSet);
    }
    let n = graph.node_count();
    let adj = NormalizedAdjacency::from_graph(graph);
    let edge_set: HashSet<(u32, u32)> = positives.iter().copied().collect();
    let negatives_per_epoch =
        ((positives.len() as f64) * config.negative_ratio).round().max(1.0) as usize;

    // Fail before training if the graph cannot supply the negatives.
    let total_pairs = n * n.saturating_sub(1) / 2;
    let available = total_pairs - edge_set.len();
    if negatives_per_epoch > available {
        return Err(EmbeddingError::NotEnoughNonEdges {
            requested: negatives_per_epoch,
            available,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = GcnParams::init(n, config.dims, &mut rng);
    let mut adam = Adam::new(&[&params.features, &params.w1, &params.w2]);
    let mut losses = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let negatives = sample_non_edges(n, &edge_set, negatives_per_epoch, &mut rng)?;
        let (loss, grads) =
            link_prediction_loss_and_grads(&params, &adj, &positives, &negatives)?;
        losses.push(loss);
        let lr = config.learning_rate * (1.0 - epoch as f64 / config.epochs as f64);
        adam.step(
            &mut [&mut params.features, &mut params.w1, &mut params.w2],
            &[&grads.features, &grads.w1, &grads.w2],
            lr,
        );
    }

    let emb = gcn_forward(&params, &adj)?;
    let embedding = EmbeddingMatrix::new(
        graph.label().to_owned(),
        graph.vocab().keywords().cloned().collect(),
        emb,
    )?;
    Ok(TrainOutcome { embedding, losses })
}

/// Rank-based AUC of `sigma(e_u . e_v)` scores: positives vs negatives,
/// ties counted half.
pub fn link_prediction_auc(
    emb: &Array2<f64>,
    positives: &[(u32, u32)],
    negatives: &[(u32, u32)],
) -> f64 {
    let score = |pairs: &[(u32, u32)]| -> Vec<f64> {
        pairs
            .iter()
            .map(|&(u, v)| emb.row(u as usize).dot(&emb.row(v as usize)))
            .collect()
    };
    let pos = score(positives);
    let neg = score(negatives);
    let mut wins = 0.0;
    for p in &pos {
        for n in &neg {
            if p > n {
                wins += 1.0;
            } else if p == n {
                wins += 0.5;
            }
        }
    }
    wins / (pos.len() as f64 * neg.len() as f64)
}
