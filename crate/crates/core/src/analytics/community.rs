//! Undirected modularity and two-phase Louvain community detection over the
//! symmetrized in-corpus citation graph.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::AnalyticsError;
use crate::corpus::{Corpus, PaperId};

/// Simple undirected graph: no self-loops, at most one edge per pair.
#[derive(Debug, Clone)]
pub struct SimpleGraph {
    n: usize,
    adjacency: Vec<Vec<(usize, f64)>>,
    edge_weight_total: f64,
    edge_count: usize,
}

impl SimpleGraph {
    /// Build from undirected unit-weight edges; duplicates and self-loops
    /// are dropped.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> SimpleGraph {
        let mut unique: BTreeSet<(usize, usize)> = BTreeSet::new();
        for &(a, b) in edges {
            if a != b && a < n && b < n {
                unique.insert((a.min(b), a.max(b)));
            }
        }
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b) in &unique {
            adjacency[a].push((b, 1.0));
            adjacency[b].push((a, 1.0));
        }
        SimpleGraph {
            n,
            adjacency,
            edge_weight_total: unique.len() as f64,
            edge_count: unique.len(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn degree(&self, node: usize) -> f64 {
        self.adjacency[node].iter().map(|(_, w)| w).sum()
    }

    pub fn neighbors(&self, node: usize) -> &[(usize, f64)] {
        &self.adjacency[node]
    }

    /// Edges once each, `(a, b)` with `a < b`, ascending.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(a, list)| list.iter().filter_map(move |&(b, w)| (a < b).then_some((a, b, w))))
    }
}

/// `Q = sum_c [ e_c/m - (d_c / 2m)^2 ]` with `e_c` the intra-community edge
/// weight, `d_c` the community degree, and `m` the total edge weight.
pub fn modularity(graph: &SimpleGraph, assignment: &[usize]) -> Result<f64, AnalyticsError> {
    if assignment.len() != graph.node_count() {
        return Err(AnalyticsError::PartitionMismatch {
            got: assignment.len(),
            expected: graph.node_count(),
        });
    }
    let m = graph.edge_weight_total;
    if m == 0.0 {
        return Err(AnalyticsError::EmptyGraph);
    }
    let mut intra: BTreeMap<usize, f64> = BTreeMap::new();
    let mut degree: BTreeMap<usize, f64> = BTreeMap::new();
    for (a, b, w) in graph.edges() {
        if assignment[a] == assignment[b] {
            *intra.entry(assignment[a]).or_insert(0.0) += w;
        }
    }
    for node in 0..graph.node_count() {
        *degree.entry(assignment[node]).or_insert(0.0) += graph.degree(node);
    }
    let mut q = 0.0;
    for (community, d_c) in &degree {
        let e_c = intra.get(community).copied().unwrap_or(0.0);
        let frac = d_c / (2.0 * m);
        q += e_c / m - frac * frac;
    }
    Ok(q)
}

/// A node-to-community assignment with dense ids and its modularity.
#[derive(Debug, Clone, Serialize)]
pub struct Partition {
    pub assignment: Vec<usize>,
    pub communities: usize,
    pub modularity: f64,
}

/// Working graph for the aggregation phase: communities become nodes and
/// internal weight moves into self-loops (which count twice for degrees).
struct WorkGraph {
    adjacency: Vec<BTreeMap<usize, f64>>,
    self_loop: Vec<f64>,
    total_weight: f64, // m of the original graph, invariant under aggregation
}

impl WorkGraph {
    fn from_simple(graph: &SimpleGraph) -> WorkGraph {
        let mut adjacency = vec![BTreeMap::new(); graph.node_count()];
        for (a, b, w) in graph.edges() {
            adjacency[a].insert(b, w);
            adjacency[b].insert(a, w);
        }
        WorkGraph {
            adjacency,
            self_loop: vec![0.0; graph.node_count()],
            total_weight: graph.edge_weight_total,
        }
    }

    fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    fn degree(&self, node: usize) -> f64 {
        self.adjacency[node].values().sum::<f64>() + 2.0 * self.self_loop[node]
    }

    fn aggregate(&self, assignment: &[usize]) -> (WorkGraph, Vec<usize>) {
        // Renumber communities densely in ascending id order.
        let mut ids: Vec<usize> = assignment.to_vec();
        ids.sort_unstable();
        ids.dedup();
        let dense: BTreeMap<usize, usize> =
            ids.iter().enumerate().map(|(new, &old)| (old, new)).collect();

        let count = dense.len();
        let mut adjacency = vec![BTreeMap::new(); count];
        let mut self_loop = vec![0.0; count];
        for node in 0..self.node_count() {
            let home = dense[&assignment[node]];
            self_loop[home] += self.self_loop[node];
            for (&nbr, &w) in &self.adjacency[node] {
                let other = dense[&assignment[nbr]];
                if other == home {
                    // Each internal edge visited from both ends.
                    self_loop[home] += w / 2.0;
                } else {
                    *adjacency[home].entry(other).or_insert(0.0) += w;
                }
            }
        }
        let relabel = assignment.iter().map(|c| dense[c]).collect();
        (WorkGraph { adjacency, self_loop, total_weight: self.total_weight }, relabel)
    }
}

/// One local-moving phase. Returns the assignment and whether any node moved.
fn local_moving(work: &WorkGraph, rng: &mut ChaCha8Rng) -> (Vec<usize>, bool) {
    let n = work.node_count();
    let m = work.total_weight;
    let degrees: Vec<f64> = (0..n).map(|i| work.degree(i)).collect();
    let mut community: Vec<usize> = (0..n).collect();
    let mut sum_tot = degrees.clone();

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);

    let mut any_moved = false;
    loop {
        let mut moved_this_pass = false;
        for &node in &order {
            let current = community[node];
            let k = degrees[node];
            sum_tot[current] -= k;

            // Weight from `node` to each neighboring community.
            let mut link_weight: BTreeMap<usize, f64> = BTreeMap::new();
            for (&nbr, &w) in &work.adjacency[node] {
                if nbr != node {
                    *link_weight.entry(community[nbr]).or_insert(0.0) += w;
                }
            }
            link_weight.entry(current).or_insert(0.0);

            // Gain of joining community c, up to terms constant in c.
            let mut best = current;
            let mut best_gain = f64::NEG_INFINITY;
            for (&candidate, &w) in &link_weight {
                let gain = w - sum_tot[candidate] * k / (2.0 * m);
                if gain > best_gain || (gain == best_gain && candidate < best) {
                    best_gain = gain;
                    best = candidate;
                }
            }

            sum_tot[best] += k;
            community[node] = best;
            if best != current {
                moved_this_pass = true;
                any_moved = true;
            }
        }
        if !moved_this_pass {
            break;
        }
    }
    (community, any_moved)
}

/// Two-phase Louvain: seeded local moving until no gain, then aggregation,
/// repeated until the partition stabilizes. The reported Q is recomputed on
/// the original graph, so it equals [`modularity`] exactly.
pub fn louvain(graph: &SimpleGraph, seed: u64) -> Result<Partition, AnalyticsError> {
    if graph.edge_count() == 0 {
        return Err(AnalyticsError::EmptyGraph);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut node_home: Vec<usize> = (0..graph.node_count()).collect();
    let mut work = WorkGraph::from_simple(graph);

    loop {
        let (assignment, moved) = local_moving(&work, &mut rng);
        if !moved {
            break;
        }
        // A move merged at least two nodes, so aggregation strictly shrinks.
        let (aggregated, relabel) = work.aggregate(&assignment);
        for home in node_home.iter_mut() {
            *home = relabel[*home];
        }
        work = aggregated;
    }

    // Dense ids in order of first appearance over the node sequence.
    let mut dense: BTreeMap<usize, usize> = BTreeMap::new();
    let mut assignment = Vec::with_capacity(node_home.len());
    for &home in &node_home {
        let next = dense.len();
        let id = *dense.entry(home).or_insert(next);
        assignment.push(id);
    }
    let q = modularity(graph, &assignment)?;
    Ok(Partition { assignment, communities: dense.len(), modularity: q })
}

/// Community detection over the corpus citation graph: edges restricted to
/// in-corpus endpoints and symmetrized. Returns the node order used.
pub fn citation_communities(
    corpus: &Corpus,
    seed: u64,
) -> Result<(Vec<PaperId>, SimpleGraph, Partition), AnalyticsError> {
    let mut endpoints: BTreeSet<PaperId> = BTreeSet::new();
    let mut raw_edges: Vec<(PaperId, PaperId)> = Vec::new();
    for edge in corpus.citations() {
        let cited = PaperId(edge.cited.clone());
        if corpus.contains(&edge.citing) && corpus.contains(&cited) {
            endpoints.insert(edge.citing.clone());
            endpoints.insert(cited.clone());
            raw_edges.push((edge.citing.clone(), cited));
        }
    }
    if raw_edges.is_empty() {
        return Err(AnalyticsError::NoResolvableEdges);
    }
    let nodes: Vec<PaperId> = endpoints.into_iter().collect();
    let index: BTreeMap<&PaperId, usize> =
        nodes.iter().enumerate().map(|(i, id)| (id, i)).collect();
    let edges: Vec<(usize, usize)> =
        raw_edges.iter().map(|(a, b)| (index[a], index[b])).collect();
    let graph = SimpleGraph::from_edges(nodes.len(), &edges);
    let partition = louvain(&graph, seed)?;
    Ok((nodes, graph, partition))
}
