//! Point sets, weighted graphs, and kNN graph construction.
//!
//! Points are turned into a sparse similarity graph by keeping each point's
//! `k` nearest neighbours, weighting them with an exponential kernel,
//! normalising each row, and symmetrising with the probabilistic t-conorm
//! `w = a + b - a*b`.

use std::collections::BTreeMap;
use std::io::BufRead;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{DpsmError, Result};

/// Weights below this are treated as absent.
pub const MIN_EDGE_WEIGHT: f64 = 1e-12;

/// Above this many points the maximum pairwise distance is estimated from a sample.
pub const EXACT_DMAX_LIMIT: usize = 20_000;

const DMAX_SAMPLE: usize = 1_000;
const DMAX_SEED: u64 = 0x5eed_d3a5;

/// `n` points in `d` dimensions, stored row-major, with optional ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
    labels: Option<Vec<i64>>,
}

impl PointSet {
    pub fn new(rows: Vec<Vec<f64>>, labels: Option<Vec<i64>>) -> Result<Self> {
        let first = rows.first().ok_or(DpsmError::EmptyInput)?;
        let dim = first.len();
        if dim == 0 {
            return Err(DpsmError::InvalidParameter("points need at least one coordinate".into()));
        }
        let mut coords = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(DpsmError::Parse {
                    line: i + 1,
                    message: format!("expected {dim} coordinates, found {}", row.len()),
                });
            }
            if let Some(x) = row.iter().find(|x| !x.is_finite()) {
                return Err(DpsmError::Parse { line: i + 1, message: format!("non-finite coordinate {x}") });
            }
            coords.extend_from_slice(row);
        }
        if let Some(l) = &labels {
            if l.len() != rows.len() {
                return Err(DpsmError::LengthMismatch { left: rows.len(), right: l.len() });
            }
        }
        Ok(Self { dim, coords, labels })
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn labels(&self) -> Option<&[i64]> {
        self.labels.as_deref()
    }

    /// Multiplies every coordinate by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            dim: self.dim,
            coords: self.coords.iter().map(|x| x * c).collect(),
            labels: self.labels.clone(),
        }
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.point(i)
            .iter()
            .zip(self.point(j))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// Which exponential kernel turns a distance into an affinity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelForm {
    /// `exp(-sigma * d)`.
    #[default]
    Product,
    /// `exp(-d / sigma)`.
    Ratio,
}

impl std::str::FromStr for KernelForm {
    type Err = DpsmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "product" => Ok(Self::Product),
            "ratio" => Ok(Self::Ratio),
            other => Err(DpsmError::InvalidParameter(format!("unknown kernel form `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

/// Undirected graph with strictly positive edge weights.
///
/// Each unordered pair is stored once in `edges` (with `u < v`); the
/// adjacency lists hold both directions, sorted by neighbour id.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    node_count: usize,
    edges: Vec<Edge>,
    offsets: Vec<usize>,
    adjacency: Vec<(usize, f64)>,
}

impl WeightedGraph {
    /// Builds a graph from unordered edges. Rejects self-loops, duplicate pairs,
    /// out-of-range ids, and non-positive or non-finite weights.
    pub fn from_edges(node_count: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut pairs: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (u, v, w) in edges {
            validate_edge(node_count, u, v, w).map_err(DpsmError::InvalidGraph)?;
            let key = (u.min(v), u.max(v));
            if pairs.insert(key, w).is_some() {
                return Err(DpsmError::InvalidGraph(format!("duplicate edge {u}-{v}")));
            }
        }
        Ok(Self::from_sorted_pairs(node_count, pairs))
    }

    fn from_sorted_pairs(node_count: usize, pairs: BTreeMap<(usize, usize), f64>) -> Self {
        let mut degree = vec![0usize; node_count];
        for &(u, v) in pairs.keys() {
            degree[u] += 1;
            degree[v] += 1;
        }
        let mut offsets = Vec::with_capacity(node_count + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut cursor = offsets.clone();
        let mut adjacency = vec![(0usize, 0.0f64); offsets[node_count]];
        let mut edges = Vec::with_capacity(pairs.len());
        // BTreeMap order keeps each adjacency list sorted: for node x, smaller
        // neighbours arrive as (y, x) keys before larger ones as (x, y).
        for (&(u, v), &weight) in &pairs {
            adjacency[cursor[u]] = (v, weight);
            cursor[u] += 1;
            adjacency[cursor[v]] = (u, weight);
            cursor[v] += 1;
            edges.push(Edge { u, v, weight });
        }
        for x in 0..node_count {
            adjacency[offsets[x]..offsets[x + 1]].sort_unstable_by_key(|&(y, _)| y);
        }
        Self { node_count, edges, offsets, adjacency }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Neighbours of `u` with edge weights, sorted by neighbour id.
    pub fn neighbors(&self, u: usize) -> &[(usize, f64)] {
        &self.adjacency[self.offsets[u]..self.offsets[u + 1]]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.offsets[u + 1] - self.offsets[u]
    }

    /// Sum of incident edge weights.
    pub fn weighted_degree(&self, u: usize) -> f64 {
        self.neighbors(u).iter().map(|&(_, w)| w).sum()
    }

    pub fn weight(&self, u: usize, v: usize) -> Option<f64> {
        let adj = self.neighbors(u);
        adj.binary_search_by_key(&v, |&(x, _)| x).ok().map(|i| adj[i].1)
    }

    /// Component id per node; ids are assigned in order of smallest member.
    pub fn connected_components(&self) -> Vec<usize> {
        let mut comp = vec![usize::MAX; self.node_count];
        let mut next = 0;
        let mut stack = Vec::new();
        for s in 0..self.node_count {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = next;
            stack.push(s);
            while let Some(u) = stack.pop() {
                for &(v, _) in self.neighbors(u) {
                    if comp[v] == usize::MAX {
                        comp[v] = next;
                        stack.push(v);
                    }
                }
            }
            next += 1;
        }
        comp
    }

    /// Relabels nodes: node `i` becomes `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        Self::from_edges(self.node_count, self.edges.iter().map(|e| (perm[e.u], perm[e.v], e.weight)))
    }
}

fn validate_edge(node_count: usize, u: usize, v: usize, w: f64) -> std::result::Result<(), String> {
    if u == v {
        return Err(format!("self-loop on node {u}"));
    }
    if u >= node_count || v >= node_count {
        return Err(format!("node id {} out of range for {node_count} nodes", u.max(v)));
    }
    if !(w.is_finite() && w > 0.0) {
        return Err(format!("edge weight must be positive and finite, got {w}"));
    }
    Ok(())
}

fn is_comment_or_blank(line: &str) -> bool {
    let t = line.trim();
    t.is_empty() || t.starts_with('#')
}

fn split_fields(line: &str) -> Vec<&str> {
    if line.contains(',') {
        line.split(',').map(str::trim).collect()
    } else {
        line.split_whitespace().collect()
    }
}

/// Reads comma- or whitespace-separated points, one per row.
///
/// When `label_column` is set, that column is parsed as an integer label and
/// removed from the features.
pub fn load_points<R: BufRead>(source: R, label_column: Option<usize>) -> Result<PointSet> {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut width = None;
    for (idx, line) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if is_comment_or_blank(&line) {
            continue;
        }
        let fields = split_fields(&line);
        match width {
            None => width = Some(fields.len()),
            Some(w) if w != fields.len() => {
                return Err(DpsmError::Parse {
                    line: line_no,
                    message: format!("expected {w} columns, found {}", fields.len()),
                })
            }
            _ => {}
        }
        if let Some(c) = label_column {
            if c >= fields.len() {
                return Err(DpsmError::Parse {
                    line: line_no,
                    message: format!("label column {c} missing ({} columns)", fields.len()),
                });
            }
        }
        let mut row = Vec::with_capacity(fields.len());
        for (col, field) in fields.iter().enumerate() {
            if Some(col) == label_column {
                let label = field.parse::<i64>().map_err(|_| DpsmError::Parse {
                    line: line_no,
                    message: format!("label `{field}` is not an integer"),
                })?;
                labels.push(label);
                continue;
            }
            let x = field.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| DpsmError::Parse {
                line: line_no,
                message: format!("`{field}` is not a finite number"),
            })?;
            row.push(x);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(DpsmError::EmptyInput);
    }
    PointSet::new(rows, label_column.map(|_| labels))
}

/// Reads an edge list of `u v w` lines with 0-based node ids.
pub fn load_edges<R: BufRead>(source: R, node_count: Option<usize>) -> Result<WeightedGraph> {
    let mut pairs: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut max_id = None;
    for (idx, line) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if is_comment_or_blank(&line) {
            continue;
        }
        let load_err = |message: String| DpsmError::Load { line: line_no, message };
        let fields = split_fields(&line);
        if fields.len() != 3 {
            return Err(load_err(format!("expected `u v w`, found {} fields", fields.len())));
        }
        let parse_id = |s: &str| s.parse::<usize>().map_err(|_| load_err(format!("`{s}` is not a node id")));
        let u = parse_id(fields[0])?;
        let v = parse_id(fields[1])?;
        let w: f64 = fields[2].parse().map_err(|_| load_err(format!("`{}` is not a number", fields[2])))?;
        let bound = node_count.unwrap_or(usize::MAX);
        validate_edge(bound, u, v, w).map_err(load_err)?;
        if pairs.insert((u.min(v), u.max(v)), w).is_some() {
            return Err(load_err(format!("duplicate edge {u}-{v}")));
        }
        max_id = Some(max_id.unwrap_or(0).max(u).max(v));
    }
    let n = match (node_count, max_id) {
        (Some(n), _) => n,
        (None, Some(m)) => m + 1,
        (None, None) => return Err(DpsmError::EmptyInput),
    };
    if n == 0 {
        return Err(DpsmError::EmptyInput);
    }
    Ok(WeightedGraph::from_sorted_pairs(n, pairs))
}

/// Maximum pairwise distance: exact up to [`EXACT_DMAX_LIMIT`] points,
/// otherwise the diameter of a fixed-seed random sample.
pub fn max_pairwise_distance(points: &PointSet) -> f64 {
    let n = points.len();
    let ids: Vec<usize> = if n <= EXACT_DMAX_LIMIT {
        (0..n).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(DMAX_SEED);
        let mut s = sample(&mut rng, n, DMAX_SAMPLE).into_vec();
        s.sort_unstable();
        s
    };
    ids.par_iter()
        .enumerate()
        .map(|(a, &i)| ids[a + 1..].iter().map(|&j| points.distance(i, j)).fold(0.0, f64::max))
        .reduce(|| 0.0, f64::max)
}

/// Indices of the `k` nearest other points, nearest first; ties go to the smaller index.
pub fn nearest_neighbors(points: &PointSet, i: usize, k: usize) -> Vec<(usize, f64)> {
    let mut cand: Vec<(usize, f64)> =
        (0..points.len()).filter(|&j| j != i).map(|j| (j, points.distance(i, j))).collect();
    let by_dist = |a: &(usize, f64), b: &(usize, f64)| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0));
    if k < cand.len() {
        cand.select_nth_unstable_by(k - 1, by_dist);
        cand.truncate(k);
    }
    cand.sort_unstable_by(by_dist);
    cand
}

/// Row-normalised kernel affinities of point `i` to its neighbours.
fn normalized_affinities(neigh: &[(usize, f64)], sigma: f64, form: KernelForm) -> Vec<(usize, f64)> {
    let d_min = neigh.first().map_or(0.0, |&(_, d)| d);
    // Shifting by the nearest distance leaves the normalised values unchanged
    // and keeps the largest term at exp(0) = 1, so the sum cannot underflow.
    let exponent = |d: f64| match form {
        KernelForm::Product => -sigma * (d - d_min),
        KernelForm::Ratio if sigma > 0.0 => -(d - d_min) / sigma,
        KernelForm::Ratio => 0.0,
    };
    let raw: Vec<f64> = neigh.iter().map(|&(_, d)| exponent(d).exp()).collect();
    let total: f64 = raw.iter().sum();
    neigh.iter().zip(raw).map(|(&(j, _), a)| (j, a / total)).collect()
}

/// Parameters for [`knn_graph`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnnParams {
    pub k: usize,
    /// `sigma = sigma_scale * d_max`.
    pub sigma_scale: f64,
    pub kernel: KernelForm,
}

impl Default for KnnParams {
    fn default() -> Self {
        Self { k: 20, sigma_scale: 0.1, kernel: KernelForm::Product }
    }
}

/// Builds the symmetrised kNN similarity graph.
pub fn knn_graph(points: &PointSet, params: &KnnParams) -> Result<WeightedGraph> {
    let n = points.len();
    let k = params.k;
    if k == 0 || k >= n {
        return Err(DpsmError::InvalidParameter(format!("k must satisfy 1 <= k < n (k={k}, n={n})")));
    }
    if !(params.sigma_scale.is_finite() && params.sigma_scale > 0.0) {
        return Err(DpsmError::InvalidParameter(format!("sigma_scale must be positive, got {}", params.sigma_scale)));
    }
    let sigma = params.sigma_scale * max_pairwise_distance(points);

    let rows: Vec<Vec<(usize, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| normalized_affinities(&nearest_neighbors(points, i, k), sigma, params.kernel))
        .collect();

    let mut directed: BTreeMap<(usize, usize), (f64, f64)> = BTreeMap::new();
    for (i, row) in rows.iter().enumerate() {
        for &(j, a) in row {
            let entry = directed.entry((i.min(j), i.max(j))).or_insert((0.0, 0.0));
            if i < j {
                entry.0 = a;
            } else {
                entry.1 = a;
            }
        }
    }
    let pairs: BTreeMap<(usize, usize), f64> = directed
        .into_iter()
        .map(|(key, (a, b))| (key, a + b - a * b))
        .filter(|&(_, w)| w >= MIN_EDGE_WEIGHT)
        .collect();
    Ok(WeightedGraph::from_sorted_pairs(n, pairs))
}
