//! Density by propagation over the graph.
//!
//! Every node starts with one unit of mass and repeatedly hands it to its
//! neighbours in proportion to edge weight. Mass drifts towards well-connected
//! regions; the final vector is only used through the strict order it induces.

use std::cmp::Ordering;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{DpsmError, Result};
use crate::graph::WeightedGraph;

/// Column-stochastic propagation matrix, stored by row.
///
/// Entry `(i, j)` is the fraction of node `j`'s mass sent to node `i`:
/// `w(j, i) / sum_t w(j, t)`.
#[derive(Debug, Clone)]
pub struct PropagationMatrix {
    offsets: Vec<usize>,
    entries: Vec<(usize, f64)>,
    isolated: Vec<bool>,
}

impl PropagationMatrix {
    pub fn new(graph: &WeightedGraph) -> Result<Self> {
        if graph.edge_count() == 0 {
            return Err(DpsmError::NoEdges);
        }
        let n = graph.node_count();
        let out_weight: Vec<f64> = (0..n).map(|j| graph.weighted_degree(j)).collect();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut entries = Vec::with_capacity(2 * graph.edge_count());
        offsets.push(0);
        for i in 0..n {
            entries.extend(graph.neighbors(i).iter().map(|&(j, w)| (j, w / out_weight[j])));
            offsets.push(entries.len());
        }
        let isolated = (0..n).map(|j| graph.degree(j) == 0).collect();
        Ok(Self { offsets, entries, isolated })
    }

    pub fn node_count(&self) -> usize {
        self.isolated.len()
    }

    /// Non-zero entries of row `i` as `(j, p_ij)`.
    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.entries[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let row = self.row(i);
        row.binary_search_by_key(&j, |&(c, _)| c).map_or(0.0, |k| row[k].1)
    }

    /// Nodes without edges; their columns are zero.
    pub fn is_isolated(&self, j: usize) -> bool {
        self.isolated[j]
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.node_count()];
        for (_, &(j, p)) in self.iter_entries() {
            sums[j] += p;
        }
        sums
    }

    fn iter_entries(&self) -> impl Iterator<Item = (usize, &(usize, f64))> {
        (0..self.node_count()).flat_map(move |i| self.row(i).iter().map(move |e| (i, e)))
    }

    /// `P f`, except that isolated nodes keep their own mass.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        (0..self.node_count())
            .into_par_iter()
            .map(|i| {
                if self.isolated[i] {
                    f[i]
                } else {
                    self.row(i).iter().map(|&(j, p)| p * f[j]).sum()
                }
            })
            .collect()
    }
}

/// Runs `iterations` steps of `f <- lazy * f + (1 - lazy) * P f` from all-ones.
pub fn propagate(matrix: &PropagationMatrix, iterations: usize, lazy: f64) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&lazy) {
        return Err(DpsmError::InvalidParameter(format!("lazy must lie in [0, 1), got {lazy}")));
    }
    let mut f = vec![1.0; matrix.node_count()];
    for _ in 0..iterations {
        let pf = matrix.apply(&f);
        f = if lazy == 0.0 {
            pf
        } else {
            f.iter().zip(pf).map(|(&old, new)| lazy * old + (1.0 - lazy) * new).collect()
        };
    }
    Ok(f)
}

/// Densities with the strict total order they induce.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityRank {
    density: Vec<f64>,
    order: Vec<usize>,
    rank: Vec<usize>,
}

impl DensityRank {
    /// Orders nodes by descending density, breaking ties by ascending id.
    pub fn from_density(density: Vec<f64>) -> Self {
        let mut order: Vec<usize> = (0..density.len()).collect();
        order.sort_by(|&a, &b| denser_first(&density, a, b));
        let mut rank = vec![0; density.len()];
        for (pos, &v) in order.iter().enumerate() {
            rank[v] = pos;
        }
        Self { density, order, rank }
    }

    /// Builds a rank directly from an order (densest first). Densities are
    /// synthesised so that they reproduce the order.
    pub fn from_order(order: Vec<usize>) -> Result<Self> {
        let n = order.len();
        let mut rank = vec![usize::MAX; n];
        for (pos, &v) in order.iter().enumerate() {
            if v >= n || rank[v] != usize::MAX {
                return Err(DpsmError::InvalidParameter("order is not a permutation".into()));
            }
            rank[v] = pos;
        }
        let density = rank.iter().map(|&r| (n - r) as f64).collect();
        Ok(Self { density, order, rank })
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    /// Node ids, densest first.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Position of `v` in [`order`](Self::order); 0 is the densest node.
    pub fn rank(&self, v: usize) -> usize {
        self.rank[v]
    }

    /// True when `u` precedes `v` in the density order.
    pub fn is_higher(&self, u: usize, v: usize) -> bool {
        self.rank[u] < self.rank[v]
    }

    /// Writes `node_id f_value rank` per node.
    pub fn write_dump<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (v, f) in self.density.iter().enumerate() {
            writeln!(out, "{v} {f:.17e} {}", self.rank[v])?;
        }
        Ok(())
    }
}

fn denser_first(f: &[f64], a: usize, b: usize) -> Ordering {
    f[b].total_cmp(&f[a]).then(a.cmp(&b))
}

pub fn density_order(density: Vec<f64>) -> DensityRank {
    DensityRank::from_density(density)
}
