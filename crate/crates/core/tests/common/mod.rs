#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use dpsm::{propagate, DensityRank, PartitionState, PointSet, PropagationMatrix, WeightedGraph};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;
pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Erdos-Renyi graph with uniform weights in (0, 1] and the given mean degree.
pub fn random_graph(rng: &mut TestRng, n: usize, mean_degree: f64) -> WeightedGraph {
    let p = if n > 1 { (mean_degree / (n - 1) as f64).min(1.0) } else { 0.0 };
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                edges.push((u, v, 1.0 - rng.gen::<f64>()));
            }
        }
    }
    WeightedGraph::from_edges(n, edges).unwrap()
}

/// Random uniform points in the unit cube.
pub fn random_points(rng: &mut TestRng, n: usize, dim: usize) -> PointSet {
    let rows = (0..n).map(|_| (0..dim).map(|_| rng.gen::<f64>()).collect()).collect();
    PointSet::new(rows, None).unwrap()
}

pub fn random_rank(rng: &mut TestRng, n: usize) -> DensityRank {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    DensityRank::from_order(order).unwrap()
}

pub fn propagated_rank(graph: &WeightedGraph, iterations: usize) -> DensityRank {
    let p = PropagationMatrix::new(graph).unwrap();
    DensityRank::from_density(propagate(&p, iterations, 0.0).unwrap())
}

/// Either a random permutation or propagated densities, with a random graph
/// that has at least one edge.
pub fn random_instance(rng: &mut TestRng, max_n: usize) -> (WeightedGraph, DensityRank) {
    loop {
        let n = rng.gen_range(2..=max_n);
        let mean_degree = rng.gen_range(1.0..8.0);
        let graph = random_graph(rng, n, mean_degree);
        if graph.edge_count() == 0 {
            continue;
        }
        let rank = if rng.gen_bool(0.5) { random_rank(rng, n) } else { propagated_rank(&graph, rng.gen_range(1..60)) };
        return (graph, rank);
    }
}

/// Clusters by iterating the descent recurrence to its fixpoint, one root at
/// a time: a node with at least one denser neighbour joins C(r) once every
/// denser neighbour is in C(r).
pub fn fixpoint_clusters(graph: &WeightedGraph, rank: &DensityRank) -> BTreeMap<usize, BTreeSet<usize>> {
    let n = graph.node_count();
    let higher = |v: usize| graph.neighbors(v).iter().map(|&(u, _)| u).filter(move |&u| rank.is_higher(u, v));
    let mut out = BTreeMap::new();
    for r in (0..n).filter(|&r| higher(r).next().is_none()) {
        let mut c = BTreeSet::from([r]);
        loop {
            let add: Vec<usize> = (0..n)
                .filter(|v| !c.contains(v))
                .filter(|&v| higher(v).next().is_some() && higher(v).all(|u| c.contains(&u)))
                .collect();
            if add.is_empty() {
                break;
            }
            c.extend(add);
        }
        out.insert(r, c);
    }
    out
}

pub fn cluster_sets(state: &PartitionState) -> BTreeMap<usize, BTreeSet<usize>> {
    state.clusters().iter().map(|(&r, c)| (r, c.iter().copied().collect())).collect()
}

/// Labels of a set partition given as a restricted growth string.
pub fn set_partitions(n: usize) -> Vec<Vec<i64>> {
    fn rec(prefix: &mut Vec<i64>, max: i64, n: usize, out: &mut Vec<Vec<i64>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for l in 0..=max + 1 {
            prefix.push(l);
            rec(prefix, max.max(l), n, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if n > 0 {
        rec(&mut vec![0], 0, n, &mut out);
    }
    out
}

/// One labelling per integer partition of `n`: contiguous blocks of
/// non-increasing size.
pub fn canonical_partitions(n: usize) -> Vec<Vec<i64>> {
    fn rec(rest: usize, cap: usize, sizes: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest == 0 {
            out.push(sizes.clone());
            return;
        }
        for s in (1..=rest.min(cap)).rev() {
            sizes.push(s);
            rec(rest - s, s, sizes, out);
            sizes.pop();
        }
    }
    let mut shapes = Vec::new();
    rec(n, n, &mut Vec::new(), &mut shapes);
    shapes
        .into_iter()
        .map(|sizes| sizes.iter().enumerate().flat_map(|(l, &s)| std::iter::repeat_n(l as i64, s)).collect())
        .collect()
}
pub mod oracles;
