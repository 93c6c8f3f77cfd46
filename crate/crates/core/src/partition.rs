//! Root-anchored subclusters and their margin sets.
//!
//! A single sweep in descending density order assigns each node:
//! - no denser neighbour: the node is a root and opens a cluster;
//! - every denser neighbour sits in the same cluster: the node joins it;
//! - otherwise (denser neighbours span clusters or include an unassigned
//!   node) the node stays unassigned.
//!
//! The margin set of a cluster is every unassigned node adjacent to it.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use crate::density::DensityRank;
use crate::error::{DpsmError, Result};
use crate::graph::WeightedGraph;

/// Clusters keyed by root, with sorted member and margin lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionState {
    node_count: usize,
    clusters: BTreeMap<usize, Vec<usize>>,
    margins: BTreeMap<usize, Vec<usize>>,
}

/// Per-node classification used by the partition dump.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeStatus {
    Root,
    Member(usize),
    /// Unassigned and adjacent to the listed clusters.
    Margin(Vec<usize>),
    /// Unassigned and adjacent to no cluster.
    Gray,
}

impl PartitionState {
    /// Assembles a state without checking any invariant.
    pub fn from_parts(
        node_count: usize,
        clusters: BTreeMap<usize, Vec<usize>>,
        margins: BTreeMap<usize, Vec<usize>>,
    ) -> Self {
        Self { node_count, clusters, margins }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn roots(&self) -> impl Iterator<Item = usize> + '_ {
        self.clusters.keys().copied()
    }

    pub fn cluster_count(&self) -> usize {
        self.clusters.len()
    }

    pub fn clusters(&self) -> &BTreeMap<usize, Vec<usize>> {
        &self.clusters
    }

    pub fn cluster(&self, root: usize) -> Option<&[usize]> {
        self.clusters.get(&root).map(Vec::as_slice)
    }

    pub fn margins(&self) -> &BTreeMap<usize, Vec<usize>> {
        &self.margins
    }

    pub fn margin(&self, root: usize) -> &[usize] {
        self.margins.get(&root).map_or(&[], Vec::as_slice)
    }

    /// Root of the cluster containing each node. If a node is listed in several
    /// clusters the smallest root wins.
    pub fn cluster_of(&self) -> Vec<Option<usize>> {
        let mut out = vec![None; self.node_count];
        for (&r, members) in self.clusters.iter().rev() {
            for &v in members {
                out[v] = Some(r);
            }
        }
        out
    }

    /// Nodes in no cluster, ascending.
    pub fn unassigned(&self) -> Vec<usize> {
        self.cluster_of().iter().enumerate().filter(|(_, c)| c.is_none()).map(|(v, _)| v).collect()
    }

    pub fn statuses(&self) -> Vec<NodeStatus> {
        let cluster_of = self.cluster_of();
        let mut owners: Vec<Vec<usize>> = vec![Vec::new(); self.node_count];
        for (&r, margin) in &self.margins {
            for &m in margin {
                owners[m].push(r);
            }
        }
        (0..self.node_count)
            .map(|v| match cluster_of[v] {
                Some(r) if r == v => NodeStatus::Root,
                Some(r) => NodeStatus::Member(r),
                None if owners[v].is_empty() => NodeStatus::Gray,
                None => NodeStatus::Margin(std::mem::take(&mut owners[v])),
            })
            .collect()
    }

    /// Writes `node_id status root_id` per node. Margin nodes list every owning
    /// root (comma-separated); gray nodes print `-`.
    pub fn write_dump<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (v, status) in self.statuses().into_iter().enumerate() {
            match status {
                NodeStatus::Root => writeln!(out, "{v} ROOT {v}")?,
                NodeStatus::Member(r) => writeln!(out, "{v} MEMBER {r}")?,
                NodeStatus::Margin(rs) => {
                    let list: Vec<String> = rs.iter().map(usize::to_string).collect();
                    writeln!(out, "{v} MARGIN {}", list.join(","))?
                }
                NodeStatus::Gray => writeln!(out, "{v} GRAY -")?,
            }
        }
        Ok(())
    }
}

/// Margin sets recomputed from cluster membership alone.
pub fn margins_from_clusters(
    graph: &WeightedGraph,
    clusters: &BTreeMap<usize, Vec<usize>>,
) -> BTreeMap<usize, Vec<usize>> {
    let mut in_cluster = vec![false; graph.node_count()];
    for members in clusters.values() {
        for &v in members {
            in_cluster[v] = true;
        }
    }
    clusters
        .iter()
        .map(|(&r, members)| {
            let set: BTreeSet<usize> = members
                .iter()
                .flat_map(|&c| graph.neighbors(c).iter().map(|&(u, _)| u))
                .filter(|&u| !in_cluster[u])
                .collect();
            (r, set.into_iter().collect())
        })
        .collect()
}

/// Splits the graph into root clusters and margin sets.
pub fn partition(graph: &WeightedGraph, rank: &DensityRank) -> Result<PartitionState> {
    let n = graph.node_count();
    if rank.len() != n {
        return Err(DpsmError::LengthMismatch { left: n, right: rank.len() });
    }
    let mut cluster_of: Vec<Option<usize>> = vec![None; n];
    let mut clusters: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &v in rank.order() {
        let mut higher = graph.neighbors(v).iter().map(|&(u, _)| u).filter(|&u| rank.is_higher(u, v)).peekable();
        if higher.peek().is_none() {
            cluster_of[v] = Some(v);
            clusters.insert(v, vec![v]);
            continue;
        }
        let mut target = None;
        let mut joins = true;
        for u in higher {
            match (cluster_of[u], target) {
                (None, _) => {
                    joins = false;
                    break;
                }
                (Some(r), None) => target = Some(r),
                (Some(r), Some(t)) if r != t => {
                    joins = false;
                    break;
                }
                _ => {}
            }
        }
        if joins {
            let r = target.expect("a non-root has a denser neighbour");
            cluster_of[v] = Some(r);
            clusters.get_mut(&r).unwrap().push(v);
        }
    }
    for members in clusters.values_mut() {
        members.sort_unstable();
    }
    let margins = margins_from_clusters(graph, &clusters);
    Ok(PartitionState { node_count: n, clusters, margins })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Witness {
    Node(usize),
    Edge(usize, usize),
    /// A connected component, named by its smallest node.
    Component(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropertyCheck {
    Pass { witness: Option<Witness> },
    /// Nothing to check (e.g. no component holds two clusters).
    Vacuous,
    Fail { witness: Witness },
}

impl PropertyCheck {
    pub fn holds(&self) -> bool {
        !matches!(self, PropertyCheck::Fail { .. })
    }
}

/// Outcome of [`verify_properties`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PropertyReport {
    /// Clusters are disjoint and each root lies in its own cluster.
    pub disjoint_clusters: PropertyCheck,
    /// No margin node belongs to a cluster.
    pub margins_outside_clusters: PropertyCheck,
    /// No edge joins two different clusters.
    pub no_direct_edges: PropertyCheck,
    /// In every component with two or more clusters some node is in two or more margin sets.
    pub shared_margin_node: PropertyCheck,
}

impl PropertyReport {
    pub fn all_hold(&self) -> bool {
        self.separation_holds() && self.shared_margin_node.holds()
    }

    /// The first three properties, which survive merging.
    pub fn separation_holds(&self) -> bool {
        self.disjoint_clusters.holds() && self.margins_outside_clusters.holds() && self.no_direct_edges.holds()
    }
}

pub fn verify_properties(state: &PartitionState, graph: &WeightedGraph) -> PropertyReport {
    let n = graph.node_count();
    let mut owner: Vec<Option<usize>> = vec![None; n];

    let mut disjoint = PropertyCheck::Pass { witness: None };
    'outer: for (&r, members) in &state.clusters {
        if !members.contains(&r) {
            disjoint = PropertyCheck::Fail { witness: Witness::Node(r) };
            break;
        }
        for &v in members {
            if owner[v].is_some_and(|o| o != r) {
                disjoint = PropertyCheck::Fail { witness: Witness::Node(v) };
                break 'outer;
            }
            owner[v] = Some(r);
        }
    }

    let margins_outside = state
        .margins
        .values()
        .flatten()
        .find(|&&m| owner[m].is_some())
        .map_or(PropertyCheck::Pass { witness: None }, |&m| PropertyCheck::Fail { witness: Witness::Node(m) });

    let no_direct = graph
        .edges()
        .iter()
        .find(|e| matches!((owner[e.u], owner[e.v]), (Some(a), Some(b)) if a != b))
        .map_or(PropertyCheck::Pass { witness: None }, |e| PropertyCheck::Fail {
            witness: Witness::Edge(e.u, e.v),
        });

    PropertyReport {
        disjoint_clusters: disjoint,
        margins_outside_clusters: margins_outside,
        no_direct_edges: no_direct,
        shared_margin_node: check_shared_margin(state, graph),
    }
}

fn check_shared_margin(state: &PartitionState, graph: &WeightedGraph) -> PropertyCheck {
    let comp = graph.connected_components();
    let comp_count = comp.iter().max().map_or(0, |&c| c + 1);
    let mut clusters_in = vec![0usize; comp_count];
    for &r in state.clusters.keys() {
        clusters_in[comp[r]] += 1;
    }
    let mut margin_hits = vec![0usize; graph.node_count()];
    for margin in state.margins.values() {
        for &m in margin {
            margin_hits[m] += 1;
        }
    }
    let mut smallest = vec![usize::MAX; comp_count];
    let mut shared = vec![None; comp_count];
    for v in 0..graph.node_count() {
        let c = comp[v];
        smallest[c] = smallest[c].min(v);
        if margin_hits[v] >= 2 && shared[c].is_none() {
            shared[c] = Some(v);
        }
    }
    let mut first_witness = None;
    for c in 0..comp_count {
        if clusters_in[c] < 2 {
            continue;
        }
        match shared[c] {
            Some(v) => {
                first_witness.get_or_insert(v);
            }
            None => return PropertyCheck::Fail { witness: Witness::Component(smallest[c]) },
        }
    }
    match first_witness {
        Some(v) => PropertyCheck::Pass { witness: Some(Witness::Node(v)) },
        None => PropertyCheck::Vacuous,
    }
}
