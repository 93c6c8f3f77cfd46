//! Merging adjacent subclusters by CluCut.
//!
//! Two clusters are adjacent when their margin sets overlap. For an adjacent
//! pair the inter-cluster strength sums, over every shared margin node, the
//! weaker of that node's total edge weight into either cluster. CluCut divides
//! it by each cluster's internal edge weight and adds the two ratios; the pair
//! with the largest CluCut merges first.
//!
//! A cluster with no internal weight contributes an unbounded term. Such
//! values compare above every finite one, and among themselves by the number
//! of unbounded terms and then by the finite remainder.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::density::DensityRank;
use crate::dsu::DisjointSets;
use crate::error::{DpsmError, Result};
use crate::graph::WeightedGraph;
use crate::partition::{margins_from_clusters, PartitionState};

/// Total edge weight inside `cluster`.
pub fn r_intra(cluster: &[usize], graph: &WeightedGraph) -> f64 {
    let members: BTreeSet<usize> = cluster.iter().copied().collect();
    graph
        .edges()
        .iter()
        .filter(|e| members.contains(&e.u) && members.contains(&e.v))
        .map(|e| e.weight)
        .sum()
}

/// Inter-cluster strength of roots `a` and `b`, computed from the state alone.
pub fn r_inter(a: usize, b: usize, state: &PartitionState, graph: &WeightedGraph) -> f64 {
    let (Some(ca), Some(cb)) = (state.cluster(a), state.cluster(b)) else {
        return 0.0;
    };
    let ca: BTreeSet<usize> = ca.iter().copied().collect();
    let cb: BTreeSet<usize> = cb.iter().copied().collect();
    let mb: BTreeSet<usize> = state.margin(b).iter().copied().collect();
    state
        .margin(a)
        .iter()
        .filter(|m| mb.contains(m))
        .map(|&m| {
            let into = |c: &BTreeSet<usize>| -> f64 {
                graph.neighbors(m).iter().filter(|(u, _)| c.contains(u)).map(|&(_, w)| w).sum()
            };
            into(&ca).min(into(&cb))
        })
        .sum()
}

/// CluCut of roots `a` and `b`, computed from the state alone.
pub fn clucut(a: usize, b: usize, state: &PartitionState, graph: &WeightedGraph) -> CluCut {
    let inter = r_inter(a, b, state, graph);
    let intra = |r| state.cluster(r).map_or(0.0, |c| r_intra(c, graph));
    CluCut::new(inter, intra(a), intra(b))
}

/// A CluCut value that may carry unbounded terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CluCut {
    /// Number of clusters (0..=2) with zero internal weight.
    pub unbounded_terms: u8,
    /// Sum of the bounded terms.
    pub finite: f64,
}

impl CluCut {
    pub fn new(inter: f64, intra_a: f64, intra_b: f64) -> Self {
        let mut out = Self { unbounded_terms: 0, finite: 0.0 };
        for intra in [intra_a, intra_b] {
            if intra > 0.0 {
                out.finite += inter / intra;
            } else if inter > 0.0 {
                out.unbounded_terms += 1;
            }
        }
        out
    }

    pub fn finite(value: f64) -> Self {
        Self { unbounded_terms: 0, finite: value }
    }

    pub fn is_finite(&self) -> bool {
        self.unbounded_terms == 0
    }

    /// The numeric value; `+inf` when any term is unbounded.
    pub fn value(&self) -> f64 {
        if self.is_finite() {
            self.finite
        } else {
            f64::INFINITY
        }
    }
}

impl Eq for CluCut {}

impl Ord for CluCut {
    fn cmp(&self, other: &Self) -> Ordering {
        self.unbounded_terms.cmp(&other.unbounded_terms).then(self.finite.total_cmp(&other.finite))
    }
}

impl PartialOrd for CluCut {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for CluCut {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

/// An adjacent pair of live roots, `a < b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidatePair {
    pub a: usize,
    pub b: usize,
    pub inter: f64,
    pub clucut: CluCut,
    stamp: (u64, u64),
}

impl Eq for CandidatePair {}

impl Ord for CandidatePair {
    // Max-heap order: larger CluCut first, then lexicographically smaller pair.
    fn cmp(&self, other: &Self) -> Ordering {
        self.clucut.cmp(&other.clucut).then_with(|| (other.a, other.b).cmp(&(self.a, self.b)))
    }
}

impl PartialOrd for CandidatePair {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MergeMode {
    /// Merge until this many clusters remain or no adjacent pair is left.
    TargetClusters(usize),
    /// Stop before a merge whose CluCut falls below `drop_ratio` times the
    /// previously executed one.
    Auto { drop_ratio: f64 },
}

impl Default for MergeMode {
    fn default() -> Self {
        MergeMode::Auto { drop_ratio: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MergeOptions {
    pub mode: MergeMode,
    /// Clusters whose size and internal weight are both below this fraction
    /// of the live averages are dropped after merging ends.
    pub prune_fraction: f64,
    /// Pruning always runs in auto mode; in target mode only with this set.
    pub prune_in_target_mode: bool,
    /// Experimental: after each merge, pull margin nodes whose denser
    /// neighbours now all lie in the merged cluster into it.
    pub absorb_margins: bool,
}

impl Default for MergeOptions {
    fn default() -> Self {
        Self { mode: MergeMode::default(), prune_fraction: 0.05, prune_in_target_mode: false, absorb_margins: false }
    }
}

impl MergeOptions {
    fn validate(&self) -> Result<()> {
        match self.mode {
            MergeMode::TargetClusters(0) => {
                return Err(DpsmError::InvalidParameter("target cluster count must be at least 1".into()))
            }
            MergeMode::Auto { drop_ratio } if !(drop_ratio > 0.0 && drop_ratio <= 1.0) => {
                return Err(DpsmError::InvalidParameter(format!("drop ratio must lie in (0, 1], got {drop_ratio}")))
            }
            _ => {}
        }
        if !(0.0..1.0).contains(&self.prune_fraction) {
            return Err(DpsmError::InvalidParameter(format!(
                "prune fraction must lie in [0, 1), got {}",
                self.prune_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeRecord {
    pub step: usize,
    pub root_a: usize,
    pub root_b: usize,
    pub clucut: CluCut,
    pub clusters_after: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrunedCluster {
    pub root: usize,
    pub size: usize,
    pub intra: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum HaltReason {
    TargetReached,
    /// Nothing adjacent is left; the remaining clusters cannot merge.
    NoAdjacentPairs,
    HalfDrop { root_a: usize, root_b: usize, candidate: CluCut, previous: CluCut },
}

impl fmt::Display for HaltReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HaltReason::TargetReached => write!(f, "target cluster count reached"),
            HaltReason::NoAdjacentPairs => {
                write!(f, "no adjacent cluster pairs remain (cannot merge across components)")
            }
            HaltReason::HalfDrop { root_a, root_b, candidate, previous } => {
                write!(f, "next merge {root_a}+{root_b} at clucut {candidate} fell below the drop ratio of {previous}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeTrace {
    pub initial_clusters: usize,
    pub records: Vec<MergeRecord>,
    pub halt: HaltReason,
    pub pruned: Vec<PrunedCluster>,
}

impl MergeTrace {
    /// Writes `step,root_a,root_b,clucut,clusters_after` per merge. Halt and
    /// pruning details follow as `#` comment lines.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# step,root_a,root_b,clucut,clusters_after")?;
        for r in &self.records {
            writeln!(out, "{},{},{},{},{}", r.step, r.root_a, r.root_b, r.clucut, r.clusters_after)?;
        }
        writeln!(out, "# halt: {}", self.halt)?;
        for p in &self.pruned {
            writeln!(out, "# pruned root={} size={} intra={}", p.root, p.size, p.intra)?;
        }
        Ok(())
    }
}

/// Hooks into [`run_merging_observed`], for inspection and testing.
pub trait MergeObserver {
    fn before_merge(&mut self, _engine: &MergeEngine<'_>, _pair: &CandidatePair) {}
    fn after_merge(&mut self, _engine: &MergeEngine<'_>, _record: &MergeRecord) {}
}

impl MergeObserver for () {}

/// Incremental merge state over a fixed graph.
///
/// Membership lives in a disjoint-set forest; each representative maps to the
/// root id that names its cluster. Margin nodes carry the list of clusters
/// they border along with their total edge weight into each.
pub struct MergeEngine<'g> {
    graph: &'g WeightedGraph,
    rank: &'g DensityRank,
    absorb: bool,
    sets: DisjointSets,
    rep_root: Vec<usize>,
    clustered: Vec<bool>,
    live: Vec<bool>,
    size: Vec<usize>,
    intra: Vec<f64>,
    margin: Vec<BTreeSet<usize>>,
    owners: Vec<Vec<(usize, f64)>>,
    version: Vec<u64>,
    heap: BinaryHeap<CandidatePair>,
    live_count: usize,
}

fn owner_weight(list: &[(usize, f64)], r: usize) -> Option<f64> {
    list.binary_search_by_key(&r, |&(x, _)| x).ok().map(|i| list[i].1)
}

fn owner_add(list: &mut Vec<(usize, f64)>, r: usize, w: f64) {
    match list.binary_search_by_key(&r, |&(x, _)| x) {
        Ok(i) => list[i].1 += w,
        Err(i) => list.insert(i, (r, w)),
    }
}

fn owner_take(list: &mut Vec<(usize, f64)>, r: usize) -> Option<f64> {
    list.binary_search_by_key(&r, |&(x, _)| x).ok().map(|i| list.remove(i).1)
}

impl<'g> MergeEngine<'g> {
    pub fn new(graph: &'g WeightedGraph, rank: &'g DensityRank, state: &PartitionState, absorb: bool) -> Result<Self> {
        let n = graph.node_count();
        if state.node_count() != n || rank.len() != n {
            return Err(DpsmError::LengthMismatch { left: n, right: state.node_count().min(rank.len()) });
        }
        let mut sets = DisjointSets::new(n);
        let mut rep_root = (0..n).collect::<Vec<_>>();
        let mut clustered = vec![false; n];
        let mut live = vec![false; n];
        let mut size = vec![0; n];
        let mut cluster_of = vec![usize::MAX; n];
        for (&r, members) in state.clusters() {
            live[r] = true;
            size[r] = members.len();
            for &v in members {
                if clustered[v] {
                    return Err(DpsmError::MergeContract(format!("node {v} belongs to two clusters")));
                }
                clustered[v] = true;
                cluster_of[v] = r;
                sets.union(r, v);
            }
            let rep = sets.find(r);
            rep_root[rep] = r;
        }
        let mut intra = vec![0.0; n];
        for e in graph.edges() {
            let (cu, cv) = (cluster_of[e.u], cluster_of[e.v]);
            if cu != usize::MAX && cu == cv {
                intra[cu] += e.weight;
            }
        }
        let mut margin = vec![BTreeSet::new(); n];
        let mut owners = vec![Vec::new(); n];
        for m in (0..n).filter(|&m| !clustered[m]) {
            for &(c, w) in graph.neighbors(m) {
                if clustered[c] {
                    owner_add(&mut owners[m], cluster_of[c], w);
                    margin[cluster_of[c]].insert(m);
                }
            }
        }
        let live_count = state.cluster_count();
        let mut engine = Self {
            graph,
            rank,
            absorb,
            sets,
            rep_root,
            clustered,
            live,
            size,
            intra,
            margin,
            owners,
            version: vec![0; n],
            heap: BinaryHeap::new(),
            live_count,
        };
        let roots: Vec<usize> = state.roots().collect();
        for a in roots {
            for (b, inter) in engine.inter_with_neighbors(a) {
                if b > a {
                    engine.push_pair(a, b, inter);
                }
            }
        }
        Ok(engine)
    }

    pub fn live_count(&self) -> usize {
        self.live_count
    }

    pub fn is_live(&self, r: usize) -> bool {
        self.live[r]
    }

    pub fn live_roots(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.live.len()).filter(|&r| self.live[r])
    }

    /// Incrementally maintained internal weight of a live cluster.
    pub fn intra(&self, r: usize) -> f64 {
        self.intra[r]
    }

    pub fn size(&self, r: usize) -> usize {
        self.size[r]
    }

    pub fn margin(&self, r: usize) -> &BTreeSet<usize> {
        &self.margin[r]
    }

    /// Root of the cluster holding `v`, if any.
    pub fn cluster_root(&self, v: usize) -> Option<usize> {
        if !self.clustered[v] {
            return None;
        }
        let mut x = v;
        while let Some(p) = self.parent_of(x) {
            x = p;
        }
        Some(self.rep_root[x])
    }

    fn parent_of(&self, x: usize) -> Option<usize> {
        self.sets.parent(x).filter(|&p| p != x)
    }

    fn root_mut(&mut self, v: usize) -> usize {
        let rep = self.sets.find(v);
        self.rep_root[rep]
    }

    /// Inter-cluster strength between `a` and every adjacent live root.
    fn inter_with_neighbors(&self, a: usize) -> BTreeMap<usize, f64> {
        let mut inter = BTreeMap::new();
        for &m in &self.margin[a] {
            let list = &self.owners[m];
            let wa = owner_weight(list, a).expect("margin node lists its cluster");
            for &(x, wx) in list {
                if x != a {
                    *inter.entry(x).or_insert(0.0) += wa.min(wx);
                }
            }
        }
        inter
    }

    fn pair_value(&self, a: usize, b: usize, inter: f64) -> CluCut {
        CluCut::new(inter, self.intra[a], self.intra[b])
    }

    fn push_pair(&mut self, a: usize, b: usize, inter: f64) {
        let (a, b) = (a.min(b), a.max(b));
        let clucut = self.pair_value(a, b, inter);
        self.heap.push(CandidatePair { a, b, inter, clucut, stamp: (self.version[a], self.version[b]) });
    }

    fn is_current(&self, c: &CandidatePair) -> bool {
        self.live[c.a] && self.live[c.b] && c.stamp == (self.version[c.a], self.version[c.b])
    }

    /// Best current candidate, discarding stale heap entries.
    pub fn peek_best(&mut self) -> Option<CandidatePair> {
        while let Some(top) = self.heap.peek() {
            if self.is_current(top) {
                return Some(*top);
            }
            self.heap.pop();
        }
        None
    }

    /// All adjacent live pairs with their incrementally maintained values.
    pub fn current_pairs(&self) -> Vec<CandidatePair> {
        let mut out = Vec::new();
        for a in self.live_roots() {
            for (b, inter) in self.inter_with_neighbors(a) {
                if b > a {
                    out.push(CandidatePair {
                        a,
                        b,
                        inter,
                        clucut: self.pair_value(a, b, inter),
                        stamp: (self.version[a], self.version[b]),
                    });
                }
            }
        }
        out
    }

    /// Merges the clusters of roots `a` and `b`; the smaller id survives.
    pub fn merge_pair(&mut self, a: usize, b: usize) -> Result<usize> {
        let (a, b) = (a.min(b), a.max(b));
        if a == b || a >= self.live.len() || b >= self.live.len() || !self.live[a] || !self.live[b] {
            return Err(DpsmError::MergeContract(format!("roots {a} and {b} are not two live clusters")));
        }
        if !self.margin[a].iter().any(|m| self.margin[b].contains(m)) {
            return Err(DpsmError::MergeContract(format!("clusters {a} and {b} share no margin node")));
        }
        self.sets.union(a, b);
        let rep = self.sets.find(a);
        self.rep_root[rep] = a;
        self.live[b] = false;
        self.live_count -= 1;
        self.size[a] += self.size[b];
        self.intra[a] += self.intra[b];
        let moved = std::mem::take(&mut self.margin[b]);
        for &m in &moved {
            let w = owner_take(&mut self.owners[m], b).expect("margin node lists its cluster");
            owner_add(&mut self.owners[m], a, w);
        }
        self.margin[a].extend(moved);
        if self.absorb {
            self.absorb_into(a);
        }
        self.version[a] += 1;
        self.version[b] += 1;
        for (x, inter) in self.inter_with_neighbors(a) {
            self.push_pair(a, x, inter);
        }
        Ok(a)
    }

    fn absorb_into(&mut self, a: usize) {
        let graph = self.graph;
        let rank = self.rank;
        // Min-heap on density rank: denser nodes settle before their lower neighbours.
        let mut queue: BinaryHeap<std::cmp::Reverse<(usize, usize)>> =
            self.margin[a].iter().map(|&m| std::cmp::Reverse((rank.rank(m), m))).collect();
        let mut seen: BTreeSet<usize> = self.margin[a].clone();
        while let Some(std::cmp::Reverse((_, m))) = queue.pop() {
            if self.clustered[m] {
                continue;
            }
            let joins = graph
                .neighbors(m)
                .iter()
                .filter(|&&(u, _)| rank.is_higher(u, m))
                .all(|&(u, _)| self.clustered[u] && self.root_mut(u) == a);
            if !joins {
                continue;
            }
            self.clustered[m] = true;
            self.sets.union(a, m);
            let rep = self.sets.find(a);
            self.rep_root[rep] = a;
            self.size[a] += 1;
            self.margin[a].remove(&m);
            self.owners[m].clear();
            for &(u, w) in graph.neighbors(m) {
                if self.clustered[u] {
                    if u != m && self.root_mut(u) == a {
                        self.intra[a] += w;
                    }
                } else {
                    owner_add(&mut self.owners[u], a, w);
                    self.margin[a].insert(u);
                    if seen.insert(u) {
                        queue.push(std::cmp::Reverse((rank.rank(u), u)));
                    }
                }
            }
        }
    }

    /// Current clusters and margins as a plain partition state.
    pub fn snapshot(&self) -> PartitionState {
        let n = self.graph.node_count();
        let mut clusters: BTreeMap<usize, Vec<usize>> = self.live_roots().map(|r| (r, Vec::new())).collect();
        for v in 0..n {
            if let Some(r) = self.cluster_root(v) {
                clusters.get_mut(&r).expect("clustered node maps to a live root").push(v);
            }
        }
        let margins = self.live_roots().map(|r| (r, self.margin[r].iter().copied().collect())).collect();
        PartitionState::from_parts(n, clusters, margins)
    }

    /// Drops clusters whose size and internal weight are both below
    /// `fraction` times the live averages. Their nodes become unassigned.
    pub fn prune(&mut self, fraction: f64) -> Vec<PrunedCluster> {
        if self.live_count == 0 || fraction <= 0.0 {
            return Vec::new();
        }
        let roots: Vec<usize> = self.live_roots().collect();
        let count = roots.len() as f64;
        let avg_size = roots.iter().map(|&r| self.size[r] as f64).sum::<f64>() / count;
        let avg_intra = roots.iter().map(|&r| self.intra[r]).sum::<f64>() / count;
        let doomed: Vec<usize> = roots
            .into_iter()
            .filter(|&r| (self.size[r] as f64) < fraction * avg_size && self.intra[r] < fraction * avg_intra)
            .collect();
        let mut pruned = Vec::with_capacity(doomed.len());
        for &r in &doomed {
            pruned.push(PrunedCluster { root: r, size: self.size[r], intra: self.intra[r] });
            self.live[r] = false;
            self.live_count -= 1;
            self.version[r] += 1;
            for m in std::mem::take(&mut self.margin[r]) {
                owner_take(&mut self.owners[m], r);
            }
        }
        if !doomed.is_empty() {
            for v in 0..self.clustered.len() {
                if self.clustered[v] {
                    let r = self.root_mut(v);
                    self.clustered[v] = self.live[r];
                }
            }
        }
        pruned
    }
}

/// Stop rule of auto mode.
///
/// Unbounded merges always run and do not move the baseline; the first finite
/// merge always runs.
#[derive(Debug, Clone, Copy)]
pub struct HalfDropRule {
    ratio: f64,
    previous: Option<CluCut>,
}

impl HalfDropRule {
    pub fn new(ratio: f64) -> Self {
        Self { ratio, previous: None }
    }

    /// The executed merge the next candidate is compared against.
    pub fn baseline(&self) -> Option<CluCut> {
        self.previous
    }

    /// True when `candidate` should stop merging.
    pub fn halts(&self, candidate: CluCut) -> bool {
        match self.previous {
            Some(prev) if candidate.is_finite() => candidate.finite < self.ratio * prev.finite,
            _ => false,
        }
    }

    pub fn record(&mut self, executed: CluCut) {
        if executed.is_finite() {
            self.previous = Some(executed);
        }
    }
}

/// Result of [`run_merging`].
#[derive(Debug, Clone)]
pub struct MergeOutcome {
    pub state: PartitionState,
    pub trace: MergeTrace,
    /// Members of pruned clusters.
    pub pruned_nodes: Vec<usize>,
}

pub fn run_merging(
    graph: &WeightedGraph,
    rank: &DensityRank,
    state: &PartitionState,
    options: &MergeOptions,
) -> Result<MergeOutcome> {
    run_merging_observed(graph, rank, state, options, &mut ())
}

/// [`run_merging`] with hooks around every merge.
pub fn run_merging_observed(
    graph: &WeightedGraph,
    rank: &DensityRank,
    state: &PartitionState,
    options: &MergeOptions,
    observer: &mut dyn MergeObserver,
) -> Result<MergeOutcome> {
    options.validate()?;
    let mut engine = MergeEngine::new(graph, rank, state, options.absorb_margins)?;
    let initial_clusters = engine.live_count();
    let mut records = Vec::new();
    let mut rule = match options.mode {
        MergeMode::Auto { drop_ratio } => Some(HalfDropRule::new(drop_ratio)),
        MergeMode::TargetClusters(_) => None,
    };
    let halt = loop {
        if let MergeMode::TargetClusters(k) = options.mode {
            if engine.live_count() <= k {
                break HaltReason::TargetReached;
            }
        }
        let Some(best) = engine.peek_best() else {
            break HaltReason::NoAdjacentPairs;
        };
        if let Some(rule) = &rule {
            if rule.halts(best.clucut) {
                break HaltReason::HalfDrop {
                    root_a: best.a,
                    root_b: best.b,
                    candidate: best.clucut,
                    previous: rule.baseline().expect("halting needs a baseline"),
                };
            }
        }
        observer.before_merge(&engine, &best);
        engine.merge_pair(best.a, best.b)?;
        if let Some(rule) = &mut rule {
            rule.record(best.clucut);
        }
        let record = MergeRecord {
            step: records.len() + 1,
            root_a: best.a,
            root_b: best.b,
            clucut: best.clucut,
            clusters_after: engine.live_count(),
        };
        observer.after_merge(&engine, &record);
        records.push(record);
    };

    let prune = match options.mode {
        MergeMode::Auto { .. } => true,
        MergeMode::TargetClusters(_) => options.prune_in_target_mode,
    };
    let mut pruned_nodes = Vec::new();
    let pruned = if prune {
        let before = engine.snapshot();
        let pruned = engine.prune(options.prune_fraction);
        for p in &pruned {
            pruned_nodes.extend_from_slice(before.cluster(p.root).unwrap_or_default());
        }
        pruned_nodes.sort_unstable();
        pruned
    } else {
        Vec::new()
    };

    Ok(MergeOutcome {
        state: engine.snapshot(),
        trace: MergeTrace { initial_clusters, records, halt, pruned },
        pruned_nodes,
    })
}

/// How nodes left outside every cluster are labelled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RemainderPolicy {
    /// Attach to the cluster with the strongest connection, densest nodes first.
    #[default]
    Nearest,
    /// Label as noise.
    Drop,
}

impl std::str::FromStr for RemainderPolicy {
    type Err = DpsmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nearest" => Ok(Self::Nearest),
            "drop" => Ok(Self::Drop),
            other => Err(DpsmError::InvalidParameter(format!("unknown remainder policy `{other}`"))),
        }
    }
}

/// Label used for noise.
pub const NOISE: i64 = -1;

/// Final per-node labels. Cluster labels are `0..k` in ascending root order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labeling {
    pub labels: Vec<i64>,
    /// `roots[label]` is the root id behind each label.
    pub roots: Vec<usize>,
}

impl Labeling {
    pub fn cluster_count(&self) -> usize {
        let used: BTreeSet<i64> = self.labels.iter().copied().filter(|&l| l != NOISE).collect();
        used.len()
    }

    pub fn noise_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == NOISE).count()
    }

    /// Writes `node_id,label` per node.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (v, l) in self.labels.iter().enumerate() {
            writeln!(out, "{v},{l}")?;
        }
        Ok(())
    }
}

/// Labels every node. Members of `pruned` clusters are noise.
pub fn assign_remainder(
    state: &PartitionState,
    pruned: &[usize],
    graph: &WeightedGraph,
    rank: &DensityRank,
    policy: RemainderPolicy,
) -> Labeling {
    let n = graph.node_count();
    let roots: Vec<usize> = state.roots().collect();
    let label_of_root: BTreeMap<usize, i64> = roots.iter().enumerate().map(|(i, &r)| (r, i as i64)).collect();
    let mut owner = state.cluster_of();
    let mut is_pruned = vec![false; n];
    for &v in pruned {
        is_pruned[v] = true;
    }
    if policy == RemainderPolicy::Nearest {
        for &v in rank.order() {
            if owner[v].is_some() || is_pruned[v] {
                continue;
            }
            let mut pull: BTreeMap<usize, f64> = BTreeMap::new();
            for &(u, w) in graph.neighbors(v) {
                if let Some(r) = owner[u] {
                    *pull.entry(r).or_insert(0.0) += w;
                }
            }
            // Ascending root order plus a strict comparison keeps the smaller root on ties.
            let mut best: Option<(usize, f64)> = None;
            for (r, w) in pull {
                if best.is_none_or(|(_, bw)| w > bw) {
                    best = Some((r, w));
                }
            }
            owner[v] = best.map(|(r, _)| r);
        }
    }
    let labels = owner.iter().map(|o| o.map_or(NOISE, |r| label_of_root[&r])).collect();
    Labeling { labels, roots }
}

/// From-scratch view of a partition state: internal weights per cluster and
/// CluCut for every adjacent pair.
#[derive(Debug, Clone)]
pub struct ScratchStats {
    pub intra: BTreeMap<usize, f64>,
    pub margins: BTreeMap<usize, Vec<usize>>,
    pub pairs: Vec<(usize, usize, f64, CluCut)>,
}

impl ScratchStats {
    pub fn compute(state: &PartitionState, graph: &WeightedGraph) -> Self {
        let intra: BTreeMap<usize, f64> = state.clusters().iter().map(|(&r, c)| (r, r_intra(c, graph))).collect();
        let margins = margins_from_clusters(graph, state.clusters());
        let roots: Vec<usize> = state.roots().collect();
        let mut pairs = Vec::new();
        for (i, &a) in roots.iter().enumerate() {
            for &b in &roots[i + 1..] {
                let inter = r_inter(a, b, state, graph);
                if inter > 0.0 {
                    pairs.push((a, b, inter, CluCut::new(inter, intra[&a], intra[&b])));
                }
            }
        }
        Self { intra, margins, pairs }
    }

    pub fn best(&self) -> Option<CluCut> {
        self.pairs.iter().map(|p| p.3).max()
    }
}
