//! The full pipeline: graph, density, partition, merge, remainder.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::density::{propagate, DensityRank, PropagationMatrix};
use crate::error::DpsmError;
use crate::graph::{knn_graph, KnnParams, PointSet, WeightedGraph};
use crate::merge::{assign_remainder, run_merging, Labeling, MergeOptions, MergeOutcome, RemainderPolicy};
use crate::partition::{partition, PartitionState};

/// Pipeline settings. Defaults: k = 20,
/// sigma = 0.1 * d_max, 100 propagation steps, half-drop termination, 5%
/// pruning, nearest-cluster remainder assignment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpsmConfig {
    pub knn: KnnParams,
    pub iterations: usize,
    pub lazy: f64,
    pub merge: MergeOptions,
    pub remainder: RemainderPolicy,
}

impl Default for DpsmConfig {
    fn default() -> Self {
        Self {
            knn: KnnParams::default(),
            iterations: 100,
            lazy: 0.0,
            merge: MergeOptions::default(),
            remainder: RemainderPolicy::Nearest,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Input,
    Graph,
    Density,
    Partition,
    Merge,
    Remainder,
    Evaluate,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Input => "input",
            Stage::Graph => "graph",
            Stage::Density => "density",
            Stage::Partition => "partition",
            Stage::Merge => "merge",
            Stage::Remainder => "remainder",
            Stage::Evaluate => "evaluate",
        };
        f.write_str(name)
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{stage} stage: {source}")]
pub struct StageError {
    pub stage: Stage,
    #[source]
    pub source: DpsmError,
}

pub trait InStage<T> {
    fn in_stage(self, stage: Stage) -> Result<T, StageError>;
}

impl<T> InStage<T> for Result<T, DpsmError> {
    fn in_stage(self, stage: Stage) -> Result<T, StageError> {
        self.map_err(|source| StageError { stage, source })
    }
}

#[derive(Debug, Clone)]
pub struct ClusteringResult {
    pub rank: DensityRank,
    /// The partition before any merge.
    pub initial: PartitionState,
    pub merged: MergeOutcome,
    pub labeling: Labeling,
}

pub fn cluster_graph(graph: &WeightedGraph, config: &DpsmConfig) -> Result<ClusteringResult, StageError> {
    let matrix = PropagationMatrix::new(graph).in_stage(Stage::Density)?;
    let density = propagate(&matrix, config.iterations, config.lazy).in_stage(Stage::Density)?;
    let rank = DensityRank::from_density(density);
    let initial = partition(graph, &rank).in_stage(Stage::Partition)?;
    let merged = run_merging(graph, &rank, &initial, &config.merge).in_stage(Stage::Merge)?;
    let labeling = assign_remainder(&merged.state, &merged.pruned_nodes, graph, &rank, config.remainder);
    Ok(ClusteringResult { rank, initial, merged, labeling })
}

pub fn cluster_points(
    points: &PointSet,
    config: &DpsmConfig,
) -> Result<(WeightedGraph, ClusteringResult), StageError> {
    let graph = knn_graph(points, &config.knn).in_stage(Stage::Graph)?;
    let result = cluster_graph(&graph, config)?;
    Ok((graph, result))
}
