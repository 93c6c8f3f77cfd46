//! Clustering by density propagation and subcluster merging.
//!
//! The pipeline builds (or takes) a weighted graph, propagates unit mass
//! along normalised edges to rank nodes by density, splits the graph into
//! subclusters that descend monotonically from local density peaks, and
//! merges adjacent subclusters by their CluCut score.
//!
//! ```
//! use dpsm::{cluster_graph, DpsmConfig, MergeMode, WeightedGraph};
//!
//! let graph = WeightedGraph::from_edges(4, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)]).unwrap();
//! let mut config = DpsmConfig::default();
//! config.merge.mode = MergeMode::TargetClusters(1);
//! let result = cluster_graph(&graph, &config).unwrap();
//! assert_eq!(result.labeling.cluster_count(), 1);
//! ```

pub mod datasets;
pub mod density;
pub mod dsu;
pub mod error;
pub mod graph;
pub mod merge;
pub mod metrics;
pub mod partition;
pub mod pipeline;

pub use density::{density_order, propagate, DensityRank, PropagationMatrix};
pub use error::{DpsmError, Result};
pub use graph::{knn_graph, load_edges, load_points, KernelForm, KnnParams, PointSet, WeightedGraph};
pub use merge::{
    assign_remainder, run_merging, CluCut, Labeling, MergeMode, MergeOptions, MergeTrace, RemainderPolicy, NOISE,
};
pub use metrics::{adjusted_mutual_info, adjusted_rand_index, v_measure, MetricReport, NoiseHandling};
pub use partition::{partition, verify_properties, PartitionState, PropertyReport};
pub use pipeline::{cluster_graph, cluster_points, ClusteringResult, DpsmConfig, Stage, StageError};
