//! Run configuration: an optional TOML key-value file overlaid by flags.

use std::path::{Path, PathBuf};

use dpsm::{DpsmConfig, KernelForm, KnnParams, MergeMode, MergeOptions, RemainderPolicy};
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum InputKind {
    #[default]
    Points,
    Edges,
}

/// Every tunable of a clustering run. All fields are optional so that a
/// config file and the command line can each supply a subset.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub kind: Option<InputKind>,
    pub label_column: Option<usize>,
    pub node_count: Option<usize>,
    pub truth: Option<PathBuf>,
    pub k_neighbors: Option<usize>,
    pub sigma_scale: Option<f64>,
    pub kernel_form: Option<KernelForm>,
    pub iterations: Option<usize>,
    pub lazy: Option<f64>,
    pub target_k: Option<usize>,
    pub drop_ratio: Option<f64>,
    pub prune_fraction: Option<f64>,
    pub prune_in_target_mode: Option<bool>,
    pub absorb_margins: Option<bool>,
    pub remainder_policy: Option<RemainderPolicy>,
    pub noise_as_cluster: Option<bool>,
    pub labels_out: Option<PathBuf>,
    pub trace_out: Option<PathBuf>,
    pub density_out: Option<PathBuf>,
    pub partition_out: Option<PathBuf>,
    pub summary_out: Option<PathBuf>,
}

macro_rules! overlay {
    ($base:ident, $top:ident, $($field:ident),* $(,)?) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field.clone(); } )*
    };
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    /// Values set in `top` win.
    pub fn overlaid(mut self, top: &RunConfig) -> Self {
        overlay!(
            self,
            top,
            input,
            kind,
            label_column,
            node_count,
            truth,
            k_neighbors,
            sigma_scale,
            kernel_form,
            iterations,
            lazy,
            target_k,
            drop_ratio,
            prune_fraction,
            prune_in_target_mode,
            absorb_margins,
            remainder_policy,
            noise_as_cluster,
            labels_out,
            trace_out,
            density_out,
            partition_out,
            summary_out,
        );
        self
    }

    pub fn pipeline(&self) -> DpsmConfig {
        let defaults = DpsmConfig::default();
        let mode = match self.target_k {
            Some(k) => MergeMode::TargetClusters(k),
            None => MergeMode::Auto { drop_ratio: self.drop_ratio.unwrap_or(0.5) },
        };
        DpsmConfig {
            knn: KnnParams {
                k: self.k_neighbors.unwrap_or(defaults.knn.k),
                sigma_scale: self.sigma_scale.unwrap_or(defaults.knn.sigma_scale),
                kernel: self.kernel_form.unwrap_or(defaults.knn.kernel),
            },
            iterations: self.iterations.unwrap_or(defaults.iterations),
            lazy: self.lazy.unwrap_or(defaults.lazy),
            merge: MergeOptions {
                mode,
                prune_fraction: self.prune_fraction.unwrap_or(defaults.merge.prune_fraction),
                prune_in_target_mode: self.prune_in_target_mode.unwrap_or(false),
                absorb_margins: self.absorb_margins.unwrap_or(false),
            },
            remainder: self.remainder_policy.unwrap_or(defaults.remainder),
        }
    }
}
