//! `dpsm`: generate synthetic data, cluster point or edge files, score labels.

mod config;

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use config::{InputKind, RunConfig};
use dpsm::datasets::{self, Shape};
use dpsm::pipeline::InStage;
use dpsm::{
    cluster_graph, knn_graph, load_edges, load_points, DpsmError, KernelForm, MetricReport, NoiseHandling,
    RemainderPolicy, Stage, StageError,
};

#[derive(Parser)]
#[command(name = "dpsm", version, about = "Density propagation with subcluster merging")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a labelled synthetic point file (x,y,label).
    Generate {
        #[arg(long, value_parser = parse_with::<Shape>)]
        shape: Shape,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.05)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the full pipeline on a point or edge file.
    Cluster(Box<ClusterArgs>),
    /// Score a label file against ground truth.
    Eval {
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        /// Read truth from this column of a point file instead of a label file.
        #[arg(long)]
        truth_column: Option<usize>,
        #[arg(long)]
        noise_as_cluster: bool,
        /// Also write the report as JSON.
        #[arg(long)]
        json_out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ClusterArgs {
    /// TOML file with run settings; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, value_enum)]
    kind: Option<InputKind>,
    /// Column of the point file holding ground-truth labels.
    #[arg(long)]
    label_column: Option<usize>,
    /// Node count for edge files (defaults to the largest id + 1).
    #[arg(long)]
    node_count: Option<usize>,
    /// Ground-truth label file (`node_id,label` lines).
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long)]
    k_neighbors: Option<usize>,
    #[arg(long)]
    sigma_scale: Option<f64>,
    #[arg(long, value_parser = parse_with::<KernelForm>)]
    kernel_form: Option<KernelForm>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    lazy: Option<f64>,
    /// Merge down to this many clusters instead of stopping automatically.
    #[arg(long)]
    target_k: Option<usize>,
    #[arg(long)]
    drop_ratio: Option<f64>,
    #[arg(long)]
    prune_fraction: Option<f64>,
    #[arg(long)]
    prune_in_target_mode: bool,
    /// Experimental margin re-absorption after each merge.
    #[arg(long)]
    absorb_margins: bool,
    #[arg(long, value_parser = parse_with::<RemainderPolicy>)]
    remainder_policy: Option<RemainderPolicy>,
    #[arg(long)]
    noise_as_cluster: bool,
    #[arg(long)]
    labels_out: Option<PathBuf>,
    #[arg(long)]
    trace_out: Option<PathBuf>,
    #[arg(long)]
    density_out: Option<PathBuf>,
    #[arg(long)]
    partition_out: Option<PathBuf>,
    #[arg(long)]
    summary_out: Option<PathBuf>,
}

impl ClusterArgs {
    fn flags(&self) -> RunConfig {
        let on = |b: bool| b.then_some(true);
        RunConfig {
            input: self.input.clone(),
            kind: self.kind,
            label_column: self.label_column,
            node_count: self.node_count,
            truth: self.truth.clone(),
            k_neighbors: self.k_neighbors,
            sigma_scale: self.sigma_scale,
            kernel_form: self.kernel_form,
            iterations: self.iterations,
            lazy: self.lazy,
            target_k: self.target_k,
            drop_ratio: self.drop_ratio,
            prune_fraction: self.prune_fraction,
            prune_in_target_mode: on(self.prune_in_target_mode),
            absorb_margins: on(self.absorb_margins),
            remainder_policy: self.remainder_policy,
            noise_as_cluster: on(self.noise_as_cluster),
            labels_out: self.labels_out.clone(),
            trace_out: self.trace_out.clone(),
            density_out: self.density_out.clone(),
            partition_out: self.partition_out.clone(),
            summary_out: self.summary_out.clone(),
        }
    }
}

fn parse_with<T: std::str::FromStr<Err = DpsmError>>(s: &str) -> Result<T, String> {
    s.parse().map_err(|e: DpsmError| e.to_string())
}

#[derive(Debug)]
enum Failure {
    Stage(StageError),
    Usage(String),
}

impl From<StageError> for Failure {
    fn from(e: StageError) -> Self {
        Failure::Stage(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Stage(e) => match e.source {
                DpsmError::UndefinedMetric => 3,
                DpsmError::MergeContract(_) => 1,
                _ => 2,
            },
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Stage(e) => write!(f, "{e}"),
            Failure::Usage(m) => write!(f, "input stage: {m}"),
        }
    }
}

fn open(path: &Path) -> Result<BufReader<File>, StageError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| DpsmError::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
        .in_stage(Stage::Input)
}

fn write_file(path: &Path, stage: Stage, body: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<(), StageError> {
    let run = || -> io::Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        body(&mut out)?;
        out.flush()
    };
    run().map_err(|e| DpsmError::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display())))).in_stage(stage)
}

/// Reads `node_id,label` lines into a dense vector indexed by node id.
fn read_labels<R: BufRead>(source: R) -> Result<Vec<i64>, DpsmError> {
    let mut pairs = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let bad = |message: String| DpsmError::Parse { line: idx + 1, message };
        let fields: Vec<&str> = t.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
        let [id, label] = fields[..] else {
            return Err(bad(format!("expected `node_id,label`, got `{t}`")));
        };
        let id: usize = id.parse().map_err(|_| bad(format!("bad node id `{id}`")))?;
        let label: i64 = label.parse().map_err(|_| bad(format!("bad label `{label}`")))?;
        pairs.push((id, label));
    }
    if pairs.is_empty() {
        return Err(DpsmError::EmptyInput);
    }
    let mut labels = vec![None; pairs.len()];
    for (id, label) in pairs {
        match labels.get_mut(id) {
            Some(slot @ None) => *slot = Some(label),
            _ => return Err(DpsmError::InvalidParameter(format!("node ids must be 0..n without repeats, saw {id}"))),
        }
    }
    Ok(labels.into_iter().map(|l| l.expect("every slot filled")).collect())
}

fn cmd_generate(shape: Shape, n: usize, noise: f64, seed: u64, out: &Path) -> Result<(), Failure> {
    let points = datasets::generate(shape, n, noise, seed).in_stage(Stage::Input)?;
    write_file(out, Stage::Input, |w| datasets::write_points(&points, w))?;
    Ok(())
}

#[derive(Serialize)]
struct Summary {
    nodes: usize,
    edges: usize,
    initial_clusters: usize,
    merges: usize,
    halt: String,
    pruned_clusters: usize,
    clusters_found: usize,
    noise_count: usize,
    metrics: Option<MetricReport>,
}

fn cmd_cluster(args: &ClusterArgs) -> Result<(), Failure> {
    let mut run = match &args.config {
        Some(path) => RunConfig::from_file(path).map_err(Failure::Usage)?,
        None => RunConfig::default(),
    };
    run = run.overlaid(&args.flags());
    let input = run.input.clone().ok_or_else(|| Failure::Usage("no input file given".into()))?;
    let config = run.pipeline();

    let (graph, mut truth) = match run.kind.unwrap_or_default() {
        InputKind::Points => {
            let points = load_points(open(&input)?, run.label_column).in_stage(Stage::Input)?;
            let graph = knn_graph(&points, &config.knn).in_stage(Stage::Graph)?;
            (graph, points.labels().map(<[i64]>::to_vec))
        }
        InputKind::Edges => (load_edges(open(&input)?, run.node_count).in_stage(Stage::Input)?, None),
    };
    if let Some(path) = &run.truth {
        truth = Some(read_labels(open(path)?).in_stage(Stage::Input)?);
    }

    let result = cluster_graph(&graph, &config)?;

    if let Some(path) = &run.labels_out {
        write_file(path, Stage::Remainder, |w| result.labeling.write_csv(w))?;
    }
    if let Some(path) = &run.trace_out {
        write_file(path, Stage::Merge, |w| result.merged.trace.write_csv(w))?;
    }
    if let Some(path) = &run.density_out {
        write_file(path, Stage::Density, |w| result.rank.write_dump(w))?;
    }
    if let Some(path) = &run.partition_out {
        write_file(path, Stage::Partition, |w| result.initial.write_dump(w))?;
    }

    let noise = if run.noise_as_cluster.unwrap_or(false) { NoiseHandling::AsCluster } else { NoiseHandling::Exclude };
    let metrics = truth
        .map(|t| MetricReport::evaluate(&t, &result.labeling.labels, noise))
        .transpose()
        .in_stage(Stage::Evaluate)?;
    let trace = &result.merged.trace;
    let summary = Summary {
        nodes: graph.node_count(),
        edges: graph.edge_count(),
        initial_clusters: trace.initial_clusters,
        merges: trace.records.len(),
        halt: trace.halt.to_string(),
        pruned_clusters: trace.pruned.len(),
        clusters_found: result.labeling.cluster_count(),
        noise_count: result.labeling.noise_count(),
        metrics,
    };
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    println!("{json}");
    if let Some(path) = &run.summary_out {
        write_file(path, Stage::Evaluate, |w| writeln!(w, "{json}"))?;
    }
    Ok(())
}

fn cmd_eval(
    labels: &Path,
    truth: &Path,
    truth_column: Option<usize>,
    noise_as_cluster: bool,
    json_out: Option<&Path>,
) -> Result<(), Failure> {
    let pred = read_labels(open(labels)?).in_stage(Stage::Input)?;
    let truth = match truth_column {
        Some(col) => {
            let points = load_points(open(truth)?, Some(col)).in_stage(Stage::Input)?;
            points.labels().map(<[i64]>::to_vec).unwrap_or_default()
        }
        None => read_labels(open(truth)?).in_stage(Stage::Input)?,
    };
    let noise = if noise_as_cluster { NoiseHandling::AsCluster } else { NoiseHandling::Exclude };
    if pred.len() != truth.len() {
        return Err(DpsmError::LengthMismatch { left: truth.len(), right: pred.len() }).in_stage(Stage::Input)?;
    }
    let report = MetricReport::evaluate(&truth, &pred, noise).in_stage(Stage::Evaluate)?;
    println!("{report}");
    if let Some(path) = json_out {
        let json = serde_json::to_string_pretty(&report).expect("report serializes");
        write_file(path, Stage::Evaluate, |w| writeln!(w, "{json}"))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Generate { shape, n, noise, seed, out } => cmd_generate(*shape, *n, *noise, *seed, out),
        Command::Cluster(args) => cmd_cluster(args),
        Command::Eval { labels, truth, truth_column, noise_as_cluster, json_out } => {
            cmd_eval(labels, truth, *truth_column, *noise_as_cluster, json_out.as_deref())
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_file_roundtrip() {
        let labels = read_labels("# c\n1,0\n0,-1\n2 3\n".as_bytes()).unwrap();
        assert_eq!(labels, vec![-1, 0, 3]);
    }

    #[test]
    fn label_file_errors() {
        assert!(matches!(read_labels("".as_bytes()), Err(DpsmError::EmptyInput)));
        assert!(matches!(read_labels("0,1\n0,2\n".as_bytes()), Err(DpsmError::InvalidParameter(_))));
        assert!(matches!(read_labels("0,1\nx,2\n".as_bytes()), Err(DpsmError::Parse { line: 2, .. })));
    }
}
