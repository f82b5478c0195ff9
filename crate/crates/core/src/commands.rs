//! Command-line workflows: simulation, graph estimation, tuning, consensus
//! and end-to-end benchmarks, driven by a JSON [`RunConfig`] with flag overrides.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use ndarray::Array1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{make_splits, tune, Split, SplitScheme, TuneConfig, TuningReport};
use crate::graph::UndirectedGraph;
use crate::graph_est::{consensus, mb_estimate, MbConfig, SymmetrizationRule};
use crate::io::{
    read_dataset_csv, read_edge_list, read_graph_csv, read_json, write_dataset_csv, write_edge_counts_csv,
    write_graph_csv, write_json, write_rows_csv, ProblemFile,
};
use crate::models::ModelKind;
use crate::numerics::{cholesky, SeededRng};
use crate::synth::{make_problem, sample_with_factor, standardize, Dataset, ScenarioKind, ScenarioParams, ScenarioSpec};

/// Failure of a command, split by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CommandError {
    #[error("{0}")]
    Usage(Error),
    #[error("{0}")]
    Runtime(Error),
}

impl CommandError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::Usage(_) => 1,
            CommandError::Runtime(_) => 2,
        }
    }
}

type CmdResult<T> = std::result::Result<T, CommandError>;

fn usage<T>(r: Result<T>) -> CmdResult<T> {
    r.map_err(CommandError::Usage)
}

fn runtime<T>(r: Result<T>) -> CmdResult<T> {
    r.map_err(CommandError::Runtime)
}

/// Simulation block of the run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub scenario: ScenarioKind,
    pub p: usize,
    pub params: ScenarioParams,
    pub n_signal: usize,
    pub c_value: f64,
    pub noise_sd: f64,
    /// Rows per dataset.
    pub n: usize,
    pub parents: usize,
    pub reps: usize,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioKind::TwoClass,
            p: 100,
            params: ScenarioParams::default(),
            n_signal: 4,
            c_value: 4.0,
            noise_sd: 5.0,
            n: 480,
            parents: 10,
            reps: 10,
        }
    }
}

/// Split protocol; its seed is derived per dataset from the run seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SplitConfig {
    FixedCounts { n_train: usize, n_val: usize, n_test: usize },
    PermutationSegments { segments: usize },
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig::FixedCounts {
            n_train: 40,
            n_val: 40,
            n_test: 400,
        }
    }
}

impl SplitConfig {
    fn scheme(self, seed: u64) -> SplitScheme {
        match self {
            SplitConfig::FixedCounts { n_train, n_val, n_test } => SplitScheme::FixedCounts {
                n_train,
                n_val,
                n_test,
                seed,
            },
            SplitConfig::PermutationSegments { segments } => SplitScheme::PermutationSegments { segments, seed },
        }
    }
}

/// Which graph the models are fitted with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphSource {
    /// The generating graph (from the problem manifest).
    True,
    /// Neighborhood selection on the standardized training rows.
    Estimate,
}

impl std::str::FromStr for GraphSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "true" => Ok(GraphSource::True),
            "estimate" => Ok(GraphSource::Estimate),
            other => Err(Error::invalid(format!("unknown graph source '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConsensusConfig {
    pub threshold: usize,
    /// Expected number of input graphs; defaults to the number supplied.
    pub total: Option<usize>,
}

impl Default for ConsensusConfig {
    fn default() -> Self {
        Self {
            threshold: 70,
            total: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub out: PathBuf,
    /// Worker threads; all hardware threads when absent.
    pub threads: Option<usize>,
    pub simulation: SimulationConfig,
    pub models: Vec<ModelKind>,
    pub tune: TuneConfig,
    pub split: SplitConfig,
    pub graph: GraphSource,
    pub mb: MbConfig,
    pub consensus: ConsensusConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: None,
            out: PathBuf::from("out"),
            threads: None,
            simulation: SimulationConfig::default(),
            models: ModelKind::ALL.to_vec(),
            tune: TuneConfig::default(),
            split: SplitConfig::default(),
            graph: GraphSource::Estimate,
            mb: MbConfig::default(),
            consensus: ConsensusConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }

    fn require_seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::invalid("a seed is required (--seed or \"seed\" in the config)"))
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(t) = self.threads {
            if t == 0 {
                return Err(Error::invalid("threads must be at least 1"));
            }
            b = b.num_threads(t);
        }
        b.build().map_err(|e| Error::invalid(format!("thread pool: {e}")))
    }
}

/// Seed of an independent sub-stream of `base`.
pub fn derive_seed(base: u64, tag: u64, a: u64, b: u64) -> u64 {
    SeededRng::split(base, (tag << 48) ^ (a << 24) ^ b).next_u64()
}

const TAG_PARENT: u64 = 1;
const TAG_DATA: u64 = 2;
const TAG_SPLIT: u64 = 3;

fn parent_spec(sim: &SimulationConfig, seed: u64, g: usize) -> ScenarioSpec {
    ScenarioSpec {
        kind: sim.scenario,
        p: sim.p,
        params: sim.params.clone(),
        seed: derive_seed(seed, TAG_PARENT, g as u64, 0),
    }
}

/// One simulated dataset with its ground truth.
#[derive(Debug, Clone)]
pub struct SimulatedDataset {
    pub parent: usize,
    pub rep: usize,
    pub problem: ProblemFile,
    pub data: Dataset,
}

/// Generates every (parent, replicate) dataset of a simulation block.
pub fn simulate(sim: &SimulationConfig, seed: u64) -> Result<Vec<SimulatedDataset>> {
    let mut out = Vec::with_capacity(sim.parents * sim.reps);
    for g in 0..sim.parents {
        let spec = parent_spec(sim, seed, g);
        spec.validate()?;
        let problem = make_problem(&spec, sim.n_signal, sim.c_value)?;
        let l = cholesky(&problem.sigma)?;
        let file = ProblemFile::from_problem(&problem);
        for r in 0..sim.reps {
            let data_seed = derive_seed(seed, TAG_DATA, g as u64, r as u64);
            let data = sample_with_factor(&l, problem.beta_true.view(), sim.n, sim.noise_sd, data_seed)?;
            out.push(SimulatedDataset {
                parent: g,
                rep: r,
                problem: file.clone(),
                data,
            });
        }
    }
    Ok(out)
}

fn dataset_dir(root: &Path, sim: &SimulationConfig, g: usize, r: usize) -> PathBuf {
    root.join(sim.scenario.name()).join(format!("parent{g}")).join(format!("rep{r}"))
}

/// Writes `problem.json`, `data.csv` and `graph.csv` under
/// `<out>/<scenario>/parent<g>/rep<r>/`. Returns the dataset directories.
pub fn cmd_simulate(config: &RunConfig) -> CmdResult<Vec<PathBuf>> {
    let seed = usage(config.require_seed())?;
    let sim = &config.simulation;
    if sim.parents == 0 || sim.reps == 0 || sim.n == 0 {
        return Err(CommandError::Usage(Error::invalid("parents, reps and n must be positive")));
    }
    usage(parent_spec(sim, seed, 0).validate())?;
    let scenario_root = config.out.join(sim.scenario.name());
    let existed = scenario_root.exists();
    let result = (|| -> Result<Vec<PathBuf>> {
        let sets = simulate(sim, seed)?;
        let mut dirs = Vec::with_capacity(sets.len());
        for s in &sets {
            let dir = dataset_dir(&config.out, sim, s.parent, s.rep);
            write_json(&dir.join("problem.json"), &s.problem)?;
            write_dataset_csv(&dir.join("data.csv"), &s.data)?;
            write_graph_csv(&dir.join("graph.csv"), &s.problem.graph()?)?;
            dirs.push(dir);
        }
        Ok(dirs)
    })();
    if result.is_err() && !existed {
        let _ = fs::remove_dir_all(&scenario_root);
    }
    runtime(result)
}

/// Standardizes all rows of `data` and runs neighborhood selection.
pub fn estimate_graph(data: &Dataset, rows: &[usize], mb: &MbConfig) -> Result<UndirectedGraph> {
    let std = standardize(data, rows)?;
    let (x, _) = std.rows(rows);
    mb_estimate(&x, mb)
}

/// Reads `data`, estimates its graph and writes `<out>/graph.csv`.
pub fn cmd_estimate_graph(config: &RunConfig, data: &Path) -> CmdResult<PathBuf> {
    let dataset = usage(read_dataset_csv(data))?;
    let rows: Vec<usize> = (0..dataset.n()).collect();
    let graph = runtime(estimate_graph(&dataset, &rows, &config.mb))?;
    let path = config.out.join("graph.csv");
    runtime(write_graph_csv(&path, &graph))?;
    log::info!("{} edges written to {}", graph.n_edges(), path.display());
    Ok(path)
}

/// Reads graph CSVs, writes `<out>/edge_counts.csv` and `<out>/consensus.csv`.
pub fn cmd_consensus(config: &RunConfig, graphs: &[PathBuf], p: Option<usize>) -> CmdResult<UndirectedGraph> {
    if graphs.is_empty() {
        return Err(CommandError::Usage(Error::invalid("no graph files given")));
    }
    if let Some(total) = config.consensus.total {
        if total != graphs.len() {
            return Err(CommandError::Usage(Error::invalid(format!(
                "expected {total} graphs, got {}",
                graphs.len()
            ))));
        }
    }
    let lists = runtime(graphs.iter().map(|g| read_edge_list(g)).collect::<Result<Vec<_>>>())?;
    let p = p.unwrap_or_else(|| {
        lists
            .iter()
            .flatten()
            .map(|&(i, j)| i.max(j) + 1)
            .max()
            .unwrap_or(0)
    });
    let parsed = runtime(
        lists
            .into_iter()
            .zip(graphs)
            .map(|(edges, path)| {
                UndirectedGraph::from_edges(p, edges).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))
            })
            .collect::<Result<Vec<_>>>(),
    )?;
    let (counts, graph) = usage(consensus(&parsed, config.consensus.threshold))?;
    runtime(write_edge_counts_csv(&config.out.join("edge_counts.csv"), &counts))?;
    runtime(write_graph_csv(&config.out.join("consensus.csv"), &graph))?;
    Ok(graph)
}

/// One tuned model on one split of one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetailRow {
    pub scenario: String,
    pub dataset: String,
    pub split: usize,
    pub model: ModelKind,
    pub p: usize,
    pub edges: usize,
    pub l2_distance: Option<f64>,
    pub test_mse: f64,
    pub test_mse_original: f64,
    pub seconds: f64,
    pub nonzero: usize,
    pub best_index: usize,
    pub best_params: String,
}

/// Per-model means over all runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub scenario: String,
    pub model: ModelKind,
    pub p: usize,
    pub edges: f64,
    pub mean_l2: Option<f64>,
    pub mean_mse: f64,
    pub mean_mse_original: f64,
    pub mean_rmse_original: f64,
    pub mean_seconds: f64,
    pub runs: usize,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (s, c) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    s / c as f64
}

pub fn summarize(rows: &[DetailRow], models: &[ModelKind]) -> Vec<SummaryRow> {
    models
        .iter()
        .filter_map(|&m| {
            let sel: Vec<&DetailRow> = rows.iter().filter(|r| r.model == m).collect();
            let first = sel.first()?;
            let l2s: Option<Vec<f64>> = sel.iter().map(|r| r.l2_distance).collect();
            Some(SummaryRow {
                scenario: first.scenario.clone(),
                model: m,
                p: first.p,
                edges: mean(sel.iter().map(|r| r.edges as f64)),
                mean_l2: l2s.map(|v| mean(v.into_iter())),
                mean_mse: mean(sel.iter().map(|r| r.test_mse)),
                mean_mse_original: mean(sel.iter().map(|r| r.test_mse_original)),
                mean_rmse_original: mean(sel.iter().map(|r| r.test_mse_original.sqrt())),
                mean_seconds: mean(sel.iter().map(|r| r.seconds)),
                runs: sel.len(),
            })
        })
        .collect()
}

/// A dataset ready for tuning.
#[derive(Debug, Clone)]
pub struct TuneInput {
    pub id: String,
    pub scenario: String,
    pub data: Dataset,
    /// Fixed graph; when absent the graph follows [`RunConfig::graph`].
    pub graph: Option<UndirectedGraph>,
    pub truth: Option<ProblemFile>,
    /// Index used to derive the split seed.
    pub index: usize,
}

/// All reports for one dataset.
#[derive(Debug, Clone)]
pub struct DatasetOutcome {
    pub id: String,
    pub reports: Vec<(usize, TuningReport)>,
    pub rows: Vec<DetailRow>,
}

fn graph_for_split(input: &TuneInput, split: &Split, config: &RunConfig) -> Result<UndirectedGraph> {
    if let Some(g) = &input.graph {
        return Ok(g.clone());
    }
    match config.graph {
        GraphSource::True => input
            .truth
            .as_ref()
            .ok_or_else(|| Error::invalid(format!("{}: no true graph available", input.id)))?
            .graph(),
        GraphSource::Estimate => estimate_graph(&input.data, &split.train, &config.mb),
    }
}

/// Tunes every configured model on every split of one dataset. Models run
/// one after another so their wall times are comparable.
pub fn tune_dataset(input: &TuneInput, config: &RunConfig, seed: u64) -> Result<DatasetOutcome> {
    let scheme = config
        .split
        .scheme(derive_seed(seed, TAG_SPLIT, input.index as u64, 0));
    let splits = make_splits(input.data.n(), &scheme)?;
    let beta_true: Option<Array1<f64>> = input.truth.as_ref().map(ProblemFile::beta_true);
    let mut reports = Vec::new();
    let mut rows = Vec::new();
    for (k, split) in splits.iter().enumerate() {
        let graph = graph_for_split(input, split, config)?;
        for &model in &config.models {
            let rep = tune(
                &input.data,
                &graph,
                model,
                &config.tune,
                split,
                beta_true.as_ref().map(|b| b.view()),
            )?;
            rows.push(DetailRow {
                scenario: input.scenario.clone(),
                dataset: input.id.clone(),
                split: k,
                model,
                p: input.data.p(),
                edges: graph.n_edges(),
                l2_distance: rep.l2_distance,
                test_mse: rep.test_mse,
                test_mse_original: rep.test_mse_original,
                seconds: rep.wall_time,
                nonzero: rep.nonzero,
                best_index: rep.best_index,
                best_params: serde_json::to_string(&rep.best_params)?,
            });
            reports.push((k, rep));
        }
    }
    Ok(DatasetOutcome {
        id: input.id.clone(),
        reports,
        rows,
    })
}

/// Tunes all inputs in parallel; failed datasets are logged and skipped.
/// Errors only when every dataset fails.
pub fn tune_all(inputs: &[TuneInput], config: &RunConfig, seed: u64) -> Result<Vec<DatasetOutcome>> {
    let pool = config.pool()?;
    let results: Vec<Result<DatasetOutcome>> =
        pool.install(|| inputs.par_iter().map(|i| tune_dataset(i, config, seed)).collect());
    let mut ok = Vec::new();
    let mut last_err = None;
    for (input, r) in inputs.iter().zip(results) {
        match r {
            Ok(o) => ok.push(o),
            Err(e) => {
                log::error!("{}: {e}", input.id);
                last_err = Some(e);
            }
        }
    }
    match (ok.is_empty(), last_err) {
        (true, Some(e)) => Err(e),
        _ => Ok(ok),
    }
}

fn write_outcomes(out: &Path, outcomes: &[DatasetOutcome], models: &[ModelKind], runs: bool) -> Result<Vec<SummaryRow>> {
    let rows: Vec<DetailRow> = outcomes.iter().flat_map(|o| o.rows.iter().cloned()).collect();
    if runs {
        for o in outcomes {
            for (k, rep) in &o.reports {
                let name = format!("{}_split{k}.json", rep.model);
                write_json(&out.join("runs").join(&o.id).join(name), rep)?;
            }
        }
    }
    let summary = summarize(&rows, models);
    write_rows_csv(&out.join("detail.csv"), &rows)?;
    write_rows_csv(&out.join("summary.csv"), &summary)?;
    Ok(summary)
}

fn find_data_files(path: &Path, acc: &mut Vec<PathBuf>) -> Result<()> {
    if path.is_file() {
        acc.push(path.to_path_buf());
        return Ok(());
    }
    let mut entries: Vec<PathBuf> = fs::read_dir(path)
        .map_err(|e| Error::io(path, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    entries.sort();
    for e in entries {
        if e.is_dir() {
            find_data_files(&e, acc)?;
        } else if e.file_name().is_some_and(|n| n == "data.csv") {
            acc.push(e);
        }
    }
    Ok(())
}

fn dataset_id(path: &Path) -> String {
    let parts: Vec<String> = path
        .parent()
        .into_iter()
        .flat_map(|p| p.components().rev().take(3).collect::<Vec<_>>())
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect();
    let mut parts: Vec<String> = parts.into_iter().rev().filter(|s| s != "/" && s != ".").collect();
    if parts.is_empty() {
        parts.push(path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default());
    }
    parts.join("_")
}

/// Tunes the configured models on CSV datasets (files, or directories searched
/// for `data.csv`). A sibling `problem.json` supplies the truth and, with the
/// `true` graph source, the graph. Writes per-run JSON reports, `detail.csv`
/// and `summary.csv` under the output directory.
pub fn cmd_tune(config: &RunConfig, data: &[PathBuf], graph: Option<&Path>) -> CmdResult<Vec<SummaryRow>> {
    let seed = usage(config.require_seed())?;
    if config.models.is_empty() {
        return Err(CommandError::Usage(Error::invalid("no models selected")));
    }
    let mut files = Vec::new();
    for d in data {
        usage(find_data_files(d, &mut files))?;
    }
    if files.is_empty() {
        return Err(CommandError::Usage(Error::invalid("no datasets found")));
    }
    let mut inputs = Vec::with_capacity(files.len());
    for (index, f) in files.iter().enumerate() {
        let data = usage(read_dataset_csv(f))?;
        let problem_path = f.with_file_name("problem.json");
        let truth: Option<ProblemFile> = if problem_path.exists() {
            Some(usage(read_json(&problem_path))?)
        } else {
            None
        };
        let fixed = match graph {
            Some(g) => Some(usage(read_graph_csv(g, data.p()))?),
            None => None,
        };
        let scenario = truth
            .as_ref()
            .map(|t| t.spec.kind.name().to_string())
            .unwrap_or_else(|| "data".into());
        inputs.push(TuneInput {
            id: dataset_id(f),
            scenario,
            data,
            graph: fixed,
            truth,
            index,
        });
    }
    let outcomes = runtime(tune_all(&inputs, config, seed))?;
    if outcomes.len() < inputs.len() {
        log::warn!("{} of {} datasets failed", inputs.len() - outcomes.len(), inputs.len());
    }
    runtime(write_outcomes(&config.out, &outcomes, &config.models, true))
}

/// Simulates, tunes every model on every dataset and writes `summary.csv`
/// (one row per model) and `detail.csv` (one row per run).
pub fn run_benchmark(config: &RunConfig) -> Result<(Vec<SummaryRow>, Vec<DetailRow>)> {
    let seed = config.require_seed()?;
    if config.models.is_empty() {
        return Err(Error::invalid("no models selected"));
    }
    let sets = simulate(&config.simulation, seed)?;
    let inputs: Vec<TuneInput> = sets
        .into_iter()
        .enumerate()
        .map(|(index, s)| TuneInput {
            id: format!("parent{}_rep{}", s.parent, s.rep),
            scenario: config.simulation.scenario.name().to_string(),
            data: s.data,
            graph: None,
            truth: Some(s.problem),
            index,
        })
        .collect();
    let outcomes = tune_all(&inputs, config, seed)?;
    let rows: Vec<DetailRow> = outcomes.iter().flat_map(|o| o.rows.iter().cloned()).collect();
    Ok((summarize(&rows, &config.models), rows))
}

pub fn cmd_benchmark(config: &RunConfig) -> CmdResult<Vec<SummaryRow>> {
    usage(config.require_seed())?;
    usage(parent_spec(&config.simulation, 0, 0).validate())?;
    let (summary, rows) = runtime(run_benchmark(config))?;
    runtime(write_rows_csv(&config.out.join("detail.csv"), &rows))?;
    runtime(write_rows_csv(&config.out.join("summary.csv"), &summary))?;
    Ok(summary)
}

#[derive(Debug, Parser)]
#[command(name = "sglig", version, about = "Graph-structured sparse regression benchmarks")]
pub struct Cli {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default)]
pub struct ScenarioFlags {
    #[arg(long)]
    pub scenario: Option<ScenarioKind>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub parents: Option<usize>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub noise_sd: Option<f64>,
}

#[derive(Debug, Args, Default)]
pub struct TuneFlags {
    /// Comma-separated model list.
    #[arg(long, value_delimiter = ',')]
    pub models: Option<Vec<ModelKind>>,
    /// Graph used for fitting: `true` or `estimate`.
    #[arg(long)]
    pub graph_source: Option<GraphSource>,
    /// Fixed split sizes `train,val,test`.
    #[arg(long, value_delimiter = ',')]
    pub split: Option<Vec<usize>>,
    /// Use the segment-permutation protocol with this many segments.
    #[arg(long)]
    pub segments: Option<usize>,
    #[arg(long)]
    pub n_lambda: Option<usize>,
    #[arg(long)]
    pub n_xi: Option<usize>,
    #[arg(long)]
    pub n_alpha: Option<usize>,
    #[arg(long)]
    pub mb_lambda: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate simulated datasets.
    Simulate(ScenarioFlags),
    /// Estimate a graph from a dataset CSV by neighborhood selection.
    EstimateGraph {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        mb_lambda: Option<f64>,
        #[arg(long)]
        rule: Option<SymmetrizationRule>,
    },
    /// Tune models on dataset CSVs.
    Tune {
        /// Dataset files or directories containing `data.csv` files.
        #[arg(long, required = true, num_args = 1..)]
        data: Vec<PathBuf>,
        /// Fixed graph CSV for every dataset.
        #[arg(long)]
        graph: Option<PathBuf>,
        #[command(flatten)]
        tune: TuneFlags,
    },
    /// Combine graph CSVs into a consensus graph.
    Consensus {
        #[arg(long, required = true, num_args = 1..)]
        graphs: Vec<PathBuf>,
        #[arg(long)]
        threshold: Option<usize>,
        #[arg(long)]
        total: Option<usize>,
        /// Node count; inferred from the largest index when absent.
        #[arg(long)]
        p: Option<usize>,
    },
    /// Simulate, estimate graphs and tune all models end to end.
    Benchmark {
        #[command(flatten)]
        scenario: ScenarioFlags,
        #[command(flatten)]
        tune: TuneFlags,
    },
}

fn apply_scenario(cfg: &mut RunConfig, f: &ScenarioFlags) {
    let sim = &mut cfg.simulation;
    if let Some(v) = f.scenario {
        sim.scenario = v;
    }
    if let Some(v) = f.p {
        sim.p = v;
    }
    if let Some(v) = f.n {
        sim.n = v;
    }
    if let Some(v) = f.parents {
        sim.parents = v;
    }
    if let Some(v) = f.reps {
        sim.reps = v;
    }
    if let Some(v) = f.noise_sd {
        sim.noise_sd = v;
    }
}

fn apply_tune(cfg: &mut RunConfig, f: &TuneFlags) -> Result<()> {
    if let Some(m) = &f.models {
        cfg.models = m.clone();
    }
    if let Some(g) = f.graph_source {
        cfg.graph = g;
    }
    if let Some(s) = &f.split {
        if s.len() != 3 {
            return Err(Error::invalid("--split takes three counts: train,val,test"));
        }
        cfg.split = SplitConfig::FixedCounts {
            n_train: s[0],
            n_val: s[1],
            n_test: s[2],
        };
    }
    if let Some(segments) = f.segments {
        cfg.split = SplitConfig::PermutationSegments { segments };
    }
    if let Some(v) = f.n_lambda {
        cfg.tune.grid.n_lambda = v;
    }
    if let Some(v) = f.n_xi {
        cfg.tune.grid.n_xi = v;
    }
    if let Some(v) = f.n_alpha {
        cfg.tune.grid.n_alpha = v;
    }
    if let Some(v) = f.mb_lambda {
        cfg.mb.lambda = v;
    }
    Ok(())
}

/// Resolves the configuration: file first, then global flags.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    if cli.threads.is_some() {
        cfg.threads = cli.threads;
    }
    Ok(cfg)
}

/// Runs one parsed command line.
pub fn run(cli: Cli) -> CmdResult<()> {
    let mut cfg = usage(resolve_config(&cli))?;
    match &cli.command {
        Command::Simulate(f) => {
            apply_scenario(&mut cfg, f);
            let dirs = cmd_simulate(&cfg)?;
            log::info!("wrote {} datasets under {}", dirs.len(), cfg.out.display());
        }
        Command::EstimateGraph { data, mb_lambda, rule } => {
            if let Some(l) = mb_lambda {
                cfg.mb.lambda = *l;
            }
            if let Some(r) = rule {
                cfg.mb.rule = *r;
            }
            cmd_estimate_graph(&cfg, data)?;
        }
        Command::Tune { data, graph, tune } => {
            usage(apply_tune(&mut cfg, tune))?;
            cmd_tune(&cfg, data, graph.as_deref())?;
        }
        Command::Consensus {
            graphs,
            threshold,
            total,
            p,
        } => {
            if let Some(t) = threshold {
                cfg.consensus.threshold = *t;
            }
            if total.is_some() {
                cfg.consensus.total = *total;
            }
            cmd_consensus(&cfg, graphs, *p)?;
        }
        Command::Benchmark { scenario, tune } => {
            apply_scenario(&mut cfg, scenario);
            usage(apply_tune(&mut cfg, tune))?;
            cmd_benchmark(&cfg)?;
        }
    }
    Ok(())
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
