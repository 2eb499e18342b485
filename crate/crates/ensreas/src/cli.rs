//! Command-line entry point: dataset validation, strategy execution with
//! persisted run records, metric reports, and transition analysis.
//!
//! Config precedence is flags > env vars > TOML config file > defaults.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::backends::{
    Backend, CachedBackend, DiskCache, HttpBackend, HttpConfig, Script, ScriptEntry,
    ScriptedDistribution, SimBackend,
};
use crate::consensus::{run_strategy, ReportResult, RunOptions, StrategyOutcome, VoteResult};
use crate::domain::{
    parse_dataset, validate_dataset, Label, Prediction, Report, SampleSet, Strategy, TaskName,
    TaskSpec,
};
use crate::metrics::{
    consistency, macro_metrics, paired_t_test, transition_matrix, LogBase, ReportType,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_GENERIC: i32 = 1;
pub const EXIT_DATASET_INVALID: i32 = 2;
pub const EXIT_BACKEND_UNREACHABLE: i32 = 3;
pub const EXIT_MISSING_DEPENDENCY: i32 = 4;
pub const EXIT_PARTIAL_FAILURE: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "ensreas", about = "Stage classification from pathology reports via LLM prompting strategies")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TaskArg {
    T,
    N,
}

impl From<TaskArg> for TaskName {
    fn from(value: TaskArg) -> Self {
        match value {
            TaskArg::T => TaskName::T,
            TaskArg::N => TaskName::N,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Zs,
    ZsCot,
    ZsCotSc,
    Ensreas,
}

impl From<StrategyArg> for Strategy {
    fn from(value: StrategyArg) -> Self {
        match value {
            StrategyArg::Zs => Strategy::Zs,
            StrategyArg::ZsCot => Strategy::ZsCot,
            StrategyArg::ZsCotSc => Strategy::ZsCotSc,
            StrategyArg::Ensreas => Strategy::EnsReas,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Http,
    Sim,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EntropyBaseArg {
    Natural,
    Base2,
}

impl From<EntropyBaseArg> for LogBase {
    fn from(value: EntropyBaseArg) -> Self {
        match value {
            EntropyBaseArg::Natural => LogBase::Natural,
            EntropyBaseArg::Base2 => LogBase::Base2,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a JSONL dataset for duplicate ids, empty texts, and
    /// out-of-vocabulary ground truths.
    Validate {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, value_enum)]
        task: TaskArg,
    },
    /// Execute one prompting strategy over a dataset and persist run records.
    Run(Box<RunArgs>),
    /// Compare completed runs: macro metrics per strategy plus a consistency
    /// block with a paired t-test when exactly two sampled runs are given.
    Report {
        /// Completed run directories to compare.
        #[arg(required = true)]
        run_dirs: Vec<PathBuf>,
        /// Directory for report.json / report.csv; printed only when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "natural")]
        entropy_base: EntropyBaseArg,
    },
    /// Type-transition matrix over inconsistent reports between a zs-cot-sc
    /// run and an ensreas run.
    Transitions {
        zscotsc_dir: PathBuf,
        ensreas_dir: PathBuf,
        /// Directory for the CSVs; defaults to the ensreas run directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long, value_enum)]
    pub task: TaskArg,
    #[arg(long, value_enum)]
    pub strategy: StrategyArg,
    #[arg(long)]
    pub dataset: PathBuf,
    /// Completed zs-cot-sc run directory; required for ensreas.
    #[arg(long)]
    pub depends_on: Option<PathBuf>,
    /// Output run directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Optional TOML config file supplying defaults for the flags below.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long)]
    pub top_p: Option<f64>,
    #[arg(long, value_enum)]
    pub backend: Option<BackendArg>,
    /// Seed for the simulated backend.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long)]
    pub max_retries: Option<u32>,
    /// Script file (JSON) for the simulated backend; derived from ground
    /// truths when absent.
    #[arg(long)]
    pub script: Option<PathBuf>,
    #[arg(long, env = "ENSREAS_API_BASE")]
    pub api_base: Option<String>,
    #[arg(long, env = "ENSREAS_API_KEY", hide_env_values = true)]
    pub api_key: Option<String>,
    #[arg(long, env = "ENSREAS_MODEL")]
    pub model: Option<String>,
}

/// Optional TOML file mirroring the run flags.
#[derive(Debug, Default, Deserialize)]
pub struct FileConfig {
    pub samples: Option<usize>,
    pub temperature: Option<f64>,
    pub top_p: Option<f64>,
    pub backend: Option<String>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub cache_dir: Option<PathBuf>,
    pub max_retries: Option<u32>,
    pub api_base: Option<String>,
    pub api_key: Option<String>,
    pub model: Option<String>,
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunConfig {
    pub task: TaskName,
    pub strategy: Strategy,
    pub n_samples: usize,
    pub temperature: f64,
    pub top_p: f64,
    pub backend: String,
    pub model: String,
    pub seed: u64,
    pub workers: usize,
    pub max_retries: u32,
}

impl RunConfig {
    fn validate(&self) -> Result<(), String> {
        if self.n_samples < 1 {
            return Err("samples must be >= 1".into());
        }
        if self.temperature < 0.0 {
            return Err("temperature must be >= 0".into());
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err("top-p must be in (0, 1]".into());
        }
        Ok(())
    }
}

/// One persisted line of records.jsonl.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunRecord {
    pub report_id: String,
    pub strategy: Strategy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<Label>,
    pub elapsed_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_label: Option<Prediction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vote: Option<VoteResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<SampleSet>,
}

/// Resolved configuration and dataset digest, written once per run directory.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Manifest {
    pub config: RunConfig,
    pub dataset_path: String,
    pub dataset_digest: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depends_on: Option<String>,
    pub created_unix: u64,
}

pub fn dataset_digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

struct CliError {
    exit: i32,
    message: String,
}

impl CliError {
    fn new(exit: i32, message: impl Into<String>) -> Self {
        CliError { exit, message: message.into() }
    }
}

fn load_validated_dataset(path: &Path, task: &TaskSpec) -> Result<(Vec<Report>, String), CliError> {
    let bytes = fs::read(path)
        .map_err(|e| CliError::new(EXIT_DATASET_INVALID, format!("cannot read {}: {e}", path.display())))?;
    let digest = dataset_digest(&bytes);
    let text = String::from_utf8(bytes)
        .map_err(|e| CliError::new(EXIT_DATASET_INVALID, format!("dataset is not UTF-8: {e}")))?;
    let reports = parse_dataset(&text)
        .map_err(|e| CliError::new(EXIT_DATASET_INVALID, format!("dataset parse error: {e}")))?;
    let reports = validate_dataset(reports, task).map_err(|errors| {
        let listing: Vec<String> = errors.iter().map(|e| e.to_string()).collect();
        CliError::new(EXIT_DATASET_INVALID, format!("dataset invalid:\n  {}", listing.join("\n  ")))
    })?;
    Ok((reports, digest))
}

/// Default simulated script: each report leans 70/30 toward its ground truth
/// with the panel shifting to 95/5; reports without a truth are scripted as
/// a point mass on the first label.
pub fn default_script(reports: &[Report], task: &TaskSpec) -> Script {
    let mut script = Script::default();
    for report in reports {
        let entry = match &report.ground_truth {
            Some(truth) => {
                let other = task
                    .labels
                    .iter()
                    .find(|l| *l != truth)
                    .expect("vocabulary has more than one label");
                ScriptEntry {
                    report_text: report.text.clone(),
                    base: ScriptedDistribution::weighted(&[(truth.as_str(), 0.7), (other.as_str(), 0.3)]),
                    panel: Some(ScriptedDistribution::weighted(&[
                        (truth.as_str(), 0.95),
                        (other.as_str(), 0.05),
                    ])),
                }
            }
            None => ScriptEntry {
                report_text: report.text.clone(),
                base: ScriptedDistribution::point(task.labels[0].as_str()),
                panel: None,
            },
        };
        script.insert(&report.id, entry);
    }
    script
}

fn build_backend(
    args: &RunArgs,
    config: &RunConfig,
    reports: &[Report],
    task: &TaskSpec,
    cache_dir: &Path,
) -> Result<Arc<dyn Backend>, CliError> {
    let inner: Arc<dyn Backend> = match config.backend.as_str() {
        "sim" => {
            let script = match &args.script {
                Some(path) => {
                    let raw = fs::read_to_string(path).map_err(|e| {
                        CliError::new(EXIT_GENERIC, format!("cannot read script {}: {e}", path.display()))
                    })?;
                    serde_json::from_str(&raw).map_err(|e| {
                        CliError::new(EXIT_GENERIC, format!("script parse error: {e}"))
                    })?
                }
                None => default_script(reports, task),
            };
            Arc::new(SimBackend::new(script, config.seed))
        }
        "http" => {
            let base_url = args
                .api_base
                .clone()
                .ok_or_else(|| CliError::new(EXIT_BACKEND_UNREACHABLE, "no API base configured (--api-base or ENSREAS_API_BASE)"))?;
            Arc::new(HttpBackend::new(HttpConfig {
                base_url,
                api_key: args.api_key.clone(),
                max_retries: config.max_retries,
                ..HttpConfig::default()
            }))
        }
        other => return Err(CliError::new(EXIT_GENERIC, format!("unknown backend {other:?}"))),
    };
    struct ArcBackend(Arc<dyn Backend>);
    impl Backend for ArcBackend {
        fn id(&self) -> &str {
            self.0.id()
        }
        fn generate(
            &self,
            request: &crate::backends::GenerationRequest,
        ) -> Result<crate::backends::GenerationResponse, crate::backends::BackendError> {
            self.0.generate(request)
        }
        fn call_count(&self) -> u64 {
            self.0.call_count()
        }
    }
    Ok(Arc::new(CachedBackend::new(ArcBackend(inner), DiskCache::new(cache_dir))))
}

fn resolve_config(args: &RunArgs) -> Result<RunConfig, CliError> {
    let file: FileConfig = match &args.config {
        Some(path) => {
            let raw = fs::read_to_string(path).map_err(|e| {
                CliError::new(EXIT_GENERIC, format!("cannot read config {}: {e}", path.display()))
            })?;
            toml::from_str(&raw)
                .map_err(|e| CliError::new(EXIT_GENERIC, format!("config parse error: {e}")))?
        }
        None => FileConfig::default(),
    };
    let backend = match args.backend {
        Some(BackendArg::Http) => "http".to_string(),
        Some(BackendArg::Sim) => "sim".to_string(),
        None => file.backend.clone().unwrap_or_else(|| "http".to_string()),
    };
    let config = RunConfig {
        task: args.task.into(),
        strategy: args.strategy.into(),
        n_samples: args.samples.or(file.samples).unwrap_or(10),
        temperature: args.temperature.or(file.temperature).unwrap_or(0.7),
        top_p: args.top_p.or(file.top_p).unwrap_or(0.95),
        backend,
        model: args
            .model
            .clone()
            .or(file.model)
            .unwrap_or_else(|| "default".to_string()),
        seed: args.seed.or(file.seed).unwrap_or(0),
        workers: args.workers.or(file.workers).unwrap_or(4),
        max_retries: args.max_retries.or(file.max_retries).unwrap_or(4),
    };
    config.validate().map_err(|m| CliError::new(EXIT_GENERIC, m))?;
    Ok(config)
}

fn record_from_result(result: &ReportResult, truths: &BTreeMap<String, Label>) -> RunRecord {
    match result {
        ReportResult::Ok { outcome, elapsed_ms } => RunRecord {
            report_id: outcome.report_id.clone(),
            strategy: outcome.strategy,
            ground_truth: truths.get(&outcome.report_id).cloned(),
            elapsed_ms: *elapsed_ms,
            error: None,
            final_label: Some(outcome.final_label.clone()),
            vote: Some(outcome.vote.clone()),
            samples: Some(outcome.samples.clone()),
        },
        ReportResult::Failed { report_id, error, elapsed_ms } => RunRecord {
            report_id: report_id.clone(),
            strategy: Strategy::Zs, // overwritten below by caller
            ground_truth: truths.get(report_id).cloned(),
            elapsed_ms: *elapsed_ms,
            error: Some(error.clone()),
            final_label: None,
            vote: None,
            samples: None,
        },
    }
}

fn write_run_dir(out: &Path, manifest: &Manifest, records: &[RunRecord]) -> Result<(), CliError> {
    fs::create_dir_all(out)
        .map_err(|e| CliError::new(EXIT_GENERIC, format!("cannot create {}: {e}", out.display())))?;
    let manifest_json =
        serde_json::to_string_pretty(manifest).expect("manifest serializes");
    fs::write(out.join("manifest.json"), manifest_json)
        .map_err(|e| CliError::new(EXIT_GENERIC, format!("cannot write manifest: {e}")))?;
    let mut file = fs::File::create(out.join("records.jsonl"))
        .map_err(|e| CliError::new(EXIT_GENERIC, format!("cannot write records: {e}")))?;
    for record in records {
        let line = serde_json::to_string(record).expect("record serializes");
        writeln!(file, "{line}")
            .map_err(|e| CliError::new(EXIT_GENERIC, format!("cannot write records: {e}")))?;
    }
    Ok(())
}

pub fn load_run_dir(dir: &Path) -> Result<(Manifest, Vec<RunRecord>), String> {
    let manifest_raw = fs::read_to_string(dir.join("manifest.json"))
        .map_err(|e| format!("cannot read {}/manifest.json: {e}", dir.display()))?;
    let manifest: Manifest =
        serde_json::from_str(&manifest_raw).map_err(|e| format!("manifest parse error: {e}"))?;
    let records_raw = fs::read_to_string(dir.join("records.jsonl"))
        .map_err(|e| format!("cannot read {}/records.jsonl: {e}", dir.display()))?;
    let records: Vec<RunRecord> = records_raw
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect::<Result<_, _>>()
        .map_err(|e| format!("records parse error: {e}"))?;
    Ok((manifest, records))
}

fn outcomes_from_records(records: &[RunRecord]) -> Vec<StrategyOutcome> {
    records
        .iter()
        .filter_map(|r| {
            Some(StrategyOutcome {
                report_id: r.report_id.clone(),
                strategy: r.strategy,
                final_label: r.final_label.clone()?,
                vote: r.vote.clone()?,
                samples: r.samples.clone()?,
            })
        })
        .collect()
}

pub fn cmd_validate(dataset: &Path, task: TaskArg) -> i32 {
    let task = TaskSpec::for_task(task.into());
    match load_validated_dataset(dataset, &task) {
        Ok((reports, digest)) => {
            println!("ok: {} reports, digest {digest}", reports.len());
            EXIT_OK
        }
        Err(e) => {
            eprintln!("{}", e.message);
            e.exit
        }
    }
}

pub fn cmd_run(args: &RunArgs) -> i32 {
    match run_impl(args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", e.message);
            e.exit
        }
    }
}

fn run_impl(args: &RunArgs) -> Result<i32, CliError> {
    let config = resolve_config(args)?;
    let task = TaskSpec::for_task(config.task);
    let (reports, digest) = load_validated_dataset(&args.dataset, &task)?;
    let truths: BTreeMap<String, Label> = reports
        .iter()
        .filter_map(|r| r.ground_truth.clone().map(|g| (r.id.clone(), g)))
        .collect();

    let prior = match config.strategy {
        Strategy::EnsReas => {
            let dep = args.depends_on.as_ref().ok_or_else(|| {
                CliError::new(EXIT_MISSING_DEPENDENCY, "ensreas requires --depends-on <zs-cot-sc run dir>")
            })?;
            let (manifest, records) = load_run_dir(dep)
                .map_err(|m| CliError::new(EXIT_MISSING_DEPENDENCY, m))?;
            if manifest.config.strategy != Strategy::ZsCotSc {
                return Err(CliError::new(
                    EXIT_MISSING_DEPENDENCY,
                    format!("--depends-on run used strategy {}, need zs-cot-sc", manifest.config.strategy),
                ));
            }
            if manifest.dataset_digest != digest {
                return Err(CliError::new(
                    EXIT_MISSING_DEPENDENCY,
                    "--depends-on run was produced from a different dataset",
                ));
            }
            Some(outcomes_from_records(&records))
        }
        _ => None,
    };

    let cache_dir = args
        .cache_dir
        .clone()
        .unwrap_or_else(|| args.out.join("cache"));
    let backend = build_backend(args, &config, &reports, &task, &cache_dir)?;

    let opts = RunOptions {
        n_samples: config.n_samples,
        temperature: config.temperature,
        top_p: config.top_p,
        model_id: config.model.clone(),
        workers: config.workers,
    };
    let results = run_strategy(
        &reports,
        &task,
        config.strategy,
        backend.as_ref(),
        &opts,
        prior.as_deref(),
    )
    .map_err(|e| CliError::new(EXIT_GENERIC, e.to_string()))?;

    let records: Vec<RunRecord> = results
        .iter()
        .map(|r| {
            let mut record = record_from_result(r, &truths);
            record.strategy = config.strategy;
            record
        })
        .collect();

    let manifest = Manifest {
        config: config.clone(),
        dataset_path: args.dataset.display().to_string(),
        dataset_digest: digest,
        depends_on: args.depends_on.as_ref().map(|p| p.display().to_string()),
        created_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
    };
    write_run_dir(&args.out, &manifest, &records)?;

    let failed: Vec<&RunRecord> = records.iter().filter(|r| r.error.is_some()).collect();
    if failed.is_empty() {
        println!(
            "run complete: {} reports, strategy {}, records in {}",
            records.len(),
            config.strategy,
            args.out.display()
        );
        return Ok(EXIT_OK);
    }
    let ids: Vec<&str> = failed.iter().map(|r| r.report_id.as_str()).collect();
    eprintln!("failed reports ({}): {}", ids.len(), ids.join(", "));
    let all_transport = failed.len() == records.len()
        && failed
            .iter()
            .all(|r| r.error.as_deref().is_some_and(|e| e.starts_with("transport failure")));
    if all_transport {
        eprintln!("backend unreachable");
        Ok(EXIT_BACKEND_UNREACHABLE)
    } else {
        Ok(EXIT_PARTIAL_FAILURE)
    }
}

struct LoadedRun {
    dir: PathBuf,
    manifest: Manifest,
    records: Vec<RunRecord>,
    outcomes: Vec<StrategyOutcome>,
}

fn load_compatible_runs(dirs: &[PathBuf]) -> Result<Vec<LoadedRun>, CliError> {
    let mut runs = Vec::new();
    for dir in dirs {
        let (manifest, records) =
            load_run_dir(dir).map_err(|m| CliError::new(EXIT_GENERIC, m))?;
        let outcomes = outcomes_from_records(&records);
        runs.push(LoadedRun { dir: dir.clone(), manifest, records, outcomes });
    }
    let first = &runs[0].manifest;
    for run in &runs[1..] {
        if run.manifest.dataset_digest != first.dataset_digest
            || run.manifest.config.task != first.config.task
        {
            return Err(CliError::new(
                EXIT_DATASET_INVALID,
                format!(
                    "incompatible runs: {} and {} differ in task or dataset",
                    runs[0].dir.display(),
                    run.dir.display()
                ),
            ));
        }
    }
    Ok(runs)
}

fn truths_of(records: &[RunRecord]) -> BTreeMap<String, Label> {
    records
        .iter()
        .filter_map(|r| r.ground_truth.clone().map(|g| (r.report_id.clone(), g)))
        .collect()
}

pub fn cmd_report(run_dirs: &[PathBuf], out: Option<&Path>, base: LogBase) -> i32 {
    match report_impl(run_dirs, out, base) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("{}", e.message);
            e.exit
        }
    }
}

#[derive(Serialize)]
struct StrategyReport {
    strategy: Strategy,
    precision: f64,
    recall: f64,
    f1: f64,
    f1_mean_per_class: f64,
    support: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    entropy_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    entropy_std: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    entropy_n: Option<usize>,
}

fn report_impl(run_dirs: &[PathBuf], out: Option<&Path>, base: LogBase) -> Result<(), CliError> {
    let runs = load_compatible_runs(run_dirs)?;
    let task = TaskSpec::for_task(runs[0].manifest.config.task);

    let mut rows = Vec::new();
    let mut entropy_runs: Vec<(Strategy, BTreeMap<String, f64>)> = Vec::new();
    for run in &runs {
        let truths = truths_of(&run.records);
        let (m, _) = macro_metrics(&run.outcomes, &truths, &task)
            .map_err(|e| CliError::new(EXIT_GENERIC, e.to_string()))?;
        let strategy = run.manifest.config.strategy;
        let mut row = StrategyReport {
            strategy,
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
            f1_mean_per_class: m.f1_mean_per_class,
            support: m.support,
            entropy_mean: None,
            entropy_std: None,
            entropy_n: None,
        };
        if strategy.is_sampled() {
            let sets: Vec<&SampleSet> = run.outcomes.iter().map(|o| &o.samples).collect();
            let stats = consistency(&sets, base)
                .map_err(|e| CliError::new(EXIT_GENERIC, e.to_string()))?;
            row.entropy_mean = Some(stats.mean);
            row.entropy_std = Some(stats.std_deviation);
            row.entropy_n = Some(stats.n);
            entropy_runs.push((strategy, stats.entropies.into_iter().collect()));
        }
        rows.push(row);
    }

    println!("strategy    precision  recall     f1-score   support");
    for row in &rows {
        println!(
            "{:<11} {:<10.3} {:<10.3} {:<10.3} {}",
            row.strategy.as_str(),
            row.precision,
            row.recall,
            row.f1,
            row.support
        );
    }

    let mut t_test = None;
    if !entropy_runs.is_empty() {
        println!();
        println!("consistency              N      mean       std. deviation");
        for row in &rows {
            if let (Some(mean), Some(std), Some(n)) = (row.entropy_mean, row.entropy_std, row.entropy_n) {
                println!("{:<24} {:<6} {:<10.4} {:<10.4}", row.strategy.as_str(), n, mean, std);
            }
        }
        if entropy_runs.len() == 2 {
            let (sa, ea) = &entropy_runs[0];
            let (sb, eb) = &entropy_runs[1];
            if ea.keys().ne(eb.keys()) {
                return Err(CliError::new(
                    EXIT_DATASET_INVALID,
                    "incompatible runs: entropy-bearing runs cover different report ids",
                ));
            }
            let a: Vec<f64> = ea.values().copied().collect();
            let b: Vec<f64> = eb.values().copied().collect();
            match paired_t_test(&a, &b) {
                Ok(t) => {
                    println!(
                        "paired t-test ({sa} vs {sb}): t = {:.4}, df = {}, p = {:.6}",
                        t.t_statistic, t.degrees_of_freedom, t.p_value
                    );
                    t_test = Some(t);
                }
                Err(e) => println!("paired t-test ({sa} vs {sb}): {e}"),
            }
        }
    }

    if let Some(out) = out {
        fs::create_dir_all(out)
            .map_err(|e| CliError::new(EXIT_GENERIC, format!("cannot create {}: {e}", out.display())))?;
        let json = serde_json::json!({ "strategies": rows, "paired_t_test": t_test });
        fs::write(out.join("report.json"), serde_json::to_string_pretty(&json).expect("serializable"))
            .map_err(|e| CliError::new(EXIT_GENERIC, format!("cannot write report.json: {e}")))?;
        let mut csv = String::from("strategy,precision,recall,f1,f1_mean_per_class,support,entropy_mean,entropy_std\n");
        for row in &rows {
            csv.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                row.strategy.as_str(),
                row.precision,
                row.recall,
                row.f1,
                row.f1_mean_per_class,
                row.support,
                row.entropy_mean.map(|v| v.to_string()).unwrap_or_default(),
                row.entropy_std.map(|v| v.to_string()).unwrap_or_default(),
            ));
        }
        fs::write(out.join("report.csv"), csv)
            .map_err(|e| CliError::new(EXIT_GENERIC, format!("cannot write report.csv: {e}")))?;
    }
    Ok(())
}

pub fn cmd_transitions(zscotsc_dir: &Path, ensreas_dir: &Path, out: Option<&Path>) -> i32 {
    match transitions_impl(zscotsc_dir, ensreas_dir, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("{}", e.message);
            e.exit
        }
    }
}

fn transitions_impl(zscotsc_dir: &Path, ensreas_dir: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let runs = load_compatible_runs(&[zscotsc_dir.to_path_buf(), ensreas_dir.to_path_buf()])?;
    let [before, after] = &runs[..] else { unreachable!("two dirs loaded") };
    if before.manifest.config.strategy != Strategy::ZsCotSc
        || after.manifest.config.strategy != Strategy::EnsReas
    {
        return Err(CliError::new(
            EXIT_DATASET_INVALID,
            "transitions needs a zs-cot-sc run directory then an ensreas run directory",
        ));
    }

    let partition = crate::consensus::partition_reports(before.outcomes.iter());
    let truths = truths_of(&before.records);
    let before_sets: Vec<&SampleSet> = before.outcomes.iter().map(|o| &o.samples).collect();
    let after_sets: Vec<&SampleSet> = after.outcomes.iter().map(|o| &o.samples).collect();
    let matrix = transition_matrix(&before_sets, &after_sets, &partition, &truths)
        .map_err(|e| CliError::new(EXIT_GENERIC, e.to_string()))?;

    let header = "type,CC,MC,Tie,MI,CI\n";
    let mut counts_csv = String::from(header);
    let mut norm_csv = String::from(header);
    let normalized = matrix.row_normalized();
    for ty in ReportType::ALL {
        let i = ty.index();
        counts_csv.push_str(&format!(
            "{},{}\n",
            ty.as_str(),
            matrix.counts[i].map(|c| c.to_string()).join(",")
        ));
        norm_csv.push_str(&format!(
            "{},{}\n",
            ty.as_str(),
            normalized[i].map(|f| format!("{f:.4}")).join(",")
        ));
    }

    print!("{counts_csv}");
    let out = out.unwrap_or(ensreas_dir);
    fs::create_dir_all(out)
        .map_err(|e| CliError::new(EXIT_GENERIC, format!("cannot create {}: {e}", out.display())))?;
    fs::write(out.join("transitions.csv"), &counts_csv)
        .map_err(|e| CliError::new(EXIT_GENERIC, format!("cannot write transitions.csv: {e}")))?;
    fs::write(out.join("transitions_normalized.csv"), &norm_csv)
        .map_err(|e| CliError::new(EXIT_GENERIC, format!("cannot write transitions_normalized.csv: {e}")))?;
    println!("wrote {}/transitions.csv", out.display());
    Ok(())
}

/// Dispatches a parsed command line, returning the process exit code.
pub fn dispatch(cli: Cli) -> i32 {
    match cli.command {
        Command::Validate { dataset, task } => cmd_validate(&dataset, task),
        Command::Run(args) => cmd_run(&args),
        Command::Report { run_dirs, out, entropy_base } => {
            cmd_report(&run_dirs, out.as_deref(), entropy_base.into())
        }
        Command::Transitions { zscotsc_dir, ensreas_dir, out } => {
            cmd_transitions(&zscotsc_dir, &ensreas_dir, out.as_deref())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_match_paper_settings() {
        let args = RunArgs {
            task: TaskArg::T,
            strategy: StrategyArg::ZsCotSc,
            dataset: PathBuf::from("d.jsonl"),
            depends_on: None,
            out: PathBuf::from("out"),
            config: None,
            samples: None,
            temperature: None,
            top_p: None,
            backend: Some(BackendArg::Sim),
            seed: None,
            workers: None,
            cache_dir: None,
            max_retries: None,
            script: None,
            api_base: None,
            api_key: None,
            model: None,
        };
        let config = resolve_config(&args).map_err(|e| e.message).unwrap();
        assert_eq!(config.n_samples, 10);
        assert_eq!(config.temperature, 0.7);
        assert_eq!(config.top_p, 0.95);
    }

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let config_path = dir.path().join("c.toml");
        fs::write(&config_path, "samples = 5\ntemperature = 0.2\nbackend = \"sim\"\n").unwrap();
        let args = RunArgs {
            task: TaskArg::T,
            strategy: StrategyArg::Zs,
            dataset: PathBuf::from("d.jsonl"),
            depends_on: None,
            out: PathBuf::from("out"),
            config: Some(config_path),
            samples: Some(3),
            temperature: None,
            top_p: None,
            backend: None,
            seed: None,
            workers: None,
            cache_dir: None,
            max_retries: None,
            script: None,
            api_base: None,
            api_key: None,
            model: None,
        };
        let config = resolve_config(&args).map_err(|e| e.message).unwrap();
        assert_eq!(config.n_samples, 3); // flag wins
        assert_eq!(config.temperature, 0.2); // file fills the gap
        assert_eq!(config.backend, "sim");
    }

    #[test]
    fn invalid_top_p_rejected() {
        let args = RunArgs {
            task: TaskArg::T,
            strategy: StrategyArg::Zs,
            dataset: PathBuf::from("d.jsonl"),
            depends_on: None,
            out: PathBuf::from("out"),
            config: None,
            samples: None,
            temperature: None,
            top_p: Some(1.5),
            backend: Some(BackendArg::Sim),
            seed: None,
            workers: None,
            cache_dir: None,
            max_retries: None,
            script: None,
            api_base: None,
            api_key: None,
            model: None,
        };
        assert!(resolve_config(&args).is_err());
    }
}
