//! Voting, the consistency partition, reasoning grouping, and strategy
//! execution against a backend.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::{
    Backend, BackendError, Decoding, GenerationRequest, MAX_TOKENS_ANSWER, MAX_TOKENS_REASONING,
};
use crate::domain::{Label, Partition, Prediction, ReasoningGroups, Report, Sample, SampleSet, Strategy, TaskSpec};
use crate::extraction::ExtractionRule;
use crate::prompts::{self, CotPhase};

/// Majority-vote outcome over one sample set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteResult {
    pub winner: Prediction,
    pub counts: BTreeMap<Label, usize>,
    pub tied: bool,
    pub tie_set: Vec<Label>,
}

/// Final per-report result of one strategy, with every underlying sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyOutcome {
    pub report_id: String,
    pub strategy: Strategy,
    pub final_label: Prediction,
    pub vote: VoteResult,
    pub samples: SampleSet,
}

/// Per-report execution result; transport failures are recorded, never
/// silently skipped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReportResult {
    Ok { outcome: StrategyOutcome, elapsed_ms: u64 },
    Failed { report_id: String, error: String, elapsed_ms: u64 },
}

impl ReportResult {
    pub fn outcome(&self) -> Option<&StrategyOutcome> {
        match self {
            ReportResult::Ok { outcome, .. } => Some(outcome),
            ReportResult::Failed { .. } => None,
        }
    }

    pub fn report_id(&self) -> &str {
        match self {
            ReportResult::Ok { outcome, .. } => &outcome.report_id,
            ReportResult::Failed { report_id, .. } => report_id,
        }
    }

    pub fn error(&self) -> Option<&str> {
        match self {
            ReportResult::Ok { .. } => None,
            ReportResult::Failed { error, .. } => Some(error),
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("ensreas requires a completed zs-cot-sc run")]
    MissingDependency,
    #[error(transparent)]
    Backend(#[from] BackendError),
}

/// Most frequent label among parseable samples. Ties break deterministically
/// to the tied label whose first occurrence is earliest in sample order; the
/// tie is still reported via `tied` and `tie_set`.
pub fn majority_vote(sample_set: &SampleSet) -> VoteResult {
    let mut counts: BTreeMap<Label, usize> = BTreeMap::new();
    for sample in &sample_set.samples {
        if let Prediction::Label(l) = &sample.label {
            *counts.entry(l.clone()).or_default() += 1;
        }
    }
    let Some(max) = counts.values().copied().max() else {
        return VoteResult { winner: Prediction::Unparseable, counts, tied: false, tie_set: Vec::new() };
    };
    let tie_set: Vec<Label> = sample_set
        .distinct_labels()
        .into_iter()
        .filter(|l| counts[*l] == max)
        .cloned()
        .collect();
    let winner = tie_set.first().expect("max exists").clone();
    let tied = tie_set.len() > 1;
    VoteResult {
        winner: Prediction::Label(winner),
        counts,
        tied,
        tie_set: if tied { tie_set } else { Vec::new() },
    }
}

/// Splits reports into consistent (at most one distinct parseable label) and
/// inconsistent. Unparseable samples are excluded from the distinct count.
pub fn partition_reports<'a, I>(outcomes: I) -> Partition
where
    I: IntoIterator<Item = &'a StrategyOutcome>,
{
    let mut partition = Partition::default();
    for outcome in outcomes {
        let distinct = outcome.samples.distinct_labels().len();
        if distinct <= 1 {
            partition.consistent.insert(outcome.report_id.clone());
        } else {
            partition.inconsistent.insert(outcome.report_id.clone());
        }
    }
    partition
}

/// Groups each parseable sample's reasoning under its predicted label.
pub fn group_reasonings(sample_set: &SampleSet) -> ReasoningGroups {
    let mut groups: BTreeMap<Label, Vec<String>> = BTreeMap::new();
    for sample in &sample_set.samples {
        if let Prediction::Label(l) = &sample.label {
            groups.entry(l.clone()).or_default().push(sample.reasoning.clone());
        }
    }
    ReasoningGroups { report_id: sample_set.report_id.clone(), groups }
}

/// Knobs for strategy execution.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub n_samples: usize,
    pub temperature: f64,
    pub top_p: f64,
    pub model_id: String,
    pub workers: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { n_samples: 10, temperature: 0.7, top_p: 0.95, model_id: "default".into(), workers: 1 }
    }
}

fn outcome_from(set: SampleSet) -> StrategyOutcome {
    let vote = majority_vote(&set);
    StrategyOutcome {
        report_id: set.report_id.clone(),
        strategy: set.strategy,
        final_label: vote.winner.clone(),
        vote,
        samples: set,
    }
}

fn run_zs(report: &Report, task: &TaskSpec, backend: &dyn Backend, opts: &RunOptions, rule: &ExtractionRule) -> Result<StrategyOutcome, BackendError> {
    let prompt = prompts::render_zs(report, task);
    let request = GenerationRequest::greedy(prompt.text, MAX_TOKENS_ANSWER, opts.model_id.clone());
    let response = backend.generate(&request)?;
    let set = SampleSet {
        report_id: report.id.clone(),
        strategy: Strategy::Zs,
        samples: vec![Sample {
            index: 0,
            reasoning: String::new(),
            label: rule.extract(&response.text),
            raw_text: response.text,
        }],
    };
    Ok(outcome_from(set))
}

fn cot_pair(
    report: &Report,
    task: &TaskSpec,
    backend: &dyn Backend,
    opts: &RunOptions,
    rule: &ExtractionRule,
    decoding: Decoding,
    index: usize,
) -> Result<Sample, BackendError> {
    let reasoning_prompt = prompts::render_cot(report, task, CotPhase::Reasoning, None)
        .expect("reasoning phase needs no context");
    let reasoning = backend
        .generate(&GenerationRequest {
            prompt: reasoning_prompt.text,
            decoding: decoding.clone(),
            sample_index: index,
            max_tokens: MAX_TOKENS_REASONING,
            model_id: opts.model_id.clone(),
        })?
        .text;
    let answer_prompt = prompts::render_cot(report, task, CotPhase::Answer, Some(&reasoning))
        .expect("context supplied");
    let answer = backend
        .generate(&GenerationRequest {
            prompt: answer_prompt.text,
            decoding,
            sample_index: index,
            max_tokens: MAX_TOKENS_ANSWER,
            model_id: opts.model_id.clone(),
        })?
        .text;
    Ok(Sample { index, reasoning, label: rule.extract(&answer), raw_text: answer })
}

fn run_zs_cot(report: &Report, task: &TaskSpec, backend: &dyn Backend, opts: &RunOptions, rule: &ExtractionRule) -> Result<StrategyOutcome, BackendError> {
    let sample = cot_pair(report, task, backend, opts, rule, Decoding::Greedy, 0)?;
    let set = SampleSet { report_id: report.id.clone(), strategy: Strategy::ZsCot, samples: vec![sample] };
    Ok(outcome_from(set))
}

fn run_zs_cot_sc(report: &Report, task: &TaskSpec, backend: &dyn Backend, opts: &RunOptions, rule: &ExtractionRule) -> Result<StrategyOutcome, BackendError> {
    let decoding = Decoding::Sampled { temperature: opts.temperature, top_p: opts.top_p };
    let mut samples = Vec::with_capacity(opts.n_samples);
    for index in 0..opts.n_samples {
        samples.push(cot_pair(report, task, backend, opts, rule, decoding.clone(), index)?);
    }
    let set = SampleSet { report_id: report.id.clone(), strategy: Strategy::ZsCotSc, samples };
    Ok(outcome_from(set))
}

fn run_ensreas_report(
    report: &Report,
    task: &TaskSpec,
    backend: &dyn Backend,
    opts: &RunOptions,
    rule: &ExtractionRule,
    prior: &StrategyOutcome,
    consistent: bool,
) -> Result<StrategyOutcome, BackendError> {
    if consistent {
        // Consistent reports keep their self-consistency prediction; no new
        // backend calls.
        let mut samples = prior.samples.clone();
        samples.strategy = Strategy::EnsReas;
        return Ok(StrategyOutcome {
            report_id: report.id.clone(),
            strategy: Strategy::EnsReas,
            final_label: prior.final_label.clone(),
            vote: prior.vote.clone(),
            samples,
        });
    }
    let groups = group_reasonings(&prior.samples);
    let panel = prompts::render_panel(report, &groups, task)
        .expect("inconsistent reports have at least two groups");
    let decoding = Decoding::Sampled { temperature: opts.temperature, top_p: opts.top_p };
    let mut samples = Vec::with_capacity(opts.n_samples);
    for index in 0..opts.n_samples {
        let response = backend.generate(&GenerationRequest {
            prompt: panel.text.clone(),
            decoding: decoding.clone(),
            sample_index: index,
            max_tokens: MAX_TOKENS_ANSWER,
            model_id: opts.model_id.clone(),
        })?;
        samples.push(Sample {
            index,
            reasoning: response.text.clone(),
            label: rule.extract(&response.text),
            raw_text: response.text,
        });
    }
    let set = SampleSet { report_id: report.id.clone(), strategy: Strategy::EnsReas, samples };
    Ok(outcome_from(set))
}

/// Runs one strategy over the dataset with a bounded worker pool. Results
/// come back in input report order regardless of scheduling. EnsReas needs
/// the prior self-consistency outcomes.
pub fn run_strategy(
    reports: &[Report],
    task: &TaskSpec,
    strategy: Strategy,
    backend: &dyn Backend,
    opts: &RunOptions,
    prior_sc: Option<&[StrategyOutcome]>,
) -> Result<Vec<ReportResult>, RunError> {
    let (prior_by_id, partition) = match strategy {
        Strategy::EnsReas => {
            let prior = prior_sc.ok_or(RunError::MissingDependency)?;
            let by_id: BTreeMap<&str, &StrategyOutcome> =
                prior.iter().map(|o| (o.report_id.as_str(), o)).collect();
            let partition = partition_reports(prior.iter());
            (by_id, partition)
        }
        _ => (BTreeMap::new(), Partition::default()),
    };

    let rule = ExtractionRule::new(task);
    let results: Mutex<Vec<Option<ReportResult>>> = Mutex::new(vec![None; reports.len()]);
    let next = AtomicUsize::new(0);
    let workers = opts.workers.max(1).min(reports.len().max(1));

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= reports.len() {
                    break;
                }
                let report = &reports[i];
                let started = std::time::Instant::now();
                let run = || -> Result<StrategyOutcome, RunError> {
                    match strategy {
                        Strategy::Zs => Ok(run_zs(report, task, backend, opts, &rule)?),
                        Strategy::ZsCot => Ok(run_zs_cot(report, task, backend, opts, &rule)?),
                        Strategy::ZsCotSc => Ok(run_zs_cot_sc(report, task, backend, opts, &rule)?),
                        Strategy::EnsReas => {
                            let prior = prior_by_id
                                .get(report.id.as_str())
                                .ok_or(RunError::MissingDependency)?;
                            let consistent = partition.is_consistent(&report.id);
                            Ok(run_ensreas_report(report, task, backend, opts, &rule, prior, consistent)?)
                        }
                    }
                };
                let result = match run() {
                    Ok(outcome) => ReportResult::Ok {
                        outcome,
                        elapsed_ms: started.elapsed().as_millis() as u64,
                    },
                    Err(RunError::MissingDependency) => ReportResult::Failed {
                        report_id: report.id.clone(),
                        error: "no zs-cot-sc outcome for this report".into(),
                        elapsed_ms: started.elapsed().as_millis() as u64,
                    },
                    Err(RunError::Backend(e)) => ReportResult::Failed {
                        report_id: report.id.clone(),
                        error: e.to_string(),
                        elapsed_ms: started.elapsed().as_millis() as u64,
                    },
                };
                results.lock().expect("no poisoned lock")[i] = Some(result);
            });
        }
    });

    let results = results.into_inner().expect("no poisoned lock");
    Ok(results.into_iter().map(|r| r.expect("every slot filled")).collect())
}
