//! Core vocabulary shared by every module: tasks, labels, reports, sample
//! sets, and the consistency partition.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The two staging tasks. T and N stage prediction are treated as separate
/// tasks because many reports carry only one of them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TaskName {
    T,
    N,
}

impl fmt::Display for TaskName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TaskName::T => write!(f, "T"),
            TaskName::N => write!(f, "N"),
        }
    }
}

/// A canonical major-stage label, e.g. `T2` or `N0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Label(pub String);

impl Label {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<&str> for Label {
    fn from(s: &str) -> Self {
        Label(s.to_string())
    }
}

/// An extracted prediction: either an in-vocabulary label or the explicit
/// `Unparseable` sentinel. Unparseable is a value, never a silent drop.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Prediction {
    Label(Label),
    Unparseable,
}

impl Prediction {
    pub fn label(&self) -> Option<&Label> {
        match self {
            Prediction::Label(l) => Some(l),
            Prediction::Unparseable => None,
        }
    }

    pub fn is_parseable(&self) -> bool {
        matches!(self, Prediction::Label(_))
    }
}

impl fmt::Display for Prediction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Prediction::Label(l) => write!(f, "{l}"),
            Prediction::Unparseable => write!(f, "Unparseable"),
        }
    }
}

/// A staging task with its ordered label vocabulary. Canonical order is
/// ascending stage number and is stable across runs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub name: TaskName,
    pub labels: Vec<Label>,
}

impl TaskSpec {
    pub fn t() -> Self {
        TaskSpec {
            name: TaskName::T,
            labels: ["T1", "T2", "T3", "T4"].iter().map(|s| Label::from(*s)).collect(),
        }
    }

    pub fn n() -> Self {
        TaskSpec {
            name: TaskName::N,
            labels: ["N0", "N1", "N2", "N3"].iter().map(|s| Label::from(*s)).collect(),
        }
    }

    pub fn for_task(name: TaskName) -> Self {
        match name {
            TaskName::T => Self::t(),
            TaskName::N => Self::n(),
        }
    }

    /// Number of classes (4 for both tasks).
    pub fn k(&self) -> usize {
        self.labels.len()
    }

    pub fn contains(&self, label: &Label) -> bool {
        self.labels.contains(label)
    }

    /// Position of a label in canonical order.
    pub fn index_of(&self, label: &Label) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

/// One free-text clinical document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<Label>,
}

/// The prompting strategy that produced a sample set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Zs,
    ZsCot,
    ZsCotSc,
    EnsReas,
}

impl Strategy {
    pub fn as_str(&self) -> &'static str {
        match self {
            Strategy::Zs => "zs",
            Strategy::ZsCot => "zs-cot",
            Strategy::ZsCotSc => "zs-cot-sc",
            Strategy::EnsReas => "ensreas",
        }
    }

    /// Strategies that sample multiple responses per report.
    pub fn is_sampled(&self) -> bool {
        matches!(self, Strategy::ZsCotSc | Strategy::EnsReas)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_str())
    }
}

/// One (reasoning, prediction) pair from a single generation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub index: usize,
    /// Reasoning text supporting the prediction (empty for ZS).
    pub reasoning: String,
    pub label: Prediction,
    /// Verbatim final completion the label was extracted from.
    pub raw_text: String,
}

/// The ordered list of samples obtained for one report under one strategy.
/// Sample order equals generation order; grouping and tie-breaks depend on it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSet {
    pub report_id: String,
    pub strategy: Strategy,
    pub samples: Vec<Sample>,
}

impl SampleSet {
    /// Extracted predictions in sample order.
    pub fn predictions(&self) -> Vec<&Prediction> {
        self.samples.iter().map(|s| &s.label).collect()
    }

    /// Distinct parseable labels, in first-occurrence order.
    pub fn distinct_labels(&self) -> Vec<&Label> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for s in &self.samples {
            if let Prediction::Label(l) = &s.label {
                if seen.insert(l) {
                    out.push(l);
                }
            }
        }
        out
    }
}

/// The consistent / inconsistent split of reports by their sampled
/// predictions: consistent reports have at most one distinct parseable label.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub consistent: BTreeSet<String>,
    pub inconsistent: BTreeSet<String>,
}

impl Partition {
    pub fn is_consistent(&self, report_id: &str) -> bool {
        self.consistent.contains(report_id)
    }
}

/// Reasonings grouped by the label they support, labels in canonical order,
/// reasonings in sample order. A label appears as a key iff at least one
/// sample predicted it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReasoningGroups {
    pub report_id: String,
    pub groups: BTreeMap<Label, Vec<String>>,
}

impl ReasoningGroups {
    /// Labels in the task's canonical order. Labels unknown to the task (none
    /// in practice) sort after the vocabulary.
    pub fn ordered_labels(&self, task: &TaskSpec) -> Vec<&Label> {
        let mut labels: Vec<&Label> = self.groups.keys().collect();
        labels.sort_by_key(|l| task.index_of(l).unwrap_or(usize::MAX));
        labels
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DatasetError {
    #[error("duplicate report id {0:?}")]
    DuplicateId(String),
    #[error("report {id:?} has ground truth {label:?} outside the task vocabulary")]
    InvalidLabel { id: String, label: String },
    #[error("report {0:?} has empty text")]
    EmptyText(String),
}

/// Checks id uniqueness, non-empty text, and in-vocabulary ground truths.
/// Input order is preserved; all violations are reported, not just the first.
pub fn validate_dataset(reports: Vec<Report>, task: &TaskSpec) -> Result<Vec<Report>, Vec<DatasetError>> {
    let mut errors = Vec::new();
    let mut seen = HashSet::new();
    for report in &reports {
        if !seen.insert(report.id.clone()) {
            errors.push(DatasetError::DuplicateId(report.id.clone()));
        }
        if report.text.trim().is_empty() {
            errors.push(DatasetError::EmptyText(report.id.clone()));
        }
        if let Some(gt) = &report.ground_truth {
            if !task.contains(gt) {
                errors.push(DatasetError::InvalidLabel {
                    id: report.id.clone(),
                    label: gt.0.clone(),
                });
            }
        }
    }
    if errors.is_empty() {
        Ok(reports)
    } else {
        Err(errors)
    }
}

/// Parses a JSONL dataset: one object per line with `id`, `text`, and
/// optional `ground_truth`.
pub fn parse_dataset(jsonl: &str) -> Result<Vec<Report>, serde_json::Error> {
    jsonl
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}
