//! Evaluation suite: macro precision/recall/F1 over the stage classes,
//! entropy-based consistency with a paired t-test, and the five-way report
//! typing with its transition matrix.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::consensus::StrategyOutcome;
use crate::domain::{Label, Partition, Prediction, SampleSet, TaskSpec};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("reports without ground truth: {0:?}")]
    NoGroundTruth(Vec<String>),
    #[error("sample set for report {0:?} is empty")]
    EmptySampleSet(String),
    #[error("paired vectors have lengths {0} and {1}")]
    LengthMismatch(usize, usize),
    #[error("all paired differences are equal; t-statistic undefined")]
    ZeroVariance,
    #[error("report {0:?} missing from one of the runs")]
    MissingReport(String),
}

/// K true classes by K+1 predicted columns; the extra column counts
/// Unparseable predictions and is excluded from macro averaging.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub task: TaskSpec,
    pub cells: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn new(task: &TaskSpec) -> Self {
        let k = task.k();
        ConfusionMatrix { task: task.clone(), cells: vec![vec![0; k + 1]; k] }
    }

    pub fn record(&mut self, truth: &Label, predicted: &Prediction) {
        let row = self.task.index_of(truth).expect("validated truth");
        let col = match predicted {
            Prediction::Label(l) => self.task.index_of(l).expect("extracted labels are in-vocabulary"),
            Prediction::Unparseable => self.task.k(),
        };
        self.cells[row][col] += 1;
    }

    pub fn total(&self) -> usize {
        self.cells.iter().flatten().sum()
    }

    /// Scored reports whose true class is `k`.
    pub fn support_k(&self, k: usize) -> usize {
        self.cells[k].iter().sum()
    }

    /// Reports predicted as class `k` (Unparseable column excluded).
    pub fn predicted_k(&self, k: usize) -> usize {
        self.cells.iter().map(|row| row[k]).sum()
    }

    /// TP / predicted; 0 when the class was never predicted.
    pub fn precision_k(&self, k: usize) -> f64 {
        let predicted = self.predicted_k(k);
        if predicted == 0 {
            0.0
        } else {
            self.cells[k][k] as f64 / predicted as f64
        }
    }

    /// TP / support; 0 when the class has no scored reports.
    pub fn recall_k(&self, k: usize) -> f64 {
        let support = self.support_k(k);
        if support == 0 {
            0.0
        } else {
            self.cells[k][k] as f64 / support as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacroMetrics {
    pub precision: f64,
    pub recall: f64,
    /// Harmonic mean of macro precision and macro recall.
    pub f1: f64,
    /// Uniform mean of per-class F1 scores, emitted alongside for
    /// transparency; not the reported headline figure.
    pub f1_mean_per_class: f64,
    pub support: usize,
}

/// Macro precision/recall over the K true classes, with macro F1 as the
/// harmonic mean of the two macro averages.
pub fn macro_metrics(
    outcomes: &[StrategyOutcome],
    truths: &BTreeMap<String, Label>,
    task: &TaskSpec,
) -> Result<(MacroMetrics, ConfusionMatrix), MetricsError> {
    let missing: Vec<String> = outcomes
        .iter()
        .filter(|o| !truths.contains_key(&o.report_id))
        .map(|o| o.report_id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(MetricsError::NoGroundTruth(missing));
    }

    let mut matrix = ConfusionMatrix::new(task);
    for outcome in outcomes {
        matrix.record(&truths[&outcome.report_id], &outcome.final_label);
    }

    let k = task.k();
    let precision = (0..k).map(|i| matrix.precision_k(i)).sum::<f64>() / k as f64;
    let recall = (0..k).map(|i| matrix.recall_k(i)).sum::<f64>() / k as f64;
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    let f1_mean_per_class = (0..k)
        .map(|i| {
            let p = matrix.precision_k(i);
            let r = matrix.recall_k(i);
            if p + r == 0.0 {
                0.0
            } else {
                2.0 * p * r / (p + r)
            }
        })
        .sum::<f64>()
        / k as f64;

    let metrics = MacroMetrics { precision, recall, f1, f1_mean_per_class, support: matrix.total() };
    Ok((metrics, matrix))
}

/// Logarithm base for entropy; natural log by default, base 2 available for
/// sensitivity checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[derive(Default)]
pub enum LogBase {
    #[default]
    Natural,
    Base2,
}


impl LogBase {
    fn log(&self, x: f64) -> f64 {
        match self {
            LogBase::Natural => x.ln(),
            LogBase::Base2 => x.log2(),
        }
    }
}

/// Shannon entropy of the label frequency distribution among parseable
/// samples. A set with at most one distinct parseable label has entropy 0.
pub fn report_entropy(set: &SampleSet, base: LogBase) -> Result<f64, MetricsError> {
    if set.samples.is_empty() {
        return Err(MetricsError::EmptySampleSet(set.report_id.clone()));
    }
    let mut counts: BTreeMap<&Label, usize> = BTreeMap::new();
    for sample in &set.samples {
        if let Prediction::Label(l) = &sample.label {
            *counts.entry(l).or_default() += 1;
        }
    }
    let n: usize = counts.values().sum();
    if n == 0 {
        return Ok(0.0);
    }
    let entropy = counts
        .values()
        .map(|&c| {
            let f = c as f64 / n as f64;
            -f * base.log(f)
        })
        .sum::<f64>();
    // -0.0 from a point distribution normalizes to 0.0
    Ok(entropy + 0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyStats {
    /// Per-report entropies keyed by report id, in input order.
    pub entropies: Vec<(String, f64)>,
    pub mean: f64,
    /// Sample standard deviation (n-1 denominator).
    pub std_deviation: f64,
    pub n: usize,
}

/// Mean and sample standard deviation of per-report entropy.
pub fn consistency(sets: &[&SampleSet], base: LogBase) -> Result<ConsistencyStats, MetricsError> {
    let mut entropies = Vec::with_capacity(sets.len());
    for set in sets {
        entropies.push((set.report_id.clone(), report_entropy(set, base)?));
    }
    let n = entropies.len();
    let mean = entropies.iter().map(|(_, e)| e).sum::<f64>() / n.max(1) as f64;
    let std_deviation = if n > 1 {
        let ss: f64 = entropies.iter().map(|(_, e)| (e - mean).powi(2)).sum();
        (ss / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(ConsistencyStats { entropies, mean, std_deviation, n })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub t_statistic: f64,
    pub degrees_of_freedom: usize,
    /// Two-sided p-value.
    pub p_value: f64,
}

/// Standard paired t-test over aligned vectors: t = mean(d) / (sd(d)/sqrt(N)).
/// Callers must align the vectors by report id before pairing.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTestResult, MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::LengthMismatch(a.len(), b.len()));
    }
    let n = a.len();
    if n < 2 {
        return Err(MetricsError::ZeroVariance);
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let ss: f64 = diffs.iter().map(|d| (d - mean).powi(2)).sum();
    let sd = (ss / (n - 1) as f64).sqrt();
    if sd == 0.0 {
        return Err(MetricsError::ZeroVariance);
    }
    let t_statistic = mean / (sd / (n as f64).sqrt());
    let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("valid dof");
    let p_value = 2.0 * dist.sf(t_statistic.abs());
    Ok(TTestResult { t_statistic, degrees_of_freedom: n - 1, p_value })
}

/// The five-way typing of a sampled report against its ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ReportType {
    /// All predictions correct.
    CC,
    /// Correct label is a strict plurality, with at least one incorrect.
    MC,
    /// Correct label count ties an incorrect label's count at the maximum.
    Tie,
    /// Some correct predictions, but an incorrect label has more.
    MI,
    /// No correct predictions (including all-Unparseable).
    CI,
}

impl ReportType {
    pub const ALL: [ReportType; 5] =
        [ReportType::CC, ReportType::MC, ReportType::Tie, ReportType::MI, ReportType::CI];

    pub fn index(&self) -> usize {
        Self::ALL.iter().position(|t| t == self).expect("member of ALL")
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ReportType::CC => "CC",
            ReportType::MC => "MC",
            ReportType::Tie => "Tie",
            ReportType::MI => "MI",
            ReportType::CI => "CI",
        }
    }
}

/// Classifies a sample set by comparing per-label counts against the ground
/// truth. Counts are over parseable samples only.
pub fn classify_report_type(set: &SampleSet, ground_truth: &Label) -> ReportType {
    let mut counts: BTreeMap<&Label, usize> = BTreeMap::new();
    for sample in &set.samples {
        if let Prediction::Label(l) = &sample.label {
            *counts.entry(l).or_default() += 1;
        }
    }
    let n: usize = counts.values().sum();
    let g = counts.get(ground_truth).copied().unwrap_or(0);
    let max_other = counts
        .iter()
        .filter(|(l, _)| **l != ground_truth)
        .map(|(_, c)| *c)
        .max()
        .unwrap_or(0);

    if g == 0 {
        ReportType::CI
    } else if g == n {
        ReportType::CC
    } else if g > max_other {
        ReportType::MC
    } else if g == max_other {
        ReportType::Tie
    } else {
        ReportType::MI
    }
}

/// 5x5 counts of report type under the self-consistency run (rows) against
/// the ensemble run (columns), restricted to inconsistent reports.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    pub counts: [[usize; 5]; 5],
}

impl TransitionMatrix {
    pub fn increment(&mut self, before: ReportType, after: ReportType) {
        self.counts[before.index()][after.index()] += 1;
    }

    pub fn row_sum(&self, before: ReportType) -> usize {
        self.counts[before.index()].iter().sum()
    }

    /// Row-normalized fractions for plotting; all-zero rows stay zero.
    pub fn row_normalized(&self) -> [[f64; 5]; 5] {
        let mut out = [[0.0; 5]; 5];
        for (i, row) in self.counts.iter().enumerate() {
            let total: usize = row.iter().sum();
            if total > 0 {
                for (j, &c) in row.iter().enumerate() {
                    out[i][j] = c as f64 / total as f64;
                }
            }
        }
        out
    }
}

/// Tallies type-before against type-after over the inconsistent reports.
pub fn transition_matrix(
    zscotsc: &[&SampleSet],
    ensreas: &[&SampleSet],
    partition: &Partition,
    truths: &BTreeMap<String, Label>,
) -> Result<TransitionMatrix, MetricsError> {
    let before: BTreeMap<&str, &SampleSet> =
        zscotsc.iter().map(|s| (s.report_id.as_str(), *s)).collect();
    let after: BTreeMap<&str, &SampleSet> =
        ensreas.iter().map(|s| (s.report_id.as_str(), *s)).collect();

    let mut matrix = TransitionMatrix::default();
    for id in &partition.inconsistent {
        let b = before.get(id.as_str()).ok_or_else(|| MetricsError::MissingReport(id.clone()))?;
        let a = after.get(id.as_str()).ok_or_else(|| MetricsError::MissingReport(id.clone()))?;
        let truth = truths.get(id).ok_or_else(|| MetricsError::MissingReport(id.clone()))?;
        matrix.increment(classify_report_type(b, truth), classify_report_type(a, truth));
    }
    Ok(matrix)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consensus::majority_vote;
    use crate::domain::{Sample, Strategy};

    fn set(labels: &[&str]) -> SampleSet {
        SampleSet {
            report_id: "r".into(),
            strategy: Strategy::ZsCotSc,
            samples: labels
                .iter()
                .enumerate()
                .map(|(i, l)| Sample {
                    index: i,
                    reasoning: String::new(),
                    label: if *l == "?" {
                        Prediction::Unparseable
                    } else {
                        Prediction::Label((*l).into())
                    },
                    raw_text: String::new(),
                })
                .collect(),
        }
    }

    fn outcome(id: &str, predicted: &str) -> StrategyOutcome {
        let mut s = set(&[predicted]);
        s.report_id = id.into();
        let vote = majority_vote(&s);
        StrategyOutcome {
            report_id: id.into(),
            strategy: Strategy::ZsCotSc,
            final_label: vote.winner.clone(),
            vote,
            samples: s,
        }
    }

    #[test]
    fn perfect_classifier_scores_ones() {
        let task = TaskSpec::t();
        let mut truths = BTreeMap::new();
        let mut outcomes = Vec::new();
        for (i, label) in ["T1", "T2", "T3", "T4"].iter().enumerate() {
            let id = format!("r{i}");
            truths.insert(id.clone(), Label::from(*label));
            outcomes.push(outcome(&id, label));
        }
        let (m, _) = macro_metrics(&outcomes, &truths, &task).unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));
        assert_eq!(m.support, 4);
    }

    // Frozen from an independent hand tally of this confusion matrix:
    //   truths: T1 x3 (2 predicted T1, 1 predicted T2), T2 x1 correct,
    //   T3 x1 correct, T4 x1 correct.
    //   precision: T1 2/2=1, T2 1/2=0.5, T3 1, T4 1 -> macro 0.875
    //   recall:    T1 2/3,   T2 1,       T3 1, T4 1 -> macro 11/12
    //   macro F1 = 2*0.875*(11/12)/(0.875+11/12)
    #[test]
    fn hand_tallied_confusion_matrix() {
        let task = TaskSpec::t();
        let mut truths = BTreeMap::new();
        let mut outcomes = Vec::new();
        let cases = [
            ("a", "T1", "T1"),
            ("b", "T1", "T1"),
            ("c", "T1", "T2"),
            ("d", "T2", "T2"),
            ("e", "T3", "T3"),
            ("f", "T4", "T4"),
        ];
        for (id, truth, predicted) in cases {
            truths.insert(id.to_string(), Label::from(truth));
            outcomes.push(outcome(id, predicted));
        }
        let (m, matrix) = macro_metrics(&outcomes, &truths, &task).unwrap();
        let expected_p = 0.875;
        let expected_r = 11.0 / 12.0;
        let expected_f1 = 2.0 * expected_p * expected_r / (expected_p + expected_r);
        assert!((m.precision - expected_p).abs() < 1e-12);
        assert!((m.recall - expected_r).abs() < 1e-12);
        assert!((m.f1 - expected_f1).abs() < 1e-12);
        assert_eq!(matrix.total(), 6);
    }

    #[test]
    fn harmonic_macro_f1_differs_from_mean_per_class_f1_on_skew() {
        let task = TaskSpec::t();
        let mut truths = BTreeMap::new();
        let mut outcomes = Vec::new();
        let cases = [
            ("a", "T1", "T1"),
            ("b", "T1", "T2"),
            ("c", "T2", "T2"),
            ("d", "T3", "T1"),
            ("e", "T4", "T4"),
        ];
        for (id, truth, predicted) in cases {
            truths.insert(id.to_string(), Label::from(truth));
            outcomes.push(outcome(id, predicted));
        }
        let (m, _) = macro_metrics(&outcomes, &truths, &task).unwrap();
        assert!((m.f1 - m.f1_mean_per_class).abs() > 1e-6);
        // Harmonic-mean definition, recomputed directly.
        assert!((m.f1 - 2.0 * m.precision * m.recall / (m.precision + m.recall)).abs() < 1e-15);
    }

    #[test]
    fn missing_ground_truth_is_an_error() {
        let task = TaskSpec::t();
        let truths = BTreeMap::new();
        let err = macro_metrics(&[outcome("a", "T1")], &truths, &task).unwrap_err();
        assert_eq!(err, MetricsError::NoGroundTruth(vec!["a".into()]));
    }

    #[test]
    fn entropy_values() {
        assert_eq!(report_entropy(&set(&["T1"; 10]), LogBase::Natural).unwrap(), 0.0);
        let half = report_entropy(&set(&["T1", "T1", "T1", "T1", "T1", "T2", "T2", "T2", "T2", "T2"]), LogBase::Natural).unwrap();
        assert!((half - std::f64::consts::LN_2).abs() < 1e-12);
        let seventy = report_entropy(&set(&["T1", "T1", "T1", "T1", "T1", "T1", "T1", "T2", "T2", "T2"]), LogBase::Natural).unwrap();
        assert!((seventy - 0.6108643020548935).abs() < 1e-12);
    }

    #[test]
    fn entropy_base2() {
        let half = report_entropy(&set(&["T1", "T2"]), LogBase::Base2).unwrap();
        assert!((half - 1.0).abs() < 1e-12);
    }

    #[test]
    fn entropy_empty_set_errors_and_all_unparseable_is_zero() {
        let empty = SampleSet { report_id: "r".into(), strategy: Strategy::ZsCotSc, samples: vec![] };
        assert!(matches!(
            report_entropy(&empty, LogBase::Natural),
            Err(MetricsError::EmptySampleSet(_))
        ));
        assert_eq!(report_entropy(&set(&["?"; 10]), LogBase::Natural).unwrap(), 0.0);
    }

    #[test]
    fn consistency_stats_mean_and_sd() {
        let a = set(&["T1"; 10]);
        let b = set(&["T1", "T1", "T1", "T1", "T1", "T2", "T2", "T2", "T2", "T2"]);
        let stats = consistency(&[&a, &b], LogBase::Natural).unwrap();
        assert_eq!(stats.n, 2);
        let expected_mean = std::f64::consts::LN_2 / 2.0;
        assert!((stats.mean - expected_mean).abs() < 1e-12);
        // sd of {0, ln2} with n-1 denominator = ln2 / sqrt(2)
        assert!((stats.std_deviation - std::f64::consts::LN_2 / 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn paired_t_hand_computed() {
        // d = [1,2,3,4]: mean 2.5, sd 1.290994, t = 2.5/(1.290994/2)
        let r = paired_t_test(&[1.0, 2.0, 3.0, 4.0], &[0.0, 0.0, 0.0, 0.0]).unwrap();
        assert!((r.t_statistic - 3.872983346207417).abs() < 1e-9);
        assert_eq!(r.degrees_of_freedom, 3);
        // Independent oracle value (scipy.stats.ttest_rel): p = 0.030466291662
        assert!((r.p_value - 0.030466291662170977).abs() < 1e-9);
    }

    #[test]
    fn paired_t_degenerate_inputs() {
        assert_eq!(
            paired_t_test(&[1.0, 2.0], &[0.0, 1.0]).unwrap_err(),
            MetricsError::ZeroVariance
        );
        assert_eq!(
            paired_t_test(&[1.0], &[1.0, 2.0]).unwrap_err(),
            MetricsError::LengthMismatch(1, 2)
        );
    }

    #[test]
    fn report_type_examples() {
        let truth = Label::from("T1");
        assert_eq!(classify_report_type(&set(&["T1"; 10]), &truth), ReportType::CC);
        assert_eq!(
            classify_report_type(&set(&["T1", "T1", "T1", "T1", "T1", "T1", "T2", "T2", "T2", "T2"]), &truth),
            ReportType::MC
        );
        assert_eq!(
            classify_report_type(&set(&["T1", "T1", "T1", "T1", "T2", "T2", "T2", "T2", "T3", "T3"]), &truth),
            ReportType::Tie
        );
        assert_eq!(
            classify_report_type(&set(&["T1", "T1", "T2", "T2", "T2", "T2", "T2", "T2", "T2", "T2"]), &truth),
            ReportType::MI
        );
        assert_eq!(classify_report_type(&set(&["T2"; 10]), &truth), ReportType::CI);
        assert_eq!(classify_report_type(&set(&["?"; 10]), &truth), ReportType::CI);
    }

    #[test]
    fn type_totality_over_all_compositions() {
        // Every composition of 10 samples into
        // {truth, wrong A, wrong B, wrong C, Unparseable} yields exactly one
        // type. CC requires all parseable samples correct with at least one
        // parseable; CI requires zero correct.
        let truth = Label::from("T1");
        let mut total = 0usize;
        let mut cc = 0usize;
        let mut ci = 0usize;
        for g in 0..=10usize {
            for a in 0..=(10 - g) {
                for b in 0..=(10 - g - a) {
                    for c in 0..=(10 - g - a - b) {
                        let u = 10 - g - a - b - c;
                        total += 1;
                        let mut labels = Vec::new();
                        labels.extend(std::iter::repeat_n("T1", g));
                        labels.extend(std::iter::repeat_n("T2", a));
                        labels.extend(std::iter::repeat_n("T3", b));
                        labels.extend(std::iter::repeat_n("T4", c));
                        labels.extend(std::iter::repeat_n("?", u));
                        let ty = classify_report_type(&set(&labels), &truth);
                        match ty {
                            ReportType::CC => cc += 1,
                            ReportType::CI => ci += 1,
                            _ => {}
                        }
                    }
                }
            }
        }
        assert_eq!(total, 1001);
        // CC: g in 1..=10, all of a,b,c zero, u = 10-g -> 10 compositions.
        assert_eq!(cc, 10);
        // CI: g == 0 -> C(13,3) = 286 compositions.
        assert_eq!(ci, 286);
    }

    #[test]
    fn entropy_and_type_are_permutation_invariant() {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(5);
        let truth = Label::from("T1");
        let mut labels = vec!["T1", "T1", "T1", "T2", "T2", "T3", "?", "T1", "T2", "T4"];
        let base_entropy = report_entropy(&set(&labels), LogBase::Natural).unwrap();
        let base_type = classify_report_type(&set(&labels), &truth);
        for _ in 0..100 {
            labels.shuffle(&mut rng);
            let s = set(&labels);
            assert!((report_entropy(&s, LogBase::Natural).unwrap() - base_entropy).abs() < 1e-12);
            assert_eq!(classify_report_type(&s, &truth), base_type);
        }
    }

    #[test]
    fn transition_matrix_single_increment_and_vacuous_case() {
        let truth = Label::from("T1");
        let mut truths = BTreeMap::new();
        truths.insert("r".to_string(), truth);
        let mut before = set(&["T1", "T1", "T1", "T1", "T1", "T1", "T2", "T2", "T2", "T2"]);
        before.report_id = "r".into();
        let mut after = set(&["T1"; 10]);
        after.report_id = "r".into();

        let mut partition = Partition::default();
        partition.inconsistent.insert("r".into());
        let m = transition_matrix(&[&before], &[&after], &partition, &truths).unwrap();
        assert_eq!(m.counts[ReportType::MC.index()][ReportType::CC.index()], 1);
        assert_eq!(m.counts.iter().flatten().sum::<usize>(), 1);
        assert_eq!(m.row_sum(ReportType::MC), 1);
        assert_eq!(m.row_normalized()[ReportType::MC.index()][ReportType::CC.index()], 1.0);

        let empty = transition_matrix(&[&before], &[&after], &Partition::default(), &truths).unwrap();
        assert_eq!(empty.counts.iter().flatten().sum::<usize>(), 0);
    }

    #[test]
    fn transition_matrix_missing_report() {
        let mut partition = Partition::default();
        partition.inconsistent.insert("ghost".into());
        let err = transition_matrix(&[], &[], &partition, &BTreeMap::new()).unwrap_err();
        assert_eq!(err, MetricsError::MissingReport("ghost".into()));
    }
}
