//! Parsing a free-text completion into a canonical stage label.
//!
//! Completions conclude with the answer, so a final-answer anchor
//! ("answer is", "stage:") is preferred when present, falling back to the
//! last in-vocabulary mention. Sub-stages (T1c, pN2a) normalize to the major
//! stage; off-vocabulary mentions (T0, Tis, NX) are ignored.

use regex::Regex;

use crate::domain::{Label, Prediction, SampleSet, TaskSpec};

/// Compiled matching rules for one task's label vocabulary.
pub struct ExtractionRule {
    task: TaskSpec,
    label_pattern: Regex,
    anchor_pattern: Regex,
}

impl ExtractionRule {
    pub fn new(task: &TaskSpec) -> Self {
        // Digits admitted by the vocabulary, e.g. [1-4] for T, [0-3] for N.
        let digits: String = task
            .labels
            .iter()
            .filter_map(|l| l.as_str().chars().nth(1))
            .collect();
        let letter = task.name.to_string();
        let label_pattern = Regex::new(&format!(
            r"(?i)\bp?({letter}[{digits}])(?:a|b|c|mi)?\b"
        ))
        .expect("label pattern");
        let anchor_pattern =
            Regex::new(r"(?i)answer is|answer:|stage is|stage:").expect("anchor pattern");
        ExtractionRule { task: task.clone(), label_pattern, anchor_pattern }
    }

    /// Canonical label of the concluding stage mention, or Unparseable.
    pub fn extract(&self, text: &str) -> Prediction {
        if let Some(anchor) = self.anchor_pattern.find_iter(text).last() {
            let tail = &text[anchor.end()..];
            if let Some(cap) = self.label_pattern.captures(tail) {
                return self.canonicalize(&cap[1]);
            }
        }
        match self.label_pattern.captures_iter(text).last() {
            Some(cap) => self.canonicalize(&cap[1]),
            None => Prediction::Unparseable,
        }
    }

    fn canonicalize(&self, matched: &str) -> Prediction {
        let upper = matched.to_ascii_uppercase();
        let label = Label(upper);
        debug_assert!(self.task.contains(&label));
        Prediction::Label(label)
    }
}

/// Convenience wrapper compiling the rule per call; callers on hot paths
/// should hold an [`ExtractionRule`].
pub fn extract_label(text: &str, task: &TaskSpec) -> Prediction {
    ExtractionRule::new(task).extract(text)
}

/// Fills each sample's label from its raw text; order and count preserved.
pub fn extract_all(mut sample_set: SampleSet, task: &TaskSpec) -> SampleSet {
    let rule = ExtractionRule::new(task);
    for sample in &mut sample_set.samples {
        sample.label = rule.extract(&sample.raw_text);
    }
    sample_set
}
