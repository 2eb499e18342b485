//! Deterministic rendering of the four prompt kinds. Rendering is a pure
//! function of its inputs; golden copies of each rendered form live in the
//! test corpus.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{Label, ReasoningGroups, Report, TaskSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PromptKind {
    ZsDirect,
    CotReasoning,
    CotAnswer,
    EnsReasPanel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CotPhase {
    Reasoning,
    Answer,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedPrompt {
    pub kind: PromptKind,
    pub text: String,
    /// Distinct labels referenced by a panel prompt; empty for other kinds.
    pub referenced_labels: Vec<Label>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("answer phase requires a reasoning context")]
    MissingContext,
    #[error("panel prompt requires at least two reasoning groups, got {0}")]
    SingleGroup(usize),
}

const STEP_BY_STEP_CUE: &str = "Let's think step by step";

fn task_header(task: &TaskSpec) -> String {
    format!(
        "You are reviewing a pathology report to determine the pathologic {} stage.",
        task.name
    )
}

fn vocabulary_line(task: &TaskSpec) -> String {
    let labels: Vec<&str> = task.labels.iter().map(|l| l.as_str()).collect();
    format!("The possible stages are: {}.", labels.join(", "))
}

/// Direct zero-shot prompt: report, label vocabulary, and an instruction to
/// answer with exactly one bare label.
pub fn render_zs(report: &Report, task: &TaskSpec) -> RenderedPrompt {
    let text = format!(
        "{header}\n\nReport:\n{report}\n\n{vocab}\nAnswer with exactly one of these labels and nothing else.\nAnswer:",
        header = task_header(task),
        report = report.text,
        vocab = vocabulary_line(task),
    );
    RenderedPrompt { kind: PromptKind::ZsDirect, text, referenced_labels: Vec::new() }
}

/// Two-phase chain-of-thought prompt. The reasoning phase ends with the
/// literal step-by-step cue; the answer phase embeds the generated reasoning
/// verbatim and requests a single label.
pub fn render_cot(
    report: &Report,
    task: &TaskSpec,
    phase: CotPhase,
    reasoning_context: Option<&str>,
) -> Result<RenderedPrompt, PromptError> {
    let text = match phase {
        CotPhase::Reasoning => format!(
            "{header}\n\nReport:\n{report}\n\n{vocab}\n{cue}",
            header = task_header(task),
            report = report.text,
            vocab = vocabulary_line(task),
            cue = STEP_BY_STEP_CUE,
        ),
        CotPhase::Answer => {
            let context = reasoning_context.ok_or(PromptError::MissingContext)?;
            format!(
                "{header}\n\nReport:\n{report}\n\nReasoning:\n{context}\n\n{vocab}\nBased on the reasoning above, answer with exactly one of these labels and nothing else.\nAnswer:",
                header = task_header(task),
                report = report.text,
                vocab = vocabulary_line(task),
            )
        }
    };
    let kind = match phase {
        CotPhase::Reasoning => PromptKind::CotReasoning,
        CotPhase::Answer => PromptKind::CotAnswer,
    };
    Ok(RenderedPrompt { kind, text, referenced_labels: Vec::new() })
}

/// Panel prompt for inconsistent reports: the report, each predicted label
/// with its grouped reasonings in canonical label order, the reviewer
/// instructions with the majority-vote caution, ending with
/// "The correct answer is". Labels with zero support are omitted.
pub fn render_panel(
    report: &Report,
    groups: &ReasoningGroups,
    task: &TaskSpec,
) -> Result<RenderedPrompt, PromptError> {
    if groups.groups.len() < 2 {
        return Err(PromptError::SingleGroup(groups.groups.len()));
    }

    let ordered = groups.ordered_labels(task);
    let mut blocks = String::new();
    for label in &ordered {
        blocks.push_str(&format!("{label}:\n"));
        let reasonings = &groups.groups[*label];
        for (i, reasoning) in reasonings.iter().enumerate() {
            if i > 0 {
                blocks.push('\n');
            }
            blocks.push_str(&format!("{}. {}\n", i + 1, reasoning));
        }
        blocks.push('\n');
    }

    let text = format!(
        "Report: {report}\n\n\
         Panel Responses:\n\n\
         {blocks}\
         You are provided with the pathology report and the chosen answers from the panel of experts with the corresponding reasonings.\n\
         The reasonings provided by the experts are aggregated by chosen answer.\n\n\
         Please review each report. Analyze the reasonings provided by the panel for the chosen answers.\n\
         Keep in mind that the majority vote may not be the correct one, therefore you should review report carefully in addition to considering the panel reasonings.\n\n\
         The correct answer is",
        report = report.text,
        blocks = blocks,
    );

    Ok(RenderedPrompt {
        kind: PromptKind::EnsReasPanel,
        text,
        referenced_labels: ordered.into_iter().cloned().collect(),
    })
}
