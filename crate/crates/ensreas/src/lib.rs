//! Classifies pathologic T and N cancer stages from free-text pathology
//! reports with an LLM, via zero-shot, zero-shot chain-of-thought,
//! self-consistency, and consistency-aware ensemble reasoning, plus the
//! evaluation suite (macro metrics, entropy consistency, paired t-test,
//! report-type transitions).

pub mod backends;
pub mod cli;
pub mod consensus;
pub mod domain;
pub mod extraction;
pub mod metrics;
pub mod prompts;
