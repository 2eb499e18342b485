//! Deterministic simulated backend. Each report is scripted with a
//! categorical distribution over stage answers, optionally shifted for panel
//! prompts. Draws are seeded per request from the global seed plus the
//! request digest, so full transcripts are identical for a given seed
//! regardless of worker count or completion order.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Backend, BackendError, Decoding, GenerationRequest, GenerationResponse};

/// Categorical distribution over answer labels. Weights need not sum to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptedDistribution {
    pub choices: Vec<(String, f64)>,
}

impl ScriptedDistribution {
    pub fn point(label: &str) -> Self {
        ScriptedDistribution { choices: vec![(label.to_string(), 1.0)] }
    }

    pub fn weighted(choices: &[(&str, f64)]) -> Self {
        ScriptedDistribution {
            choices: choices.iter().map(|(l, w)| (l.to_string(), *w)).collect(),
        }
    }

    fn total(&self) -> f64 {
        self.choices.iter().map(|(_, w)| w).sum()
    }

    /// Sampled draw.
    fn draw(&self, rng: &mut ChaCha20Rng) -> &str {
        let mut u = rng.gen::<f64>() * self.total();
        for (label, weight) in &self.choices {
            if u < *weight {
                return label;
            }
            u -= weight;
        }
        &self.choices.last().expect("non-empty distribution").0
    }

    /// Greedy draw: first choice of maximal weight.
    fn argmax(&self) -> &str {
        let mut best = self.choices.first().expect("non-empty distribution");
        for choice in &self.choices[1..] {
            if choice.1 > best.1 {
                best = choice;
            }
        }
        &best.0
    }
}

/// Per-report script: the report text used to recognize prompts, the base
/// answer distribution, and an optional distribution for panel prompts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptEntry {
    pub report_text: String,
    pub base: ScriptedDistribution,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub panel: Option<ScriptedDistribution>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Script {
    pub entries: HashMap<String, ScriptEntry>,
}

impl Script {
    pub fn insert(&mut self, report_id: &str, entry: ScriptEntry) {
        self.entries.insert(report_id.to_string(), entry);
    }

    /// Resolves the report a prompt was rendered from by locating its text.
    /// The longest matching text wins when one report's text contains
    /// another's.
    fn resolve<'a>(&'a self, prompt: &str) -> Option<(&'a str, &'a ScriptEntry)> {
        self.entries
            .iter()
            .filter(|(_, e)| prompt.contains(&e.report_text))
            .max_by_key(|(_, e)| e.report_text.len())
            .map(|(id, e)| (id.as_str(), e))
    }
}

enum PromptClass {
    Panel,
    Reasoning,
    Answer,
}

fn classify(prompt: &str) -> PromptClass {
    if prompt.contains("Panel Responses:") {
        PromptClass::Panel
    } else if prompt.trim_end().ends_with("Let's think step by step") {
        PromptClass::Reasoning
    } else {
        PromptClass::Answer
    }
}

pub struct SimBackend {
    script: Script,
    seed: u64,
    calls: AtomicU64,
}

impl SimBackend {
    pub fn new(script: Script, seed: u64) -> Self {
        SimBackend { script, seed, calls: AtomicU64::new(0) }
    }

    fn rng_for(&self, request: &GenerationRequest) -> ChaCha20Rng {
        let mut hasher = Sha256::new();
        hasher.update(self.seed.to_le_bytes());
        hasher.update(request.prompt.as_bytes());
        hasher.update(request.sample_index.to_le_bytes());
        if let Decoding::Sampled { temperature, top_p } = request.decoding {
            hasher.update(temperature.to_le_bytes());
            hasher.update(top_p.to_le_bytes());
        }
        ChaCha20Rng::from_seed(hasher.finalize().into())
    }

    fn pick(&self, dist: &ScriptedDistribution, request: &GenerationRequest) -> String {
        match request.decoding {
            Decoding::Greedy => dist.argmax().to_string(),
            Decoding::Sampled { .. } => dist.draw(&mut self.rng_for(request)).to_string(),
        }
    }
}

/// Scans a chain-of-thought answer prompt for the label concluded by the
/// embedded reasoning, so the answer phase stays coherent with the reasoning
/// phase.
fn concluded_label(prompt: &str) -> Option<&str> {
    let start = prompt.find("Reasoning:\n")? + "Reasoning:\n".len();
    let section = &prompt[start..];
    let end = section.find("\n\nThe possible stages").unwrap_or(section.len());
    let section = &section[..end];
    let anchor = section.rfind("stage is ")? + "stage is ".len();
    let tail = &section[anchor..];
    let token_end = tail
        .find(|c: char| !c.is_ascii_alphanumeric())
        .unwrap_or(tail.len());
    Some(&tail[..token_end])
}

impl Backend for SimBackend {
    fn id(&self) -> &str {
        "sim"
    }

    fn generate(&self, request: &GenerationRequest) -> Result<GenerationResponse, BackendError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        let (_, entry) = self
            .script
            .resolve(&request.prompt)
            .ok_or_else(|| BackendError::MissingScriptEntry(summarize(&request.prompt)))?;

        let text = match classify(&request.prompt) {
            PromptClass::Panel => {
                let dist = entry.panel.as_ref().unwrap_or(&entry.base);
                let label = self.pick(dist, request);
                format!("After weighing the panel reasonings against the report, the correct answer is {label}.")
            }
            PromptClass::Reasoning => {
                let label = self.pick(&entry.base, request);
                format!(
                    "Step by step, the findings are compared against each stage definition. \
                     The measurements and involvement described best match {label}. \
                     Therefore the stage is {label}."
                )
            }
            PromptClass::Answer => {
                // Chain-of-thought answer prompts echo the stage concluded by
                // the embedded reasoning; direct prompts draw fresh.
                let label = match concluded_label(&request.prompt) {
                    Some(l) => l.to_string(),
                    None => self.pick(&entry.base, request),
                };
                format!("The stage is {label}.")
            }
        };

        Ok(GenerationResponse { text, cached: false, latency_ms: 0, attempt_count: 1 })
    }

    fn call_count(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }
}

fn summarize(prompt: &str) -> String {
    let head: String = prompt.chars().take(80).collect();
    format!("prompt starting {head:?}")
}
