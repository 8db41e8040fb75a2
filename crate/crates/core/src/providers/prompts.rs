//! Prompt templates for LLM-backed providers.
//!
//! Templates use `{{name}}` placeholders. The claim-writing template has no
//! placeholders; its per-page budget travels in the payload as
//! `page.max_claim_units`.

use std::collections::BTreeMap;

use regex::Regex;
use std::sync::OnceLock;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PromptError {
    #[error("unknown prompt {0:?}")]
    UnknownPrompt(String),
    #[error("prompt {prompt} needs a value for {{{{{variable}}}}}")]
    MissingVariable { prompt: String, variable: String },
}

pub const PROMPT_NAMES: [&str; 4] = ["handle_extraction", "pivot_extraction", "claim_writing", "bundle_selection"];

fn source(name: &str) -> Option<&'static str> {
    Some(match name {
        "handle_extraction" => include_str!("../../assets/prompts/handle_extraction.txt"),
        "pivot_extraction" => include_str!("../../assets/prompts/pivot_extraction.txt"),
        "claim_writing" => include_str!("../../assets/prompts/claim_writing.txt"),
        "bundle_selection" => include_str!("../../assets/prompts/bundle_selection.txt"),
        _ => return None,
    })
}

fn placeholder() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\{\{([A-Za-z_][A-Za-z0-9_.]*)\}\}").expect("valid regex"))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptAsset {
    pub name: String,
    pub template_text: String,
    /// Placeholder names in order of first appearance.
    pub variables: Vec<String>,
}

impl PromptAsset {
    pub fn parse(name: &str, template_text: &str) -> Self {
        let mut variables: Vec<String> = Vec::new();
        for c in placeholder().captures_iter(template_text) {
            let v = c[1].to_string();
            if !variables.contains(&v) {
                variables.push(v);
            }
        }
        Self { name: name.to_string(), template_text: template_text.to_string(), variables }
    }

    pub fn load(name: &str) -> Result<Self, PromptError> {
        source(name).map(|t| Self::parse(name, t)).ok_or_else(|| PromptError::UnknownPrompt(name.to_string()))
    }

    pub fn all() -> Vec<Self> {
        PROMPT_NAMES.iter().map(|n| Self::load(n).expect("shipped prompt")).collect()
    }

    /// Substitutes every placeholder. Text outside placeholders is untouched.
    pub fn render(&self, vars: &BTreeMap<String, String>) -> Result<String, PromptError> {
        if let Some(missing) = self.variables.iter().find(|v| !vars.contains_key(*v)) {
            return Err(PromptError::MissingVariable { prompt: self.name.clone(), variable: missing.clone() });
        }
        Ok(placeholder()
            .replace_all(&self.template_text, |c: &regex::Captures<'_>| vars[&c[1]].clone())
            .into_owned())
    }
}

fn number_word(n: usize) -> String {
    const WORDS: [&str; 11] = ["zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten"];
    WORDS.get(n).map_or_else(|| n.to_string(), |w| w.to_string())
}

/// Default placeholder values; `Bundle_max` is the selection budget.
pub fn default_variables(select_budget: usize) -> BTreeMap<String, String> {
    let mut m = BTreeMap::new();
    for (prefix, usual, max) in [("handle", 3, 5), ("pivot", 3, 5)] {
        m.insert(format!("{prefix}_usual_max"), usual.to_string());
        m.insert(format!("{prefix}_max"), max.to_string());
        m.insert(format!("{prefix}_max_word"), number_word(max));
    }
    m.insert("Bundle_max".into(), select_budget.to_string());
    m
}
