//! Named pipeline profiles and the flat `key = value` config format.

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::compiler::{CompileConfig, PagePolicy, SentenceSplitter};
use crate::engine::{AblationFlags, EngineConfig};
use crate::exec::ExecMode;
use crate::retrieval::RetrievalConfig;
use crate::utilization::UtilizationConfig;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("unknown profile {0:?} (expected locomo_default or beam_default)")]
    UnknownProfile(String),
    #[error("config line {line}: {reason}")]
    Line { line: usize, reason: String },
    #[error("unknown ablation flag {0:?}")]
    UnknownAblation(String),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileName {
    LocomoDefault,
    BeamDefault,
    Custom,
}

impl ProfileName {
    pub fn name(self) -> &'static str {
        match self {
            ProfileName::LocomoDefault => "locomo_default",
            ProfileName::BeamDefault => "beam_default",
            ProfileName::Custom => "custom",
        }
    }
}

impl fmt::Display for ProfileName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineProfile {
    pub name: ProfileName,
    pub compile: CompileConfig,
    pub retrieval: RetrievalConfig,
    pub utilization: UtilizationConfig,
    pub ablation: AblationFlags,
}

impl PipelineProfile {
    fn sized(name: ProfileName, claims: usize, m: usize, x: usize) -> Self {
        Self {
            name,
            compile: CompileConfig { max_claims_per_page: claims, ..Default::default() },
            retrieval: RetrievalConfig { per_route_k: m, ..Default::default() },
            utilization: UtilizationConfig { pool_m: m, rerank_keep_k: m, select_budget_x: x, ..Default::default() },
            ablation: AblationFlags::none(),
        }
    }

    /// 12 claims per page, M = K = 32, X = 6.
    pub fn locomo_default() -> Self {
        Self::sized(ProfileName::LocomoDefault, 12, 32, 6)
    }

    /// 18 claims per page, M = K = 72, X = 10.
    pub fn beam_default() -> Self {
        Self::sized(ProfileName::BeamDefault, 18, 72, 10)
    }

    pub fn engine_config(&self, mode: ExecMode) -> EngineConfig {
        EngineConfig { retrieval: self.retrieval.clone(), utilization: self.utilization.clone(), ablation: self.ablation, mode }
    }

    pub fn with_ablation(&self, ablation: AblationFlags) -> Self {
        Self { ablation, ..self.clone() }
    }

    /// Sets flags from a comma-separated list such as `no_cues,no_bundles`.
    pub fn apply_ablations(&mut self, list: &str) -> Result<(), ConfigError> {
        for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            if !self.ablation.set(name, true) {
                return Err(ConfigError::UnknownAblation(name.to_string()));
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.compile.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.retrieval.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.utilization.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(())
    }

    /// Applies a flat config file. Blank lines and `#` comments are skipped;
    /// every other line is `section.key = value`. Any applied key makes the
    /// profile `custom`.
    pub fn apply_config_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |reason: String| ConfigError::Line { line: i + 1, reason };
            let (key, value) = line.split_once('=').ok_or_else(|| err("expected key = value".into()))?;
            self.set(key.trim(), value.trim()).map_err(err)?;
            self.name = ProfileName::Custom;
        }
        self.validate()
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: FromStr>(v: &str) -> Result<T, String> {
            v.parse().map_err(|_| format!("cannot parse {v:?}"))
        }
        fn flag(v: &str) -> Result<bool, String> {
            match v {
                "true" | "1" | "yes" | "on" => Ok(true),
                "false" | "0" | "no" | "off" => Ok(false),
                _ => Err(format!("expected a boolean, got {v:?}")),
            }
        }
        let c = &mut self.compile;
        let r = &mut self.retrieval;
        let u = &mut self.utilization;
        match key {
            "compile.max_claims_per_page" => c.max_claims_per_page = num(value)?,
            "compile.page_policy" => {
                c.page_policy = match value {
                    "auto" => PagePolicy::Auto,
                    "by_session" => PagePolicy::BySession,
                    "fixed_window" => PagePolicy::FixedWindow,
                    _ => return Err(format!("unknown page policy {value:?}")),
                }
            }
            "compile.window_size" => c.window_size = num(value)?,
            "compile.sentence_splitter" => {
                c.sentence_splitter = match value {
                    "rule" => SentenceSplitter::Rule,
                    _ => return Err(format!("unknown sentence splitter {value:?}")),
                }
            }
            "retrieval.per_route_k" => r.per_route_k = num(value)?,
            "retrieval.rrf_k" => r.rrf_k = num(value)?,
            "retrieval.bm25_k1" => r.bm25_k1 = num(value)?,
            "retrieval.bm25_b" => r.bm25_b = num(value)?,
            "retrieval.dense_dim" => r.dense_dim = num(value)?,
            "utilization.pool_m" => u.pool_m = num(value)?,
            "utilization.rerank_keep_k" => u.rerank_keep_k = num(value)?,
            "utilization.select_budget_x" => u.select_budget_x = num(value)?,
            "utilization.max_span_excerpts" => u.max_span_excerpts = num(value)?,
            "utilization.max_bundle_chars" => u.max_bundle_chars = num(value)?,
            "utilization.provider_timeout_ms" => {
                let ms: u64 = num(value)?;
                u.provider_timeout = (ms > 0).then(|| Duration::from_millis(ms));
            }
            _ => match key.strip_prefix("ablation.") {
                Some(name) => {
                    if !self.ablation.set(name, flag(value)?) {
                        return Err(format!("unknown ablation flag {name:?}"));
                    }
                }
                None => return Err(format!("unknown key {key:?}")),
            },
        }
        Ok(())
    }

    /// The profile as config text; applying it to any profile reproduces
    /// this one (up to the name).
    pub fn to_config_text(&self) -> String {
        let c = &self.compile;
        let r = &self.retrieval;
        let u = &self.utilization;
        let policy = match c.page_policy {
            PagePolicy::Auto => "auto",
            PagePolicy::BySession => "by_session",
            PagePolicy::FixedWindow => "fixed_window",
        };
        let mut out = format!("# profile: {}\n", self.name);
        let mut kv = |k: &str, v: String| out.push_str(&format!("{k} = {v}\n"));
        kv("compile.max_claims_per_page", c.max_claims_per_page.to_string());
        kv("compile.page_policy", policy.into());
        kv("compile.window_size", c.window_size.to_string());
        kv("compile.sentence_splitter", "rule".into());
        kv("retrieval.per_route_k", r.per_route_k.to_string());
        kv("retrieval.rrf_k", r.rrf_k.to_string());
        kv("retrieval.bm25_k1", r.bm25_k1.to_string());
        kv("retrieval.bm25_b", r.bm25_b.to_string());
        kv("retrieval.dense_dim", r.dense_dim.to_string());
        kv("utilization.pool_m", u.pool_m.to_string());
        kv("utilization.rerank_keep_k", u.rerank_keep_k.to_string());
        kv("utilization.select_budget_x", u.select_budget_x.to_string());
        kv("utilization.max_span_excerpts", u.max_span_excerpts.to_string());
        kv("utilization.max_bundle_chars", u.max_bundle_chars.to_string());
        kv("utilization.provider_timeout_ms", u.provider_timeout.map_or(0, |d| d.as_millis()).to_string());
        let a = self.ablation;
        for (name, on) in AblationFlags::NAMES.iter().zip([a.no_claims, a.no_cues, a.no_projection, a.no_bundles]) {
            kv(&format!("ablation.{name}"), on.to_string());
        }
        out
    }
}

impl FromStr for PipelineProfile {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "locomo_default" => Ok(Self::locomo_default()),
            "beam_default" => Ok(Self::beam_default()),
            other => Err(ConfigError::UnknownProfile(other.to_string())),
        }
    }
}
