//! Explanations for recommendation blocks, generated by a language model
//! when one is configured and taken from the catalog otherwise.

pub mod client;
pub mod parse;
pub mod prompt;
pub mod safety;

use std::collections::BTreeMap;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::factors::RiskFactor;
use crate::recommend::{ExplanationSource, Explanations};

pub use client::{CachedGenerator, ExplainConfig, GenerationError, HttpGenerator, TextGenerator};
pub use parse::{parse_response, CoverageReport, ParsedResponse};
pub use prompt::{build_prompt, ExplanationPrompt, PromptParam};

/// How explanations are obtained for one request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExplainMode {
    Llm,
    #[default]
    Fallback,
}

impl FromStr for ExplainMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "llm" => Ok(ExplainMode::Llm),
            "fallback" => Ok(ExplainMode::Fallback),
            other => Err(format!(
                "explain mode must be `llm` or `fallback`, got `{other}`"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationResult {
    /// Accepted generated texts. Factors missing here use the catalog.
    pub texts: BTreeMap<RiskFactor, String>,
    pub preamble: Option<String>,
    pub closing: Option<String>,
    pub raw: Option<String>,
    pub source: ExplanationSource,
    pub coverage: CoverageReport,
    pub error: Option<String>,
}

impl ExplanationResult {
    pub fn fallback(prompt: &ExplanationPrompt, reason: impl Into<String>) -> Self {
        Self {
            texts: BTreeMap::new(),
            preamble: None,
            closing: None,
            raw: None,
            source: ExplanationSource::Fallback,
            coverage: CoverageReport {
                unmatched: prompt.factors().iter().map(|f| f.index()).collect(),
                ..Default::default()
            },
            error: Some(reason.into()),
        }
    }

    /// Turns a raw response into a result, dropping sections that fail the
    /// safety filter.
    pub fn from_response(prompt: &ExplanationPrompt, raw: String) -> Self {
        let requested = prompt.factors();
        let mut parsed = parse_response(&raw, &requested);
        let rejected: Vec<(RiskFactor, safety::Unsafe)> = parsed
            .texts
            .iter()
            .filter_map(|(f, t)| safety::check(t).err().map(|e| (*f, e)))
            .collect();
        for (f, why) in rejected {
            parsed.texts.remove(&f);
            parsed.coverage.matched.retain(|i| *i != f.index());
            parsed.coverage.unmatched.push(f.index());
            parsed
                .coverage
                .notes
                .push(format!("factor {} rejected: {why}", f.index()));
        }
        parsed.coverage.unmatched.sort_unstable();
        for part in [&mut parsed.preamble, &mut parsed.closing] {
            if part.as_deref().is_some_and(|t| safety::check(t).is_err()) {
                *part = None;
                parsed
                    .coverage
                    .notes
                    .push("general text rejected by safety filter".into());
            }
        }
        let source = if parsed.texts.is_empty() {
            ExplanationSource::Fallback
        } else {
            ExplanationSource::Generated
        };
        Self {
            texts: parsed.texts,
            preamble: parsed.preamble,
            closing: parsed.closing,
            raw: Some(raw),
            source,
            coverage: parsed.coverage,
            error: None,
        }
    }

    pub fn to_explanations(&self) -> Explanations {
        Explanations {
            texts: self.texts.clone(),
            preamble: self.preamble.clone(),
            closing: self.closing.clone(),
        }
    }
}

/// Entry point for generated explanations. Never fails: any problem turns
/// into a fallback result with the cause recorded.
#[derive(Clone, Default)]
pub struct Explainer {
    generator: Option<Arc<CachedGenerator>>,
}

impl Explainer {
    pub fn disabled() -> Self {
        Self::default()
    }

    pub fn from_config(config: &ExplainConfig) -> Result<Self, GenerationError> {
        if !config.is_enabled() {
            return Ok(Self::disabled());
        }
        let http = HttpGenerator::new(config.clone())?;
        Ok(Self::with_generator(Arc::new(http), config.cache_ttl))
    }

    pub fn with_generator(generator: Arc<dyn TextGenerator>, ttl: Duration) -> Self {
        Self {
            generator: Some(Arc::new(CachedGenerator::new(generator, ttl))),
        }
    }

    pub fn is_enabled(&self) -> bool {
        self.generator.is_some()
    }

    pub async fn request_explanations(
        &self,
        prompt: &ExplanationPrompt,
        bypass_cache: bool,
    ) -> ExplanationResult {
        let Some(generator) = &self.generator else {
            return ExplanationResult::fallback(prompt, GenerationError::NotConfigured.to_string());
        };
        match generator.generate(prompt, bypass_cache).await {
            Ok(raw) => ExplanationResult::from_response(prompt, raw),
            Err(e) => {
                tracing::warn!(error = %e, "explanation generation failed, using fallback texts");
                ExplanationResult::fallback(prompt, e.to_string())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use async_trait::async_trait;

    struct Canned(Result<String, GenerationError>);

    #[async_trait]
    impl TextGenerator for Canned {
        async fn generate(&self, _: &str) -> Result<String, GenerationError> {
            self.0.clone()
        }
    }

    fn prompt() -> ExplanationPrompt {
        ExplanationPrompt {
            task: "t".into(),
            params: [(9, "high blood pressure"), (11, "smoking")]
                .map(|(f, p)| PromptParam {
                    factor: Some(f),
                    phrase: p.into(),
                })
                .to_vec(),
            constraints: "c".into(),
        }
    }

    #[tokio::test]
    async fn disabled_explainer_falls_back() {
        let r = Explainer::disabled()
            .request_explanations(&prompt(), false)
            .await;
        assert_eq!(r.source, ExplanationSource::Fallback);
        assert_eq!(r.coverage.unmatched, vec![9, 11]);
        assert!(r.error.is_some());
    }

    #[tokio::test]
    async fn transport_failure_falls_back() {
        let e = Explainer::with_generator(
            Arc::new(Canned(Err(GenerationError::Transport("refused".into())))),
            Duration::from_secs(1),
        );
        let r = e.request_explanations(&prompt(), false).await;
        assert_eq!(r.source, ExplanationSource::Fallback);
        assert!(r.error.unwrap().contains("refused"));
    }

    #[tokio::test]
    async fn unsafe_section_is_replaced() {
        let text =
            "### 1. Blood pressure** Take 5 mg of amlodipine.\n### 2. Smoking** Quit for good.";
        let e =
            Explainer::with_generator(Arc::new(Canned(Ok(text.into()))), Duration::from_secs(1));
        let r = e.request_explanations(&prompt(), false).await;
        assert_eq!(r.source, ExplanationSource::Generated);
        assert_eq!(
            r.texts.keys().copied().collect::<Vec<_>>(),
            vec![RiskFactor::Smoking]
        );
        assert_eq!(r.coverage.unmatched, vec![9]);
        assert!(r.coverage.notes[0].contains("rejected"));
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("LLM".parse::<ExplainMode>(), Ok(ExplainMode::Llm));
        assert_eq!("fallback".parse::<ExplainMode>(), Ok(ExplainMode::Fallback));
        assert!("other".parse::<ExplainMode>().is_err());
    }
}
