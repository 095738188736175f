//! TOML run configuration.
//!
//! ```toml
//! step_limit = 50
//!
//! [trials]
//! base_seed = 0
//! trials_per_condition = 25
//! parallelism = 4
//!
//! [critic]
//! threshold = 0.7
//!
//! [llm]
//! endpoint = "http://127.0.0.1:8080/v1/chat/completions"
//! model = "gpt-4o"
//! critic_model = "gpt-4o-mini"
//! temperature = 0.0
//! parse_retries = 3
//!
//! [pricing.models.gpt-4o]
//! prompt_per_1k = 0.0025
//! completion_per_1k = 0.01
//! ```

use std::path::Path;

use cave_agent::{EndpointConfig, RetryPolicy};
use serde::{Deserialize, Serialize};

use crate::trials::{Condition, TrialMatrix};
use crate::{HarnessError, PriceTable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrialSettings {
    pub base_seed: u64,
    pub trials_per_condition: usize,
    pub parallelism: usize,
    /// Replaces the six standard conditions when present.
    pub conditions: Option<Vec<Condition>>,
}

impl Default for TrialSettings {
    fn default() -> Self {
        Self { base_seed: 0, trials_per_condition: crate::trials::DEFAULT_TRIALS_PER_CONDITION, parallelism: 4, conditions: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CriticSettings {
    pub threshold: f64,
}

impl Default for CriticSettings {
    fn default() -> Self {
        Self { threshold: cave_agent::planner_critic::DEFAULT_THRESHOLD }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmSettings {
    /// Full chat-completions URL.
    pub endpoint: Option<String>,
    pub model: Option<String>,
    /// Defaults to `model`.
    pub critic_model: Option<String>,
    pub temperature: f64,
    pub parse_retries: u32,
    pub timeout_secs: u64,
    pub retry: RetryPolicy,
}

impl Default for LlmSettings {
    fn default() -> Self {
        Self {
            endpoint: None,
            model: None,
            critic_model: None,
            temperature: 0.0,
            parse_retries: cave_agent::DEFAULT_PARSE_RETRIES,
            timeout_secs: 120,
            retry: RetryPolicy::default(),
        }
    }
}

impl LlmSettings {
    /// Endpoint settings for `model` (the planner model when `None`).
    pub fn endpoint_config(&self, model: Option<&str>) -> Result<EndpointConfig, HarnessError> {
        let url = self.endpoint.clone().ok_or_else(|| HarnessError::Config("no LLM endpoint configured".into()))?;
        let model = model
            .map(str::to_string)
            .or_else(|| self.model.clone())
            .ok_or_else(|| HarnessError::Config("no LLM model configured".into()))?;
        Ok(EndpointConfig {
            url,
            model,
            temperature: self.temperature,
            timeout_secs: self.timeout_secs,
            retry: self.retry,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub step_limit: u32,
    pub trials: TrialSettings,
    pub critic: CriticSettings,
    pub llm: LlmSettings,
    pub pricing: PriceTable,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            step_limit: 50,
            trials: TrialSettings::default(),
            critic: CriticSettings::default(),
            llm: LlmSettings::default(),
            pricing: PriceTable::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn matrix(&self) -> TrialMatrix {
        let matrix = match &self.trials.conditions {
            Some(conditions) => TrialMatrix { conditions: conditions.clone(), step_limit: self.step_limit },
            None => TrialMatrix::standard(self.trials.base_seed, self.trials.trials_per_condition),
        };
        matrix.with_step_limit(self.step_limit)
    }
}
