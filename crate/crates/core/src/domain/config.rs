use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// One recommendation per aspect; the first one counts.
    #[default]
    SingleChoice,
    /// Repeated recommendations allowed; the best-rewarded one counts.
    MultiChoice,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::SingleChoice => "single_choice",
            Mode::MultiChoice => "multi_choice",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "single" | "single_choice" | "single-choice" => Ok(Mode::SingleChoice),
            "multi" | "multi_choice" | "multi-choice" => Ok(Mode::MultiChoice),
            other => Err(format!("unknown mode `{other}` (expected single or multi)")),
        }
    }
}

/// Which turns advance the off-topic counter that drives passive reveals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OffTopicPolicy {
    /// Every turn that does not actively reveal a preference.
    #[default]
    CountAllTurns,
    /// Only `action` turns that are not classified as type 1.
    ActionTurnsOnly,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("max_steps must be at least 1")]
    ZeroMaxSteps,
    #[error("reward_scale must be finite and positive, got {0}")]
    RewardScale(f64),
    #[error("`{field}` must be finite and non-negative, got {value}")]
    Negative { field: &'static str, value: f64 },
    #[error("choice_correct_reward ({correct}) must not exceed choice_best_reward ({best})")]
    CorrectAboveBest { correct: f64, best: f64 },
}

/// Episode configuration. Defaults are the benchmark's basic setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    pub mode: Mode,
    pub max_steps: u32,
    /// Every Nth search attempt fails with a system error; 0 disables.
    pub search_failure_interval: u32,
    /// Passive reveal after N consecutive non-eliciting turns; 0 disables.
    pub elicitation_interval: u32,
    pub reward_scale: f64,
    pub step_penalty: f64,
    pub search_correct_reward: f64,
    pub preference_correct_reward: f64,
    pub choice_best_reward: f64,
    pub choice_correct_reward: f64,
    pub wrong_choice_penalty: f64,
    pub rng_seed: u64,
    pub off_topic_policy: OffTopicPolicy,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            mode: Mode::SingleChoice,
            max_steps: 20,
            search_failure_interval: 5,
            elicitation_interval: 3,
            reward_scale: 1.0,
            step_penalty: 0.0,
            search_correct_reward: 0.2,
            preference_correct_reward: 0.2,
            choice_best_reward: 1.0,
            choice_correct_reward: 0.8,
            wrong_choice_penalty: 0.0,
            rng_seed: 0,
            off_topic_policy: OffTopicPolicy::CountAllTurns,
        }
    }
}

impl EnvConfig {
    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.max_steps == 0 {
            return Err(ConfigError::ZeroMaxSteps);
        }
        if !(self.reward_scale.is_finite() && self.reward_scale > 0.0) {
            return Err(ConfigError::RewardScale(self.reward_scale));
        }
        for (field, value) in [
            ("step_penalty", self.step_penalty),
            ("search_correct_reward", self.search_correct_reward),
            ("preference_correct_reward", self.preference_correct_reward),
            ("choice_best_reward", self.choice_best_reward),
            ("choice_correct_reward", self.choice_correct_reward),
            ("wrong_choice_penalty", self.wrong_choice_penalty),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(ConfigError::Negative { field, value });
            }
        }
        if self.choice_correct_reward > self.choice_best_reward {
            return Err(ConfigError::CorrectAboveBest {
                correct: self.choice_correct_reward,
                best: self.choice_best_reward,
            });
        }
        Ok(())
    }
}
