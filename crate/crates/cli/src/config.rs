//! Experiment configuration: one JSON document per run.

use std::fmt;
use std::path::PathBuf;

use expsieve_core::digits::{OmegaMode, PatternFile};
use expsieve_core::expsum::{AdmissiblePair, Strategy};
use expsieve_core::generators::{SequenceSpec, WeightSpec};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, CliError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Orders,
    Vsum,
    Admissible,
    LargeSieve,
    Discrepancy,
    Digits,
    Exceptional,
    Report,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Command::Orders => "orders",
            Command::Vsum => "vsum",
            Command::Admissible => "admissible",
            Command::LargeSieve => "large-sieve",
            Command::Discrepancy => "discrepancy",
            Command::Digits => "digits",
            Command::Exceptional => "exceptional",
            Command::Report => "report",
        };
        f.write_str(s)
    }
}

/// Constants and exponents of the bound evaluators.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundKnobs {
    #[serde(rename = "C")]
    pub c: Option<f64>,
    /// `korobov`, `hbk1`, `hbk2`, `shkredov`, `bgk` or `custom`.
    pub pair: Option<String>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub theta: Option<f64>,
    pub zeta: Option<f64>,
    pub eta: Option<f64>,
    pub delta: Option<f64>,
    pub k: Option<u32>,
    pub rho: Option<f64>,
    #[serde(rename = "H")]
    pub h: Option<u64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyName {
    #[default]
    Auto,
    Direct,
    Transform,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Option<Command>,
    pub lambda: Option<u64>,
    #[serde(rename = "X")]
    pub x: Option<u64>,
    #[serde(rename = "Delta")]
    pub big_delta: Option<f64>,
    #[serde(rename = "T")]
    pub t: Option<u64>,
    #[serde(rename = "S")]
    pub s: Option<u64>,
    pub sequence: Option<SequenceSpec>,
    pub weights: Option<WeightSpec>,
    #[serde(default)]
    pub bounds: BoundKnobs,
    #[serde(default)]
    pub strategy: StrategyName,
    pub crossover: Option<u64>,
    #[serde(rename = "K")]
    pub k_max: Option<u64>,
    pub pattern: Option<PatternFile>,
    pub p_max: Option<u64>,
    pub omega: Option<OmegaMode>,
    /// Subgroup order `t` for the exceptional-prime counter.
    pub subgroup_order: Option<u64>,
    #[serde(rename = "U")]
    pub u: Option<f64>,
    pub ell_max: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
}

pub(crate) fn need<T: Copy>(v: Option<T>, field: &str, cmd: Command) -> Result<T, CliError> {
    v.ok_or_else(|| invalid(field, format!("required for {cmd}")))
}

impl ExperimentConfig {
    /// Parses a config, returning it with the JSON value it came from.
    pub fn parse(text: &str) -> Result<(Self, serde_json::Value), CliError> {
        let value: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| CliError::Validation(format!("config: not valid JSON: {e}")))?;
        let cfg: Self = serde_path_to_error::deserialize(value.clone()).map_err(|e| {
            let path = e.path().to_string();
            let field = if path == "." { "config".to_string() } else { path };
            CliError::Validation(format!("{field}: {}", e.into_inner()))
        })?;
        cfg.check_seeds()?;
        if cfg.threads == Some(0) {
            return Err(invalid("threads", "must be >= 1"));
        }
        Ok((cfg, value))
    }

    fn check_seeds(&self) -> Result<(), CliError> {
        if let Some(SequenceSpec::Random { seed: None }) = self.sequence {
            return Err(invalid("sequence.seed", "required for the random generator"));
        }
        match self.weights {
            Some(WeightSpec::UnitComplex { seed: None }) | Some(WeightSpec::Signs { seed: None }) => {
                Err(invalid("weights.seed", "required for randomized weights"))
            }
            _ => Ok(()),
        }
    }

    pub fn strategy(&self) -> Strategy {
        match self.strategy {
            StrategyName::Auto => match self.crossover {
                Some(crossover) => Strategy::Auto { crossover },
                None => Strategy::default(),
            },
            StrategyName::Direct => Strategy::Direct,
            StrategyName::Transform => Strategy::Transform,
        }
    }

    /// Resolves `bounds.pair` (or bare `bounds.alpha`/`bounds.beta`).
    pub fn pair(&self) -> Result<Option<AdmissiblePair>, CliError> {
        let b = &self.bounds;
        let custom = || -> Result<AdmissiblePair, CliError> {
            match (b.alpha, b.beta) {
                (Some(alpha), Some(beta)) => Ok(AdmissiblePair {
                    alpha,
                    beta,
                    label: "custom".into(),
                }),
                _ => Err(invalid("bounds.alpha", "custom pairs need alpha and beta")),
            }
        };
        match b.pair.as_deref() {
            None if b.alpha.is_some() || b.beta.is_some() => custom().map(Some),
            None => Ok(None),
            Some("custom") => custom().map(Some),
            Some("bgk") => {
                let theta = b.theta.ok_or_else(|| invalid("bounds.theta", "required for the bgk pair"))?;
                let zeta = b.zeta.ok_or_else(|| invalid("bounds.zeta", "required for the bgk pair"))?;
                AdmissiblePair::bgk(theta, zeta)
                    .map(Some)
                    .map_err(|e| invalid("bounds.pair", e))
            }
            Some(label) => AdmissiblePair::by_label(label)
                .map(Some)
                .ok_or_else(|| invalid("bounds.pair", format!("unknown pair {label:?}"))),
        }
    }
}
