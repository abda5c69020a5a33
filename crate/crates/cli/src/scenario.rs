//! Scenario files (JSON).
//!
//! ```json
//! {
//!   "machine": "reversible",
//!   "N": 1,
//!   "M": 3,
//!   "eta": 0.9,
//!   "epr_r": 1.0,
//!   "alpha": { "x": 2.0, "p": 1.0 },
//!   "mc": { "shots": 100000, "seed": 7 },
//!   "outputs": ["json", "csv"]
//! }
//! ```
//!
//! `eta` defaults to 1, `epr_r` to null, `alpha` to the origin, `mc` to null
//! (no Monte Carlo), `mc.shots` to 100000, `mc.seed` to 0 and `outputs` to
//! `["json"]`. Unknown keys are rejected.

use serde::{Deserialize, Serialize};

use cvclone::circuits::ClonerParams;
use cvclone::montecarlo::{McConfig, MIN_SHOTS};

use crate::error::CliError;

pub const DEFAULT_SHOTS: usize = 100_000;

/// Largest clone count for which Monte Carlo sampling is accepted.
pub const MC_MAX_CLONES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Machine {
    /// Irreversible cloner: linear optics, homodyne and feed-forward.
    Pci,
    /// Adds the EPR ancilla and emits anticlones.
    Reversible,
    /// Closed-form references only, no circuit.
    ReferenceOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Alpha {
    pub x: f64,
    pub p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSettings {
    #[serde(default = "default_shots")]
    pub shots: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    /// Full report.
    Json,
    /// One row per output mode.
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub machine: Machine,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default)]
    pub epr_r: Option<f64>,
    #[serde(default)]
    pub alpha: Alpha,
    #[serde(default)]
    pub mc: Option<McSettings>,
    #[serde(default = "default_outputs")]
    pub outputs: Vec<Format>,
}

fn default_eta() -> f64 {
    1.0
}

fn default_shots() -> usize {
    DEFAULT_SHOTS
}

fn default_outputs() -> Vec<Format> {
    vec![Format::Json]
}

impl Scenario {
    /// Parses and validates a scenario document.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            if path == "." {
                CliError::Parse(e.into_inner().to_string())
            } else {
                CliError::Parse(format!("field `{path}`: {}", e.into_inner()))
            }
        })?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        match (self.machine, self.epr_r) {
            (Machine::Reversible, None) => {
                return Err(CliError::Validation("reversible machine needs `epr_r`".into()));
            }
            (Machine::Pci, Some(_)) => {
                return Err(CliError::Validation(
                    "`epr_r` applies to the reversible machine only".into(),
                ));
            }
            _ => {}
        }
        self.params()
            .validate()
            .map_err(|e| CliError::Validation(e.to_string()))?;
        if let Some(mc) = self.mc {
            if self.machine == Machine::ReferenceOnly {
                return Err(CliError::Validation("`mc` needs a machine to sample".into()));
            }
            if mc.shots < MIN_SHOTS {
                return Err(CliError::Validation(format!("`mc.shots` must be at least {MIN_SHOTS}")));
            }
            if self.m > MC_MAX_CLONES {
                return Err(CliError::Validation(format!(
                    "Monte Carlo is limited to M <= {MC_MAX_CLONES}"
                )));
            }
        }
        if self.outputs.is_empty() {
            return Err(CliError::Validation("`outputs` must name at least one format".into()));
        }
        Ok(())
    }

    pub fn params(&self) -> ClonerParams {
        ClonerParams {
            n: self.n,
            m: self.m,
            eta: self.eta,
            epr_r: self.epr_r,
            alpha: (self.alpha.x, self.alpha.p),
        }
    }

    pub fn mc_config(&self) -> Option<McConfig> {
        self.mc.map(|mc| McConfig::new(mc.shots, mc.seed))
    }
}
