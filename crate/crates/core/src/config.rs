// Copyright 2026 The perp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Experiment configuration, read from JSON.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::RectConcept;
use crate::harness::adversary::AdversarySpec;
use crate::harness::distribution::{Concept, Distribution};
use crate::noise::NoiseMode;
use crate::params::{GlobalParams, ResolverConstants};
use crate::stumps::DecisionOptions;

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleKind {
    Rectangles,
    Stumps,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum Horizon {
    /// Run exactly this many rounds.
    Rounds(u64),
    /// Run until the end of this many full phases.
    Phases(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceLevel {
    /// One record per round.
    Full,
    /// Header and summary only.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub trace: TraceLevel,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("perp-out"),
            trace: TraceLevel::Full,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub oracle: OracleKind,
    pub globals: GlobalParams,
    /// Defaults to the unit box in `d` dimensions.
    pub distribution: Option<Distribution>,
    /// Defaults to `[0.2, 0.8]^d` for rectangles and `x[0] >= 0.5` for stumps.
    pub concept: Option<Concept>,
    pub adversary: AdversarySpec,
    pub horizon: Horizon,
    /// Fresh points per error probe.
    pub probes: usize,
    pub trials: u32,
    /// `None` draws a seed from the OS; the drawn seed is reported.
    pub seed: Option<u64>,
    pub noise: NoiseMode,
    /// Initial sample size; defaults to the resolver's requirement times
    /// `sample_scale`.
    pub sample_size: Option<u64>,
    pub sample_scale: f64,
    pub resolver: ResolverConstants,
    pub decision: DecisionOptions,
    pub output: OutputConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            schema_version: CONFIG_SCHEMA_VERSION,
            oracle: OracleKind::Rectangles,
            globals: GlobalParams {
                d: 2,
                epsilon: 1000.0,
                delta_star: 0.1,
                alpha: 0.2,
                beta: 0.1,
                gamma: 0.5,
            },
            distribution: None,
            concept: None,
            adversary: AdversarySpec::default(),
            horizon: Horizon::Phases(1),
            probes: 2000,
            trials: 1,
            seed: Some(1),
            noise: NoiseMode::SeededRandom,
            sample_size: None,
            sample_scale: 1.0,
            resolver: ResolverConstants::default(),
            decision: DecisionOptions::default(),
            output: OutputConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::config(json_path(&e), e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::config("config", format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(Error::config(
                "schema_version",
                format!(
                    "unsupported version {} (expected {CONFIG_SCHEMA_VERSION})",
                    self.schema_version
                ),
            ));
        }
        self.globals.validate()?;
        let d = self.globals.d;
        let dist = self.distribution();
        dist.validate()?;
        if dist.dim() != d {
            return Err(Error::config(
                "distribution",
                format!("dimension {} differs from d = {d}", dist.dim()),
            ));
        }
        let concept = self.concept();
        concept.validate(d)?;
        match (self.oracle, &concept) {
            (OracleKind::Rectangles, Concept::Rectangle(_)) | (OracleKind::Stumps, Concept::Stump(_)) => {}
            _ => return Err(Error::config("concept", "concept kind does not match the oracle")),
        }
        self.adversary.validate(d)?;
        match self.horizon {
            Horizon::Rounds(0) => return Err(Error::config("horizon", "need at least one round")),
            Horizon::Phases(0) => return Err(Error::config("horizon", "need at least one phase")),
            _ => {}
        }
        if self.probes == 0 {
            return Err(Error::config("probes", "need at least one probe point"));
        }
        if self.trials == 0 {
            return Err(Error::config("trials", "need at least one trial"));
        }
        if self.noise == NoiseMode::Scripted {
            return Err(Error::config(
                "noise",
                "scripted noise is only available through the library",
            ));
        }
        if !(self.sample_scale > 0.0) || !self.sample_scale.is_finite() {
            return Err(Error::config("sample_scale", "must be positive"));
        }
        if self.sample_size == Some(0) {
            return Err(Error::config("sample_size", "must be positive"));
        }
        Ok(())
    }

    pub fn distribution(&self) -> Distribution {
        self.distribution
            .clone()
            .unwrap_or_else(|| Distribution::unit_box(self.globals.d))
    }

    pub fn concept(&self) -> Concept {
        self.concept.clone().unwrap_or_else(|| match self.oracle {
            OracleKind::Rectangles => {
                Concept::Rectangle(RectConcept::new(vec![(0.2, 0.8); self.globals.d.max(1)]).expect("ordered bounds"))
            }
            OracleKind::Stumps => Concept::Stump(crate::stumps::StumpConcept {
                axis: 0,
                sign: crate::stumps::Sign::Plus,
                threshold: 0.5,
            }),
        })
    }
}

/// Best-effort field name for a deserialization error.
fn json_path(e: &serde_json::Error) -> String {
    let msg = e.to_string();
    for marker in ["unknown field `", "missing field `", "field `"] {
        if let Some(i) = msg.find(marker) {
            let rest = &msg[i + marker.len()..];
            if let Some(end) = rest.find('`') {
                return rest[..end].to_owned();
            }
        }
    }
    "config".to_owned()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_object_takes_defaults() {
        let c = ExperimentConfig::from_json("{}").unwrap();
        assert_eq!(c, ExperimentConfig::default());
    }

    #[test]
    fn zero_gamma_is_rejected() {
        let e = ExperimentConfig::from_json(
            r#"{"globals": {"d": 2, "epsilon": 1.0, "delta_star": 0.1, "alpha": 0.2, "beta": 0.1, "gamma": 0.0}}"#,
        )
        .unwrap_err();
        assert!(e.to_string().contains("γ must be in (0,1]"), "{e}");
        assert!(matches!(e, Error::Config { ref field, .. } if field == "gamma"));
    }

    #[test]
    fn unknown_field_is_named() {
        let e = ExperimentConfig::from_json(r#"{"trails": 3}"#).unwrap_err();
        assert!(matches!(e, Error::Config { ref field, .. } if field == "trails"), "{e}");
    }

    #[test]
    fn mismatched_concept_rejected() {
        let e = ExperimentConfig::from_json(
            r#"{"oracle": "stumps", "concept": {"kind": "rectangle", "bounds": [[0, 1], [0, 1]]}}"#,
        )
        .unwrap_err();
        assert!(e.to_string().contains("does not match"));
    }

    #[test]
    fn horizon_forms() {
        let c = ExperimentConfig::from_json(r#"{"horizon": {"rounds": 50}}"#).unwrap();
        assert_eq!(c.horizon, Horizon::Rounds(50));
    }

    fn arb_config() -> impl Strategy<Value = ExperimentConfig> {
        (
            1usize..5,
            1.0f64..5000.0,
            0.01f64..0.5,
            0.01f64..0.9,
            0.01f64..0.9,
            0.05f64..1.0,
            prop::option::of(any::<u64>()),
            1u32..100,
            prop::bool::ANY,
            1u64..10_000,
        )
            .prop_map(
                |(d, epsilon, delta_star, alpha, beta, gamma, seed, trials, phases, n)| ExperimentConfig {
                    globals: GlobalParams {
                        d,
                        epsilon,
                        delta_star,
                        alpha,
                        beta,
                        gamma,
                    },
                    seed,
                    trials,
                    horizon: if phases {
                        Horizon::Phases(trials)
                    } else {
                        Horizon::Rounds(n)
                    },
                    sample_size: if phases { None } else { Some(n) },
                    ..ExperimentConfig::default()
                },
            )
    }

    proptest! {
        #[test]
        fn round_trip(cfg in arb_config()) {
            let text = cfg.to_json();
            let back = ExperimentConfig::from_json(&text).unwrap();
            prop_assert_eq!(&back, &cfg);
            prop_assert_eq!(back.to_json(), text);
        }
    }
}
