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

//! Query streams: each round is in-distribution with probability gamma and
//! otherwise chosen by a pluggable adversary.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::harness::distribution::{Concept, Distribution};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AdversarySpec {
    /// Repeats one point; defaults to the lower corner of a rectangle target
    /// or the threshold of a stump.
    FixedPoint {
        #[serde(default)]
        point: Option<Vec<f64>>,
    },
    /// Points just inside or just outside a random face of the target.
    BoundaryProbe {
        #[serde(default = "default_probe_width")]
        width: f64,
    },
    /// Replays a uniformly chosen earlier query.
    ReplayPastQueries,
    /// Cycles through a fixed list; `null` entries are blank rounds.
    Scripted { queries: Vec<Option<Vec<f64>>> },
}

fn default_probe_width() -> f64 {
    0.01
}

impl Default for AdversarySpec {
    fn default() -> Self {
        AdversarySpec::BoundaryProbe {
            width: default_probe_width(),
        }
    }
}

impl AdversarySpec {
    pub fn validate(&self, d: usize) -> Result<()> {
        match self {
            AdversarySpec::FixedPoint { point: Some(p) } if p.len() != d => {
                Err(Error::config("adversary.point", format!("expected {d} coordinates")))
            }
            AdversarySpec::BoundaryProbe { width } if !(*width > 0.0) || !width.is_finite() => {
                Err(Error::config("adversary.width", "must be positive"))
            }
            AdversarySpec::Scripted { queries } if queries.is_empty() => Err(Error::config(
                "adversary.queries",
                "scripted adversary needs at least one entry",
            )),
            AdversarySpec::Scripted { queries } if queries.iter().flatten().any(|q| q.len() != d) => Err(
                Error::config("adversary.queries", format!("every query needs {d} coordinates")),
            ),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct QueryStream {
    gamma: f64,
    spec: AdversarySpec,
    concept: Concept,
    dist: Distribution,
    history: Vec<Point>,
    cursor: usize,
    in_distribution_rounds: u64,
    rounds: u64,
}

/// One round of the stream.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamItem {
    pub query: Option<Point>,
    pub in_distribution: bool,
}

impl QueryStream {
    pub fn new(gamma: f64, spec: AdversarySpec, concept: Concept, dist: Distribution) -> Self {
        Self {
            gamma,
            spec,
            concept,
            dist,
            history: Vec::new(),
            cursor: 0,
            in_distribution_rounds: 0,
            rounds: 0,
        }
    }

    pub fn next<R: Rng + ?Sized>(&mut self, rng: &mut R) -> StreamItem {
        self.rounds += 1;
        let in_distribution = rng.random::<f64>() < self.gamma;
        let query = if in_distribution {
            self.in_distribution_rounds += 1;
            Some(self.dist.sample(rng))
        } else {
            self.adversarial(rng)
        };
        if matches!(self.spec, AdversarySpec::ReplayPastQueries) {
            if let Some(q) = &query {
                self.history.push(q.clone());
            }
        }
        StreamItem { query, in_distribution }
    }

    fn adversarial<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<Point> {
        let d = self.dist.dim();
        let with_aux = |coords: Vec<f64>, rng: &mut R| {
            let aux = (0..coords.len()).map(|_| rng.random::<f64>()).collect();
            Point::with_aux(coords, aux).expect("aux per axis")
        };
        match &self.spec {
            AdversarySpec::FixedPoint { point } => {
                let coords = point.clone().unwrap_or_else(|| match &self.concept {
                    Concept::Rectangle(r) => r.bounds().iter().map(|b| b.0).collect(),
                    Concept::Stump(s) => {
                        let mut v = vec![0.0; d];
                        v[s.axis] = s.threshold;
                        v
                    }
                });
                Some(Point::new(coords))
            }
            AdversarySpec::BoundaryProbe { width } => {
                let coords = match &self.concept {
                    Concept::Rectangle(r) => {
                        let b = r.bounds();
                        let mut v: Vec<f64> = b.iter().map(|&(lo, hi)| rng.random_range(lo..=hi)).collect();
                        let j = rng.random_range(0..d);
                        let (lo, hi) = b[j];
                        let face = if rng.random::<bool>() { lo } else { hi };
                        let offset = rng.random_range(-1.0..1.0) * width * (hi - lo).max(f64::MIN_POSITIVE);
                        v[j] = face + offset;
                        v
                    }
                    Concept::Stump(s) => {
                        let mut v = self.dist.sample(rng).coords().to_vec();
                        v[s.axis] = s.threshold + rng.random_range(-1.0..1.0) * width;
                        v
                    }
                };
                Some(with_aux(coords, rng))
            }
            AdversarySpec::ReplayPastQueries => {
                if self.history.is_empty() {
                    Some(self.dist.sample(rng))
                } else {
                    Some(self.history[rng.random_range(0..self.history.len())].clone())
                }
            }
            AdversarySpec::Scripted { queries } => {
                let q = queries[self.cursor % queries.len()].clone();
                self.cursor += 1;
                q.map(Point::new)
            }
        }
    }

    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    pub fn in_distribution_rounds(&self) -> u64 {
        self.in_distribution_rounds
    }

    /// In-distribution count within three standard deviations of
    /// `Binomial(rounds, gamma)`.
    pub fn mixing_within_3_sigma(&self) -> bool {
        let n = self.rounds as f64;
        let sd = (n * self.gamma * (1.0 - self.gamma)).sqrt();
        (self.in_distribution_rounds as f64 - n * self.gamma).abs() <= 3.0 * sd + 1e-9
    }
}
