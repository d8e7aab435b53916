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

//! Query distributions and target concepts.

use rand::Rng;
use rand_distr::{Distribution as _, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, RectConcept};
use crate::stumps::StumpConcept;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Marginal {
    Uniform { lo: f64, hi: f64 },
    Normal { mean: f64, sd: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureComponent {
    pub weight: f64,
    pub distribution: Distribution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Distribution {
    UniformBox { lo: Vec<f64>, hi: Vec<f64> },
    AxisProduct { axes: Vec<Marginal> },
    FiniteMixture { components: Vec<MixtureComponent> },
}

impl Distribution {
    pub fn unit_box(d: usize) -> Self {
        Distribution::UniformBox {
            lo: vec![0.0; d],
            hi: vec![1.0; d],
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Distribution::UniformBox { lo, .. } => lo.len(),
            Distribution::AxisProduct { axes } => axes.len(),
            Distribution::FiniteMixture { components } => components.first().map_or(0, |c| c.distribution.dim()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::config("distribution", m));
        match self {
            Distribution::UniformBox { lo, hi } => {
                if lo.is_empty() || lo.len() != hi.len() {
                    return bad(format!("box bounds have lengths {} and {}", lo.len(), hi.len()));
                }
                if let Some(j) = (0..lo.len()).find(|&j| !(lo[j] < hi[j]) || !lo[j].is_finite() || !hi[j].is_finite()) {
                    return bad(format!("axis {j}: need finite lo < hi, got [{}, {}]", lo[j], hi[j]));
                }
            }
            Distribution::AxisProduct { axes } => {
                if axes.is_empty() {
                    return bad("axis-product needs at least one axis".into());
                }
                for (j, m) in axes.iter().enumerate() {
                    let ok = match *m {
                        Marginal::Uniform { lo, hi } => lo < hi && lo.is_finite() && hi.is_finite(),
                        Marginal::Normal { mean, sd } => sd > 0.0 && sd.is_finite() && mean.is_finite(),
                    };
                    if !ok {
                        return bad(format!("axis {j}: invalid marginal {m:?}"));
                    }
                }
            }
            Distribution::FiniteMixture { components } => {
                if components.is_empty() {
                    return bad("mixture needs at least one component".into());
                }
                let d = components[0].distribution.dim();
                let mut total = 0.0;
                for c in components {
                    if !(c.weight >= 0.0) {
                        return bad(format!("negative mixture weight {}", c.weight));
                    }
                    if c.distribution.dim() != d {
                        return bad("mixture components disagree on dimension".into());
                    }
                    c.distribution.validate()?;
                    total += c.weight;
                }
                if (total - 1.0).abs() > 1e-9 {
                    return bad(format!("mixture weights sum to {total}, not 1"));
                }
            }
        }
        Ok(())
    }

    /// Draws a point together with its uniform tie-breaking coordinates.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let coords = self.sample_coords(rng);
        let aux = (0..coords.len()).map(|_| rng.random::<f64>()).collect();
        Point::with_aux(coords, aux).expect("aux has one entry per axis")
    }

    fn sample_coords<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            Distribution::UniformBox { lo, hi } => lo.iter().zip(hi).map(|(&a, &b)| rng.random_range(a..b)).collect(),
            Distribution::AxisProduct { axes } => axes
                .iter()
                .map(|m| match *m {
                    Marginal::Uniform { lo, hi } => rng.random_range(lo..hi),
                    Marginal::Normal { mean, sd } => Normal::new(mean, sd).expect("validated").sample(rng),
                })
                .collect(),
            Distribution::FiniteMixture { components } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for c in components {
                    acc += c.weight;
                    if u < acc {
                        return c.distribution.sample_coords(rng);
                    }
                }
                components
                    .last()
                    .expect("validated nonempty")
                    .distribution
                    .sample_coords(rng)
            }
        }
    }

    /// Box bounds if this is a uniform box.
    pub fn as_box(&self) -> Option<(&[f64], &[f64])> {
        match self {
            Distribution::UniformBox { lo, hi } => Some((lo, hi)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Concept {
    Rectangle(RectConcept),
    Stump(StumpConcept),
}

impl Concept {
    pub fn label(&self, x: &[f64]) -> bool {
        match self {
            Concept::Rectangle(r) => r.contains(x),
            Concept::Stump(s) => s.label(x),
        }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        match self {
            Concept::Rectangle(r) => {
                if r.dim() != d {
                    return Err(Error::config(
                        "concept",
                        format!("rectangle has {} axes, d = {d}", r.dim()),
                    ));
                }
                RectConcept::new(r.bounds().to_vec()).map_err(|e| Error::config("concept", e.to_string()))?;
            }
            Concept::Stump(s) => {
                if s.axis >= d {
                    return Err(Error::config(
                        "concept",
                        format!("stump axis {} out of range for d = {d}", s.axis),
                    ));
                }
                if !s.threshold.is_finite() {
                    return Err(Error::config("concept", "stump threshold must be finite"));
                }
            }
        }
        Ok(())
    }
}

/// Monte Carlo estimate of `Pr_{x ~ D}[h(x) != c(x)]` from `n` fresh draws.
pub fn estimate_error<H, R>(h: H, c: &Concept, dist: &Distribution, n: usize, rng: &mut R) -> Result<f64>
where
    H: Fn(&Point) -> bool,
    R: Rng + ?Sized,
{
    if n == 0 {
        return Err(Error::param("n", "need at least one probe point"));
    }
    let wrong = (0..n)
        .filter(|_| {
            let x = dist.sample(rng);
            h(&x) != c.label(x.coords())
        })
        .count();
    Ok(wrong as f64 / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rect() -> Concept {
        Concept::Rectangle(RectConcept::new(vec![(0.2, 0.8), (0.2, 0.8)]).unwrap())
    }

    #[test]
    fn error_of_target_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = rect();
        let e = estimate_error(|x| c.label(x.coords()), &c, &Distribution::unit_box(2), 1000, &mut rng).unwrap();
        assert_eq!(e, 0.0);
        let e = estimate_error(|x| !c.label(x.coords()), &c, &Distribution::unit_box(2), 1000, &mut rng).unwrap();
        assert_eq!(e, 1.0);
    }

    #[test]
    fn all_zero_error_is_rectangle_mass() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let e = estimate_error(|_| false, &rect(), &Distribution::unit_box(2), 100_000, &mut rng).unwrap();
        assert!((e - 0.36).abs() < 0.01, "{e}");
    }

    #[test]
    fn validation() {
        assert!(Distribution::unit_box(3).validate().is_ok());
        let bad = Distribution::UniformBox {
            lo: vec![1.0],
            hi: vec![0.0],
        };
        assert!(bad.validate().is_err());
        let mix = Distribution::FiniteMixture {
            components: vec![
                MixtureComponent {
                    weight: 0.5,
                    distribution: Distribution::unit_box(1),
                },
                MixtureComponent {
                    weight: 0.4,
                    distribution: Distribution::unit_box(1),
                },
            ],
        };
        assert!(mix.validate().unwrap_err().to_string().contains("sum to"));
    }

    #[test]
    fn mixture_and_product_sample_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mix = Distribution::FiniteMixture {
            components: vec![
                MixtureComponent {
                    weight: 0.3,
                    distribution: Distribution::UniformBox {
                        lo: vec![0.0],
                        hi: vec![1.0],
                    },
                },
                MixtureComponent {
                    weight: 0.7,
                    distribution: Distribution::AxisProduct {
                        axes: vec![Marginal::Uniform { lo: 10.0, hi: 11.0 }],
                    },
                },
            ],
        };
        mix.validate().unwrap();
        let n = 20_000;
        let high = (0..n).filter(|_| mix.sample(&mut rng).coords()[0] >= 10.0).count();
        assert!((high as f64 / n as f64 - 0.7).abs() < 0.02);
        let p = Distribution::AxisProduct {
            axes: vec![Marginal::Normal { mean: 5.0, sd: 1.0 }],
        };
        let m: f64 = (0..n).map(|_| p.sample(&mut rng).coords()[0]).sum::<f64>() / n as f64;
        assert!((m - 5.0).abs() < 0.05);
    }
}
