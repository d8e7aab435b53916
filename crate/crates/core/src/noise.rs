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

//! Noise sampling and randomness control shared by every mechanism.
//!
//! A [`NoiseSource`] is owned by whoever drives the mechanisms (an oracle, a
//! test, the auditor) and lent to each query by `&mut`. Besides the seeded
//! production mode there are two deterministic modes used for step-exact
//! tests: `Zero` returns exact zeros and `Scripted` replays a fixed list.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseMode {
    SeededRandom,
    Zero,
    Scripted,
}

/// Running extrema of the draws taken from a source, used to check noise
/// bound events after the fact.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseStats {
    pub laplace_draws: u64,
    pub geometric_draws: u64,
    pub max_abs_laplace: f64,
    pub max_geometric: u64,
}

#[derive(Debug, Clone)]
enum Inner {
    Seeded(Box<ChaCha12Rng>),
    Zero,
    Scripted { values: VecDeque<f64>, consumed: usize },
}

#[derive(Debug, Clone)]
pub struct NoiseSource {
    inner: Inner,
    seed: u64,
    stats: NoiseStats,
}

impl NoiseSource {
    pub fn seeded(seed: u64) -> Self {
        Self {
            inner: Inner::Seeded(Box::new(ChaCha12Rng::seed_from_u64(seed))),
            seed,
            stats: NoiseStats::default(),
        }
    }

    pub fn zero() -> Self {
        Self {
            inner: Inner::Zero,
            seed: 0,
            stats: NoiseStats::default(),
        }
    }

    /// Every sample (Laplace, geometric or categorical) pops the next value.
    /// Scales are ignored: the script holds the noise itself.
    pub fn scripted<I: IntoIterator<Item = f64>>(script: I) -> Self {
        Self {
            inner: Inner::Scripted {
                values: script.into_iter().collect(),
                consumed: 0,
            },
            seed: 0,
            stats: NoiseStats::default(),
        }
    }

    pub fn with_mode(mode: NoiseMode, seed: u64) -> Self {
        match mode {
            NoiseMode::SeededRandom => Self::seeded(seed),
            NoiseMode::Zero => Self::zero(),
            NoiseMode::Scripted => Self::scripted(std::iter::empty()),
        }
    }

    pub fn mode(&self) -> NoiseMode {
        match self.inner {
            Inner::Seeded(_) => NoiseMode::SeededRandom,
            Inner::Zero => NoiseMode::Zero,
            Inner::Scripted { .. } => NoiseMode::Scripted,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stats(&self) -> NoiseStats {
        self.stats
    }

    /// Position of the underlying stream: the RNG word position, or the
    /// number of scripted values consumed.
    pub fn position(&self) -> u128 {
        match &self.inner {
            Inner::Seeded(rng) => rng.get_word_pos(),
            Inner::Zero => 0,
            Inner::Scripted { consumed, .. } => *consumed as u128,
        }
    }

    /// Returns the statistics gathered so far and starts a fresh window.
    pub fn take_stats(&mut self) -> NoiseStats {
        std::mem::take(&mut self.stats)
    }

    fn pop_script(&mut self) -> Result<Option<f64>> {
        match &mut self.inner {
            Inner::Scripted { values, consumed } => match values.pop_front() {
                Some(v) => {
                    *consumed += 1;
                    Ok(Some(v))
                }
                None => Err(Error::ScriptExhausted { consumed: *consumed }),
            },
            _ => Ok(None),
        }
    }

    /// Draws from the zero-mean Laplace distribution with density
    /// `exp(-|x|/scale) / (2 scale)`.
    pub fn laplace(&mut self, scale: f64) -> Result<f64> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::param("scale", format!("must be positive, got {scale}")));
        }
        let x = match &mut self.inner {
            Inner::Zero => 0.0,
            Inner::Scripted { .. } => self.pop_script()?.unwrap_or_default(),
            Inner::Seeded(rng) => {
                let v = loop {
                    let v = rng.random::<f64>() - 0.5;
                    if v != -0.5 {
                        break v;
                    }
                };
                -scale * v.signum() * (1.0 - 2.0 * v.abs()).ln()
            }
        };
        self.stats.laplace_draws += 1;
        self.stats.max_abs_laplace = self.stats.max_abs_laplace.max(x.abs());
        Ok(x)
    }

    /// Draws `k >= 0` with `Pr[k] = p (1 - p)^k`.
    pub fn geometric(&mut self, p: f64) -> Result<u64> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::param("p", format!("must lie in (0, 1], got {p}")));
        }
        let k = match &mut self.inner {
            Inner::Zero => 0,
            Inner::Scripted { .. } => {
                let v = self.pop_script()?.unwrap_or_default();
                if v < 0.0 || v.fract() != 0.0 {
                    return Err(Error::param(
                        "script",
                        format!("geometric draw must be a nonnegative integer, got {v}"),
                    ));
                }
                v as u64
            }
            Inner::Seeded(rng) => Geometric::new(p)
                .map_err(|e| Error::param("p", e.to_string()))?
                .sample(rng.as_mut()),
        };
        self.stats.geometric_draws += 1;
        self.stats.max_geometric = self.stats.max_geometric.max(k);
        Ok(k)
    }

    /// Samples an index with probability proportional to `weights`.
    ///
    /// Zero mode returns the first index of maximal weight. Scripted mode pops
    /// a value `u` in `[0, 1)` and inverts the cumulative distribution at it.
    pub fn categorical(&mut self, weights: &[f64]) -> Result<usize> {
        let total: f64 = weights.iter().sum();
        if weights.is_empty() || weights.iter().any(|w| *w < 0.0 || !w.is_finite()) || !(total > 0.0) {
            return Err(Error::param(
                "weights",
                "must be nonempty, finite, nonnegative and not all zero",
            ));
        }
        let u = match &mut self.inner {
            Inner::Zero => {
                let mut best = 0;
                for (i, w) in weights.iter().enumerate() {
                    if *w > weights[best] {
                        best = i;
                    }
                }
                return Ok(best);
            }
            Inner::Scripted { .. } => self.pop_script()?.unwrap_or_default(),
            Inner::Seeded(rng) => rng.random::<f64>(),
        };
        let target = u * total;
        let mut acc = 0.0;
        for (i, w) in weights.iter().enumerate() {
            acc += w;
            if target < acc {
                return Ok(i);
            }
        }
        // Rounding can leave `target` at the very top; fall back to the last
        // index that carries weight.
        Ok(weights.iter().rposition(|w| *w > 0.0).unwrap_or(0))
    }
}

/// Magnitude `B` with `Pr[|Lap(scale)| > B] = prob`, i.e. `scale * ln(1/prob)`.
pub fn laplace_tail(scale: f64, prob: f64) -> Result<f64> {
    if !(scale > 0.0) {
        return Err(Error::param("scale", format!("must be positive, got {scale}")));
    }
    if !(prob > 0.0 && prob <= 1.0) {
        return Err(Error::param("prob", format!("must lie in (0, 1], got {prob}")));
    }
    Ok(scale * (1.0 / prob).ln())
}

/// An `(epsilon, delta)` pair with `epsilon > 0` and `0 < delta < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyParams {
    epsilon: f64,
    delta: f64,
}

impl PrivacyParams {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::param("epsilon", format!("must be positive, got {epsilon}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::param("delta", format!("must lie in (0, 1), got {delta}")));
        }
        Ok(Self { epsilon, delta })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    #[test]
    fn zero_mode_is_exactly_zero() {
        let mut z = NoiseSource::zero();
        assert_eq!(z.laplace(1.0).unwrap(), 0.0);
        assert_eq!(z.geometric(0.3).unwrap(), 0);
        assert_eq!(z.stats().laplace_draws, 1);
    }

    #[test]
    fn scripted_mode_replays_then_errors() {
        let mut s = NoiseSource::scripted([1.5, 2.0, -0.25]);
        assert_eq!(s.laplace(7.0).unwrap(), 1.5);
        assert_eq!(s.geometric(0.5).unwrap(), 2);
        assert_eq!(s.laplace(1.0).unwrap(), -0.25);
        assert_eq!(s.laplace(1.0), Err(Error::ScriptExhausted { consumed: 3 }));
    }

    #[test]
    fn scripted_geometric_rejects_fractional_values() {
        let mut s = NoiseSource::scripted([0.5]);
        assert!(matches!(s.geometric(0.5), Err(Error::InvalidParameter { .. })));
    }

    #[test]
    fn parameter_errors() {
        let mut s = NoiseSource::seeded(1);
        assert!(s.laplace(0.0).is_err());
        assert!(s.laplace(-1.0).is_err());
        assert!(s.geometric(0.0).is_err());
        assert!(s.geometric(1.5).is_err());
        assert_eq!(s.geometric(1.0).unwrap(), 0);
    }

    #[test]
    fn equal_seeds_give_equal_sequences() {
        let mut a = NoiseSource::seeded(42);
        let mut b = NoiseSource::seeded(42);
        for _ in 0..100 {
            assert_eq!(a.laplace(2.0).unwrap().to_bits(), b.laplace(2.0).unwrap().to_bits());
            assert_eq!(a.geometric(0.2).unwrap(), b.geometric(0.2).unwrap());
        }
    }

    #[test]
    fn laplace_median_and_variance() {
        let mut s = NoiseSource::seeded(7);
        let mut xs: Vec<f64> = (0..100_000).map(|_| s.laplace(1.0).unwrap()).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        xs.sort_by(f64::total_cmp);
        let median = xs[xs.len() / 2];
        assert!(median.abs() < 0.02, "median {median}");
        // Var[Lap(b)] = 2 b^2
        assert!((var - 2.0).abs() < 0.1, "variance {var}");
    }

    #[test]
    fn laplace_passes_kolmogorov_smirnov() {
        let n = 100_000;
        let scale = 1.5;
        let mut s = NoiseSource::seeded(11);
        let mut xs: Vec<f64> = (0..n).map(|_| s.laplace(scale).unwrap()).collect();
        xs.sort_by(f64::total_cmp);
        let cdf = |x: f64| {
            if x < 0.0 {
                0.5 * (x / scale).exp()
            } else {
                1.0 - 0.5 * (-x / scale).exp()
            }
        };
        let d = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = cdf(x);
                (f - i as f64 / n as f64)
                    .abs()
                    .max(((i + 1) as f64 / n as f64 - f).abs())
            })
            .fold(0.0, f64::max);
        // Asymptotic critical value at significance 0.001.
        let critical = (-0.5 * (0.001f64 / 2.0).ln()).sqrt() / (n as f64).sqrt();
        assert!(d < critical, "KS statistic {d} >= {critical}");
    }

    #[test]
    fn geometric_pmf_and_mean() {
        let n = 100_000;
        let mut s = NoiseSource::seeded(3);
        let xs: Vec<u64> = (0..n).map(|_| s.geometric(0.5).unwrap()).collect();
        let zeros = xs.iter().filter(|&&k| k == 0).count() as f64 / n as f64;
        let mean = xs.iter().sum::<u64>() as f64 / n as f64;
        assert!((zeros - 0.5).abs() < 0.01, "Pr[0] = {zeros}");
        // E[k] = (1 - p) / p
        assert!((mean - 1.0).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn geometric_passes_chi_square() {
        let n = 100_000usize;
        let p = 0.3;
        let mut s = NoiseSource::seeded(5);
        let bins = 12usize;
        let mut observed = vec![0usize; bins];
        for _ in 0..n {
            let k = s.geometric(p).unwrap() as usize;
            observed[k.min(bins - 1)] += 1;
        }
        let mut chi2 = 0.0;
        for (k, &o) in observed.iter().enumerate() {
            let prob = if k + 1 < bins {
                p * (1.0 - p).powi(k as i32)
            } else {
                (1.0 - p).powi(k as i32)
            };
            let e = prob * n as f64;
            chi2 += (o as f64 - e).powi(2) / e;
        }
        let critical = ChiSquared::new((bins - 1) as f64).unwrap().inverse_cdf(0.999);
        assert!(chi2 < critical, "chi2 {chi2} >= {critical}");
    }

    #[test]
    fn laplace_tail_values() {
        assert_eq!(laplace_tail(1.0, 1.0).unwrap(), 0.0);
        assert!((laplace_tail(1.0, (-3.0f64).exp()).unwrap() - 3.0).abs() < 1e-12);
        assert!((laplace_tail(2.0, 0.01).unwrap() - 9.210340371976184).abs() < 1e-9);
        assert!(laplace_tail(0.0, 0.5).is_err());
        assert!(laplace_tail(1.0, 0.0).is_err());
    }

    #[test]
    fn categorical_modes() {
        let mut z = NoiseSource::zero();
        assert_eq!(z.categorical(&[0.1, 0.7, 0.7]).unwrap(), 1);
        let mut s = NoiseSource::scripted([0.05, 0.95]);
        assert_eq!(s.categorical(&[1.0, 1.0]).unwrap(), 0);
        assert_eq!(s.categorical(&[1.0, 1.0]).unwrap(), 1);
        assert!(NoiseSource::zero().categorical(&[]).is_err());
        assert!(NoiseSource::zero().categorical(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn privacy_params_validate() {
        assert!(PrivacyParams::new(1.0, 0.1).is_ok());
        assert!(PrivacyParams::new(0.0, 0.1).is_err());
        assert!(PrivacyParams::new(1.0, 0.0).is_err());
        assert!(PrivacyParams::new(1.0, 1.0).is_err());
    }

    #[test]
    fn stats_window_resets() {
        let mut s = NoiseSource::scripted([-4.0, 1.0, 3.0]);
        s.laplace(1.0).unwrap();
        s.geometric(0.5).unwrap();
        let st = s.take_stats();
        assert_eq!(st.max_abs_laplace, 4.0);
        assert_eq!(st.max_geometric, 1);
        s.laplace(1.0).unwrap();
        assert_eq!(s.stats().max_abs_laplace, 3.0);
        assert_eq!(s.stats().laplace_draws, 1);
    }
}
