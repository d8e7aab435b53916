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

//! Leakage demonstration and empirical privacy audits.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

use crate::error::{Error, Result};
use crate::noise::NoiseSource;

/// Success rate of the attack that waits for the `(0, delta)`-private
/// mechanism releasing each of `horizon` points independently with
/// probability `delta`. A trial succeeds when anything is released, which
/// happens iff the first release index, a geometric variable, is below the
/// horizon.
pub fn leakage_demo(delta: f64, horizon: u64, trials: u64, seed: u64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::param("delta", "must be in (0,1)"));
    }
    if trials == 0 {
        return Err(Error::param("trials", "must be at least 1"));
    }
    if horizon == 0 {
        return Ok(0.0);
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let g = Geometric::new(delta).map_err(|e| Error::param("delta", e.to_string()))?;
    let hits = (0..trials).filter(|_| g.sample(&mut rng) < horizon).count();
    Ok(hits as f64 / trials as f64)
}

/// `1 - (1 - delta)^T`.
pub fn leakage_target(delta: f64, horizon: u64) -> f64 {
    1.0 - (horizon as f64 * (-delta).ln_1p()).exp()
}

/// Two-sided Clopper–Pearson interval for `k` successes in `n` trials.
pub fn clopper_pearson(k: u64, n: u64, confidence: f64) -> Result<(f64, f64)> {
    if n == 0 || k > n {
        return Err(Error::param(
            "n",
            format!("need 0 <= k <= n and n > 0, got k = {k}, n = {n}"),
        ));
    }
    let a = (1.0 - confidence) / 2.0;
    let (kf, nf) = (k as f64, n as f64);
    let beta = |x, y| Beta::new(x, y).map_err(|e| Error::Internal(e.to_string()));
    let lo = if k == 0 {
        0.0
    } else {
        beta(kf, nf - kf + 1.0)?.inverse_cdf(a)
    };
    let hi = if k == n {
        1.0
    } else {
        beta(kf + 1.0, nf - kf)?.inverse_cdf(1.0 - a)
    };
    Ok((lo, hi))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventEstimate {
    pub event: String,
    pub count: u64,
    pub count_neighbor: u64,
    pub log_ratio: f64,
    /// Lower confidence bound on `|log Pr[E|D] - log Pr[E|D']|`, clipped at 0.
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonEstimate {
    /// Largest observed absolute log ratio.
    pub point: f64,
    /// Largest lower confidence bound.
    pub lower: f64,
    /// Largest upper confidence bound.
    pub upper: f64,
    pub trials: u64,
    pub confidence: f64,
    pub events: Vec<EventEstimate>,
    /// Events skipped because one side never occurred.
    pub excluded: Vec<String>,
}

impl EpsilonEstimate {
    pub fn contains(&self, eps: f64) -> bool {
        self.lower <= eps && eps <= self.upper
    }
}

/// A named predicate over mechanism outputs.
pub struct Event<'a, O> {
    pub name: String,
    pub test: Box<dyn Fn(&O) -> bool + 'a>,
}

impl<'a, O> Event<'a, O> {
    pub fn new(name: impl Into<String>, test: impl Fn(&O) -> bool + 'a) -> Self {
        Self {
            name: name.into(),
            test: Box::new(test),
        }
    }
}

/// Runs `mechanism(false, ..)` (input `D`) and `mechanism(true, ..)` (input
/// `D'`) `trials` times each and bounds the privacy loss on every event.
pub fn estimate_epsilon<O, M>(
    mut mechanism: M,
    events: &[Event<'_, O>],
    trials: u64,
    confidence: f64,
    seed: u64,
) -> Result<EpsilonEstimate>
where
    M: FnMut(bool, &mut NoiseSource) -> Result<O>,
{
    if trials < 10_000 {
        return Err(Error::param("trials", "an audit needs at least 10^4 trials"));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::param("confidence", "must be in (0,1)"));
    }
    let mut counts = [vec![0u64; events.len()], vec![0u64; events.len()]];
    for (side, c) in counts.iter_mut().enumerate() {
        let mut noise = NoiseSource::seeded(seed.wrapping_add(side as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        for _ in 0..trials {
            let out = mechanism(side == 1, &mut noise)?;
            for (i, e) in events.iter().enumerate() {
                if (e.test)(&out) {
                    c[i] += 1;
                }
            }
        }
    }
    let mut est = EpsilonEstimate {
        point: 0.0,
        lower: 0.0,
        upper: 0.0,
        trials,
        confidence,
        events: Vec::new(),
        excluded: Vec::new(),
    };
    for (i, e) in events.iter().enumerate() {
        let (k0, k1) = (counts[0][i], counts[1][i]);
        if k0 == 0 || k1 == 0 {
            est.excluded.push(format!("{}: zero count ({k0} vs {k1})", e.name));
            continue;
        }
        let (lo0, hi0) = clopper_pearson(k0, trials, confidence)?;
        let (lo1, hi1) = clopper_pearson(k1, trials, confidence)?;
        let log_ratio = (k0 as f64 / k1 as f64).ln();
        let lower = (lo0 / hi1).ln().max((lo1 / hi0).ln()).max(0.0);
        let upper = (hi0 / lo1).ln().max((hi1 / lo0).ln());
        est.point = est.point.max(log_ratio.abs());
        est.lower = est.lower.max(lower);
        est.upper = est.upper.max(upper);
        est.events.push(EventEstimate {
            event: e.name.clone(),
            count: k0,
            count_neighbor: k1,
            log_ratio,
            lower,
            upper,
        });
    }
    Ok(est)
}

/// Randomized response: reports the true bit with probability
/// `e^eps / (1 + e^eps)`.
pub fn randomized_response(bit: bool, epsilon: f64, noise: &mut NoiseSource) -> Result<bool> {
    let keep = epsilon.exp() / (1.0 + epsilon.exp());
    let flip = noise.categorical(&[keep, 1.0 - keep])? == 1;
    Ok(bit ^ flip)
}
