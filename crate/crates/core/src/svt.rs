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

//! Streaming sparse-vector mechanisms: [`Stopper`], [`BetweenThresholds`] and
//! their composition [`ChallengeBt`].
//!
//! None of the mechanisms own randomness; every noisy operation borrows a
//! [`NoiseSource`]. Queries are closures over the private dataset and must
//! have sensitivity 1. That is the caller's obligation and is not checked.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{NoiseSource, PrivacyParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopperAnswer {
    Halt,
    Continue,
}

/// Monitors a bit stream and halts once the noisy count of ones reaches a
/// threshold. Noise scale is `(8/eps) ln(2/delta)` per query.
#[derive(Debug, Clone)]
pub struct Stopper {
    ones: u64,
    zeros: u64,
    threshold: u64,
    privacy: PrivacyParams,
    noise_scale: f64,
    halted: bool,
}

impl Stopper {
    pub fn new(privacy: PrivacyParams, threshold: u64) -> Self {
        let noise_scale = 8.0 / privacy.epsilon() * (2.0 / privacy.delta()).ln();
        Self {
            ones: 0,
            zeros: 0,
            threshold,
            privacy,
            noise_scale,
            halted: false,
        }
    }

    pub fn with_bits<I: IntoIterator<Item = bool>>(privacy: PrivacyParams, threshold: u64, bits: I) -> Self {
        let mut s = Self::new(privacy, threshold);
        for b in bits {
            if b {
                s.ones += 1;
            } else {
                s.zeros += 1;
            }
        }
        s
    }

    pub fn update(&mut self, bit: bool) -> Result<()> {
        if self.halted {
            return Err(Error::Halted {
                mechanism: "Stopper",
                operation: "updates",
            });
        }
        if bit {
            self.ones += 1;
        } else {
            self.zeros += 1;
        }
        Ok(())
    }

    pub fn query(&mut self, noise: &mut NoiseSource) -> Result<StopperAnswer> {
        if self.halted {
            return Err(Error::Halted {
                mechanism: "Stopper",
                operation: "queries",
            });
        }
        let noisy = self.ones as f64 + noise.laplace(self.noise_scale)?;
        if noisy >= self.threshold as f64 {
            self.halted = true;
            Ok(StopperAnswer::Halt)
        } else {
            Ok(StopperAnswer::Continue)
        }
    }

    pub fn len(&self) -> u64 {
        self.ones + self.zeros
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sum(&self) -> u64 {
        self.ones
    }

    pub fn threshold(&self) -> u64 {
        self.threshold
    }

    pub fn is_halted(&self) -> bool {
        self.halted
    }

    pub fn privacy(&self) -> PrivacyParams {
        self.privacy
    }

    pub fn noise_scale(&self) -> f64 {
        self.noise_scale
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BtAnswer {
    Low,
    Medium,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BtParams {
    pub privacy: PrivacyParams,
    /// Number of "medium" answers before halting.
    pub budget: u64,
    pub t_low: f64,
    pub t_high: f64,
}

/// A violated input condition of [`BetweenThresholds`] or [`ChallengeBt`].
#[derive(Debug, Clone, PartialEq)]
pub enum ParamViolation {
    /// `k >= 4 ln(c/delta)` with `c` = 2 for BetweenThresholds, 4 for ChallengeBT.
    Budget {
        c: f64,
        k: u64,
        required: f64,
    },
    /// `t_h - t_l >= (w/eps) sqrt(k ln(c/delta))`.
    Gap {
        gap: f64,
        required: f64,
        c: f64,
        w: f64,
    },
    ZeroStepBound,
}

impl fmt::Display for ParamViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamViolation::Budget { c, k, required } => {
                write!(f, "k ≥ 4 log({c}/δ) violated: k = {k} < {required:.4}")
            }
            ParamViolation::Gap { gap, required, c, w } => write!(
                f,
                "t_h − t_l ≥ ({w}/ε)√(k log({c}/δ)) violated: gap {gap:.4} < {required:.4}"
            ),
            ParamViolation::ZeroStepBound => write!(f, "T ≥ 1 violated"),
        }
    }
}

impl BtParams {
    fn check(&self, budget_c: f64, gap_width: f64, gap_c: f64) -> Vec<ParamViolation> {
        let eps = self.privacy.epsilon();
        let delta = self.privacy.delta();
        let mut out = Vec::new();
        let need_k = 4.0 * (budget_c / delta).ln();
        if (self.budget as f64) < need_k {
            out.push(ParamViolation::Budget {
                c: budget_c,
                k: self.budget,
                required: need_k,
            });
        }
        let need_gap = gap_width / eps * (self.budget as f64 * (gap_c / delta).ln()).sqrt();
        let gap = self.t_high - self.t_low;
        if !(gap >= need_gap) {
            out.push(ParamViolation::Gap {
                gap,
                required: need_gap,
                c: gap_c,
                w: gap_width,
            });
        }
        out
    }

    /// Input conditions of the standalone mechanism.
    pub fn violations(&self) -> Vec<ParamViolation> {
        self.check(2.0, 16.0, 2.0)
    }
}

/// Answers sensitivity-1 queries with low / medium / high relative to two
/// thresholds and halts after `k` medium answers (unless never-halting).
#[derive(Debug, Clone)]
pub struct BetweenThresholds<S> {
    data: S,
    params: BtParams,
    noise_scale: f64,
    mediums: u64,
    never_halt: bool,
    halted: bool,
}

impl<S> BetweenThresholds<S> {
    /// Standard halting mechanism; rejects parameters violating its input
    /// conditions.
    pub fn new(data: S, params: BtParams) -> Result<Self> {
        let violations = params.violations();
        if let Some(v) = violations.first() {
            return Err(Error::param("bt_params", v.to_string()));
        }
        Ok(Self::build(data, params, false))
    }

    /// The never-halting variant. Input conditions are the wrapper's concern.
    pub fn never_halting(data: S, params: BtParams) -> Self {
        Self::build(data, params, true)
    }

    fn build(data: S, params: BtParams, never_halt: bool) -> Self {
        let eps = params.privacy.epsilon();
        let delta = params.privacy.delta();
        let noise_scale = 4.0 / eps * (params.budget as f64 * (2.0 / delta).ln()).sqrt();
        Self {
            data,
            params,
            noise_scale,
            mediums: 0,
            never_halt,
            halted: false,
        }
    }

    pub fn classify(&self, value: f64) -> BtAnswer {
        if value < self.params.t_low {
            BtAnswer::Low
        } else if value > self.params.t_high {
            BtAnswer::High
        } else {
            BtAnswer::Medium
        }
    }

    pub fn query<F>(&mut self, f: F, noise: &mut NoiseSource) -> Result<BtAnswer>
    where
        F: FnOnce(&S) -> f64,
    {
        if self.halted {
            return Err(Error::Halted {
                mechanism: "BetweenThresholds",
                operation: "queries",
            });
        }
        let noisy = f(&self.data) + noise.laplace(self.noise_scale)?;
        let answer = self.classify(noisy);
        if answer == BtAnswer::Medium {
            self.mediums += 1;
            if !self.never_halt && self.mediums >= self.params.budget {
                self.halted = true;
            }
        }
        Ok(answer)
    }

    pub fn data(&self) -> &S {
        &self.data
    }

    pub fn params(&self) -> &BtParams {
        &self.params
    }

    pub fn noise_scale(&self) -> f64 {
        self.noise_scale
    }

    pub fn mediums(&self) -> u64 {
        self.mediums
    }

    pub fn is_halted(&self) -> bool {
        self.halted
    }

    pub fn never_halts(&self) -> bool {
        self.never_halt
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CbtAnswer {
    Low,
    Medium,
    High,
    Ignored,
}

impl From<BtAnswer> for CbtAnswer {
    fn from(a: BtAnswer) -> Self {
        match a {
            BtAnswer::Low => CbtAnswer::Low,
            BtAnswer::Medium => CbtAnswer::Medium,
            BtAnswer::High => CbtAnswer::High,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CbtParams {
    pub privacy: PrivacyParams,
    /// Medium budget `k`; also the Stopper threshold.
    pub budget: u64,
    pub t_low: f64,
    pub t_high: f64,
    /// Bound `T` on the number of steps.
    pub step_bound: u64,
}

impl CbtParams {
    /// Inflated budget `k' = k + (8/eps) ln(2/delta) ln(T/delta)` of the inner
    /// mechanism, rounded up.
    pub fn inflated_budget(&self) -> u64 {
        let eps = self.privacy.epsilon();
        let delta = self.privacy.delta();
        let extra = 8.0 / eps * (2.0 / delta).ln() * (self.step_bound.max(1) as f64 / delta).ln();
        self.budget + extra.max(0.0).ceil() as u64
    }

    pub fn violations(&self) -> Vec<ParamViolation> {
        let bt = BtParams {
            privacy: self.privacy,
            budget: self.budget,
            t_low: self.t_low,
            t_high: self.t_high,
        };
        let mut v = bt.check(4.0, 32.0, 4.0);
        if self.step_bound < 1 {
            v.push(ParamViolation::ZeroStepBound);
        }
        v
    }
}

/// Checks the input contract of [`ChallengeBt`], returning every violated
/// inequality.
pub fn validate_cbt_params(
    epsilon: f64,
    delta: f64,
    k: u64,
    t_low: f64,
    t_high: f64,
    step_bound: u64,
) -> Result<(), Vec<ParamViolation>> {
    let privacy = PrivacyParams::new(epsilon, delta).map_err(|_| {
        vec![ParamViolation::Budget {
            c: 4.0,
            k,
            required: f64::INFINITY,
        }]
    })?;
    let v = CbtParams {
        privacy,
        budget: k,
        t_low,
        t_high,
        step_bound,
    }
    .violations();
    if v.is_empty() {
        Ok(())
    } else {
        Err(v)
    }
}

/// BetweenThresholds whose halting time is blurred by a [`Stopper`].
///
/// The inner mechanism never halts and runs with `(eps, delta/2)` and the
/// inflated budget `k'`; the Stopper (threshold `k`) counts medium answers.
/// BT queries are honored only after a stopping query has raised the flag.
#[derive(Debug, Clone)]
pub struct ChallengeBt<S> {
    bt: BetweenThresholds<S>,
    stopper: Stopper,
    flag: bool,
    params: CbtParams,
    halted: bool,
}

impl<S> ChallengeBt<S> {
    /// Does not enforce the input contract; see [`CbtParams::violations`].
    pub fn new(data: S, params: CbtParams) -> Self {
        let stopper = Stopper::new(params.privacy, params.budget);
        let inner_privacy = PrivacyParams::new(params.privacy.epsilon(), params.privacy.delta() / 2.0)
            .expect("halving a valid delta stays valid");
        let bt = BetweenThresholds::never_halting(
            data,
            BtParams {
                privacy: inner_privacy,
                budget: params.inflated_budget(),
                t_low: params.t_low,
                t_high: params.t_high,
            },
        );
        Self {
            bt,
            stopper,
            flag: true,
            params,
            halted: false,
        }
    }

    pub fn stopping_query(&mut self, noise: &mut NoiseSource) -> Result<StopperAnswer> {
        if self.halted {
            return Err(Error::Halted {
                mechanism: "ChallengeBT",
                operation: "stopping queries",
            });
        }
        self.flag = true;
        let a = self.stopper.query(noise)?;
        if a == StopperAnswer::Halt {
            self.halted = true;
        }
        Ok(a)
    }

    pub fn bt_query<F>(&mut self, f: F, noise: &mut NoiseSource) -> Result<CbtAnswer>
    where
        F: FnOnce(&S) -> f64,
    {
        if self.halted {
            return Err(Error::Halted {
                mechanism: "ChallengeBT",
                operation: "BT queries",
            });
        }
        if !self.flag {
            return Ok(CbtAnswer::Ignored);
        }
        self.flag = false;
        let a = self.bt.query(f, noise)?;
        self.stopper.update(a == BtAnswer::Medium)?;
        Ok(a.into())
    }

    /// Noise-free answer of the inner mechanism; touches no state.
    pub fn classify_exact(&self, value: f64) -> BtAnswer {
        self.bt.classify(value)
    }

    pub fn data(&self) -> &S {
        self.bt.data()
    }

    pub fn into_data(self) -> S {
        self.bt.data
    }

    pub fn params(&self) -> &CbtParams {
        &self.params
    }

    pub fn flag(&self) -> bool {
        self.flag
    }

    pub fn is_halted(&self) -> bool {
        self.halted
    }

    pub fn stopper(&self) -> &Stopper {
        &self.stopper
    }

    pub fn inner(&self) -> &BetweenThresholds<S> {
        &self.bt
    }
}
