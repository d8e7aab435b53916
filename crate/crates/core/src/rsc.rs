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

//! Reorder-Slice-Compute: carve noisy-size extreme slices off a private pool
//! and hand each one to a freshly instantiated mechanism.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{NoiseSource, PrivacyParams};

/// Diagnostic emitted when a slice could not be filled to its noisy size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnderFill {
    pub slice: usize,
    pub requested: u64,
    pub available: u64,
}

/// Result of one slicing step.
#[derive(Debug)]
pub struct SliceOutcome<M> {
    pub handle: M,
    pub requested: u64,
    /// `m + Geom(1 - e^{-eps})` before clamping to the pool size.
    pub noisy_size: u64,
    pub taken: usize,
    pub under_fill: Option<UnderFill>,
}

#[derive(Debug, Clone)]
pub struct RscSession<R> {
    /// Records with their insertion index, the final tie-breaker.
    pool: Vec<(usize, R)>,
    slice_budget: usize,
    privacy: PrivacyParams,
    slices_taken: usize,
    under_fills: Vec<UnderFill>,
}

impl<R> RscSession<R> {
    pub fn new<I: IntoIterator<Item = R>>(records: I, slice_budget: usize, privacy: PrivacyParams) -> Result<Self> {
        if slice_budget == 0 {
            return Err(Error::param("slice_budget", "must be at least 1"));
        }
        Ok(Self {
            pool: records.into_iter().enumerate().collect(),
            slice_budget,
            privacy,
            slices_taken: 0,
            under_fills: Vec::new(),
        })
    }

    /// Takes the largest `m + Geom(1 - e^{-eps})` records under `order` and
    /// instantiates `factory` on them.
    ///
    /// `order` should already break ties on the record contents; records that
    /// still compare equal are ordered by insertion index (earlier is larger).
    pub fn slice<M, O, F>(&mut self, m: u64, order: O, factory: F, noise: &mut NoiseSource) -> Result<SliceOutcome<M>>
    where
        O: Fn(&R, &R) -> Ordering,
        F: FnOnce(Vec<R>) -> M,
    {
        if self.slices_taken >= self.slice_budget {
            return Err(Error::SliceBudgetExhausted {
                taken: self.slices_taken,
                budget: self.slice_budget,
            });
        }
        let p = 1.0 - (-self.privacy.epsilon()).exp();
        let noisy_size = m.saturating_add(noise.geometric(p)?);
        let take = usize::try_from(noisy_size).unwrap_or(usize::MAX).min(self.pool.len());

        // Descending: the largest records come first.
        self.pool
            .sort_by(|(ia, a), (ib, b)| order(b, a).then_with(|| ia.cmp(ib)));
        let rest = self.pool.split_off(take);
        let slice = std::mem::replace(&mut self.pool, rest);

        let index = self.slices_taken;
        self.slices_taken += 1;
        let under_fill = (take as u64) < noisy_size;
        let under_fill = under_fill.then_some(UnderFill {
            slice: index,
            requested: noisy_size,
            available: take as u64,
        });
        if let Some(u) = under_fill {
            self.under_fills.push(u);
        }
        let handle = factory(slice.into_iter().map(|(_, r)| r).collect());
        Ok(SliceOutcome {
            handle,
            requested: m,
            noisy_size,
            taken: take,
            under_fill,
        })
    }

    pub fn pool_len(&self) -> usize {
        self.pool.len()
    }

    pub fn pool(&self) -> impl Iterator<Item = &R> {
        self.pool.iter().map(|(_, r)| r)
    }

    pub fn slices_taken(&self) -> usize {
        self.slices_taken
    }

    pub fn slice_budget(&self) -> usize {
        self.slice_budget
    }

    pub fn privacy(&self) -> PrivacyParams {
        self.privacy
    }

    pub fn under_fills(&self) -> &[UnderFill] {
        &self.under_fills
    }
}

/// Reported privacy of a whole RSC run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyCost {
    pub epsilon: f64,
    pub delta: f64,
}

/// `(c * eps * ln(1/delta_hat), delta_hat + 2 tau delta)`, with `c` the
/// otherwise unspecified constant of the big-O (1 by default in configs).
pub fn rsc_privacy_cost(tau: usize, epsilon: f64, delta: f64, delta_hat: f64, c: f64) -> Result<PrivacyCost> {
    if tau == 0 {
        return Err(Error::param("tau", "must be at least 1"));
    }
    if !(epsilon > 0.0) {
        return Err(Error::param("epsilon", "must be positive"));
    }
    if !(delta >= 0.0) {
        return Err(Error::param("delta", "must be nonnegative"));
    }
    if !(delta_hat > 0.0 && delta_hat < 1.0) {
        return Err(Error::param("delta_hat", "must lie in (0, 1)"));
    }
    if !(c > 0.0) {
        return Err(Error::param("c", "must be positive"));
    }
    Ok(PrivacyCost {
        epsilon: c * epsilon * (1.0 / delta_hat).ln(),
        delta: delta_hat + 2.0 * tau as f64 * delta,
    })
}
