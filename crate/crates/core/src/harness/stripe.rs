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

//! Closed-form stripes of a rectangle under a uniform box distribution.
//!
//! Phase by phase and axis by axis, a slab of mass `alpha_p / d` is peeled
//! off the left side of what remains of the rectangle, then one off the right
//! side.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::RectConcept;
use crate::rectangles::Side;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stripe {
    pub lo: f64,
    pub hi: f64,
    /// Mass actually enclosed.
    pub mass: f64,
    /// The remaining rectangle was too thin to hold the full mass.
    pub exhausted: bool,
}

#[derive(Debug, Clone)]
pub struct StripeOracle {
    d: usize,
    alpha: f64,
    volume: f64,
    /// Stripes in peeling order: phase, axis, left then right.
    stripes: Vec<Stripe>,
    remaining: Vec<(f64, f64)>,
    bounds: Vec<(f64, f64)>,
}

impl StripeOracle {
    /// `c` must lie inside the box `[lo, hi]`.
    pub fn new(lo: &[f64], hi: &[f64], c: &RectConcept, alpha: f64) -> Result<Self> {
        let d = c.dim();
        if lo.len() != d || hi.len() != d {
            return Err(Error::InvalidInput("box and rectangle dimensions differ".into()));
        }
        for (j, &(a, b)) in c.bounds().iter().enumerate() {
            if a < lo[j] || b > hi[j] {
                return Err(Error::InvalidInput(format!("rectangle leaves the box on axis {j}")));
            }
        }
        Ok(Self {
            d,
            alpha,
            volume: lo.iter().zip(hi).map(|(a, b)| b - a).product(),
            stripes: Vec::new(),
            remaining: c.bounds().to_vec(),
            bounds: c.bounds().to_vec(),
        })
    }

    fn peeled_phases(&self) -> u32 {
        (self.stripes.len() / (2 * self.d)) as u32
    }

    fn peel_phase(&mut self) {
        let p = self.peeled_phases() + 1;
        let target = self.alpha / 2f64.powi(p as i32) / self.d as f64;
        for j in 0..self.d {
            for side in [Side::Left, Side::Right] {
                let cross: f64 = (0..self.d)
                    .filter(|&i| i != j)
                    .map(|i| self.remaining[i].1 - self.remaining[i].0)
                    .product::<f64>()
                    / self.volume;
                let (a, b) = self.remaining[j];
                let width = b - a;
                let (w, exhausted) = if cross <= 0.0 {
                    (width, true)
                } else {
                    let w = target / cross;
                    if w > width {
                        (width, true)
                    } else {
                        (w, false)
                    }
                };
                let stripe = match side {
                    Side::Left => {
                        self.remaining[j].0 = a + w;
                        Stripe {
                            lo: a,
                            hi: a + w,
                            mass: w * cross,
                            exhausted,
                        }
                    }
                    Side::Right => {
                        self.remaining[j].1 = b - w;
                        Stripe {
                            lo: b - w,
                            hi: b,
                            mass: w * cross,
                            exhausted,
                        }
                    }
                };
                self.stripes.push(stripe);
            }
        }
    }

    pub fn stripe(&mut self, p: u32, axis: usize, side: Side) -> Result<Stripe> {
        if p == 0 || axis >= self.d {
            return Err(Error::param("stripe", format!("no stripe for phase {p}, axis {axis}")));
        }
        while self.peeled_phases() < p {
            self.peel_phase();
        }
        let idx = (p as usize - 1) * 2 * self.d + 2 * axis + usize::from(side == Side::Right);
        Ok(self.stripes[idx])
    }

    /// Projection on `axis` of the union of the stripes of phases `1..=p` on
    /// one side. The stripes of one side are adjacent, so this is an interval.
    pub fn union(&mut self, p: u32, axis: usize, side: Side) -> Result<(f64, f64)> {
        let s = self.stripe(p, axis, side)?;
        let (a, b) = self.bounds[axis];
        Ok(match side {
            Side::Left => (a, s.hi),
            Side::Right => (s.lo, b),
        })
    }

    /// Total mass of all stripes of phases `1..=p`.
    pub fn peeled_mass(&mut self, p: u32) -> Result<f64> {
        if p > 0 {
            self.stripe(p, 0, Side::Left)?;
        }
        Ok(self.stripes[..p as usize * 2 * self.d].iter().map(|s| s.mass).sum())
    }
}
