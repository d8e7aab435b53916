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

//! Phase schedule of the rectangle oracle.
//!
//! Only asymptotic forms are available for the per-phase constants, so the
//! resolver fixes them numerically: `delta_p` follows its closed form but is
//! capped so that phase `p` spends at most `delta* / 2^p` of the failure
//! budget, and `(m_p, t_p, Delta_p)` are raised by fixed-point iteration until
//! every feasibility inequality holds.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::PrivacyParams;
use crate::svt::CbtParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlobalParams {
    pub d: usize,
    pub epsilon: f64,
    pub delta_star: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl GlobalParams {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::config("d", "dimension must be at least 1"));
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::config("epsilon", "ε must be positive"));
        }
        if !(self.delta_star > 0.0 && self.delta_star < 1.0) {
            return Err(Error::config("delta_star", "δ* must be in (0,1)"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::config("alpha", "α must be in (0,1)"));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::config("beta", "β must be in (0,1)"));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::config("gamma", "γ must be in (0,1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResolverConstants {
    /// Multiplier on the closed form of `delta_p`.
    pub c_delta: f64,
    /// Multiplier on the lower bound of `m_p`.
    pub c_m: f64,
    /// `t_p >= c_t * (4d / (gamma alpha_p)) * m_p`. `None` calibrates the
    /// smallest value making `t_p >= (4d/(gamma alpha_p)) m_{p+1}` hold.
    pub c_t: Option<f64>,
    /// Polylog divisor `L` in the closed form of `delta_p`.
    pub l_poly: f64,
    pub max_iterations: u32,
    /// Number of phases checked when calibrating `c_t`.
    pub calibration_phases: u32,
}

impl Default for ResolverConstants {
    fn default() -> Self {
        Self {
            c_delta: 1.0,
            c_m: 1.0,
            c_t: None,
            l_poly: 1.0,
            max_iterations: 10_000,
            calibration_phases: 30,
        }
    }
}

/// Resolved constants of one phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseParams {
    pub phase: u32,
    pub alpha_p: f64,
    pub beta_p: f64,
    pub delta_p: f64,
    pub m: u64,
    pub k: u64,
    /// Number of rounds in the phase.
    pub t: u128,
    /// `Delta_p`, the Laplace bound of the noise event; thresholds are
    /// `(Delta_p, 2 Delta_p)`.
    pub noise_bound: f64,
    /// Bound on every geometric draw of the phase.
    pub geometric_bound: f64,
    /// Effective polylog divisor `L_p` after the budget cap.
    pub polylog: f64,
}

impl PhaseParams {
    /// Per-handle privacy `(eps / ln(1/delta_p), delta_p / d)`.
    pub fn handle_privacy(&self, d: usize, epsilon: f64) -> Result<PrivacyParams> {
        PrivacyParams::new(epsilon / (1.0 / self.delta_p).ln(), self.delta_p / d as f64)
    }

    pub fn cbt_params(&self, d: usize, epsilon: f64) -> Result<CbtParams> {
        Ok(CbtParams {
            privacy: self.handle_privacy(d, epsilon)?,
            budget: self.k,
            t_low: self.noise_bound,
            t_high: 2.0 * self.noise_bound,
            step_bound: u64::try_from(self.t).unwrap_or(u64::MAX),
        })
    }

    /// `Delta_p = (4 ln(1/delta_p)/eps) sqrt(k_p ln(2d/delta_p)) ln(8 d t_p / beta_p)`.
    pub fn delta_formula(d: usize, epsilon: f64, delta_p: f64, k: u64, t: u128, beta_p: f64) -> f64 {
        let d = d as f64;
        4.0 * (1.0 / delta_p).ln() / epsilon
            * (k as f64 * (2.0 * d / delta_p).ln()).sqrt()
            * (8.0 * d * t as f64 / beta_p).ln()
    }

    /// Every feasibility condition with its slack. `next` enables the
    /// cross-phase condition on `t_p`.
    pub fn feasibility(&self, g: &GlobalParams, next: Option<&PhaseParams>) -> Vec<Inequality> {
        let d = g.d as f64;
        let m = self.m as f64;
        let k = self.k as f64;
        let t = self.t as f64;
        let mut out = vec![
            Inequality::ge("m_p ≥ (1/ε)·ln(1/δ_p)·ln(4d/β_p)", m, self.geometric_bound),
            Inequality::ge("m_p ≥ 4Δ_p", m, 4.0 * self.noise_bound),
            Inequality::ge("k_p ≥ 2Δ_p", k, 2.0 * self.noise_bound),
            Inequality::eq("k_p = 2·m_p", k, 2.0 * m),
            Inequality::eq(
                "Δ_p = (4ln(1/δ_p)/ε)·√(k_p·ln(2d/δ_p))·ln(8d·t_p/β_p)",
                self.noise_bound,
                Self::delta_formula(g.d, g.epsilon, self.delta_p, self.k, self.t, self.beta_p),
            ),
            Inequality::ge(
                "t_p ≥ (8d/(γ·α_p))·ln(2d/β_p)",
                t,
                8.0 * d / (g.gamma * self.alpha_p) * (2.0 * d / self.beta_p).ln(),
            ),
            Inequality::ge(
                "t_p·δ_p ≤ δ*/2^p",
                g.delta_star / 2f64.powi(self.phase as i32),
                t * self.delta_p,
            ),
        ];
        if let Some(n) = next {
            out.push(Inequality::ge(
                "t_p ≥ (4d/(γ·α_p))·m_{p+1}",
                t,
                4.0 * d / (g.gamma * self.alpha_p) * n.m as f64,
            ));
        }
        match self.cbt_params(g.d, g.epsilon) {
            Ok(c) => {
                let eps = c.privacy.epsilon();
                let delta = c.privacy.delta();
                out.push(Inequality::ge(
                    "k ≥ 4 log(4/δ) [ChallengeBT]",
                    k,
                    4.0 * (4.0 / delta).ln(),
                ));
                out.push(Inequality::ge(
                    "t_h − t_l ≥ (32/ε)√(k log(4/δ)) [ChallengeBT]",
                    c.t_high - c.t_low,
                    32.0 / eps * (k * (4.0 / delta).ln()).sqrt(),
                ));
            }
            Err(e) => out.push(Inequality {
                name: format!("handle privacy valid ({e})"),
                lhs: 0.0,
                rhs: 1.0,
                holds: false,
            }),
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Inequality {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl Inequality {
    fn ge(name: &str, lhs: f64, rhs: f64) -> Self {
        Self {
            name: name.to_owned(),
            lhs,
            rhs,
            holds: lhs >= rhs,
        }
    }

    fn eq(name: &str, lhs: f64, rhs: f64) -> Self {
        let tol = 1e-9 * lhs.abs().max(rhs.abs()).max(1.0);
        Self {
            name: name.to_owned(),
            lhs,
            rhs,
            holds: (lhs - rhs).abs() <= tol,
        }
    }

    pub fn slack(&self) -> f64 {
        self.lhs - self.rhs
    }
}

impl fmt::Display for Inequality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<58} lhs={:<14.6e} rhs={:<14.6e} slack={:<14.6e} {}",
            self.name,
            self.lhs,
            self.rhs,
            self.slack(),
            if self.holds { "ok" } else { "VIOLATED" }
        )
    }
}

/// Source of per-phase constants for the rectangle oracle.
pub trait PhaseSchedule: fmt::Debug + Send + Sync {
    fn phase(&self, p: u32) -> Result<PhaseParams>;
}

/// Explicit list of phases; phases past the end repeat the last entry. Meant
/// for scripted runs with hand-picked constants.
#[derive(Debug, Clone)]
pub struct FixedSchedule {
    phases: Vec<PhaseParams>,
}

impl FixedSchedule {
    pub fn new(phases: Vec<PhaseParams>) -> Result<Self> {
        if phases.is_empty() {
            return Err(Error::InvalidInput("fixed schedule needs at least one phase".into()));
        }
        Ok(Self { phases })
    }
}

impl PhaseSchedule for FixedSchedule {
    fn phase(&self, p: u32) -> Result<PhaseParams> {
        if p == 0 {
            return Err(Error::param("phase", "phases are numbered from 1"));
        }
        let idx = (p as usize - 1).min(self.phases.len() - 1);
        Ok(PhaseParams {
            phase: p,
            ..self.phases[idx]
        })
    }
}

#[derive(Debug, Clone)]
pub struct PhaseResolver {
    globals: GlobalParams,
    constants: ResolverConstants,
    c_t: f64,
}

impl PhaseResolver {
    pub fn new(globals: GlobalParams, constants: ResolverConstants) -> Result<Self> {
        globals.validate()?;
        for (name, v) in [
            ("c_delta", constants.c_delta),
            ("c_m", constants.c_m),
            ("l_poly", constants.l_poly),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::config(format!("resolver.{name}"), "must be positive"));
            }
        }
        let c_t = match constants.c_t {
            Some(c) if c > 0.0 && c.is_finite() => c,
            Some(_) => return Err(Error::config("resolver.c_t", "must be positive")),
            None => Self::calibrate_c_t(&globals, &constants)?,
        };
        Ok(Self {
            globals,
            constants,
            c_t,
        })
    }

    pub fn globals(&self) -> &GlobalParams {
        &self.globals
    }

    pub fn constants(&self) -> &ResolverConstants {
        &self.constants
    }

    pub fn c_t(&self) -> f64 {
        self.c_t
    }

    fn calibrate_c_t(g: &GlobalParams, k: &ResolverConstants) -> Result<f64> {
        let horizon = k.calibration_phases.max(1);
        let mut c = 1.0;
        for _ in 0..200 {
            let phases = (1..=horizon + 1)
                .map(|p| Self::resolve_raw(g, k, c, p))
                .collect::<Result<Vec<_>>>()?;
            let mut need = c;
            for w in phases.windows(2) {
                let coeff = 4.0 * g.d as f64 / (g.gamma * w[0].alpha_p);
                if (w[0].t as f64) < coeff * w[1].m as f64 {
                    need = need.max(w[1].m as f64 / w[0].m as f64 * (1.0 + 1e-9));
                }
            }
            if need <= c {
                return Ok(c);
            }
            c = need;
        }
        Err(Error::Infeasible {
            phase: 1,
            detail: "c_t calibration did not converge".into(),
        })
    }

    fn resolve_raw(g: &GlobalParams, k: &ResolverConstants, c_t: f64, p: u32) -> Result<PhaseParams> {
        if p == 0 {
            return Err(Error::param("phase", "phases are numbered from 1"));
        }
        let d = g.d as f64;
        let two_p = 2f64.powi(p as i32);
        let alpha_p = g.alpha / two_p;
        let beta_p = g.beta / two_p;
        let closed_delta = k.c_delta * g.delta_star * g.gamma * g.alpha * g.epsilon.powi(2) * g.beta
            / (d * 8f64.powi(p as i32) * k.l_poly);
        let budget_share = g.delta_star / two_p;
        let t_coeff = 4.0 * d / (g.gamma * alpha_p);
        let t_floor = 8.0 * d / (g.gamma * alpha_p) * (2.0 * d / beta_p).ln();

        let mut m: u64 = 1;
        let mut delta_p = closed_delta.min(budget_share).min(0.5);
        for _ in 0..k.max_iterations {
            // ChallengeBT's gap condition needs ln(8dt/beta_p) >= 8 sqrt(ln(4d/delta_p)/ln(2d/delta_p)).
            let gap_exp = 8.0 * ((4.0 * d / delta_p).ln() / (2.0 * d / delta_p).ln()).sqrt();
            let t_gap = beta_p / (8.0 * d) * gap_exp.exp();
            let t_real = (c_t * t_coeff * m as f64).max(t_floor).max(t_gap).ceil();
            if !(t_real < u128::MAX as f64) {
                return Err(Error::Infeasible {
                    phase: p,
                    detail: "t_p overflows".into(),
                });
            }
            let t = t_real as u128;
            // Shrunk by one part in 10^9 so the product stays under the share after rounding.
            delta_p = closed_delta.min(budget_share / t as f64 * (1.0 - 1e-9)).min(0.5);
            let kk = 2 * m;
            let big_delta = PhaseParams::delta_formula(g.d, g.epsilon, delta_p, kk, t, beta_p);
            let geo = (1.0 / g.epsilon) * (1.0 / delta_p).ln() * (4.0 * d / beta_p).ln();
            let need = k.c_m * geo.max(4.0 * big_delta).max(2.0 * (4.0 * d / delta_p).ln());
            if !need.is_finite() || need > 1e18 {
                return Err(Error::Infeasible {
                    phase: p,
                    detail: format!("m_p lower bound {need:e} is out of range"),
                });
            }
            let m_next = (need.ceil() as u64).max(1);
            if m_next <= m {
                let params = PhaseParams {
                    phase: p,
                    alpha_p,
                    beta_p,
                    delta_p,
                    m,
                    k: kk,
                    t,
                    noise_bound: big_delta,
                    geometric_bound: geo,
                    polylog: k.c_delta * g.delta_star * g.gamma * g.alpha * g.epsilon.powi(2) * g.beta
                        / (d * 8f64.powi(p as i32) * delta_p),
                };
                return Ok(params);
            }
            m = m_next;
        }
        Err(Error::Infeasible {
            phase: p,
            detail: format!("fixed-point iteration did not converge in {} steps", k.max_iterations),
        })
    }

    /// Resolves phase `p` and verifies every feasibility inequality,
    /// including the cross-phase condition against phase `p + 1`.
    pub fn resolve(&self, p: u32) -> Result<PhaseParams> {
        let params = Self::resolve_raw(&self.globals, &self.constants, self.c_t, p)?;
        let next = Self::resolve_raw(&self.globals, &self.constants, self.c_t, p + 1)?;
        if let Some(bad) = params
            .feasibility(&self.globals, Some(&next))
            .into_iter()
            .find(|i| !i.holds)
        {
            return Err(Error::Infeasible {
                phase: p,
                detail: format!("violated {}", bad),
            });
        }
        Ok(params)
    }

    /// `sum_{p <= phases} t_p delta_p`.
    pub fn budget_sum(&self, phases: u32) -> Result<f64> {
        (1..=phases)
            .map(|p| self.resolve(p).map(|x| x.t as f64 * x.delta_p))
            .sum()
    }

    /// Initial sample size so that every first-phase stripe (mass
    /// `alpha_1 / d`) holds about twice the slice size plus geometric slack.
    pub fn required_sample_size(&self) -> Result<u64> {
        let p1 = self.resolve(1)?;
        let d = self.globals.d as f64;
        Ok((2.0 * d * (p1.m as f64 + p1.geometric_bound.ceil()) / p1.alpha_p).ceil() as u64)
    }

    pub fn report(&self, phases: u32) -> FeasibilityReport {
        let mut rows = Vec::new();
        let mut budget = 0.0;
        let mut errors = Vec::new();
        for p in 1..=phases {
            let cur = Self::resolve_raw(&self.globals, &self.constants, self.c_t, p);
            let next = Self::resolve_raw(&self.globals, &self.constants, self.c_t, p + 1);
            match (cur, next) {
                (Ok(c), Ok(n)) => {
                    budget += c.t as f64 * c.delta_p;
                    rows.push(PhaseReport {
                        inequalities: c.feasibility(&self.globals, Some(&n)),
                        params: c,
                    });
                }
                (Err(e), _) | (_, Err(e)) => errors.push((p, e.to_string())),
            }
        }
        FeasibilityReport {
            globals: self.globals,
            c_t: self.c_t,
            phases: rows,
            budget_sum: budget,
            required_sample_size: self.required_sample_size().ok(),
            errors,
        }
    }
}

impl PhaseSchedule for PhaseResolver {
    fn phase(&self, p: u32) -> Result<PhaseParams> {
        self.resolve(p)
    }
}

impl<T: PhaseSchedule + ?Sized> PhaseSchedule for Arc<T> {
    fn phase(&self, p: u32) -> Result<PhaseParams> {
        (**self).phase(p)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseReport {
    pub params: PhaseParams,
    pub inequalities: Vec<Inequality>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub globals: GlobalParams,
    pub c_t: f64,
    pub phases: Vec<PhaseReport>,
    pub budget_sum: f64,
    pub required_sample_size: Option<u64>,
    pub errors: Vec<(u32, String)>,
}

impl FeasibilityReport {
    pub fn all_hold(&self) -> bool {
        self.errors.is_empty()
            && self.budget_sum <= self.globals.delta_star
            && self.phases.iter().all(|p| p.inequalities.iter().all(|i| i.holds))
    }
}

impl fmt::Display for FeasibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let g = &self.globals;
        writeln!(
            f,
            "d={} ε={} δ*={} α={} β={} γ={}  (c_t = {:.6})",
            g.d, g.epsilon, g.delta_star, g.alpha, g.beta, g.gamma, self.c_t
        )?;
        if let Some(n) = self.required_sample_size {
            writeln!(f, "required initial sample size n = {n}")?;
        }
        for row in &self.phases {
            let p = &row.params;
            writeln!(
                f,
                "phase {}: α_p={:.4e} β_p={:.4e} δ_p={:.4e} m_p={} k_p={} t_p={} Δ_p={:.4} L_p={:.4e}",
                p.phase, p.alpha_p, p.beta_p, p.delta_p, p.m, p.k, p.t, p.noise_bound, p.polylog
            )?;
            for i in &row.inequalities {
                writeln!(f, "    {i}")?;
            }
        }
        for (p, e) in &self.errors {
            writeln!(f, "phase {p}: ERROR {e}")?;
        }
        writeln!(
            f,
            "Σ t_p·δ_p = {:.6e} {} δ* = {}",
            self.budget_sum,
            if self.budget_sum <= g.delta_star { "≤" } else { ">" },
            g.delta_star
        )
    }
}
