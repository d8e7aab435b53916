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

//! Simulated prediction games: sample a labeled dataset, stream gamma-mixed
//! queries to an oracle, and instrument every round.

pub mod adversary;
pub mod audit;
pub mod distribution;
pub mod stripe;
pub mod trace;

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Horizon, OracleKind};
use crate::error::{Error, Result};
use crate::geometry::{LabeledPoint, Point};
use crate::noise::NoiseSource;
use crate::params::{PhaseResolver, PhaseSchedule};
use crate::rectangles::{OracleEvent, PhaseNoise, RectanglesOracle, StepRecord};
use crate::stumps::DecisionPerp;

use adversary::QueryStream;
use distribution::{estimate_error, Concept};
use stripe::StripeOracle;
use trace::{RoundRecord, TraceLine, TraceSink, TrialHeader, TRACE_SCHEMA_VERSION};

pub const PROBE_MODE: &str = "noise-free-center";

/// Independent random streams of one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Sample = 1,
    Queries = 2,
    Probes = 3,
    OracleNoise = 4,
    Selection = 5,
}

/// Seed of one stream of one trial, derived with SplitMix64 finalizers.
pub fn stream_seed(seed: u64, trial: u32, stream: Stream) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    mix(seed ^ mix(u64::from(trial) ^ mix(stream as u64)))
}

/// Violation of an instrumented invariant, tagged with the phase it
/// happened in so it can be filtered by the noise events afterwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub round: u64,
    pub phase: u32,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub trial_id: u32,
    pub seed: u64,
    pub rounds: u64,
    pub final_phase: u32,
    pub probes: u64,
    pub max_error: f64,
    pub final_error: f64,
    pub in_distribution_rounds: u64,
    pub mixing_within_3_sigma: bool,
    pub reexecutions: u64,
    pub under_fills: u64,
    pub budget_sum: f64,
    pub budget_limit: f64,
    /// Every phase so far satisfied its noise event.
    pub noise_bounded: bool,
    pub phase_noise: Vec<PhaseNoise>,
    /// Positive labels outside the target among noise-bounded phases.
    pub one_sided_violations: Vec<Violation>,
    /// Same, without the noise filter.
    pub one_sided_violations_total: usize,
    pub stripe_checks: u64,
    pub stripe_violations: Vec<Violation>,
    pub stripe_violations_total: usize,
    pub probe_isolation_ok: bool,
}

impl TrialSummary {
    pub const TSV_HEADER: &'static str = "trial\tseed\trounds\tfinal_phase\tprobes\tmax_error\tfinal_error\tin_dist_rounds\tmixing_ok\treexecutions\tunder_fills\tbudget_sum\tbudget_limit\tnoise_bounded\tone_sided_violations\tstripe_checks\tstripe_violations\tprobe_isolation_ok";

    pub fn tsv_row(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}\t{:.6}\t{:.6}\t{}\t{}\t{}\t{}\t{:.6e}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.trial_id,
            self.seed,
            self.rounds,
            self.final_phase,
            self.probes,
            self.max_error,
            self.final_error,
            self.in_distribution_rounds,
            self.mixing_within_3_sigma,
            self.reexecutions,
            self.under_fills,
            self.budget_sum,
            self.budget_limit,
            self.noise_bounded,
            self.one_sided_violations.len(),
            self.stripe_checks,
            self.stripe_violations.len(),
            self.probe_isolation_ok
        )
    }
}

enum TrialOracle {
    Rect(Box<RectanglesOracle>),
    Stump(Box<DecisionPerp>),
}

impl TrialOracle {
    fn rect(&self) -> &RectanglesOracle {
        match self {
            TrialOracle::Rect(o) => o,
            TrialOracle::Stump(o) => o.inner(),
        }
    }

    fn step(&mut self, q: Option<&Point>) -> Result<StepRecord> {
        match self {
            TrialOracle::Rect(o) => o.step(q),
            TrialOracle::Stump(o) => o.step(q),
        }
    }

    fn predict(&self, x: &Point) -> bool {
        match self {
            TrialOracle::Rect(o) => o.predict_center(x),
            TrialOracle::Stump(o) => o.predict_center(x),
        }
    }
}

/// Labeled sample of size `n` from the configured distribution and concept.
pub fn sample_dataset(cfg: &ExperimentConfig, n: u64, seed: u64) -> Vec<LabeledPoint> {
    let dist = cfg.distribution();
    let c = cfg.concept();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let x = dist.sample(&mut rng);
            let l = c.label(x.coords());
            LabeledPoint::new(x, l)
        })
        .collect()
}

/// Runs one trial of `cfg` with the given base seed, streaming records into
/// `sink`.
pub fn run_trial(cfg: &ExperimentConfig, trial_id: u32, seed: u64, sink: &mut dyn TraceSink) -> Result<TrialSummary> {
    cfg.validate()?;
    let g = cfg.globals;
    let dist = cfg.distribution();
    let concept = cfg.concept();

    // The rectangle oracle uses the globals directly; the stump oracle runs
    // a 1-d rectangle oracle with its own derived parameters.
    let (sample_size, required, mut oracle, decision, schedule, budget_limit) = match cfg.oracle {
        OracleKind::Rectangles => {
            let resolver = Arc::new(PhaseResolver::new(g, cfg.resolver)?);
            let required = resolver.required_sample_size()?;
            let n = cfg
                .sample_size
                .unwrap_or_else(|| (required as f64 * cfg.sample_scale).ceil() as u64);
            let s = sample_dataset(cfg, n, stream_seed(seed, trial_id, Stream::Sample));
            let noise = NoiseSource::with_mode(cfg.noise, stream_seed(seed, trial_id, Stream::OracleNoise));
            let o = RectanglesOracle::new(&s, &g, resolver.clone(), noise)?;
            (
                n,
                Some(required),
                TrialOracle::Rect(Box::new(o)),
                None,
                resolver,
                g.delta_star,
            )
        }
        OracleKind::Stumps => {
            let inner = crate::params::GlobalParams {
                d: 1,
                epsilon: cfg.decision.inner_epsilon.unwrap_or(g.epsilon / 4.0),
                delta_star: g.delta_star / 2.0,
                alpha: g.alpha / 2.0,
                beta: g.beta / 2.0,
                gamma: g.gamma,
            };
            let resolver = Arc::new(PhaseResolver::new(inner, cfg.decision.resolver)?);
            let required = resolver.required_sample_size()?;
            let n = cfg
                .sample_size
                .unwrap_or_else(|| (required as f64 * cfg.sample_scale).ceil() as u64);
            let s = sample_dataset(cfg, n, stream_seed(seed, trial_id, Stream::Sample));
            let mut sel = NoiseSource::with_mode(cfg.noise, stream_seed(seed, trial_id, Stream::Selection));
            let noise = NoiseSource::with_mode(cfg.noise, stream_seed(seed, trial_id, Stream::OracleNoise));
            let o = DecisionPerp::new(&s, &g, &cfg.decision, &mut sel, noise)?;
            let header = o.header().clone();
            (
                n,
                Some(required),
                TrialOracle::Stump(Box::new(o)),
                Some(header),
                resolver,
                inner.delta_star,
            )
        }
    };

    let horizon_rounds = match cfg.horizon {
        Horizon::Rounds(r) => r,
        Horizon::Phases(p) => {
            let mut total: u128 = 0;
            for q in 1..=p {
                total += schedule.phase(q)?.t;
            }
            u64::try_from(total).map_err(|_| Error::Infeasible {
                phase: p,
                detail: "horizon does not fit in 64 bits".into(),
            })?
        }
    };
    let header_phases = match cfg.horizon {
        Horizon::Phases(p) => (1..=p).map(|q| schedule.phase(q)).collect::<Result<Vec<_>>>()?,
        Horizon::Rounds(_) => vec![*oracle.rect().phase_params()],
    };
    sink.emit(TraceLine::Header(&TrialHeader {
        schema_version: TRACE_SCHEMA_VERSION,
        trial_id,
        round: 0,
        kind: "header".into(),
        oracle: cfg.oracle,
        seed,
        globals: g,
        sample_size,
        required_sample_size: required,
        probe_mode: PROBE_MODE.into(),
        horizon_rounds,
        phases: header_phases,
        decision,
        init_events: oracle.rect().init_events().to_vec(),
    }))?;

    let mut stripes = match (&concept, dist.as_box(), cfg.oracle) {
        (Concept::Rectangle(r), Some((lo, hi)), OracleKind::Rectangles) if g.gamma == 1.0 => {
            Some(StripeOracle::new(lo, hi, r, g.alpha)?)
        }
        _ => None,
    };

    let mut queries = QueryStream::new(g.gamma, cfg.adversary.clone(), concept.clone(), dist.clone());
    let mut qrng = ChaCha12Rng::seed_from_u64(stream_seed(seed, trial_id, Stream::Queries));
    let mut prng = ChaCha12Rng::seed_from_u64(stream_seed(seed, trial_id, Stream::Probes));

    let mut s = TrialSummary {
        trial_id,
        seed,
        rounds: 0,
        final_phase: 1,
        probes: 0,
        max_error: 0.0,
        final_error: 0.0,
        in_distribution_rounds: 0,
        mixing_within_3_sigma: true,
        reexecutions: 0,
        under_fills: oracle.rect().init_events().len() as u64,
        budget_sum: 0.0,
        budget_limit,
        noise_bounded: true,
        phase_noise: Vec::new(),
        one_sided_violations: Vec::new(),
        one_sided_violations_total: 0,
        stripe_checks: 0,
        stripe_violations: Vec::new(),
        stripe_violations_total: 0,
        probe_isolation_ok: true,
    };
    let mut one_sided = Vec::new();
    let mut stripe_bad = Vec::new();
    let mut last_probed_generation = 0;
    let mut last_phase = 1;

    for round in 1..=horizon_rounds {
        let item = queries.next(&mut qrng);
        let step = oracle.step(item.query.as_ref())?;
        last_phase = step.phase;
        for e in &step.events {
            match e {
                OracleEvent::Reexecuted { .. } => s.reexecutions += 1,
                OracleEvent::ReexecUnderFill { .. } | OracleEvent::SliceUnderFill { .. } => s.under_fills += 1,
                _ => {}
            }
        }
        let truth = item.query.as_ref().map(|x| concept.label(x.coords()));
        if let (TrialOracle::Rect(_), Some(true), Some(false)) = (&oracle, step.appended, truth) {
            one_sided.push(Violation {
                round,
                phase: step.phase,
                detail: format!(
                    "positive label at {:?} outside the target",
                    item.query.as_ref().map(Point::coords)
                ),
            });
        }

        let mut probed_error = None;
        let gen = step.generation;
        if gen != last_probed_generation {
            last_probed_generation = gen;
            let before = oracle.rect().fingerprint();
            let e = estimate_error(|x| oracle.predict(x), &concept, &dist, cfg.probes, &mut prng)?;
            if oracle.rect().fingerprint() != before {
                s.probe_isolation_ok = false;
            }
            s.probes += 1;
            s.max_error = s.max_error.max(e);
            s.final_error = e;
            probed_error = Some(e);
            if let Some(so) = stripes.as_mut() {
                let o = oracle.rect();
                for id in o.handle_ids().collect::<Vec<_>>() {
                    s.stripe_checks += 1;
                    if let Some((lo, hi)) = o.handle_span(id) {
                        let (a, b) = so.union(o.phase(), id.axis, id.side)?;
                        if lo < a - 1e-12 || hi > b + 1e-12 {
                            stripe_bad.push(Violation {
                                round,
                                phase: o.phase(),
                                detail: format!("{id} spans [{lo}, {hi}] outside [{a}, {b}]"),
                            });
                        }
                    }
                }
            }
        }

        sink.emit(TraceLine::Round(&RoundRecord {
            schema_version: TRACE_SCHEMA_VERSION,
            trial_id,
            round,
            kind: "round",
            in_distribution: item.in_distribution,
            truth,
            probed_error,
            step,
        }))?;
        s.rounds = round;
    }

    s.final_phase = last_phase;
    s.in_distribution_rounds = queries.in_distribution_rounds();
    s.mixing_within_3_sigma = queries.mixing_within_3_sigma();
    for q in 1..=last_phase {
        let p = schedule.phase(q)?;
        s.budget_sum += p.t as f64 * p.delta_p;
    }
    s.phase_noise = oracle.rect().phase_noise();
    // bounded_through[p - 1]: phases 1..=p all met their noise event.
    let mut bounded_through = Vec::new();
    let mut all = true;
    for pn in &s.phase_noise {
        all &= pn.bounded;
        bounded_through.push(all);
    }
    let bounded = |phase: u32| bounded_through.get(phase as usize - 1).copied().unwrap_or(false);
    s.noise_bounded = bounded(last_phase);
    s.one_sided_violations_total = one_sided.len();
    s.one_sided_violations = one_sided.into_iter().filter(|v| bounded(v.phase)).collect();
    s.stripe_violations_total = stripe_bad.len();
    s.stripe_violations = stripe_bad.into_iter().filter(|v| bounded(v.phase)).collect();
    Ok(s)
}
