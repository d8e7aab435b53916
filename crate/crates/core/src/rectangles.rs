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

//! Everlasting robust prediction oracle for axis-aligned rectangles.
//!
//! Each axis `j` keeps two ChallengeBT handles. `Left_j` holds the leftmost
//! positive examples on axis `j` and `Right_j` the rightmost. A query is
//! labeled 1 only when every handle reports that (noisily) almost none of its
//! points lie beyond the query. Time is split into phases. At the end of a
//! phase the handles are rebuilt with RSC from the points labeled during that
//! phase.

use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{AxisSample, LabeledPoint, Point};
use crate::noise::{NoiseSource, NoiseStats};
use crate::params::{GlobalParams, PhaseParams, PhaseSchedule};
use crate::rsc::RscSession;
use crate::svt::{CbtAnswer, CbtParams, ChallengeBt, StopperAnswer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Side::Left => "left",
            Side::Right => "right",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HandleId {
    pub axis: usize,
    pub side: Side,
}

impl HandleId {
    fn index(self) -> usize {
        2 * self.axis + usize::from(self.side == Side::Right)
    }

    fn from_index(i: usize) -> Self {
        Self {
            axis: i / 2,
            side: if i.is_multiple_of(2) { Side::Left } else { Side::Right },
        }
    }
}

impl fmt::Display for HandleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.side, self.axis)
    }
}

/// One honored BT query of a round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HandleAnswer {
    pub handle: HandleId,
    /// Exact count the handle was asked about.
    pub count: usize,
    pub answer: CbtAnswer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum OracleEvent {
    /// A handle halted on its stopping query and was restarted on the
    /// points that earned it medium answers.
    Reexecuted { handle: HandleId, replacement_size: usize },
    /// A restarted handle received fewer than `m_p` points.
    ReexecUnderFill {
        handle: HandleId,
        size: usize,
        expected: u64,
    },
    /// RSC could not fill a slice.
    SliceUnderFill {
        phase: u32,
        handle: HandleId,
        requested: u64,
        available: u64,
    },
    /// The query earned a medium answer and was kept for a future restart
    /// instead of being added to the phase dataset.
    MediumDeferred { handle: HandleId },
    Rollover {
        new_phase: u32,
        positives: usize,
        labeled: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub time: u64,
    /// Phase in which the round was answered.
    pub phase: u32,
    /// `None` for a blank round.
    pub query: Option<Point>,
    pub prediction: Option<bool>,
    pub answers: Vec<HandleAnswer>,
    /// Label appended to the phase dataset this round, if any.
    pub appended: Option<bool>,
    pub events: Vec<OracleEvent>,
    /// `|D|` after the round (after rollover, if one happened).
    pub dataset_len: usize,
    /// `|D_j^side|` after the round, indexed `2j` (left) and `2j + 1` (right).
    pub side_lens: Vec<usize>,
    pub generation: u64,
}

/// Extremes of the noise drawn while a phase was active, compared against the
/// bounds of the phase's noise event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseNoise {
    pub phase: u32,
    pub stats: NoiseStats,
    pub noise_bound: f64,
    pub geometric_bound: f64,
    /// Every Laplace draw within `noise_bound` and every geometric draw
    /// within `geometric_bound`.
    pub bounded: bool,
    pub closed: bool,
}

impl PhaseNoise {
    fn new(params: &PhaseParams, stats: NoiseStats, closed: bool) -> Self {
        Self {
            phase: params.phase,
            stats,
            noise_bound: params.noise_bound,
            geometric_bound: params.geometric_bound,
            bounded: stats.max_abs_laplace <= params.noise_bound
                && stats.max_geometric as f64 <= params.geometric_bound,
            closed,
        }
    }
}

type Handle = ChallengeBt<AxisSample>;

#[derive(Debug, Clone)]
pub struct RectanglesOracle {
    d: usize,
    epsilon: f64,
    schedule: Arc<dyn PhaseSchedule>,
    params: PhaseParams,
    cbt: CbtParams,
    phase_end: u128,
    time: u64,
    handles: Vec<Handle>,
    /// Positive points of `D`; negatives are only counted since rebuilding
    /// never reads them.
    positives: Vec<Point>,
    negatives: usize,
    side_sets: Vec<Vec<Point>>,
    noise: NoiseSource,
    generation: u64,
    closed_phases: Vec<PhaseNoise>,
    init_events: Vec<OracleEvent>,
    failed: bool,
}

impl RectanglesOracle {
    /// Builds the phase-1 handles from the positive examples of `sample`.
    pub fn new(
        sample: &[LabeledPoint],
        globals: &GlobalParams,
        schedule: Arc<dyn PhaseSchedule>,
        mut noise: NoiseSource,
    ) -> Result<Self> {
        globals.validate()?;
        let d = globals.d;
        for (i, lp) in sample.iter().enumerate() {
            check_point(&lp.point, d).map_err(|e| Error::InvalidInput(format!("sample point {i}: {e}")))?;
        }
        let params = schedule.phase(1)?;
        let cbt = params.cbt_params(d, globals.epsilon)?;
        noise.take_stats();
        let mut oracle = Self {
            d,
            epsilon: globals.epsilon,
            schedule,
            params,
            cbt,
            phase_end: params.t,
            time: 0,
            handles: Vec::new(),
            positives: Vec::new(),
            negatives: 0,
            side_sets: vec![Vec::new(); 2 * d],
            noise,
            generation: 0,
            closed_phases: Vec::new(),
            init_events: Vec::new(),
            failed: false,
        };
        let pool: Vec<Point> = sample.iter().filter(|lp| lp.label).map(|lp| lp.point.clone()).collect();
        oracle.init_events = oracle.install(pool)?;
        Ok(oracle)
    }

    /// Slices `2d` fresh handles out of `pool`, Right before Left on each axis.
    fn install(&mut self, pool: Vec<Point>) -> Result<Vec<OracleEvent>> {
        let d = self.d;
        let privacy = self.cbt.privacy;
        let mut rsc = RscSession::new(pool, 2 * d, privacy)?;
        let mut handles: Vec<Option<Handle>> = (0..2 * d).map(|_| None).collect();
        let mut events = Vec::new();
        for axis in 0..d {
            for side in [Side::Right, Side::Left] {
                let cbt = self.cbt;
                let out = rsc.slice(
                    self.params.m,
                    |a: &Point, b: &Point| match side {
                        Side::Right => a.cmp_on_axis(b, axis),
                        Side::Left => b.cmp_on_axis(a, axis),
                    },
                    |pts| ChallengeBt::new(AxisSample::from_points(&pts, axis), cbt),
                    &mut self.noise,
                )?;
                let id = HandleId { axis, side };
                if let Some(u) = out.under_fill {
                    events.push(OracleEvent::SliceUnderFill {
                        phase: self.params.phase,
                        handle: id,
                        requested: u.requested,
                        available: u.available,
                    });
                }
                handles[id.index()] = Some(out.handle);
            }
        }
        self.handles = handles.into_iter().map(|h| h.expect("every handle sliced")).collect();
        self.generation += 1;
        Ok(events)
    }

    /// Answers one round. `None` is a blank round: stopping queries and phase
    /// bookkeeping still run, but nothing is labeled.
    pub fn step(&mut self, query: Option<&Point>) -> Result<StepRecord> {
        if self.failed {
            return Err(Error::Internal(
                "oracle is unusable after an earlier internal error".into(),
            ));
        }
        if let Some(x) = query {
            check_point(x, self.d)?;
        }
        let out = self.step_inner(query);
        if matches!(
            out,
            Err(Error::Internal(_)) | Err(Error::Halted { .. }) | Err(Error::ScriptExhausted { .. })
        ) {
            self.failed = true;
        }
        out
    }

    fn step_inner(&mut self, query: Option<&Point>) -> Result<StepRecord> {
        self.time += 1;
        let phase = self.params.phase;
        let mut events = Vec::new();

        let mut halted = Vec::new();
        for (i, h) in self.handles.iter_mut().enumerate() {
            if h.stopping_query(&mut self.noise)? == StopperAnswer::Halt {
                halted.push(i);
            }
        }
        for i in halted {
            let id = HandleId::from_index(i);
            let pts = std::mem::take(&mut self.side_sets[i]);
            self.handles[i] = ChallengeBt::new(AxisSample::from_points(&pts, id.axis), self.cbt);
            self.generation += 1;
            events.push(OracleEvent::Reexecuted {
                handle: id,
                replacement_size: pts.len(),
            });
            if (pts.len() as u64) < self.params.m {
                events.push(OracleEvent::ReexecUnderFill {
                    handle: id,
                    size: pts.len(),
                    expected: self.params.m,
                });
            }
        }

        let mut answers = Vec::new();
        let mut prediction = None;
        let mut appended = None;
        if let Some(x) = query {
            let (label, deferred) = self.run_tests(x, &mut answers)?;
            prediction = Some(label);
            match deferred {
                Some(id) => {
                    self.side_sets[id.index()].push(x.clone());
                    events.push(OracleEvent::MediumDeferred { handle: id });
                }
                None => {
                    if label {
                        self.positives.push(x.clone());
                    } else {
                        self.negatives += 1;
                    }
                    appended = Some(label);
                }
            }
        }

        if self.time as u128 == self.phase_end {
            events.extend(self.rollover()?);
        }

        Ok(StepRecord {
            time: self.time,
            phase,
            query: query.cloned(),
            prediction,
            answers,
            appended,
            events,
            dataset_len: self.dataset_len(),
            side_lens: self.side_sets.iter().map(Vec::len).collect(),
            generation: self.generation,
        })
    }

    /// Runs the per-axis tests. Returns the label and, on a medium answer,
    /// the handle that claimed the point.
    fn run_tests(&mut self, x: &Point, answers: &mut Vec<HandleAnswer>) -> Result<(bool, Option<HandleId>)> {
        for axis in 0..self.d {
            let key = x.key(axis);
            for side in [Side::Left, Side::Right] {
                let id = HandleId { axis, side };
                let h = &mut self.handles[id.index()];
                let count = match side {
                    Side::Left => h.data().count_greater(key),
                    Side::Right => h.data().count_less(key),
                };
                let answer = h.bt_query(|_| count as f64, &mut self.noise)?;
                answers.push(HandleAnswer {
                    handle: id,
                    count,
                    answer,
                });
                match answer {
                    CbtAnswer::Low => {}
                    CbtAnswer::High => return Ok((false, None)),
                    CbtAnswer::Medium => return Ok((false, Some(id))),
                    CbtAnswer::Ignored => {
                        return Err(Error::Internal(format!(
                            "{id} ignored a BT query after its stopping query"
                        )));
                    }
                }
            }
        }
        Ok((true, None))
    }

    fn rollover(&mut self) -> Result<Vec<OracleEvent>> {
        let stats = self.noise.take_stats();
        self.closed_phases.push(PhaseNoise::new(&self.params, stats, true));
        let next = self.schedule.phase(self.params.phase + 1)?;
        self.params = next;
        self.cbt = next.cbt_params(self.d, self.epsilon)?;
        self.phase_end = self
            .phase_end
            .checked_add(next.t)
            .ok_or_else(|| Error::Internal("phase end overflows".into()))?;
        let pool = std::mem::take(&mut self.positives);
        let labeled = pool.len() + self.negatives;
        let positives = pool.len();
        self.negatives = 0;
        for s in &mut self.side_sets {
            s.clear();
        }
        let mut events = vec![OracleEvent::Rollover {
            new_phase: next.phase,
            positives,
            labeled,
        }];
        events.extend(self.install(pool)?);
        Ok(events)
    }

    /// Noise-free prediction of the current handles: 1 iff every handle's
    /// exact count is below the low threshold. Touches no state.
    pub fn predict_center(&self, x: &Point) -> bool {
        (0..self.d).all(|axis| {
            let key = x.key(axis);
            let l = &self.handles[2 * axis];
            let r = &self.handles[2 * axis + 1];
            l.classify_exact(l.data().count_greater(key) as f64) == crate::svt::BtAnswer::Low
                && r.classify_exact(r.data().count_less(key) as f64) == crate::svt::BtAnswer::Low
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    pub fn phase(&self) -> u32 {
        self.params.phase
    }

    pub fn phase_params(&self) -> &PhaseParams {
        &self.params
    }

    /// Last round of the current phase.
    pub fn phase_end(&self) -> u128 {
        self.phase_end
    }

    /// Incremented whenever any handle's dataset changes.
    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn handle_count(&self) -> usize {
        self.handles.len()
    }

    pub fn handle(&self, id: HandleId) -> &ChallengeBt<AxisSample> {
        &self.handles[id.index()]
    }

    pub fn handle_ids(&self) -> impl Iterator<Item = HandleId> {
        (0..2 * self.d).map(HandleId::from_index)
    }

    /// Closed range of a handle's dataset projected on its axis.
    pub fn handle_span(&self, id: HandleId) -> Option<(f64, f64)> {
        self.handles[id.index()].data().span()
    }

    pub fn dataset_len(&self) -> usize {
        self.positives.len() + self.negatives
    }

    /// Points labeled 1 during the current phase.
    pub fn dataset_positives(&self) -> &[Point] {
        &self.positives
    }

    pub fn side_set(&self, id: HandleId) -> &[Point] {
        &self.side_sets[id.index()]
    }

    /// Under-fill events raised while building the phase-1 handles.
    pub fn init_events(&self) -> &[OracleEvent] {
        &self.init_events
    }

    /// Noise extremes of every closed phase followed by the open one.
    pub fn phase_noise(&self) -> Vec<PhaseNoise> {
        let mut out = self.closed_phases.clone();
        out.push(PhaseNoise::new(&self.params, self.noise.stats(), false));
        out
    }

    /// Hash of the full mutable state, used to check that probing leaves the
    /// oracle untouched.
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.time.hash(&mut h);
        self.params.phase.hash(&mut h);
        self.phase_end.hash(&mut h);
        self.generation.hash(&mut h);
        self.negatives.hash(&mut h);
        self.noise.position().hash(&mut h);
        let stats = self.noise.stats();
        (
            stats.laplace_draws,
            stats.geometric_draws,
            stats.max_abs_laplace.to_bits(),
            stats.max_geometric,
        )
            .hash(&mut h);
        for p in self.positives.iter().chain(self.side_sets.iter().flatten()) {
            hash_point(p, &mut h);
        }
        for s in &self.side_sets {
            s.len().hash(&mut h);
        }
        for c in &self.handles {
            (
                c.flag(),
                c.is_halted(),
                c.stopper().len(),
                c.stopper().sum(),
                c.inner().mediums(),
            )
                .hash(&mut h);
            for k in c.data().keys() {
                (k.value.to_bits(), k.aux.to_bits()).hash(&mut h);
            }
        }
        h.finish()
    }
}

fn hash_point(p: &Point, h: &mut DefaultHasher) {
    for v in p.coords().iter().chain(p.aux()) {
        v.to_bits().hash(h);
    }
}

fn check_point(p: &Point, d: usize) -> Result<()> {
    if p.dim() != d {
        return Err(Error::InvalidInput(format!(
            "expected {d} coordinates, got {}",
            p.dim()
        )));
    }
    if !p.is_finite() {
        return Err(Error::InvalidInput("point has a non-finite coordinate".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::FixedSchedule;

    fn globals(d: usize) -> GlobalParams {
        GlobalParams {
            d,
            epsilon: 1000.0,
            delta_star: 0.1,
            alpha: 0.2,
            beta: 0.1,
            gamma: 1.0,
        }
    }

    /// Hand-picked phase with `Delta = 0.5`, so thresholds are `(0.5, 1.0)`.
    fn phase(m: u64, k: u64, t: u128) -> PhaseParams {
        PhaseParams {
            phase: 1,
            alpha_p: 0.1,
            beta_p: 0.05,
            delta_p: 1e-6,
            m,
            k,
            t,
            noise_bound: 0.5,
            geometric_bound: 1.0,
            polylog: 1.0,
        }
    }

    fn pos(v: f64) -> LabeledPoint {
        LabeledPoint::new(Point::new(vec![v]), true)
    }

    fn oracle_1d(k: u64, t: u128) -> RectanglesOracle {
        let sample: Vec<_> = (1..=10).chain(91..=100).map(|v| pos(v as f64)).collect();
        let sched = Arc::new(FixedSchedule::new(vec![phase(10, k, t)]).unwrap());
        RectanglesOracle::new(&sample, &globals(1), sched, NoiseSource::zero()).unwrap()
    }

    fn keys(o: &RectanglesOracle, id: HandleId) -> Vec<f64> {
        o.handle(id).data().keys().iter().map(|k| k.value).collect()
    }

    const L0: HandleId = HandleId {
        axis: 0,
        side: Side::Left,
    };
    const R0: HandleId = HandleId {
        axis: 0,
        side: Side::Right,
    };

    #[test]
    fn init_slices_extremes() {
        let o = oracle_1d(5, 100);
        assert_eq!(o.handle_count(), 2);
        assert_eq!(keys(&o, L0), (1..=10).map(f64::from).collect::<Vec<_>>());
        assert_eq!(keys(&o, R0), (91..=100).map(f64::from).collect::<Vec<_>>());
        assert!(o.init_events().is_empty());
    }

    #[test]
    fn negatives_are_not_sliced() {
        let mut sample: Vec<_> = (1..=4).map(|v| pos(v as f64)).collect();
        sample.push(LabeledPoint::new(Point::new(vec![-50.0]), false));
        let sched = Arc::new(FixedSchedule::new(vec![phase(3, 5, 100)]).unwrap());
        let o = RectanglesOracle::new(&sample, &globals(1), sched, NoiseSource::zero()).unwrap();
        assert_eq!(keys(&o, R0), vec![2.0, 3.0, 4.0]);
        assert_eq!(keys(&o, L0), vec![1.0]);
        assert_eq!(
            o.init_events(),
            &[OracleEvent::SliceUnderFill {
                phase: 1,
                handle: L0,
                requested: 3,
                available: 1
            }]
        );
    }

    #[test]
    fn inside_point_is_positive() {
        let mut o = oracle_1d(5, 100);
        let r = o.step(Some(&Point::new(vec![50.0]))).unwrap();
        assert_eq!(r.prediction, Some(true));
        assert_eq!(r.appended, Some(true));
        assert_eq!(
            r.answers
                .iter()
                .map(|a| (a.handle, a.count, a.answer))
                .collect::<Vec<_>>(),
            vec![(L0, 0, CbtAnswer::Low), (R0, 0, CbtAnswer::Low)]
        );
        assert_eq!(r.dataset_len, 1);
    }

    #[test]
    fn outside_point_is_high() {
        let mut o = oracle_1d(5, 100);
        let r = o.step(Some(&Point::new(vec![-5.0]))).unwrap();
        assert_eq!(r.prediction, Some(false));
        assert_eq!(r.answers.len(), 1);
        assert_eq!(r.answers[0].count, 10);
        assert_eq!(r.answers[0].answer, CbtAnswer::High);
        assert_eq!(r.appended, Some(false));
        assert_eq!(r.dataset_len, 1);
        assert!(o.dataset_positives().is_empty());
    }

    #[test]
    fn blank_round_changes_nothing() {
        let mut o = oracle_1d(5, 100);
        let before = o.side_set(L0).len() + o.dataset_len();
        let r = o.step(None).unwrap();
        assert_eq!(r.prediction, None);
        assert!(r.answers.is_empty());
        assert_eq!(before, o.side_set(L0).len() + o.dataset_len());
    }

    #[test]
    fn medium_defers_then_halt_restarts() {
        let mut o = oracle_1d(1, 100);
        let x = Point::new(vec![9.5]);
        let r = o.step(Some(&x)).unwrap();
        assert_eq!(r.prediction, Some(false));
        assert_eq!(r.answers[0].count, 1);
        assert_eq!(r.answers[0].answer, CbtAnswer::Medium);
        assert_eq!(r.appended, None);
        assert_eq!(r.events, vec![OracleEvent::MediumDeferred { handle: L0 }]);
        assert_eq!(r.side_lens, vec![1, 0]);
        assert_eq!(o.dataset_len(), 0);

        let g = o.generation();
        let r = o.step(Some(&Point::new(vec![50.0]))).unwrap();
        assert_eq!(o.generation(), g + 1);
        assert_eq!(
            r.events,
            vec![
                OracleEvent::Reexecuted {
                    handle: L0,
                    replacement_size: 1
                },
                OracleEvent::ReexecUnderFill {
                    handle: L0,
                    size: 1,
                    expected: 10
                }
            ]
        );
        assert_eq!(keys(&o, L0), vec![9.5]);
        assert_eq!(r.side_lens, vec![0, 0]);
        assert_eq!(r.prediction, Some(true));
    }

    #[test]
    fn right_handle_medium_goes_to_right_set() {
        let mut o = oracle_1d(5, 100);
        let r = o.step(Some(&Point::new(vec![91.5]))).unwrap();
        assert_eq!(
            r.answers
                .iter()
                .map(|a| (a.handle, a.count, a.answer))
                .collect::<Vec<_>>(),
            vec![(L0, 0, CbtAnswer::Low), (R0, 1, CbtAnswer::Medium)]
        );
        assert_eq!(r.side_lens, vec![0, 1]);
    }

    #[test]
    fn rollover_reslices_phase_dataset() {
        let mut o = oracle_1d(5, 4);
        for v in [40.0, 60.0, 200.0] {
            o.step(Some(&Point::new(vec![v]))).unwrap();
        }
        let r = o.step(Some(&Point::new(vec![9.5]))).unwrap();
        // The medium answer was deferred, then the boundary cleared it.
        assert!(r.events.contains(&OracleEvent::MediumDeferred { handle: L0 }));
        assert_eq!(r.phase, 1);
        assert_eq!(o.phase(), 2);
        assert_eq!(o.time(), 4);
        assert_eq!(o.phase_end(), 8);
        assert_eq!(o.dataset_len(), 0);
        assert!(o.handle_ids().all(|id| o.side_set(id).is_empty()));
        assert_eq!(o.handle_count(), 2);
        // Two positives (40, 60): Right takes both, Left under-fills.
        assert_eq!(keys(&o, R0), vec![40.0, 60.0]);
        assert!(keys(&o, L0).is_empty());
        assert_eq!(o.phase_noise().len(), 2);
    }

    #[test]
    fn two_dimensional_trace() {
        let mut sample = Vec::new();
        for i in 0..4 {
            let v = i as f64;
            sample.push(LabeledPoint::new(Point::new(vec![v, 50.0 + v]), true));
            sample.push(LabeledPoint::new(Point::new(vec![100.0 + v, 60.0 + v]), true));
            sample.push(LabeledPoint::new(Point::new(vec![50.0 + v, v]), true));
            sample.push(LabeledPoint::new(Point::new(vec![60.0 + v, 100.0 + v]), true));
        }
        let sched = Arc::new(FixedSchedule::new(vec![phase(4, 5, 100)]).unwrap());
        let mut o = RectanglesOracle::new(&sample, &globals(2), sched, NoiseSource::zero()).unwrap();
        let axis_keys = |o: &RectanglesOracle, axis, side| keys(o, HandleId { axis, side });
        assert_eq!(axis_keys(&o, 0, Side::Right), vec![100.0, 101.0, 102.0, 103.0]);
        assert_eq!(axis_keys(&o, 0, Side::Left), vec![0.0, 1.0, 2.0, 3.0]);
        assert_eq!(axis_keys(&o, 1, Side::Right), vec![100.0, 101.0, 102.0, 103.0]);
        assert_eq!(axis_keys(&o, 1, Side::Left), vec![0.0, 1.0, 2.0, 3.0]);

        let r = o.step(Some(&Point::new(vec![50.0, 50.0]))).unwrap();
        assert_eq!(r.prediction, Some(true));
        assert_eq!(r.answers.len(), 4);

        // Passes axis 0, then Left_1 sees one key (3) above 2.5.
        let r = o.step(Some(&Point::new(vec![50.0, 2.5]))).unwrap();
        assert_eq!(
            r.answers
                .iter()
                .map(|a| (a.handle.axis, a.handle.side, a.count, a.answer))
                .collect::<Vec<_>>(),
            vec![
                (0, Side::Left, 0, CbtAnswer::Low),
                (0, Side::Right, 0, CbtAnswer::Low),
                (1, Side::Left, 1, CbtAnswer::Medium),
            ]
        );
        assert_eq!(r.side_lens, vec![0, 0, 1, 0]);

        let r = o.step(Some(&Point::new(vec![50.0, 200.0]))).unwrap();
        assert_eq!(r.answers.last().unwrap().answer, CbtAnswer::High);
        assert_eq!(
            r.answers.last().unwrap().handle,
            HandleId {
                axis: 1,
                side: Side::Right
            }
        );
        assert_eq!(r.prediction, Some(false));
        assert_eq!(r.dataset_len, 2);
    }

    #[test]
    fn probing_does_not_touch_state() {
        let mut o = oracle_1d(5, 100);
        o.step(Some(&Point::new(vec![9.5]))).unwrap();
        let f = o.fingerprint();
        for v in [-5.0, 9.5, 50.0, 95.5] {
            o.predict_center(&Point::new(vec![v]));
        }
        assert_eq!(f, o.fingerprint());
        o.step(None).unwrap();
        assert_ne!(f, o.fingerprint());
    }

    #[test]
    fn center_matches_zero_noise_answers() {
        let o = oracle_1d(5, 100);
        for v in [-5.0, 1.0, 9.5, 10.0, 50.0, 91.0, 91.5, 120.0] {
            let x = Point::new(vec![v]);
            let mut c = o.clone();
            let r = c.step(Some(&x)).unwrap();
            assert_eq!(r.prediction, Some(o.predict_center(&x)), "x = {v}");
        }
    }

    #[test]
    fn rejects_wrong_dimension() {
        let mut o = oracle_1d(5, 100);
        assert!(matches!(
            o.step(Some(&Point::new(vec![1.0, 2.0]))),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            o.step(Some(&Point::new(vec![f64::NAN]))),
            Err(Error::InvalidInput(_))
        ));
        assert_eq!(o.time(), 0);
    }

    #[test]
    fn seeded_runs_replay() {
        let run = |seed| {
            let sample: Vec<_> = (1..=10).chain(91..=100).map(|v| pos(v as f64)).collect();
            let sched = Arc::new(FixedSchedule::new(vec![phase(10, 3, 7)]).unwrap());
            let mut o = RectanglesOracle::new(&sample, &globals(1), sched, NoiseSource::seeded(seed)).unwrap();
            (0..30)
                .map(|i| o.step(Some(&Point::new(vec![(i * 7 % 110) as f64]))).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(run(5), run(5));
    }
}
