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

//! Decision stumps in `R^d`, predicted through a one-dimensional rectangle
//! oracle after privately choosing the axis and orientation.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{LabeledPoint, Point};
use crate::noise::NoiseSource;
use crate::params::{GlobalParams, PhaseResolver, ResolverConstants};
use crate::rectangles::{RectanglesOracle, StepRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

impl TryFrom<i8> for Sign {
    type Error = String;

    fn try_from(v: i8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            _ => Err(format!("sign must be +1 or -1, got {v}")),
        }
    }
}

impl From<Sign> for i8 {
    fn from(s: Sign) -> i8 {
        match s {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+1",
            Sign::Minus => "-1",
        })
    }
}

/// `decision_{j,sigma,t}(x) = 1` iff `sigma * (x[j] - t) >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StumpConcept {
    pub axis: usize,
    pub sign: Sign,
    pub threshold: f64,
}

impl StumpConcept {
    pub fn label(&self, x: &[f64]) -> bool {
        self.sign.value() * (x[self.axis] - self.threshold) >= 0.0
    }
}

/// Candidate index of `(axis, sign)`: `2 * axis` for `+1`, `2 * axis + 1` for `-1`.
pub fn candidate_index(axis: usize, sign: Sign) -> usize {
    2 * axis + usize::from(sign == Sign::Minus)
}

pub fn candidate(index: usize) -> (usize, Sign) {
    (
        index / 2,
        if index.is_multiple_of(2) {
            Sign::Plus
        } else {
            Sign::Minus
        },
    )
}

/// Fewest points of `sample` any stump on `(axis, sign)` misclassifies.
pub fn best_stump_error(sample: &[LabeledPoint], axis: usize, sign: Sign) -> Result<u64> {
    if sample.is_empty() {
        return Err(Error::InvalidInput("best stump error of an empty sample".into()));
    }
    if let Some(p) = sample.iter().find(|lp| lp.point.dim() <= axis) {
        return Err(Error::InvalidInput(format!(
            "axis {axis} out of range for a {}-dimensional point",
            p.point.dim()
        )));
    }
    // With the coordinate multiplied by sign, positives sit at or above t.
    let mut v: Vec<(f64, bool)> = sample
        .iter()
        .map(|lp| (sign.value() * lp.point.coords()[axis], lp.label))
        .collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Threshold below everything: every negative is an error.
    let mut err = v.iter().filter(|(_, l)| !l).count() as i64;
    let mut best = err;
    let mut i = 0;
    while i < v.len() {
        // Move the threshold just past the group of equal values at i.
        let x = v[i].0;
        while i < v.len() && v[i].0.total_cmp(&x) == Ordering::Equal {
            err += if v[i].1 { 1 } else { -1 };
            i += 1;
        }
        best = best.min(err);
    }
    Ok(best as u64)
}

/// Scores of all `2d` candidates, in [`candidate_index`] order.
pub fn stump_scores(sample: &[LabeledPoint], d: usize) -> Result<Vec<u64>> {
    (0..2 * d)
        .map(|i| {
            let (axis, sign) = candidate(i);
            best_stump_error(sample, axis, sign)
        })
        .collect()
}

/// Exact selection probabilities, `∝ exp(-eps * score / 2)`.
pub fn exp_mech_probabilities(scores: &[u64], epsilon: f64) -> Result<Vec<f64>> {
    let w = exp_mech_weights(scores, epsilon)?;
    let total: f64 = w.iter().sum();
    Ok(w.into_iter().map(|x| x / total).collect())
}

fn exp_mech_weights(scores: &[u64], epsilon: f64) -> Result<Vec<f64>> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::param(
            "epsilon",
            format!("must be positive and finite, got {epsilon}"),
        ));
    }
    let min = *scores
        .iter()
        .min()
        .ok_or_else(|| Error::InvalidInput("no candidates to select from".into()))?;
    Ok(scores
        .iter()
        .map(|&s| (-epsilon * (s - min) as f64 / 2.0).exp())
        .collect())
}

/// Samples a candidate index with probability `∝ exp(-eps * score / 2)`.
pub fn exp_mech_select(scores: &[u64], epsilon: f64, noise: &mut NoiseSource) -> Result<usize> {
    noise.categorical(&exp_mech_weights(scores, epsilon)?)
}

/// Projection of `sample` onto `axis`, sorted ascending for `sort_sign = +1`
/// and descending for `-1` (ties by the auxiliary coordinate), with the first
/// `p_hat` entries labeled 1. Returns the dataset and whether `p_hat` had to
/// be clamped into `[0, |S|]`.
pub fn relabel_project(
    sample: &[LabeledPoint],
    axis: usize,
    sort_sign: Sign,
    p_hat: i64,
) -> Result<(Vec<LabeledPoint>, bool)> {
    let mut keys = Vec::with_capacity(sample.len());
    for lp in sample {
        if lp.point.dim() <= axis {
            return Err(Error::InvalidInput(format!("axis {axis} out of range")));
        }
        keys.push(lp.point.key(axis));
    }
    keys.sort_by(|a, b| match sort_sign {
        Sign::Plus => a.cmp_total(b),
        Sign::Minus => b.cmp_total(a),
    });
    let n = keys.len() as i64;
    let cut = p_hat.clamp(0, n);
    let out = keys
        .into_iter()
        .enumerate()
        .map(|(i, k)| {
            let p = Point::with_aux(vec![k.value], vec![k.aux]).expect("one coordinate and one aux");
            LabeledPoint::new(p, (i as i64) < cut)
        })
        .collect();
    Ok((out, cut != p_hat))
}

/// Budget overrides for [`DecisionPerp`]. Unset fields take `eps / 4`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecisionOptions {
    pub selection_epsilon: Option<f64>,
    pub count_epsilon: Option<f64>,
    pub inner_epsilon: Option<f64>,
    pub resolver: ResolverConstants,
}

/// Choices made before the inner oracle starts; written as the trace header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionHeader {
    pub axis: usize,
    pub sign: Sign,
    pub scores: Vec<u64>,
    pub positives: u64,
    pub p_hat: i64,
    pub p_hat_clamped: bool,
    pub selection_epsilon: f64,
    pub count_epsilon: f64,
    pub inner: GlobalParams,
}

#[derive(Debug, Clone)]
pub struct DecisionPerp {
    header: DecisionHeader,
    /// Multiplier applied to the selected coordinate before forwarding, so
    /// the relabeled positives always form a left ray for the inner oracle.
    forward: f64,
    inner: RectanglesOracle,
}

impl DecisionPerp {
    /// `selection_noise` drives the exponential mechanism and the noisy
    /// positive count; `inner_noise` is handed to the inner oracle.
    pub fn new(
        sample: &[LabeledPoint],
        globals: &GlobalParams,
        options: &DecisionOptions,
        selection_noise: &mut NoiseSource,
        inner_noise: NoiseSource,
    ) -> Result<Self> {
        globals.validate()?;
        if sample.is_empty() {
            return Err(Error::InvalidInput("DecisionPERP needs a nonempty sample".into()));
        }
        let d = globals.d;
        let quarter = globals.epsilon / 4.0;
        let selection_epsilon = options.selection_epsilon.unwrap_or(quarter);
        let count_epsilon = options.count_epsilon.unwrap_or(quarter);
        let inner_epsilon = options.inner_epsilon.unwrap_or(quarter);
        if !(count_epsilon > 0.0) {
            return Err(Error::config("count_epsilon", "must be positive"));
        }

        let scores = stump_scores(sample, d)?;
        let (axis, sign) = candidate(exp_mech_select(&scores, selection_epsilon, selection_noise)?);

        let positives = sample.iter().filter(|lp| lp.label).count() as u64;
        let noisy = positives as f64 + selection_noise.laplace(1.0 / count_epsilon)?;
        let p_hat = noisy.round() as i64;

        // Relabeling sorts ascending for +1 and marks the first p_hat points
        // positive, the opposite orientation of the stump rule.
        let sort_sign = sign.flip();
        let (projected, p_hat_clamped) = relabel_project(sample, axis, sort_sign, p_hat)?;
        let forward = sort_sign.value();
        let inner_sample: Vec<LabeledPoint> = projected
            .into_iter()
            .map(|lp| {
                let k = lp.point.key(0);
                let p = Point::with_aux(vec![forward * k.value], vec![forward * k.aux]).expect("1-d point");
                LabeledPoint::new(p, lp.label)
            })
            .collect();

        let inner_globals = GlobalParams {
            d: 1,
            epsilon: inner_epsilon,
            delta_star: globals.delta_star / 2.0,
            alpha: globals.alpha / 2.0,
            beta: globals.beta / 2.0,
            gamma: globals.gamma,
        };
        let schedule = Arc::new(PhaseResolver::new(inner_globals, options.resolver)?);
        let inner = RectanglesOracle::new(&inner_sample, &inner_globals, schedule, inner_noise)?;
        Ok(Self {
            header: DecisionHeader {
                axis,
                sign,
                scores,
                positives,
                p_hat,
                p_hat_clamped,
                selection_epsilon,
                count_epsilon,
                inner: inner_globals,
            },
            forward,
            inner,
        })
    }

    /// The single real number the inner oracle sees for `x`.
    pub fn project(&self, x: &Point) -> Result<Point> {
        let a = self.header.axis;
        if x.dim() <= a {
            return Err(Error::InvalidInput(format!(
                "query has {} coordinates, axis {a} selected",
                x.dim()
            )));
        }
        let k = x.key(a);
        Point::with_aux(vec![self.forward * k.value], vec![self.forward * k.aux])
    }

    pub fn step(&mut self, query: Option<&Point>) -> Result<StepRecord> {
        let projected = query.map(|x| self.project(x)).transpose()?;
        self.inner.step(projected.as_ref())
    }

    pub fn predict_center(&self, x: &Point) -> bool {
        self.project(x).map(|p| self.inner.predict_center(&p)).unwrap_or(false)
    }

    pub fn header(&self) -> &DecisionHeader {
        &self.header
    }

    pub fn inner(&self) -> &RectanglesOracle {
        &self.inner
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lp(coords: &[f64], label: bool) -> LabeledPoint {
        LabeledPoint::new(Point::new(coords.to_vec()), label)
    }

    fn spec_sample() -> Vec<LabeledPoint> {
        vec![
            lp(&[0.1, 0.9], true),
            lp(&[0.2, 0.1], true),
            lp(&[0.7, 0.5], false),
            lp(&[0.9, 0.2], false),
        ]
    }

    /// Tries every threshold at a sample value and at both infinities.
    fn brute_force(sample: &[LabeledPoint], axis: usize, sign: Sign) -> u64 {
        let mut ts: Vec<f64> = sample.iter().map(|p| p.point.coords()[axis]).collect();
        ts.push(f64::NEG_INFINITY);
        ts.push(f64::INFINITY);
        ts.iter()
            .map(|&t| {
                let c = StumpConcept {
                    axis,
                    sign,
                    threshold: t,
                };
                sample.iter().filter(|p| c.label(p.point.coords()) != p.label).count() as u64
            })
            .min()
            .unwrap()
    }

    #[test]
    fn spec_scores() {
        let s = spec_sample();
        assert_eq!(best_stump_error(&s, 0, Sign::Minus).unwrap(), 0);
        assert_eq!(best_stump_error(&s, 1, Sign::Plus).unwrap(), 1);
        for i in 0..4 {
            let (a, g) = candidate(i);
            assert_eq!(best_stump_error(&s, a, g).unwrap(), brute_force(&s, a, g));
        }
    }

    #[test]
    fn constant_labels_score_zero() {
        let s: Vec<_> = [0.3, 0.1, 0.8].iter().map(|&v| lp(&[v, -v], true)).collect();
        for i in 0..4 {
            let (a, g) = candidate(i);
            assert_eq!(best_stump_error(&s, a, g).unwrap(), 0);
        }
    }

    #[test]
    fn empty_sample_is_an_error() {
        assert!(matches!(
            best_stump_error(&[], 0, Sign::Plus),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn equal_scores_give_uniform() {
        let p = exp_mech_probabilities(&[3, 3, 3, 3, 3, 3], 1.0).unwrap();
        for x in p {
            assert!((x - 1.0 / 6.0).abs() < 1e-15);
        }
    }

    #[test]
    fn four_candidate_enumeration() {
        let p = exp_mech_probabilities(&[0, 5, 5, 5], 4.0).unwrap();
        let e = (-10f64).exp();
        assert!((p[0] - 1.0 / (1.0 + 3.0 * e)).abs() < 1e-15);
        assert!((p[1] - e / (1.0 + 3.0 * e)).abs() < 1e-15);
    }

    fn tv_from_sampling(scores: &[u64], eps: f64, n: usize, seed: u64) -> f64 {
        let target = exp_mech_probabilities(scores, eps).unwrap();
        let mut noise = NoiseSource::seeded(seed);
        let mut counts = vec![0usize; scores.len()];
        for _ in 0..n {
            counts[exp_mech_select(scores, eps, &mut noise).unwrap()] += 1;
        }
        0.5 * counts
            .iter()
            .zip(&target)
            .map(|(&c, &t)| (c as f64 / n as f64 - t).abs())
            .sum::<f64>()
    }

    #[test]
    fn small_epsilon_is_nearly_uniform() {
        let tv = tv_from_sampling(&[0, 3, 7, 10], 1e-9, 100_000, 1);
        assert!(tv < 0.01, "tv {tv}");
        let p = exp_mech_probabilities(&[0, 3, 7, 10], 1e-9).unwrap();
        assert!(p.iter().all(|x| (x - 0.25).abs() < 1e-6));
    }

    #[test]
    fn sampling_matches_softmax() {
        let tv = tv_from_sampling(&[0, 1, 2, 4], 1.0, 100_000, 2);
        assert!(tv < 0.02, "tv {tv}");
    }

    #[test]
    fn relabel_examples() {
        let s: Vec<_> = [3.0, 1.0, 2.0].iter().map(|&v| lp(&[v], false)).collect();
        let view = |d: Vec<LabeledPoint>| d.iter().map(|p| (p.point.coords()[0], p.label)).collect::<Vec<_>>();
        let (d, c) = relabel_project(&s, 0, Sign::Plus, 2).unwrap();
        assert_eq!(view(d), vec![(1.0, true), (2.0, true), (3.0, false)]);
        assert!(!c);
        let (d, _) = relabel_project(&s, 0, Sign::Minus, 1).unwrap();
        assert_eq!(view(d), vec![(3.0, true), (2.0, false), (1.0, false)]);
        let (d, _) = relabel_project(&s, 0, Sign::Plus, 0).unwrap();
        assert!(d.iter().all(|p| !p.label));
        let (d, c) = relabel_project(&s, 0, Sign::Plus, 7).unwrap();
        assert!(d.iter().all(|p| p.label));
        assert!(c);
        let (_, c) = relabel_project(&s, 0, Sign::Plus, -2).unwrap();
        assert!(c);
    }

    #[test]
    fn relabel_ties_follow_aux() {
        let s = vec![
            LabeledPoint::new(Point::with_aux(vec![1.0], vec![0.9]).unwrap(), false),
            LabeledPoint::new(Point::with_aux(vec![1.0], vec![0.1]).unwrap(), false),
        ];
        let (d, _) = relabel_project(&s, 0, Sign::Plus, 1).unwrap();
        assert_eq!(d[0].point.aux(), &[0.1]);
        assert!(d[0].label);
    }

    fn separable(n: usize, d: usize, stump: StumpConcept, seed: u64) -> Vec<LabeledPoint> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let c: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
                let a: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
                let l = stump.label(&c);
                LabeledPoint::new(Point::with_aux(c, a).unwrap(), l)
            })
            .collect()
    }

    #[test]
    fn zero_noise_relabel_agrees_on_separable_data() {
        for sign in [Sign::Plus, Sign::Minus] {
            let stump = StumpConcept {
                axis: 1,
                sign,
                threshold: 0.4,
            };
            let s = separable(500, 3, stump, 9);
            let p = s.iter().filter(|x| x.label).count() as i64;
            let (d, _) = relabel_project(&s, 1, sign.flip(), p).unwrap();
            let wrong = d
                .iter()
                .filter(|x| stump.label(&[0.0, x.point.coords()[0], 0.0]) != x.label)
                .count();
            assert_eq!(wrong, 0, "sign {sign}");
        }
    }

    #[test]
    fn end_to_end_zero_noise() {
        let g = GlobalParams {
            d: 4,
            epsilon: 4000.0,
            delta_star: 0.1,
            alpha: 0.2,
            beta: 0.1,
            gamma: 1.0,
        };
        for sign in [Sign::Plus, Sign::Minus] {
            let stump = StumpConcept {
                axis: 2,
                sign,
                threshold: 0.5,
            };
            let s = separable(8000, 4, stump, 3);
            let mut sel = NoiseSource::zero();
            let mut o = DecisionPerp::new(&s, &g, &DecisionOptions::default(), &mut sel, NoiseSource::zero()).unwrap();
            assert_eq!((o.header().axis, o.header().sign), (2, sign));
            assert!(o.inner().init_events().is_empty());
            let q = separable(400, 4, stump, 4);
            let mut wrong = 0;
            for x in &q {
                let r = o.step(Some(&x.point)).unwrap();
                assert_eq!(r.query.as_ref().unwrap().dim(), 1);
                wrong += usize::from(r.prediction != Some(x.label));
            }
            // The interval oracle also trims the far end of the ray.
            assert!(
                wrong as f64 <= g.alpha * q.len() as f64,
                "{wrong} mistakes for sign {sign}"
            );
        }
    }

    proptest! {
        #[test]
        fn sweep_matches_brute_force(
            pts in prop::collection::vec((-5i32..5, -5i32..5, any::<bool>()), 1..30),
            idx in 0usize..4,
        ) {
            let s: Vec<_> = pts.iter().map(|&(a, b, l)| lp(&[a as f64, b as f64], l)).collect();
            let (axis, sign) = candidate(idx);
            prop_assert_eq!(best_stump_error(&s, axis, sign).unwrap(), brute_force(&s, axis, sign));
        }

        #[test]
        fn scores_are_scale_invariant(
            pts in prop::collection::vec((-100.0f64..100.0, any::<bool>()), 1..30),
            scale in 0.01f64..100.0,
        ) {
            let s: Vec<_> = pts.iter().map(|&(a, l)| lp(&[a], l)).collect();
            let t: Vec<_> = pts.iter().map(|&(a, l)| lp(&[a * scale], l)).collect();
            for sign in [Sign::Plus, Sign::Minus] {
                prop_assert_eq!(best_stump_error(&s, 0, sign).unwrap(), best_stump_error(&t, 0, sign).unwrap());
            }
        }

        #[test]
        fn scores_have_sensitivity_one(
            pts in prop::collection::vec((-10i32..10, any::<bool>()), 2..30),
            which in any::<prop::sample::Index>(),
            replacement in (-10i32..10, any::<bool>()),
        ) {
            let s: Vec<_> = pts.iter().map(|&(a, l)| lp(&[a as f64], l)).collect();
            let mut t = s.clone();
            t[which.index(s.len())] = lp(&[replacement.0 as f64], replacement.1);
            for sign in [Sign::Plus, Sign::Minus] {
                let a = best_stump_error(&s, 0, sign).unwrap() as i64;
                let b = best_stump_error(&t, 0, sign).unwrap() as i64;
                prop_assert!((a - b).abs() <= 1);
            }
        }
    }
}
