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

//! Points, labeled examples, rectangle concepts and per-axis samples.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in R^d together with one auxiliary tie-breaking coordinate per
/// axis. Ordering along axis `j` compares `(x[j], aux[j])`, which makes ties
/// between distinct sampled points a measure-zero event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    coords: Vec<f64>,
    aux: Vec<f64>,
}

/// Position of a point along one axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisKey {
    pub value: f64,
    pub aux: f64,
}

impl AxisKey {
    pub fn new(value: f64, aux: f64) -> Self {
        Self { value, aux }
    }

    pub fn cmp_total(&self, other: &Self) -> Ordering {
        self.value
            .total_cmp(&other.value)
            .then_with(|| self.aux.total_cmp(&other.aux))
    }
}

impl Point {
    /// Auxiliary coordinates default to zero.
    pub fn new(coords: Vec<f64>) -> Self {
        let aux = vec![0.0; coords.len()];
        Self { coords, aux }
    }

    pub fn with_aux(coords: Vec<f64>, aux: Vec<f64>) -> Result<Self> {
        if coords.len() != aux.len() {
            return Err(Error::InvalidInput(format!(
                "point has {} coordinates but {} auxiliary coordinates",
                coords.len(),
                aux.len()
            )));
        }
        Ok(Self { coords, aux })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn aux(&self) -> &[f64] {
        &self.aux
    }

    pub fn key(&self, axis: usize) -> AxisKey {
        AxisKey::new(self.coords[axis], self.aux[axis])
    }

    /// Strict total order along `axis`: axis key, then the full coordinate
    /// vector lexicographically, then the auxiliary vector.
    pub fn cmp_on_axis(&self, other: &Self, axis: usize) -> Ordering {
        self.key(axis)
            .cmp_total(&other.key(axis))
            .then_with(|| lex(&self.coords, &other.coords))
            .then_with(|| lex(&self.aux, &other.aux))
    }

    pub(crate) fn is_finite(&self) -> bool {
        self.coords.iter().chain(&self.aux).all(|v| v.is_finite())
    }
}

fn lex(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledPoint {
    pub point: Point,
    pub label: bool,
}

impl LabeledPoint {
    pub fn new(point: Point, label: bool) -> Self {
        Self { point, label }
    }
}

/// `rec_w(x) = 1` iff `a_j <= x[j] <= b_j` for every axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RectConcept {
    bounds: Vec<(f64, f64)>,
}

impl RectConcept {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::InvalidInput("rectangle needs at least one axis".into()));
        }
        if let Some((j, (a, b))) = bounds.iter().enumerate().find(|(_, (a, b))| !(a <= b)) {
            return Err(Error::InvalidInput(format!(
                "axis {j}: lower bound {a} exceeds upper bound {b}"
            )));
        }
        Ok(Self { bounds })
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.bounds.iter().zip(x).all(|(&(a, b), &v)| a <= v && v <= b)
    }
}

/// Sorted projection of a dataset on one axis; the private dataset behind a
/// Left/Right handle of the rectangle oracle.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AxisSample {
    keys: Vec<AxisKey>,
}

impl AxisSample {
    pub fn new(mut keys: Vec<AxisKey>) -> Self {
        keys.sort_by(AxisKey::cmp_total);
        Self { keys }
    }

    pub fn from_points<'a, I: IntoIterator<Item = &'a Point>>(points: I, axis: usize) -> Self {
        Self::new(points.into_iter().map(|p| p.key(axis)).collect())
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn keys(&self) -> &[AxisKey] {
        &self.keys
    }

    /// Number of keys strictly greater than `key`.
    pub fn count_greater(&self, key: AxisKey) -> usize {
        let le = self.keys.partition_point(|k| k.cmp_total(&key) != Ordering::Greater);
        self.keys.len() - le
    }

    /// Number of keys strictly smaller than `key`.
    pub fn count_less(&self, key: AxisKey) -> usize {
        self.keys.partition_point(|k| k.cmp_total(&key) == Ordering::Less)
    }

    /// Closed range of the projected values, if any.
    pub fn span(&self) -> Option<(f64, f64)> {
        Some((self.keys.first()?.value, self.keys.last()?.value))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_are_strict() {
        let s = AxisSample::new((1..=10).map(|v| AxisKey::new(v as f64, 0.0)).collect());
        assert_eq!(s.count_greater(AxisKey::new(5.0, 0.0)), 5);
        assert_eq!(s.count_less(AxisKey::new(5.0, 0.0)), 4);
        assert_eq!(s.count_greater(AxisKey::new(-5.0, 0.0)), 10);
        assert_eq!(s.count_less(AxisKey::new(50.0, 0.0)), 10);
        // aux breaks the tie on the value
        assert_eq!(s.count_greater(AxisKey::new(5.0, -0.1)), 6);
        assert_eq!(s.span(), Some((1.0, 10.0)));
    }

    #[test]
    fn rectangle_membership_is_closed() {
        let r = RectConcept::new(vec![(0.2, 0.8), (0.0, 1.0)]).unwrap();
        assert!(r.contains(&[0.2, 1.0]));
        assert!(!r.contains(&[0.19, 0.5]));
        assert!(RectConcept::new(vec![(1.0, 0.0)]).is_err());
    }

    #[test]
    fn axis_order_breaks_ties() {
        let a = Point::new(vec![1.0, 2.0]);
        let b = Point::new(vec![1.0, 3.0]);
        assert_eq!(a.cmp_on_axis(&b, 0), Ordering::Less);
        assert_eq!(b.cmp_on_axis(&a, 0), Ordering::Greater);
        assert_eq!(a.cmp_on_axis(&a.clone(), 0), Ordering::Equal);
    }
}
