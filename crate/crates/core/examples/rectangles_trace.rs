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

//! Walks a one-dimensional RectanglesPERP oracle through a scripted query
//! sequence with noise switched off, printing every round.
//!
//! The phase is hand-picked so the handle thresholds are `(0.5, 1.0)`: a
//! count of 0 is low, 1 is medium, anything larger is high.

use std::sync::Arc;

use perp::geometry::{LabeledPoint, Point};
use perp::params::{FixedSchedule, GlobalParams, PhaseParams};
use perp::rectangles::RectanglesOracle;
use perp::NoiseSource;

fn main() -> perp::Result<()> {
    let globals = GlobalParams {
        d: 1,
        epsilon: 1000.0,
        delta_star: 0.1,
        alpha: 0.2,
        beta: 0.1,
        gamma: 1.0,
    };
    let phase = PhaseParams {
        phase: 1,
        alpha_p: 0.1,
        beta_p: 0.05,
        delta_p: 1e-6,
        m: 10,
        k: 2,
        t: 8,
        noise_bound: 0.5,
        geometric_bound: 1.0,
        polylog: 1.0,
    };
    let sample: Vec<_> = (1..=10)
        .chain(91..=100)
        .map(|v| LabeledPoint::new(Point::new(vec![f64::from(v)]), true))
        .collect();
    let schedule = Arc::new(FixedSchedule::new(vec![phase])?);
    let mut oracle = RectanglesOracle::new(&sample, &globals, schedule, NoiseSource::zero())?;

    let script = [
        Some(50.0),
        Some(-5.0),
        Some(9.5),
        None,
        Some(9.2),
        Some(95.0),
        Some(91.5),
        Some(60.0),
        Some(55.0),
    ];
    for q in script {
        let x = q.map(|v| Point::new(vec![v]));
        let r = oracle.step(x.as_ref())?;
        let answers: Vec<String> = r
            .answers
            .iter()
            .map(|a| format!("{}:{}={:?}", a.handle, a.count, a.answer))
            .collect();
        println!(
            "t={} phase={} x={:?} -> {:?}  [{}]  appended={:?} |D|={} sides={:?}",
            r.time,
            r.phase,
            q,
            r.prediction,
            answers.join(" "),
            r.appended,
            r.dataset_len,
            r.side_lens
        );
        for e in &r.events {
            println!("    {}", serde_json::to_string(e).expect("event serializes"));
        }
    }
    Ok(())
}
