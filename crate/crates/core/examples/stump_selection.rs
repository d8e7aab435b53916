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

//! DecisionPERP on separable stump data: the exponential mechanism picks
//! an axis and orientation, then a one-dimensional oracle answers queries
//! on the projected coordinate.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use perp::geometry::LabeledPoint;
use perp::harness::distribution::{Concept, Distribution};
use perp::params::GlobalParams;
use perp::stumps::{candidate, exp_mech_probabilities, DecisionOptions, DecisionPerp, Sign, StumpConcept};
use perp::NoiseSource;

fn main() -> perp::Result<()> {
    let d = 8;
    let globals = GlobalParams {
        d,
        epsilon: 2.0,
        delta_star: 0.1,
        alpha: 0.2,
        beta: 0.1,
        gamma: 1.0,
    };
    let options = DecisionOptions {
        inner_epsilon: Some(1000.0),
        ..DecisionOptions::default()
    };
    let truth = Concept::Stump(StumpConcept {
        axis: 5,
        sign: Sign::Minus,
        threshold: 0.3,
    });
    let dist = Distribution::unit_box(d);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let draw = |rng: &mut ChaCha8Rng| {
        let x = dist.sample(rng);
        let y = truth.label(x.coords());
        LabeledPoint::new(x, y)
    };
    // A small sample makes the selection step visibly random.
    let small: Vec<_> = (0..40).map(|_| draw(&mut rng)).collect();
    let scores = perp::stumps::stump_scores(&small, d)?;
    let probs = exp_mech_probabilities(&scores, globals.epsilon / 4.0)?;
    println!("n = 40, selection ε = {}", globals.epsilon / 4.0);
    for (i, (s, p)) in scores.iter().zip(&probs).enumerate() {
        let (axis, sign) = candidate(i);
        println!("  axis {axis} sign {sign:>2}: error {s:>2}  Pr = {p:.4}");
    }

    let sample: Vec<_> = (0..8000).map(|_| draw(&mut rng)).collect();
    let mut oracle = DecisionPerp::new(
        &sample,
        &globals,
        &options,
        &mut NoiseSource::seeded(4),
        NoiseSource::zero(),
    )?;
    let h = oracle.header();
    println!(
        "\nn = 8000: selected axis {} sign {} (p̂ = {}, {} positives)",
        h.axis, h.sign, h.p_hat, h.positives
    );

    let queries = 1000;
    let mut correct = 0;
    for _ in 0..queries {
        let q = draw(&mut rng);
        correct += usize::from(oracle.step(Some(&q.point))?.prediction == Some(q.label));
    }
    println!(
        "accuracy on {queries} in-distribution queries: {:.3}",
        correct as f64 / queries as f64
    );
    Ok(())
}
