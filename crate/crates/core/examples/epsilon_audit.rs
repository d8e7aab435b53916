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

//! Empirical ε audits: randomized response as a calibration target, then
//! the Stopper on neighboring one-bit datasets.

use perp::harness::audit::{estimate_epsilon, randomized_response, Event};
use perp::svt::{Stopper, StopperAnswer};
use perp::PrivacyParams;

fn main() -> perp::Result<()> {
    let eps = 3f64.ln();
    let rr = estimate_epsilon(
        |neighbor, noise| randomized_response(neighbor, eps, noise),
        &[Event::new("1", |o: &bool| *o), Event::new("0", |o: &bool| !*o)],
        1_000_000,
        0.95,
        1,
    )?;
    println!(
        "randomized response, ε = ln 3 = {eps:.4}: ε̂ = {:.4} CI [{:.4}, {:.4}]",
        rr.point, rr.lower, rr.upper
    );

    let privacy = PrivacyParams::new(1.0, 0.1)?;
    // Neighboring datasets {0} and {1}, one query at threshold 1.
    let st = estimate_epsilon(
        |neighbor, noise| Stopper::with_bits(privacy, 1, [neighbor]).query(noise),
        &[
            Event::new("HALT", |o: &StopperAnswer| *o == StopperAnswer::Halt),
            Event::new("CONTINUE", |o: &StopperAnswer| *o == StopperAnswer::Continue),
        ],
        200_000,
        0.95,
        2,
    )?;
    println!(
        "Stopper, {{0}} vs {{1}}: ε̂ = {:.4} CI [{:.4}, {:.4}], configured ε = {}",
        st.point,
        st.lower,
        st.upper,
        privacy.epsilon()
    );
    for e in &st.events {
        println!("  {:<8} {:>7} vs {:>7}", e.event, e.count, e.count_neighbor);
    }
    Ok(())
}
