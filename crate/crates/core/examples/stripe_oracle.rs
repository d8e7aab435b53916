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

//! Peels stripes of mass α_p/d off both ends of every axis of a rectangle
//! and prints the unions the oracle datasets must stay inside.

use perp::geometry::RectConcept;
use perp::harness::stripe::StripeOracle;
use perp::rectangles::Side;

fn main() -> perp::Result<()> {
    let target = RectConcept::new(vec![(0.2, 0.8), (0.2, 0.8)])?;
    let mut oracle = StripeOracle::new(&[0.0, 0.0], &[1.0, 1.0], &target, 0.2)?;
    for p in 1..=5 {
        for axis in 0..2 {
            for side in [Side::Left, Side::Right] {
                let s = oracle.stripe(p, axis, side)?;
                let (lo, hi) = oracle.union(p, axis, side)?;
                println!(
                    "phase {p} axis {axis} {side:<5}: stripe [{:.4}, {:.4}] mass {:.5}{}  union [{lo:.4}, {hi:.4}]",
                    s.lo,
                    s.hi,
                    s.mass,
                    if s.exhausted { " (exhausted)" } else { "" }
                );
            }
        }
        println!("  peeled through phase {p}: {:.5}", oracle.peeled_mass(p)?);
    }
    Ok(())
}
