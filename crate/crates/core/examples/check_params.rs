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

//! Resolves the phase schedule of the desk configuration and shows how it
//! scales with γ and d.
//!
//! ```text
//! cargo run --release --example check_params
//! ```

use perp::params::{GlobalParams, PhaseResolver, ResolverConstants};

fn main() -> perp::Result<()> {
    let desk = GlobalParams {
        d: 2,
        epsilon: 1000.0,
        delta_star: 0.1,
        alpha: 0.2,
        beta: 0.1,
        gamma: 0.5,
    };
    let resolver = PhaseResolver::new(desk, ResolverConstants::default())?;
    print!("{}", resolver.report(4));

    println!("\nscaling of phase 1:");
    println!("{:>24} {:>12} {:>16} {:>14}", "", "m_1", "t_1", "n required");
    let variants = [
        ("desk", desk),
        (
            "γ halved",
            GlobalParams {
                gamma: desk.gamma / 2.0,
                ..desk
            },
        ),
        ("d quadrupled", GlobalParams { d: 4 * desk.d, ..desk }),
        (
            "ε = 1, d = 1, γ = 1",
            GlobalParams {
                d: 1,
                epsilon: 1.0,
                gamma: 1.0,
                ..desk
            },
        ),
    ];
    for (name, g) in variants {
        let r = PhaseResolver::new(g, ResolverConstants::default())?;
        let p = r.resolve(1)?;
        println!("{name:>24} {:>12} {:>16} {:>14}", p.m, p.t, r.required_sample_size()?);
    }
    Ok(())
}
