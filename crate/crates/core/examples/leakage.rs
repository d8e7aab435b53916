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

//! Success rate of the verbatim-leakage attack on a mechanism that releases
//! each input independently with probability δ.

use perp::harness::audit::{leakage_demo, leakage_target};

fn main() -> perp::Result<()> {
    let delta = 0.001;
    println!("{:>8} {:>10} {:>10}", "T", "observed", "analytic");
    for horizon in [0, 10, 100, 500, 1000, 2000, 10_000] {
        let rate = leakage_demo(delta, horizon, 100_000, horizon)?;
        println!("{horizon:>8} {rate:>10.4} {:>10.4}", leakage_target(delta, horizon));
    }
    Ok(())
}
