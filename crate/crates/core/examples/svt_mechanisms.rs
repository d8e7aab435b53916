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

//! The sparse-vector building blocks on tiny inputs: Stopper,
//! BetweenThresholds, ChallengeBT and one RSC slice.

use perp::rsc::RscSession;
use perp::svt::{BetweenThresholds, BtParams, CbtParams, ChallengeBt, Stopper};
use perp::{NoiseSource, PrivacyParams};

fn main() -> perp::Result<()> {
    let privacy = PrivacyParams::new(1.0, 0.1)?;
    let mut zero = NoiseSource::zero();
    let mut noise = NoiseSource::seeded(11);

    let mut s = Stopper::with_bits(privacy, 3, [true, true]);
    println!("Stopper sum 2, threshold 3, no noise: {:?}", s.query(&mut zero)?);
    let mut s = Stopper::with_bits(privacy, 3, [true, true]);
    println!(
        "  same with noise of scale {:.1}: {:?}",
        s.noise_scale(),
        s.query(&mut noise)?
    );

    let params = BtParams {
        privacy: PrivacyParams::new(100.0, 0.9)?,
        budget: 4,
        t_low: 10.0,
        t_high: 20.0,
    };
    let mut bt = BetweenThresholds::new((), params)?;
    for v in [5.0, 25.0, 15.0] {
        println!("BetweenThresholds({v}) -> {:?}", bt.query(|_| v, &mut zero)?);
    }

    let mut cbt = ChallengeBt::new(
        15.0,
        CbtParams {
            privacy,
            budget: 4,
            t_low: 10.0,
            t_high: 20.0,
            step_bound: 100,
        },
    );
    for round in 1..=5 {
        let stop = cbt.stopping_query(&mut zero)?;
        print!("ChallengeBT round {round}: stopping query {stop:?}");
        if cbt.is_halted() {
            println!();
            break;
        }
        println!(", BT query {:?}", cbt.bt_query(|v| *v, &mut zero)?);
    }

    let mut rsc = RscSession::new([1, 3, 5, 8, 13, 21], 2, privacy)?;
    let out = rsc.slice(2, |a: &i32, b: &i32| a.cmp(b), |v| v, &mut noise)?;
    println!(
        "RSC slice with m = 2: noisy size {}, took {:?}, pool left {:?}",
        out.noisy_size,
        out.handle,
        rsc.pool().collect::<Vec<_>>()
    );
    Ok(())
}
