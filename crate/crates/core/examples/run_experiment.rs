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

//! Runs an experiment config in-process and validates the traces it emits.
//!
//! ```text
//! cargo run --release --example run_experiment -- crates/core/configs/demo.json
//! ```

use std::path::PathBuf;

use perp::config::ExperimentConfig;
use perp::harness::trace::{validate_trace, MemorySink};
use perp::harness::{run_trial, TrialSummary};

fn main() -> perp::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/demo.json"));
    let cfg = ExperimentConfig::load(&path)?;
    cfg.validate()?;
    let seed = cfg.seed.unwrap_or(1);

    println!("{}", TrialSummary::TSV_HEADER);
    for trial in 0..cfg.trials {
        let mut sink = MemorySink::default();
        let s = run_trial(&cfg, trial, seed, &mut sink)?;
        let lines = validate_trace(&sink.lines)?;
        println!("{}", s.tsv_row());
        eprintln!("trial {trial}: {lines} valid trace lines");
    }
    Ok(())
}
