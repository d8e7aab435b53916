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

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use perp::cli::{self, AuditArgs, AuditMechanism};
use perp::Error;

/// Everlasting robust private prediction experiments.
#[derive(Debug, Parser)]
#[command(name = "perp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the trials of an experiment config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; defaults to the number of CPUs.
        #[arg(long)]
        parallel: Option<usize>,
    },
    /// Success rate of the leakage attack on a (0, δ)-private mechanism.
    Leakage {
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        horizon: u64,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Empirical ε audit of a small mechanism.
    Audit {
        /// stopper | between-thresholds | randomized-response-calibration
        #[arg(long)]
        mechanism: String,
        /// Defaults to ln 3.
        #[arg(long, default_value = "1.0986122886681098")]
        epsilon: f64,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[arg(long, default_value_t = 1_000_000)]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Use the same input on both sides.
        #[arg(long)]
        identical: bool,
    },
    /// Resolve and print the phase schedule of a config.
    CheckParams {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 10)]
        phases: u32,
    },
}

fn run(cmd: Command) -> Result<bool, Error> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match cmd {
        Command::Run { config, seed, parallel } => {
            let cfg = cli::load_config(&config)?;
            cli::cmd_run(&cfg, seed, parallel, &mut out)?;
            Ok(true)
        }
        Command::Leakage {
            delta,
            horizon,
            trials,
            seed,
        } => {
            cli::cmd_leakage(delta, horizon, trials, seed, &mut out)?;
            Ok(true)
        }
        Command::Audit {
            mechanism,
            epsilon,
            delta,
            trials,
            seed,
            identical,
        } => {
            let mechanism: AuditMechanism = mechanism.parse()?;
            cli::cmd_audit(
                &AuditArgs {
                    mechanism,
                    epsilon,
                    delta,
                    trials,
                    seed,
                    identical,
                },
                &mut out,
            )?;
            Ok(true)
        }
        Command::CheckParams { config, phases } => {
            let cfg = cli::load_config(&config)?;
            cli::cmd_check_params(&cfg, phases, &mut out)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "error: {e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}
