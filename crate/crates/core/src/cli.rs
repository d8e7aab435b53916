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

//! Command implementations behind the `perp` binary.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, TraceLevel};
use crate::error::{Error, Result};
use crate::harness::audit::{
    estimate_epsilon, leakage_demo, leakage_target, randomized_response, EpsilonEstimate, Event,
};
use crate::harness::trace::{JsonlSink, NullSink, TraceSink};
use crate::harness::{run_trial, TrialSummary};
use crate::noise::PrivacyParams;
use crate::params::PhaseResolver;
use crate::svt::{BetweenThresholds, BtAnswer, BtParams, Stopper, StopperAnswer};

/// Overrides `output.dir` of every config.
pub const OUTPUT_DIR_ENV: &str = "PERP_OUTPUT_DIR";

/// Process exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } | Error::InvalidParameter { .. } | Error::InvalidInput(_) => 1,
        Error::Infeasible { .. } => 2,
        _ => 3,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub output_dir: PathBuf,
    pub seed: u64,
    pub summaries: Vec<TrialSummary>,
}

impl RunReport {
    /// Fraction of trials whose largest probed error exceeded `alpha`.
    pub fn failure_rate(&self, alpha: f64) -> f64 {
        let bad = self.summaries.iter().filter(|s| s.max_error > alpha).count();
        bad as f64 / self.summaries.len().max(1) as f64
    }
}

pub fn output_dir(cfg: &ExperimentConfig) -> PathBuf {
    std::env::var_os(OUTPUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| cfg.output.dir.clone())
}

/// Runs every trial of the config, writing `trace-NNNN.jsonl` per trial and
/// `summary.tsv` into the output directory.
pub fn cmd_run(
    cfg: &ExperimentConfig,
    seed_override: Option<u64>,
    parallel: Option<usize>,
    out: &mut dyn Write,
) -> Result<RunReport> {
    cfg.validate()?;
    let seed = seed_override.or(cfg.seed).unwrap_or_else(rand::random);
    let dir = output_dir(cfg);
    std::fs::create_dir_all(&dir)?;

    let run_one = |trial: u32| -> Result<TrialSummary> {
        match cfg.output.trace {
            TraceLevel::Full => {
                let path = dir.join(format!("trace-{trial:04}.jsonl"));
                let mut sink = JsonlSink::new(BufWriter::new(File::create(&path)?));
                let s = run_trial(cfg, trial, seed, &mut sink)?;
                sink.into_inner().flush()?;
                Ok(s)
            }
            TraceLevel::None => run_trial(cfg, trial, seed, &mut NullSink as &mut dyn TraceSink),
        }
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallel.unwrap_or(0))
        .build()
        .map_err(|e| Error::Internal(e.to_string()))?;
    let summaries = pool.install(|| (0..cfg.trials).into_par_iter().map(run_one).collect::<Result<Vec<_>>>())?;

    let mut tsv = BufWriter::new(File::create(dir.join("summary.tsv"))?);
    writeln!(tsv, "{}", TrialSummary::TSV_HEADER)?;
    for s in &summaries {
        writeln!(tsv, "{}", s.tsv_row())?;
    }
    tsv.flush()?;

    let report = RunReport {
        output_dir: dir,
        seed,
        summaries,
    };
    let g = cfg.globals;
    writeln!(
        out,
        "seed {seed}; {} trial(s) written to {}",
        cfg.trials,
        report.output_dir.display()
    )?;
    writeln!(
        out,
        "trials with max error > α = {}: {:.3} (β = {})",
        g.alpha,
        report.failure_rate(g.alpha),
        g.beta
    )?;
    let one_sided: usize = report.summaries.iter().map(|s| s.one_sided_violations.len()).sum();
    let stripes: usize = report.summaries.iter().map(|s| s.stripe_violations.len()).sum();
    let over_budget = report
        .summaries
        .iter()
        .filter(|s| s.budget_sum > s.budget_limit)
        .count();
    writeln!(
        out,
        "one-sided violations {one_sided}; stripe violations {stripes}; over-budget traces {over_budget}"
    )?;
    Ok(report)
}

pub fn cmd_leakage(delta: f64, horizon: u64, trials: u64, seed: u64, out: &mut dyn Write) -> Result<f64> {
    let rate = leakage_demo(delta, horizon, trials, seed)?;
    writeln!(
        out,
        "δ = {delta}, T = {horizon}, trials = {trials}: success rate {rate:.4} (analytic 1 − (1−δ)^T = {:.4})",
        leakage_target(delta, horizon)
    )?;
    if horizon as f64 >= 1.0 / delta {
        writeln!(out, "T ≥ 1/δ: the mechanism is leaking")?;
    }
    Ok(rate)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuditMechanism {
    Stopper,
    BetweenThresholds,
    RandomizedResponseCalibration,
}

impl std::str::FromStr for AuditMechanism {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stopper" => Ok(Self::Stopper),
            "between-thresholds" => Ok(Self::BetweenThresholds),
            "randomized-response-calibration" | "randomized-response" => Ok(Self::RandomizedResponseCalibration),
            _ => Err(Error::InvalidInput(format!(
                "unknown mechanism `{s}` (expected stopper, between-thresholds or randomized-response-calibration)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AuditArgs {
    pub mechanism: AuditMechanism,
    pub epsilon: f64,
    pub delta: f64,
    pub trials: u64,
    pub seed: u64,
    /// Audit the dataset against itself instead of a neighbor.
    pub identical: bool,
}

pub fn cmd_audit(args: &AuditArgs, out: &mut dyn Write) -> Result<EpsilonEstimate> {
    let shift = u64::from(!args.identical);
    let (est, budget, what) = match args.mechanism {
        AuditMechanism::RandomizedResponseCalibration => {
            if !(args.epsilon > 0.0) {
                return Err(Error::param("epsilon", "must be positive"));
            }
            let est = estimate_epsilon(
                |neighbor, n| randomized_response(!(neighbor && !args.identical), args.epsilon, n),
                &[
                    Event::new("output 1", |o: &bool| *o),
                    Event::new("output 0", |o: &bool| !*o),
                ],
                args.trials,
                0.95,
                args.seed,
            )?;
            (est, args.epsilon, "randomized response")
        }
        AuditMechanism::Stopper => {
            let privacy = PrivacyParams::new(args.epsilon, args.delta)?;
            // Sums at and just above the threshold; one query each.
            let threshold = 10;
            let est = estimate_epsilon(
                |neighbor, n| {
                    let ones = threshold + if neighbor { shift } else { 0 };
                    let mut s = Stopper::with_bits(privacy, threshold, (0..ones).map(|_| true));
                    s.query(n)
                },
                &[
                    Event::new("HALT", |o: &StopperAnswer| *o == StopperAnswer::Halt),
                    Event::new("CONTINUE", |o: &StopperAnswer| *o == StopperAnswer::Continue),
                ],
                args.trials,
                0.95,
                args.seed,
            )?;
            (est, args.epsilon, "Stopper, first query")
        }
        AuditMechanism::BetweenThresholds => {
            let privacy = PrivacyParams::new(args.epsilon, args.delta)?;
            let l = (2.0 / args.delta).ln();
            let budget = (4.0 * l).ceil() as u64;
            let gap = 16.0 / args.epsilon * (budget as f64 * l).sqrt();
            let params = BtParams {
                privacy,
                budget,
                t_low: 0.0,
                t_high: gap,
            };
            let est = estimate_epsilon(
                |neighbor, n| {
                    let value = if neighbor { shift as f64 } else { 0.0 };
                    let mut bt = BetweenThresholds::new(value, params)?;
                    bt.query(|v| *v, n)
                },
                &[
                    Event::new("low", |o: &BtAnswer| *o == BtAnswer::Low),
                    Event::new("medium", |o: &BtAnswer| *o == BtAnswer::Medium),
                    Event::new("high", |o: &BtAnswer| *o == BtAnswer::High),
                ],
                args.trials,
                0.95,
                args.seed,
            )?;
            (est, args.epsilon, "BetweenThresholds, first query")
        }
    };
    writeln!(
        out,
        "{what}: ε̂ = {:.4}, 95% CI [{:.4}, {:.4}], configured ε = {budget:.4}, trials = {} per input{}",
        est.point,
        est.lower,
        est.upper,
        args.trials,
        if args.identical { " (identical inputs)" } else { "" }
    )?;
    for e in &est.events {
        writeln!(
            out,
            "  {:<10} {:>9} vs {:>9}  log ratio {:+.4}  CI [{:.4}, {:.4}]",
            e.event, e.count, e.count_neighbor, e.log_ratio, e.lower, e.upper
        )?;
    }
    for x in &est.excluded {
        writeln!(out, "  excluded {x}")?;
    }
    Ok(est)
}

/// Prints the resolved schedule for phases `1..=phases`. Returns whether
/// every inequality and the budget hold.
pub fn cmd_check_params(cfg: &ExperimentConfig, phases: u32, out: &mut dyn Write) -> Result<bool> {
    if phases == 0 {
        return Err(Error::param("phases", "must be at least 1"));
    }
    cfg.validate()?;
    let resolver = PhaseResolver::new(cfg.globals, cfg.resolver)?;
    let report = resolver.report(phases);
    write!(out, "{report}")?;
    if let Some((p, e)) = report.errors.first() {
        return Err(Error::Infeasible {
            phase: *p,
            detail: e.clone(),
        });
    }
    Ok(report.all_hold())
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    ExperimentConfig::load(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::config("x", "y")), 1);
        assert_eq!(
            exit_code(&Error::Infeasible {
                phase: 1,
                detail: String::new()
            }),
            2
        );
        assert_eq!(exit_code(&Error::Internal(String::new())), 3);
    }

    #[test]
    fn leakage_zero_horizon() {
        let mut out = Vec::new();
        assert_eq!(cmd_leakage(0.1, 0, 10, 1, &mut out).unwrap(), 0.0);
    }

    #[test]
    fn unknown_mechanism() {
        assert!("laplace".parse::<AuditMechanism>().is_err());
    }

    #[test]
    fn identical_stopper_audit_contains_zero() {
        let args = AuditArgs {
            mechanism: AuditMechanism::Stopper,
            epsilon: 1.0,
            delta: 0.1,
            trials: 20_000,
            seed: 3,
            identical: true,
        };
        let est = cmd_audit(&args, &mut Vec::new()).unwrap();
        assert!(est.contains(0.0));
    }

    #[test]
    fn check_params_passes_default() {
        let mut out = Vec::new();
        assert!(cmd_check_params(&ExperimentConfig::default(), 5, &mut out).unwrap());
        let text = String::from_utf8(out).unwrap();
        assert!(text.contains("phase 5"));
        assert!(!text.contains("VIOLATED"));
    }
}
