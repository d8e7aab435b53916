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

//! Trace records and their schema.
//!
//! A trace is line-delimited JSON: one header record (`round = 0`) followed by
//! one record per round. Every record carries `schema_version`, `trial_id`
//! and `round`.

use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::OracleKind;
use crate::error::{Error, Result};
use crate::params::{GlobalParams, PhaseParams};
use crate::rectangles::{OracleEvent, StepRecord};
use crate::stumps::DecisionHeader;

pub const TRACE_SCHEMA_VERSION: u32 = 1;

/// JSON Schema of a trace line, published for external consumers.
/// [`validate_record`] enforces the same constraints.
pub const TRACE_SCHEMA: &str = r#"{
  "$schema": "http://json-schema.org/draft-07/schema#",
  "title": "perp trace record",
  "type": "object",
  "required": ["schema_version", "trial_id", "round", "kind"],
  "properties": {
    "schema_version": {"const": 1},
    "trial_id": {"type": "integer", "minimum": 0},
    "round": {"type": "integer", "minimum": 0},
    "kind": {"enum": ["header", "round"]}
  },
  "oneOf": [
    {
      "properties": {"kind": {"const": "header"}, "round": {"const": 0}},
      "required": ["oracle", "seed", "globals", "sample_size", "probe_mode", "horizon_rounds", "phases", "init_events"]
    },
    {
      "properties": {
        "kind": {"const": "round"},
        "round": {"minimum": 1},
        "phase": {"type": "integer", "minimum": 1},
        "in_distribution": {"type": "boolean"},
        "query": {"type": ["object", "null"]},
        "truth": {"type": ["boolean", "null"]},
        "prediction": {"type": ["boolean", "null"]},
        "answers": {"type": "array", "items": {"type": "object", "required": ["handle", "count", "answer"]}},
        "appended": {"type": ["boolean", "null"]},
        "events": {"type": "array", "items": {"type": "object", "required": ["event"]}},
        "dataset_len": {"type": "integer", "minimum": 0},
        "side_lens": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "generation": {"type": "integer", "minimum": 0},
        "probed_error": {"type": ["number", "null"]}
      },
      "required": ["phase", "in_distribution", "query", "truth", "prediction", "answers", "appended", "events", "dataset_len", "side_lens", "generation", "probed_error"]
    }
  ]
}"#;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialHeader {
    pub schema_version: u32,
    pub trial_id: u32,
    pub round: u64,
    pub kind: String,
    pub oracle: OracleKind,
    pub seed: u64,
    pub globals: GlobalParams,
    pub sample_size: u64,
    pub required_sample_size: Option<u64>,
    /// How the current hypothesis is evaluated by error probes.
    pub probe_mode: String,
    pub horizon_rounds: u64,
    pub phases: Vec<PhaseParams>,
    pub decision: Option<DecisionHeader>,
    pub init_events: Vec<OracleEvent>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundRecord {
    pub schema_version: u32,
    pub trial_id: u32,
    pub round: u64,
    pub kind: &'static str,
    pub in_distribution: bool,
    pub truth: Option<bool>,
    /// Error of the current hypothesis, present when it changed this round.
    pub probed_error: Option<f64>,
    #[serde(flatten)]
    pub step: StepRecord,
}

pub enum TraceLine<'a> {
    Header(&'a TrialHeader),
    Round(&'a RoundRecord),
}

pub trait TraceSink {
    fn emit(&mut self, line: TraceLine<'_>) -> Result<()>;
}

/// Discards everything.
#[derive(Debug, Default)]
pub struct NullSink;

impl TraceSink for NullSink {
    fn emit(&mut self, _: TraceLine<'_>) -> Result<()> {
        Ok(())
    }
}

/// Keeps every line as a JSON value.
#[derive(Debug, Default)]
pub struct MemorySink {
    pub lines: Vec<Value>,
}

impl TraceSink for MemorySink {
    fn emit(&mut self, line: TraceLine<'_>) -> Result<()> {
        let v = match line {
            TraceLine::Header(h) => serde_json::to_value(h),
            TraceLine::Round(r) => serde_json::to_value(r),
        }
        .map_err(|e| Error::Internal(e.to_string()))?;
        self.lines.push(v);
        Ok(())
    }
}

/// Writes one JSON object per line.
#[derive(Debug)]
pub struct JsonlSink<W: Write> {
    out: W,
}

impl<W: Write> JsonlSink<W> {
    pub fn new(out: W) -> Self {
        Self { out }
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

impl<W: Write> TraceSink for JsonlSink<W> {
    fn emit(&mut self, line: TraceLine<'_>) -> Result<()> {
        match line {
            TraceLine::Header(h) => serde_json::to_writer(&mut self.out, h),
            TraceLine::Round(r) => serde_json::to_writer(&mut self.out, r),
        }
        .map_err(|e| Error::Io(e.to_string()))?;
        self.out.write_all(b"\n")?;
        Ok(())
    }
}

fn require<'a>(v: &'a Value, key: &str) -> Result<&'a Value> {
    v.get(key)
        .ok_or_else(|| Error::InvalidInput(format!("trace record lacks `{key}`")))
}

fn expect(ok: bool, key: &str, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("trace field `{key}` must be {what}")))
    }
}

fn nullable(v: &Value, key: &str, pred: fn(&Value) -> bool, what: &str) -> Result<()> {
    let x = require(v, key)?;
    expect(x.is_null() || pred(x), key, what)
}

/// Checks one trace line against [`TRACE_SCHEMA`].
pub fn validate_record(v: &Value) -> Result<()> {
    expect(v.is_object(), "record", "an object")?;
    expect(
        require(v, "schema_version")?.as_u64() == Some(TRACE_SCHEMA_VERSION as u64),
        "schema_version",
        "1",
    )?;
    expect(require(v, "trial_id")?.is_u64(), "trial_id", "a nonnegative integer")?;
    let round = require(v, "round")?.as_u64();
    expect(round.is_some(), "round", "a nonnegative integer")?;
    match require(v, "kind")?.as_str() {
        Some("header") => {
            expect(round == Some(0), "round", "0 in a header")?;
            for k in [
                "oracle",
                "seed",
                "globals",
                "sample_size",
                "probe_mode",
                "horizon_rounds",
                "phases",
                "init_events",
            ] {
                require(v, k)?;
            }
            expect(v["phases"].is_array(), "phases", "an array")?;
        }
        Some("round") => {
            expect(round >= Some(1), "round", "at least 1")?;
            expect(
                v["phase"].as_u64().is_some_and(|p| p >= 1),
                "phase",
                "a positive integer",
            )?;
            expect(
                require(v, "in_distribution")?.is_boolean(),
                "in_distribution",
                "a boolean",
            )?;
            nullable(v, "query", Value::is_object, "an object or null")?;
            nullable(v, "truth", Value::is_boolean, "a boolean or null")?;
            nullable(v, "prediction", Value::is_boolean, "a boolean or null")?;
            nullable(v, "appended", Value::is_boolean, "a boolean or null")?;
            nullable(v, "probed_error", Value::is_number, "a number or null")?;
            let answers = require(v, "answers")?.as_array();
            expect(
                answers.is_some_and(|a| {
                    a.iter()
                        .all(|x| x.get("handle").is_some() && x.get("count").is_some() && x.get("answer").is_some())
                }),
                "answers",
                "an array of handle answers",
            )?;
            let events = require(v, "events")?.as_array();
            expect(
                events.is_some_and(|a| a.iter().all(|x| x.get("event").is_some())),
                "events",
                "an array of tagged events",
            )?;
            for k in ["dataset_len", "generation"] {
                expect(require(v, k)?.is_u64(), k, "a nonnegative integer")?;
            }
            expect(
                require(v, "side_lens")?
                    .as_array()
                    .is_some_and(|a| a.iter().all(Value::is_u64)),
                "side_lens",
                "an array of counts",
            )?;
        }
        _ => {
            return Err(Error::InvalidInput(
                "trace field `kind` must be \"header\" or \"round\"".into(),
            ))
        }
    }
    Ok(())
}

/// Validates a whole trace: a header first, then strictly increasing rounds
/// of a single trial.
pub fn validate_trace<'a, I: IntoIterator<Item = &'a Value>>(lines: I) -> Result<usize> {
    let mut last: Option<u64> = None;
    let mut trial = None;
    let mut n = 0;
    for v in lines {
        validate_record(v)?;
        let t = v["trial_id"].as_u64();
        if *trial.get_or_insert(t) != t {
            return Err(Error::InvalidInput("trace mixes trial ids".into()));
        }
        let r = v["round"].as_u64().expect("validated");
        match last {
            None if v["kind"] != "header" => return Err(Error::InvalidInput("trace must start with a header".into())),
            Some(prev) if r <= prev => {
                return Err(Error::InvalidInput(format!("round {r} does not follow round {prev}")));
            }
            _ => {}
        }
        last = Some(r);
        n += 1;
    }
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn round(r: u64) -> Value {
        json!({
            "schema_version": 1, "trial_id": 0, "round": r, "kind": "round", "phase": 1,
            "in_distribution": true, "query": null, "truth": null, "prediction": null,
            "answers": [], "appended": null, "events": [], "dataset_len": 0,
            "side_lens": [0, 0], "generation": 1, "probed_error": null, "time": r
        })
    }

    fn header() -> Value {
        json!({
            "schema_version": 1, "trial_id": 0, "round": 0, "kind": "header", "oracle": "rectangles",
            "seed": 1, "globals": {}, "sample_size": 10, "probe_mode": "noise-free-center",
            "horizon_rounds": 5, "phases": [], "init_events": []
        })
    }

    #[test]
    fn schema_is_valid_json() {
        let v: Value = serde_json::from_str(TRACE_SCHEMA).unwrap();
        assert_eq!(v["properties"]["schema_version"]["const"], 1);
    }

    #[test]
    fn accepts_well_formed_trace() {
        let t = [header(), round(1), round(2)];
        assert_eq!(validate_trace(&t).unwrap(), 3);
    }

    #[test]
    fn rejects_bad_records() {
        let mut r = round(1);
        r.as_object_mut().unwrap().remove("trial_id");
        assert!(validate_record(&r).is_err());
        let mut r = round(1);
        r["schema_version"] = json!(2);
        assert!(validate_record(&r).is_err());
        assert!(validate_trace(&[header(), round(2), round(2)]).is_err());
        assert!(validate_trace(&[round(1)]).is_err());
    }
}
