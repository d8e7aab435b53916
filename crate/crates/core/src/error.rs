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

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A numeric argument is outside its admissible range.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A scripted noise source ran out of values.
    #[error("noise script exhausted after {consumed} samples")]
    ScriptExhausted { consumed: usize },

    /// A mechanism was used after it halted.
    #[error("{mechanism} has halted; no further {operation} allowed")]
    Halted {
        mechanism: &'static str,
        operation: &'static str,
    },

    /// An RSC session has handed out all of its slices.
    #[error("slice budget exhausted: {taken} of {budget} slices taken")]
    SliceBudgetExhausted { taken: usize, budget: usize },

    /// Phase parameters could not be resolved to a feasible point.
    #[error("infeasible parameters at phase {phase}: {detail}")]
    Infeasible { phase: u32, detail: String },

    /// Malformed input data (dimensions, labels, empty datasets).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Experiment configuration failed validation.
    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },

    /// The oracle hit a state it cannot recover from.
    #[error("internal state error: {0}")]
    Internal(String),

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
