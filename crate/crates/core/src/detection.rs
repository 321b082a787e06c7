//! Detection output shared by both engines.

use serde::Serialize;
use thiserror::Error;

use crate::icu::FormatString;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Mdl,
    Nlp,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Mdl => "mdl",
            Engine::Nlp => "nlp",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub format: FormatString,
    pub locale: String,
    pub error_rate: f64,
    /// Description length in bits (MDL) or aggregated probability mass (NLP).
    pub score: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Timing {
    /// Pass over the sample that proposes candidates, in microseconds.
    pub analysis_micros: f64,
    /// Mean time to check one value against one candidate, in microseconds.
    pub validation_micros: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionResult {
    pub engine: Engine,
    pub column: String,
    pub candidates: Vec<Candidate>,
    pub timing: Timing,
}

impl DetectionResult {
    pub fn top(&self) -> Option<&Candidate> {
        self.candidates.first()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DetectError {
    #[error("no structure covers the sample")]
    NoStructureFound,
    #[error("no value in the sample parses")]
    NoParse,
    #[error("no candidate parses enough of the column")]
    NoDominantPattern,
    #[error("empty sample")]
    EmptySample,
}

/// Knobs shared by both engines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectOptions {
    pub max_error_rate: f64,
}

impl Default for DetectOptions {
    fn default() -> DetectOptions {
        DetectOptions { max_error_rate: 0.05 }
    }
}
