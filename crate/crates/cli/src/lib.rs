//! System-spec files and presets for the `rankone` command.

use rankone::params::{Stage, Tail};
use rankone::ParamSchedule;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// `q_n = 2`, no spacers.
    DyadicOdometer,
    /// `B_{n+1} = B_n B_n 1 B_n`.
    Chacon,
    /// The dyadic odometer, whose coding is the period-doubling subshift.
    PeriodDoubling,
}

impl Preset {
    pub fn schedule(self) -> ParamSchedule {
        match self {
            Preset::DyadicOdometer | Preset::PeriodDoubling => ParamSchedule::dyadic_odometer(),
            Preset::Chacon => ParamSchedule::chacon(),
        }
    }
}

/// On-disk description of a system: a preset or an explicit schedule, never both.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpecFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ParamSchedule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub telescope_levels: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SpecError {
    #[error("{path}: {source}")]
    Io { path: String, source: IoMessage },
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("\"preset\" and \"schedule\" are mutually exclusive")]
    Conflict,
    #[error("one of \"preset\" or \"schedule\" is required")]
    Missing,
    #[error("invalid schedule: {0}")]
    Invalid(String),
}

/// `std::io::Error` reduced to its message so [`SpecError`] stays comparable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IoMessage(pub String);

impl fmt::Display for IoMessage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for IoMessage {}

impl SystemSpecFile {
    pub fn from_preset(preset: Preset) -> Self {
        SystemSpecFile {
            preset: Some(preset),
            schedule: None,
            telescope_levels: None,
        }
    }

    pub fn schedule(&self) -> ParamSchedule {
        match (&self.preset, &self.schedule) {
            (Some(p), _) => p.schedule(),
            (None, Some(s)) => s.clone(),
            (None, None) => unreachable!("validated on parse"),
        }
    }

    fn validate(self) -> Result<Self, SpecError> {
        match (&self.preset, &self.schedule) {
            (Some(_), Some(_)) => return Err(SpecError::Conflict),
            (None, None) => return Err(SpecError::Missing),
            (None, Some(s)) => s.check().map_err(|e| SpecError::Invalid(e.to_string()))?,
            (Some(_), None) => {}
        }
        Ok(self)
    }
}

pub fn parse_spec(text: &str) -> Result<SystemSpecFile, SpecError> {
    let spec: SystemSpecFile = serde_json::from_str(text).map_err(|e| SpecError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    spec.validate()
}

pub fn read_spec(path: &Path) -> Result<SystemSpecFile, SpecError> {
    let text = std::fs::read_to_string(path).map_err(|e| SpecError::Io {
        path: path.display().to_string(),
        source: IoMessage(e.to_string()),
    })?;
    parse_spec(&text)
}

/// A one-stage schedule, repeated forever.
pub fn constant_schedule(q: usize, a: Vec<u64>) -> ParamSchedule {
    ParamSchedule::new(vec![Stage::new(q, a)], Tail::Periodic { period: 1 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets() {
        let s = parse_spec(r#"{"preset": "dyadic-odometer"}"#)
            .unwrap()
            .schedule();
        assert_eq!(s, constant_schedule(2, vec![0, 0]));
        let s = parse_spec(r#"{"preset": "chacon"}"#).unwrap().schedule();
        assert_eq!(s, constant_schedule(3, vec![0, 1, 0]));
    }

    #[test]
    fn explicit_schedule() {
        let text = r#"{
            "schedule": {"stages": [{"q": 2, "a": [0, 1]}], "tail": {"kind": "periodic", "period": 1}},
            "telescope_levels": [0, 1, 3]
        }"#;
        let spec = parse_spec(text).unwrap();
        assert_eq!(spec.schedule(), constant_schedule(2, vec![0, 1]));
        assert_eq!(spec.telescope_levels, Some(vec![0, 1, 3]));
    }

    #[test]
    fn unknown_field_has_position() {
        let err = parse_spec("{\n  \"preset\": \"chacon\",\n  \"foo\": 1\n}").unwrap_err();
        match err {
            SpecError::Parse { line, message, .. } => {
                assert_eq!(line, 3);
                assert!(message.contains("foo"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn exclusivity() {
        let both = r#"{"preset": "chacon", "schedule": {"stages": [{"q": 2, "a": [0, 0]}]}}"#;
        assert_eq!(parse_spec(both).unwrap_err(), SpecError::Conflict);
        assert_eq!(parse_spec("{}").unwrap_err(), SpecError::Missing);
    }

    #[test]
    fn malformed_schedule() {
        let text = r#"{"schedule": {"stages": [{"q": 2, "a": [0]}]}}"#;
        assert!(matches!(parse_spec(text), Err(SpecError::Invalid(_))));
    }
}
