//! JSON file formats.
//!
//! Every file carries `"format_version": 1`; on input the field may be
//! omitted. Floats are written in the shortest form that parses back to
//! the same `f64`, so a written deployment reloads bit-identically.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

use crate::deployment::{Deployment, DeploymentError};
use crate::geometry::{Point, Rectangle, Tolerance};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Write { path: String, source: std::io::Error },
    /// Syntax or type error; `field` is the JSON path of the offending value.
    #[error("{origin}: line {line}, column {column}{}: {message}", field_suffix(.field))]
    Parse {
        origin: String,
        line: usize,
        column: usize,
        field: String,
        message: String,
    },
    #[error("{origin}: {field}: {message}")]
    Invalid {
        origin: String,
        field: String,
        message: String,
    },
}

fn field_suffix(field: &str) -> String {
    if field.is_empty() || field == "." {
        String::new()
    } else {
        format!(", field `{field}`")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeploymentFile {
    #[serde(default = "default_version")]
    pub format_version: u32,
    pub region: Rectangle,
    pub r_s: f64,
    pub r_c: f64,
    pub sensors: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

fn default_version() -> u32 {
    FORMAT_VERSION
}

impl DeploymentFile {
    pub fn from_deployment(d: &Deployment) -> Self {
        let default_tau = Tolerance::default_for(d.r_s()).tau();
        Self {
            format_version: FORMAT_VERSION,
            region: d.region(),
            r_s: d.r_s(),
            r_c: d.r_c(),
            sensors: d.sensors().iter().map(|&p| p.into()).collect(),
            tolerance: (d.tau() != default_tau).then_some(d.tau()),
        }
    }

    pub fn to_deployment(&self, origin: &str) -> Result<Deployment, IoError> {
        let invalid = |field: &str, message: String| IoError::Invalid {
            origin: origin.to_string(),
            field: field.to_string(),
            message,
        };
        check_version(self.format_version, origin)?;
        let region =
            Rectangle::new(self.region.a, self.region.b).map_err(|e| invalid("region", e.to_string()))?;
        let tol = match self.tolerance {
            None => None,
            Some(t) => Some(Tolerance::new(t, self.r_s).map_err(|e| invalid("tolerance", e.to_string()))?),
        };
        let sensors = self.sensors.iter().map(|&p| Point::from(p)).collect();
        Deployment::new(sensors, self.r_s, self.r_c, region, tol).map_err(|e| {
            let field = match &e {
                DeploymentError::BadSensingRange(_) => "r_s".to_string(),
                DeploymentError::BadCommRange(_) => "r_c".to_string(),
                DeploymentError::OutsideRegion { index, .. } => format!("sensors[{index}]"),
                DeploymentError::DuplicateSensor { second, .. } => format!("sensors[{second}]"),
                _ => "tolerance".to_string(),
            };
            invalid(&field, e.to_string())
        })
    }
}

pub fn check_version(version: u32, origin: &str) -> Result<(), IoError> {
    if version == FORMAT_VERSION {
        Ok(())
    } else {
        Err(IoError::Invalid {
            origin: origin.to_string(),
            field: "format_version".into(),
            message: format!("unsupported version {version}, expected {FORMAT_VERSION}"),
        })
    }
}

/// Parses `text` into `T`, reporting the JSON path of the first bad value.
pub fn parse_json<T: DeserializeOwned>(text: &str, origin: &str) -> Result<T, IoError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let parsed: Result<T, _> = serde_path_to_error::deserialize(de);
    parsed.map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        IoError::Parse {
            origin: origin.to_string(),
            line: inner.line(),
            column: inner.column(),
            field,
            message: strip_position(&inner.to_string()),
        }
    })
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(k) => msg[..k].to_string(),
        None => msg.to_string(),
    }
}

pub fn read_text(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|source| IoError::Read {
        path: path.display().to_string(),
        source,
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    let io_err = |source| IoError::Write {
        path: path.display().to_string(),
        source,
    };
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_err)?;
    }
    std::fs::write(path, text).map_err(io_err)
}

pub fn parse_deployment(text: &str, origin: &str) -> Result<Deployment, IoError> {
    parse_json::<DeploymentFile>(text, origin)?.to_deployment(origin)
}

pub fn deployment_to_json(d: &Deployment) -> String {
    to_json(&DeploymentFile::from_deployment(d))
}

pub fn read_deployment(path: &Path) -> Result<Deployment, IoError> {
    parse_deployment(&read_text(path)?, &path.display().to_string())
}

pub fn write_deployment(path: &Path, d: &Deployment) -> Result<(), IoError> {
    write_text(path, &deployment_to_json(d))
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}

/// `value` as a JSON object with `"format_version": 1` in front.
pub fn versioned_json<T: Serialize>(value: &T) -> String {
    let mut map = serde_json::Map::new();
    map.insert("format_version".into(), FORMAT_VERSION.into());
    match serde_json::to_value(value).expect("serializable value") {
        serde_json::Value::Object(fields) => map.extend(fields.into_iter().filter(|(k, _)| k != "format_version")),
        other => {
            map.insert("data".into(), other);
        }
    }
    to_json(&serde_json::Value::Object(map))
}
