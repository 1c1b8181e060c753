//! JSON model documents.

use std::fs;
use std::path::Path;

use perifix_core::genereg::{GeneSpec, build_gene_model, build_gene_model_with};
use perifix_core::integrate::IntegratorSettings;
use perifix_core::model::{ClosedLoopModel, ModelDefinition, parse_field};
use perifix_core::order::{OrderInterval, OrthantCone};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    ClosedLoop,
    Gene,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxConfig {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(rename = "type")]
    pub kind: ModelKind,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    pub period: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state_box: Option<BoxConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cone: Option<Vec<i64>>,
}

/// A validated model together with the document it came from.
#[derive(Debug, Clone)]
pub struct LoadedModel {
    pub model: ClosedLoopModel,
    pub gene: Option<GeneSpec>,
    pub config: ModelConfig,
    /// Hex SHA-256 of the raw document.
    pub digest: String,
}

pub fn digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn load_model(path: &Path) -> Result<LoadedModel, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::io(path, source))?;
    parse_model(&text).map_err(|e| e.in_file(path))
}

pub fn parse_model(text: &str) -> Result<LoadedModel, CliError> {
    let config: ModelConfig =
        serde_json::from_str(text).map_err(|e| CliError::model(e.to_string()))?;
    let (model, gene) = build(&config).map_err(CliError::into_model)?;
    Ok(LoadedModel {
        model,
        gene,
        config,
        digest: digest(text.as_bytes()),
    })
}

fn expect_len(field: &str, expected: usize, found: usize) -> Result<(), CliError> {
    if expected == found {
        Ok(())
    } else {
        Err(CliError::model(format!(
            "{field}: expected {expected} entries, found {found}"
        )))
    }
}

fn forbid<T>(kind: &str, field: &str, v: &Option<T>) -> Result<(), CliError> {
    match v {
        Some(_) => Err(CliError::model(format!(
            "{field}: not allowed for {kind} models"
        ))),
        None => Ok(()),
    }
}

fn require<'a, T>(kind: &str, field: &str, v: &'a Option<T>) -> Result<&'a T, CliError> {
    v.as_ref()
        .ok_or_else(|| CliError::model(format!("{field}: required for {kind} models")))
}

fn state_box(c: &ModelConfig, cone: OrthantCone) -> Result<Option<OrderInterval>, CliError> {
    let Some(b) = &c.state_box else {
        return Ok(None);
    };
    expect_len("state_box.lo", c.n, b.lo.len())?;
    expect_len("state_box.hi", c.n, b.hi.len())?;
    OrderInterval::new(cone, b.lo.clone(), b.hi.clone())
        .map(Some)
        .map_err(|e| CliError::model(format!("state_box: {e}")))
}

fn build(c: &ModelConfig) -> Result<(ClosedLoopModel, Option<GeneSpec>), CliError> {
    if c.n == 0 {
        return Err(CliError::model("n: must be at least 1".into()));
    }
    let cone = match &c.cone {
        Some(signs) => {
            expect_len("cone", c.n, signs.len())?;
            OrthantCone::from_ints(signs).map_err(|e| CliError::model(format!("cone: {e}")))?
        }
        None => OrthantCone::nonnegative(c.n),
    };
    let parse = |field: String, text: &str| parse_field(&field, text).map_err(CliError::from);
    match c.kind {
        ModelKind::ClosedLoop => {
            forbid("closed_loop", "alpha", &c.alpha)?;
            forbid("closed_loop", "g", &c.g)?;
            let m = c.m.unwrap_or(1);
            let f = require("closed_loop", "f", &c.f)?;
            let h = require("closed_loop", "h", &c.h)?;
            expect_len("f", c.n, f.len())?;
            expect_len("h", m, h.len())?;
            let state_box = state_box(c, cone)?.ok_or_else(|| {
                CliError::model("state_box: required for closed_loop models".into())
            })?;
            let def = ModelDefinition {
                period: c.period,
                f: f.iter()
                    .enumerate()
                    .map(|(i, s)| parse(format!("f[{i}]"), s))
                    .collect::<Result<_, _>>()?,
                h: h.iter()
                    .enumerate()
                    .map(|(i, s)| parse(format!("h[{i}]"), s))
                    .collect::<Result<_, _>>()?,
                state_box,
                input_cone: None,
                settings: IntegratorSettings::default(),
            };
            Ok((ClosedLoopModel::new(def)?, None))
        }
        ModelKind::Gene => {
            forbid("gene", "f", &c.f)?;
            forbid("gene", "h", &c.h)?;
            if c.m.is_some_and(|m| m != 1) {
                return Err(CliError::model("m: gene models have a scalar input".into()));
            }
            if cone.signs().iter().any(|s| s.as_f64() < 0.0) {
                return Err(CliError::model(
                    "cone: gene models use the nonnegative orthant".into(),
                ));
            }
            let alpha = require("gene", "alpha", &c.alpha)?;
            let g = require("gene", "g", &c.g)?;
            expect_len("alpha", c.n, alpha.len())?;
            let alphas = alpha
                .iter()
                .enumerate()
                .map(|(i, s)| parse(format!("alpha[{i}]"), s))
                .collect::<Result<_, _>>()?;
            let spec = GeneSpec::new(alphas, parse("g".into(), g)?, c.period)?;
            let model = match state_box(c, cone)? {
                Some(b) => build_gene_model_with(&spec, b, IntegratorSettings::default())?,
                None => build_gene_model(&spec)?,
            };
            Ok((model, Some(spec)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = include_str!("../models/gene_example.json");

    #[test]
    fn example_document() {
        let m = parse_model(EXAMPLE).unwrap();
        assert_eq!(m.model.dim(), 3);
        assert!(m.gene.is_some());
        assert_eq!(m.digest.len(), 64);
        assert_eq!(m.digest, digest(EXAMPLE.as_bytes()));
    }

    #[test]
    fn missing_period_names_the_key() {
        let err =
            parse_model(r#"{"type":"gene","n":2,"alpha":["1","1"],"g":"1/(1+u)"}"#).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("period"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = parse_model(
            r#"{"type":"gene","n":2,"period":1,"alpha":["1","1"],"g":"1/(1+u)","beta":1}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("beta"), "{err}");
    }

    #[test]
    fn dimension_errors_name_the_field() {
        let doc = r#"{"type":"closed_loop","n":2,"period":1,"f":["u - x1"],"h":["x2"],
            "state_box":{"lo":[0,0],"hi":[1,1]}}"#;
        let err = parse_model(doc).unwrap_err();
        assert!(err.to_string().contains("f: expected 2"), "{err}");
        let doc = r#"{"type":"closed_loop","n":1,"period":1,"f":["u - x1"],"h":["x1"],
            "state_box":{"lo":[0],"hi":[1,2]}}"#;
        assert!(
            parse_model(doc)
                .unwrap_err()
                .to_string()
                .contains("state_box.hi")
        );
    }

    #[test]
    fn expression_errors_name_the_field() {
        let doc = r#"{"type":"closed_loop","n":2,"period":1,"f":["u - x1", "x1 - (x2"],
            "h":["x2"],"state_box":{"lo":[0,0],"hi":[1,1]}}"#;
        let err = parse_model(doc).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("f[1]"), "{err}");
    }

    #[test]
    fn closed_loop_with_cone() {
        let doc = r#"{"type":"closed_loop","n":2,"period":2,"f":["-x1 + u","x1 - x2"],
            "h":["1/(1+x2)"],"cone":[1,1],"state_box":{"lo":[0,0],"hi":[1,1]}}"#;
        let m = parse_model(doc).unwrap();
        assert!(m.gene.is_none());
        assert_eq!(m.model.period(), 2.0);
        let doc = doc.replace(r#""cone":[1,1]"#, r#""cone":[1,0]"#);
        assert!(parse_model(&doc).is_err());
    }

    #[test]
    fn gene_with_explicit_box() {
        let doc = r#"{"type":"gene","n":2,"period":1,"alpha":["1","1"],"g":"1/(1+u)",
            "state_box":{"lo":[0,0],"hi":[2,2]}}"#;
        let m = parse_model(doc).unwrap();
        assert_eq!(m.model.state_box().hi(), &[2.0, 2.0]);
        let bad = doc.replace(r#""g":"1/(1+u)""#, r#""f":["x1"],"g":"1/(1+u)""#);
        assert!(
            parse_model(&bad)
                .unwrap_err()
                .to_string()
                .contains("f: not allowed")
        );
    }
}
