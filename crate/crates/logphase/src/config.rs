//! TOML problem configuration with `[fields]`, `[domain]` and
//! `[hypotheses]` sections (plus an optional `[solver]` block). Every
//! field is an expression string.

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::expr::ScalarField;
use crate::problem::{DomainKind, ProblemData, Subcritical};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub fields: RawFields,
    pub domain: RawDomain,
    #[serde(default)]
    pub hypotheses: RawHypotheses,
    #[serde(default)]
    pub solver: SolverConfig,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawFields {
    pub p: String,
    pub q: String,
    pub s: String,
    pub a: String,
    pub b: String,
    pub p_star: Option<String>,
    pub q_star: Option<String>,
    pub s_star: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawDomain {
    /// 1 for the unit interval, 2 for the unit square.
    pub dimension: usize,
    /// The dimension N >= 2 in the critical exponents.
    pub n: u32,
    /// Mesh cells per axis.
    #[serde(default = "default_resolution")]
    pub resolution: usize,
}

fn default_resolution() -> usize {
    64
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RawHypotheses {
    pub r: Option<f64>,
    pub d: Option<f64>,
    pub grid_resolution: Option<usize>,
}

#[derive(Debug, Deserialize, Clone)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_lambda_cap")]
    pub lambda_cap: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_solver_tol")]
    pub tol: f64,
    /// Splice parameter for conjugate tables; defaults to the explicit
    /// growth-estimate value when absent.
    pub ell: Option<f64>,
}

fn default_lambda_cap() -> f64 {
    0.2
}
fn default_max_iters() -> usize {
    200_000
}
fn default_solver_tol() -> f64 {
    1e-8
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            lambda_cap: default_lambda_cap(),
            max_iters: default_max_iters(),
            tol: default_solver_tol(),
            ell: None,
        }
    }
}

/// A parsed configuration: validated field expressions plus run settings.
#[derive(Debug)]
pub struct Config {
    pub data: ProblemData,
    pub mesh_resolution: usize,
    pub grid_resolution: usize,
    pub solver: SolverConfig,
}

pub fn parse_config(text: &str) -> Result<Config> {
    let raw: RawConfig =
        toml::from_str(text).map_err(|e| Error::Config(format!("TOML parse error: {e}")))?;
    let domain = match raw.domain.dimension {
        1 => DomainKind::Interval,
        2 => DomainKind::UnitSquare,
        other => {
            return Err(Error::Config(format!(
                "domain.dimension must be 1 or 2, got {other}"
            )))
        }
    };
    let parse_field = |name: &str, src: &str| -> Result<ScalarField> {
        ScalarField::parse(src).map_err(|e| match e {
            Error::MalformedField { message, .. } => Error::MalformedField {
                field: name.to_string(),
                message,
            },
            other => other,
        })
    };
    let p = parse_field("p", &raw.fields.p)?;
    let q = parse_field("q", &raw.fields.q)?;
    let s = parse_field("s", &raw.fields.s)?;
    let a = parse_field("a", &raw.fields.a)?;
    let b = parse_field("b", &raw.fields.b)?;
    let sub = match (&raw.fields.p_star, &raw.fields.q_star, &raw.fields.s_star) {
        (None, None, None) => None,
        (Some(ps), Some(qs), Some(ss)) => Some(Subcritical {
            p: parse_field("p_star", ps)?,
            q: parse_field("q_star", qs)?,
            s: parse_field("s_star", ss)?,
        }),
        _ => {
            return Err(Error::Config(
                "p_star, q_star and s_star must be given together".into(),
            ))
        }
    };
    let data = ProblemData::new(
        p,
        q,
        s,
        a,
        b,
        raw.domain.n,
        domain,
        sub,
        raw.hypotheses.r,
        raw.hypotheses.d,
    )?;
    let grid_resolution = raw
        .hypotheses
        .grid_resolution
        .unwrap_or_else(|| domain.default_scan_resolution());
    Ok(Config {
        data,
        mesh_resolution: raw.domain.resolution,
        grid_resolution,
        solver: raw.solver,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
[fields]
p = "2"
q = "2.5"
s = "0.5"
a = "1"
b = "1"
p_star = "1.5"
q_star = "1.8"
s_star = "0"

[domain]
dimension = 1
n = 3
resolution = 64

[hypotheses]
grid_resolution = 2000

[solver]
lambda_cap = 0.2
"#;

    #[test]
    fn parses_reference_config() {
        let cfg = parse_config(SAMPLE).unwrap();
        assert_eq!(cfg.mesh_resolution, 64);
        assert_eq!(cfg.grid_resolution, 2000);
        assert!(cfg.data.sub.is_some());
        // r defaults to the subcritical floor 1.8 minus the guard.
        assert!((cfg.data.r - (1.8 - 1e-9)).abs() < 1e-12);
    }

    #[test]
    fn missing_field_is_a_config_error() {
        let text = SAMPLE.replace("q = \"2.5\"\n", "");
        let err = parse_config(&text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("q"), "{msg}");
    }

    #[test]
    fn bad_expression_names_the_field() {
        let text = SAMPLE.replace("q = \"2.5\"", "q = \"2.5 +\"");
        match parse_config(&text).unwrap_err() {
            Error::MalformedField { field, .. } => assert_eq!(field, "q"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn partial_subcritical_rejected() {
        let text = SAMPLE.replace("p_star = \"1.5\"\n", "");
        assert!(matches!(parse_config(&text), Err(Error::Config(_))));
    }
}
