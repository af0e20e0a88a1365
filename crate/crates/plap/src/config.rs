//! Experiment configuration files.
//!
//! A config is JSON validated in three passes: syntax (with line and column),
//! typed deserialization (unknown keys and wrong types reported with their
//! field path and position), then the published schema in
//! `schema/config.schema.json`. Domain checks (e.g. `p = 1`) run when the
//! blocks are converted into library types.

use std::path::Path;

use plap_core::comparison::{GridDomain, SolverOptions};
use plap_core::{Affine, ConcaveTerm, Matrix, Params, Pole, PoleSet, Quadratic};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sampling::{self, ExperimentRng};

pub const CONFIG_VERSION: u32 = 1;
pub const CONFIG_SCHEMA: &str = include_str!("../schema/config.schema.json");

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}, column {column}, field `{field}`: {message}")]
    Field {
        field: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("field `{pointer}`: {message}")]
    Schema { pointer: String, message: String },
    #[error("field `{field}`: {message}")]
    Invalid { field: String, message: String },
}

impl ConfigError {
    fn invalid(field: &str, message: impl ToString) -> Self {
        ConfigError::Invalid {
            field: field.to_string(),
            message: message.to_string(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ParamsSpec {
    pub p: f64,
    pub n: usize,
    #[serde(default = "one")]
    pub c: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PoleSpec {
    pub weight: f64,
    pub location: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RandomPoles {
    pub count: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    #[serde(default = "default_weight_min")]
    pub weight_min: f64,
    #[serde(default = "default_weight_max")]
    pub weight_max: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RandomPoints {
    pub count: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AffineSpec {
    pub slope: Vec<f64>,
    pub offset: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConcaveSpec {
    Zero,
    Quadratic {
        matrix: Vec<Vec<f64>>,
        #[serde(default)]
        linear: Option<Vec<f64>>,
        #[serde(default)]
        constant: f64,
    },
    AffineMin {
        pieces: Vec<AffineSpec>,
    },
    Mollified {
        base: Box<ConcaveSpec>,
        delta: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub nodes: Vec<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub reg_eps: Option<f64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    Barenblatt {
        #[serde(default = "one")]
        constant: f64,
        #[serde(default = "one")]
        t: f64,
        #[serde(default = "two")]
        a: f64,
        #[serde(default = "default_samples")]
        samples: usize,
    },
    Homogeneous {
        #[serde(default = "one")]
        constant: f64,
        y: Vec<f64>,
        #[serde(default = "default_t_min")]
        t_min: f64,
        #[serde(default = "default_t_max")]
        t_max: f64,
        #[serde(default = "default_samples")]
        samples: usize,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    #[serde(default)]
    pub seed: Option<u64>,
    pub params: ParamsSpec,
    #[serde(default)]
    pub poles: Vec<PoleSpec>,
    #[serde(default)]
    pub random_poles: Option<RandomPoles>,
    #[serde(default)]
    pub concave: Option<ConcaveSpec>,
    #[serde(default)]
    pub points: Vec<Vec<f64>>,
    #[serde(default)]
    pub random_points: Option<RandomPoints>,
    #[serde(default)]
    pub fd_step: Option<f64>,
    /// Random points closer than this to a pole are redrawn.
    #[serde(default)]
    pub min_pole_distance: Option<f64>,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub boundary_shift: f64,
    #[serde(default)]
    pub solver: Option<SolverSpec>,
    #[serde(default)]
    pub kernel: Option<KernelSpec>,
}

fn one() -> f64 {
    1.0
}

fn two() -> f64 {
    2.0
}

fn default_weight_min() -> f64 {
    0.2
}

fn default_weight_max() -> f64 {
    2.0
}

fn default_samples() -> usize {
    201
}

fn default_t_min() -> f64 {
    0.01
}

fn default_t_max() -> f64 {
    10.0
}

fn compiled_schema() -> &'static jsonschema::Validator {
    static VALIDATOR: std::sync::OnceLock<jsonschema::Validator> = std::sync::OnceLock::new();
    VALIDATOR.get_or_init(|| {
        let schema: serde_json::Value =
            serde_json::from_str(CONFIG_SCHEMA).expect("bundled schema is valid JSON");
        jsonschema::validator_for(&schema).expect("bundled schema compiles")
    })
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| ConfigError::Syntax {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            })?;
        let mut de = serde_json::Deserializer::from_str(text);
        let config: ExperimentConfig = serde_path_to_error::deserialize(&mut de).map_err(|e| {
            let field = e.path().to_string();
            let inner = e.into_inner();
            ConfigError::Field {
                field,
                line: inner.line(),
                column: inner.column(),
                message: inner.to_string(),
            }
        })?;
        if let Some(err) = compiled_schema().iter_errors(&value).next() {
            let pointer = err.instance_path().to_string();
            return Err(ConfigError::Schema {
                pointer: if pointer.is_empty() {
                    "/".into()
                } else {
                    pointer
                },
                message: err.to_string(),
            });
        }
        Ok(config)
    }

    pub fn params(&self) -> Result<Params, ConfigError> {
        Params::with_normalization(self.params.p, self.params.n, self.params.c)
            .map_err(|e| ConfigError::invalid("params", e))
    }

    /// Explicit poles followed by the random ones, if any.
    pub fn pole_set(&self, rng: &mut ExperimentRng) -> Result<PoleSet, ConfigError> {
        let params = self.params()?;
        let mut poles: Vec<Pole> = self
            .poles
            .iter()
            .map(|p| Pole {
                weight: p.weight,
                location: p.location.clone(),
            })
            .collect();
        if let Some(spec) = &self.random_poles {
            check_box(&spec.lower, &spec.upper, params.n(), "random_poles")?;
            if spec.weight_min > spec.weight_max {
                return Err(ConfigError::invalid(
                    "random_poles",
                    "weight_min exceeds weight_max",
                ));
            }
            for _ in 0..spec.count {
                let location = sampling::point_in_box(rng, &spec.lower, &spec.upper);
                let weight = if spec.weight_min == spec.weight_max {
                    spec.weight_min
                } else {
                    rng.gen_range(spec.weight_min..spec.weight_max)
                };
                poles.push(Pole { weight, location });
            }
        }
        if poles.is_empty() {
            return Ok(PoleSet::without_poles(params));
        }
        PoleSet::new(params, poles).map_err(|e| ConfigError::invalid("poles", e))
    }

    pub fn concave_term(&self) -> Result<ConcaveTerm, ConfigError> {
        let n = self.params.n;
        match &self.concave {
            None => Ok(ConcaveTerm::Zero),
            Some(spec) => build_concave(spec, n),
        }
    }

    /// Explicit points followed by the random ones. Random points closer than
    /// `min_pole_distance` to a pole are redrawn.
    pub fn points(
        &self,
        rng: &mut ExperimentRng,
        poles: &PoleSet,
    ) -> Result<Vec<Vec<f64>>, ConfigError> {
        let n = self.params.n;
        let mut points = self.points.clone();
        if let Some(bad) = points.iter().position(|x| x.len() != n) {
            return Err(ConfigError::invalid(
                &format!("points/{bad}"),
                format!("expected {n} coordinates"),
            ));
        }
        if let Some(spec) = &self.random_points {
            check_box(&spec.lower, &spec.upper, n, "random_points")?;
            let min_dist = self.min_pole_distance.unwrap_or(0.0);
            for _ in 0..spec.count {
                let mut tries = 0;
                loop {
                    let x = sampling::point_in_box(rng, &spec.lower, &spec.upper);
                    if poles.nearest_pole_distance(&x) >= min_dist {
                        points.push(x);
                        break;
                    }
                    tries += 1;
                    if tries > 10_000 {
                        return Err(ConfigError::invalid(
                            "min_pole_distance",
                            "no admissible point found in the sampling box",
                        ));
                    }
                }
            }
        }
        Ok(points)
    }

    pub fn grid(&self) -> Result<GridDomain, ConfigError> {
        let spec = self
            .grid
            .as_ref()
            .ok_or_else(|| ConfigError::invalid("grid", "required by this command"))?;
        GridDomain::new(spec.lower.clone(), spec.upper.clone(), spec.nodes.clone())
            .map_err(|e| ConfigError::invalid("grid", e))
    }

    pub fn solver_options(&self) -> SolverOptions {
        let mut opts = SolverOptions::default();
        if let Some(s) = &self.solver {
            opts.reg_eps = s.reg_eps.unwrap_or(opts.reg_eps);
            opts.tol = s.tol.unwrap_or(opts.tol);
            opts.max_iter = s.max_iter.unwrap_or(opts.max_iter);
        }
        opts
    }
}

fn check_box(lower: &[f64], upper: &[f64], n: usize, field: &str) -> Result<(), ConfigError> {
    if lower.len() != n || upper.len() != n {
        return Err(ConfigError::invalid(
            field,
            format!("box corners need {n} coordinates"),
        ));
    }
    if lower.iter().zip(upper).any(|(a, b)| !(a < b)) {
        return Err(ConfigError::invalid(
            field,
            "box needs lower < upper on every axis",
        ));
    }
    Ok(())
}

fn build_concave(spec: &ConcaveSpec, n: usize) -> Result<ConcaveTerm, ConfigError> {
    let err = |e: plap_core::Error| ConfigError::invalid("concave", e);
    match spec {
        ConcaveSpec::Zero => Ok(ConcaveTerm::Zero),
        ConcaveSpec::Quadratic {
            matrix,
            linear,
            constant,
        } => {
            if matrix.len() != n {
                return Err(ConfigError::invalid(
                    "concave/matrix",
                    format!("expected {n} rows"),
                ));
            }
            let a = Matrix::from_rows(matrix).map_err(err)?;
            let b = linear.clone().unwrap_or_else(|| vec![0.0; n]);
            Ok(ConcaveTerm::Quadratic(
                Quadratic::new(a, b, *constant).map_err(err)?,
            ))
        }
        ConcaveSpec::AffineMin { pieces } => {
            if pieces.iter().any(|p| p.slope.len() != n) {
                return Err(ConfigError::invalid(
                    "concave/pieces",
                    format!("slopes need {n} coordinates"),
                ));
            }
            let pieces = pieces
                .iter()
                .map(|p| Affine {
                    slope: p.slope.clone(),
                    offset: p.offset,
                })
                .collect();
            ConcaveTerm::affine_min(pieces).map_err(err)
        }
        ConcaveSpec::Mollified { base, delta } => {
            ConcaveTerm::mollified(build_concave(base, n)?, *delta).map_err(err)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"version": 1, "params": {"p": 3, "n": 2}}"#;

    #[test]
    fn minimal_config_parses() {
        let cfg = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(cfg.params.c, 1.0);
        assert!(cfg.poles.is_empty());
        assert_eq!(cfg.concave_term().unwrap(), ConcaveTerm::Zero);
    }

    #[test]
    fn unknown_key_reports_field_and_line() {
        let text = "{\n  \"version\": 1,\n  \"params\": {\"p\": 3, \"n\": 2, \"q\": 1}\n}";
        match ExperimentConfig::parse(text) {
            Err(ConfigError::Field { field, line, .. }) => {
                assert_eq!(field, "params.q");
                assert_eq!(line, 3);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn syntax_error_reports_position() {
        let text = "{\n  \"version\": 1,\n  \"params\": {\"p\": 3,, }\n}";
        assert!(matches!(
            ExperimentConfig::parse(text),
            Err(ConfigError::Syntax { line: 3, .. })
        ));
    }

    #[test]
    fn schema_constraints_are_enforced() {
        let wrong_version = r#"{"version": 2, "params": {"p": 3, "n": 2}}"#;
        assert!(matches!(
            ExperimentConfig::parse(wrong_version),
            Err(ConfigError::Schema { .. })
        ));
        let negative_weight = r#"{"version": 1, "params": {"p": 3, "n": 2}, "poles": [{"weight": -1, "location": [0, 0]}]}"#;
        match ExperimentConfig::parse(negative_weight) {
            Err(ConfigError::Schema { pointer, .. }) => assert_eq!(pointer, "/poles/0/weight"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn tagged_blocks_reject_unknown_fields() {
        let text = r#"{"version": 1, "params": {"p": 3, "n": 2}, "concave": {"kind": "zero", "extra": 1}}"#;
        assert!(ExperimentConfig::parse(text).is_err());
        let text = r#"{"version": 1, "params": {"p": 3, "n": 2}, "concave": {"kind": "cubic"}}"#;
        assert!(ExperimentConfig::parse(text).is_err());
    }

    #[test]
    fn excluded_exponent_is_a_domain_error() {
        let cfg = ExperimentConfig::parse(r#"{"version": 1, "params": {"p": 1, "n": 2}}"#).unwrap();
        assert!(matches!(cfg.params(), Err(ConfigError::Invalid { .. })));
    }

    #[test]
    fn concave_blocks_build() {
        let text = r#"{"version": 1, "params": {"p": 3, "n": 2},
            "concave": {"kind": "mollified", "delta": 0.1,
                        "base": {"kind": "affine_min", "pieces": [{"slope": [1, 0], "offset": 0},
                                                                   {"slope": [-1, 0], "offset": 0}]}}}"#;
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert!(matches!(
            cfg.concave_term().unwrap(),
            ConcaveTerm::Mollified(_)
        ));
        let text = r#"{"version": 1, "params": {"p": 3, "n": 2},
            "concave": {"kind": "quadratic", "matrix": [[-1, 0], [0, -2]]}}"#;
        let cfg = ExperimentConfig::parse(text).unwrap();
        assert!(cfg.concave_term().unwrap().is_concave());
    }

    #[test]
    fn random_blocks_are_seeded() {
        let text = r#"{"version": 1, "params": {"p": 3, "n": 2},
            "random_poles": {"count": 3, "lower": [-1, -1], "upper": [1, 1]},
            "random_points": {"count": 5, "lower": [-2, -2], "upper": [2, 2]},
            "min_pole_distance": 0.3}"#;
        let cfg = ExperimentConfig::parse(text).unwrap();
        let draw = || {
            let mut rng = sampling::rng(7);
            let ps = cfg.pole_set(&mut rng).unwrap();
            let pts = cfg.points(&mut rng, &ps).unwrap();
            (ps, pts)
        };
        let (ps, pts) = draw();
        assert_eq!(ps.len(), 3);
        assert_eq!(pts.len(), 5);
        assert!(pts.iter().all(|x| ps.nearest_pole_distance(x) >= 0.3));
        assert_eq!(draw(), (ps, pts));
    }
}
