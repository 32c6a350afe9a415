//! Declarative run specifications (JSON) and their execution.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::algebra::{CMat, Element, TracialAlgebra, C64};
use crate::error::{Error, Result};
use crate::gallery::build_tan_wrap_loop;
use crate::index::{suspension_path, CornerOperator};
use crate::path::OperatorPath;
use crate::quad::QuadratureConfig;
use crate::report::SpectralFlowReport;
use crate::specflow::{compute, Method, MethodOptions};
use crate::tolerances::CROSS_CHECK;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BackendSpec {
    /// `[[dimension, weight], ...]`
    Blocks { blocks: Vec<(usize, f64)> },
    Grid { points: Vec<f64>, weights: Vec<f64> },
    UniformGrid { n: usize, a: f64, b: f64, total: f64 },
}

impl BackendSpec {
    pub fn build(&self) -> Result<Arc<TracialAlgebra>> {
        match self {
            BackendSpec::Blocks { blocks } => TracialAlgebra::blocks(blocks),
            BackendSpec::Grid { points, weights } => TracialAlgebra::grid(points, weights),
            BackendSpec::UniformGrid { n, a, b, total } => TracialAlgebra::uniform_grid(*n, *a, *b, *total),
        }
    }
}

/// Matrix entry: a real number or `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

impl Entry {
    fn value(self) -> C64 {
        match self {
            Entry::Real(x) => C64::new(x, 0.0),
            Entry::Complex([re, im]) => C64::new(re, im),
        }
    }
}

/// Row-major matrix.
pub type MatrixSpec = Vec<Vec<Entry>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ElementSpec {
    /// One matrix per block.
    Blocks(Vec<MatrixSpec>),
    /// Diagonal entries across all blocks.
    Diagonal(Vec<f64>),
    /// Multiple of the identity.
    Scalar(f64),
    /// Grid values.
    Values(Vec<f64>),
}

impl ElementSpec {
    pub fn build(&self, alg: &Arc<TracialAlgebra>, at: &str) -> Result<Element> {
        let wrap = |e: Error| match e {
            Error::Validation { .. } => e,
            other => Error::validation(at, other.to_string()),
        };
        match self {
            ElementSpec::Scalar(c) => Ok(Element::scalar(alg, C64::new(*c, 0.0))),
            ElementSpec::Diagonal(d) => Element::diagonal(alg, d).map_err(wrap),
            ElementSpec::Values(v) => Element::grid(alg, v).map_err(wrap),
            ElementSpec::Blocks(b) => {
                let mut mats = Vec::with_capacity(b.len());
                for (k, rows) in b.iter().enumerate() {
                    let n = rows.len();
                    if let Some(i) = rows.iter().position(|r| r.len() != n) {
                        return Err(Error::validation(format!("{at}.blocks[{k}][{i}]"), "matrix rows must have equal length"));
                    }
                    mats.push(CMat::from_fn(n, n, |i, j| rows[i][j].value()));
                }
                Element::from_blocks(alg, mats).map_err(wrap)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sample {
    pub t: f64,
    pub value: ElementSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum PathSpec {
    /// `((1 − t)a + tb)·1`
    ScalarAffine { a: f64, b: f64 },
    /// `(1 − t)A + tB`
    Affine { start: ElementSpec, end: ElementSpec },
    /// `(1 − t)A + tB + t(1 − t)C`
    Quadratic { start: ElementSpec, end: ElementSpec, bend: ElementSpec },
    /// Piecewise linear through samples.
    Sampled { samples: Vec<Sample> },
    /// `tan(π(t − x − offset))` on a grid backend.
    TanWrap { offset: f64 },
    /// Suspension of a corner operator `D = pDq`; runs in the doubled algebra.
    Suspension { operator: ElementSpec, target: ElementSpec, source: ElementSpec },
}

impl PathSpec {
    pub fn build(&self, alg: &Arc<TracialAlgebra>) -> Result<OperatorPath> {
        let validation = |at: &str| {
            let at = at.to_string();
            move |e: Error| match e {
                Error::Validation { .. } => e,
                other => Error::validation(at.clone(), other.to_string()),
            }
        };
        match self {
            PathSpec::ScalarAffine { a, b } => {
                let one = Element::identity(alg);
                OperatorPath::affine(&one.scale(*a), &one.scale(*b))
            }
            PathSpec::Affine { start, end } => OperatorPath::affine(
                &start.build(alg, "path.start")?,
                &end.build(alg, "path.end")?,
            )
            .map_err(validation("path")),
            PathSpec::Quadratic { start, end, bend } => OperatorPath::quadratic(
                &start.build(alg, "path.start")?,
                &end.build(alg, "path.end")?,
                &bend.build(alg, "path.bend")?,
            )
            .map_err(validation("path")),
            PathSpec::Sampled { samples } => {
                if samples.len() < 2 {
                    return Err(Error::validation("path.samples", "at least two samples are required"));
                }
                let mut prev = f64::NEG_INFINITY;
                let mut built = Vec::with_capacity(samples.len());
                for (i, s) in samples.iter().enumerate() {
                    if !(0.0..=1.0).contains(&s.t) || s.t <= prev {
                        return Err(Error::validation(
                            format!("path.samples[{i}].t"),
                            "sample parameters must increase strictly within [0, 1]",
                        ));
                    }
                    prev = s.t;
                    built.push((s.t, s.value.build(alg, &format!("path.samples[{i}].value"))?));
                }
                if built[0].0 != 0.0 || built[built.len() - 1].0 != 1.0 {
                    return Err(Error::validation("path.samples", "samples must start at t = 0 and end at t = 1"));
                }
                OperatorPath::sampled(built).map_err(validation("path.samples"))
            }
            PathSpec::TanWrap { offset } => {
                if !alg.is_grid() {
                    return Err(Error::validation("backend.kind", "tan_wrap needs a grid backend"));
                }
                build_tan_wrap_loop(alg, *offset).map_err(validation("path.offset"))
            }
            PathSpec::Suspension { operator, target, source } => {
                let t = CornerOperator::new(
                    operator.build(alg, "path.operator")?,
                    target.build(alg, "path.target")?,
                    source.build(alg, "path.source")?,
                )
                .map_err(validation("path"))?;
                suspension_path(&t)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MethodsSpec {
    /// `"all"`
    Keyword(String),
    List(Vec<Method>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub file: Option<String>,
    pub format: OutputFormat,
    /// Largest allowed pairwise discrepancy before the run counts as a disagreement.
    pub tolerance: f64,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            file: None,
            format: OutputFormat::Json,
            tolerance: CROSS_CHECK,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub backend: BackendSpec,
    pub path: PathSpec,
    pub methods: MethodsSpec,
    #[serde(default)]
    pub method_params: MethodOptions,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub output: OutputSpec,
}

impl RunSpec {
    pub fn from_json(text: &str) -> Result<RunSpec> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let spec: RunSpec = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::validation(if path == "." { "$".to_string() } else { path }, e.into_inner().to_string())
        })?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn methods(&self) -> Result<Vec<Method>> {
        let list = match &self.methods {
            MethodsSpec::Keyword(k) if k == "all" => Method::ALL.to_vec(),
            MethodsSpec::Keyword(k) => {
                return Err(Error::validation("methods", format!("expected a list of methods or \"all\", got \"{k}\"")))
            }
            MethodsSpec::List(l) => l.clone(),
        };
        if list.is_empty() {
            return Err(Error::validation("methods", "at least one method is required"));
        }
        Ok(list)
    }

    pub fn validate(&self) -> Result<()> {
        self.methods()?;
        self.quadrature.validate()?;
        let p = &self.method_params;
        if p.partition == 0 {
            return Err(Error::validation("method_params.partition", "must be at least 1"));
        }
        if !(p.resolvent_p >= 1.0 && p.resolvent_p.is_finite()) {
            return Err(Error::validation("method_params.resolvent_p", "must be finite and ≥ 1"));
        }
        if let Some(eps) = p.winding_eps {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(Error::validation("method_params.winding_eps", "must be positive"));
            }
        }
        if let Some(r) = p.regularization {
            if !(r.eps > 0.0 && r.eps < 1.0) {
                return Err(Error::validation("method_params.regularization.eps", "must lie in (0, 1)"));
            }
        }
        if p.crossing.samples == 0 {
            return Err(Error::validation("method_params.crossing.samples", "must be at least 1"));
        }
        if !(self.output.tolerance > 0.0) {
            return Err(Error::validation("output.tolerance", "must be positive"));
        }
        Ok(())
    }
}

/// Result of executing a run specification.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: Option<SpectralFlowReport>,
    pub error: Option<Error>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        self.error.as_ref().map_or(0, Error::exit_code)
    }

    /// The report, or an error body `{"error": {"reason", "message"}}`, as JSON.
    pub fn to_json(&self) -> String {
        let mut body = match &self.report {
            Some(r) => serde_json::to_value(r).expect("report serializes"),
            None => json!({}),
        };
        if let Some(e) = &self.error {
            let mut err = json!({"reason": e.reason(), "message": e.to_string()});
            if let Error::Validation { path, .. } = e {
                err["path"] = json!(path);
            }
            body["error"] = err;
        }
        serde_json::to_string_pretty(&body).expect("json serializes")
    }
}

/// Builds the path and runs the requested methods; a discrepancy above `tolerance`
/// yields a `Disagreement` error alongside the report.
pub fn execute(spec: &RunSpec, tolerance: f64) -> RunOutcome {
    let run = || -> Result<SpectralFlowReport> {
        let alg = spec.backend.build().map_err(|e| Error::validation("backend", e.to_string()))?;
        let path = spec.path.build(&alg)?;
        let methods = spec.methods()?;
        compute(&path, &methods, &spec.method_params, &spec.quadrature)
    };
    match run() {
        Ok(report) => {
            let max = report.max_discrepancy();
            let error = (max > tolerance).then_some(Error::Disagreement { max, tolerance });
            RunOutcome {
                report: Some(report),
                error,
            }
        }
        Err(e) => RunOutcome {
            report: None,
            error: Some(e),
        },
    }
}

pub fn run_json(text: &str, tolerance: Option<f64>) -> RunOutcome {
    match RunSpec::from_json(text) {
        Ok(spec) => {
            let tol = tolerance.unwrap_or(spec.output.tolerance);
            execute(&spec, tol)
        }
        Err(e) => RunOutcome {
            report: None,
            error: Some(e),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCALAR: &str = r#"{
        "backend": {"kind": "blocks", "blocks": [[1, 1.0]]},
        "path": {"family": "scalar_affine", "a": -1.0, "b": 1.0},
        "methods": "all"
    }"#;

    #[test]
    fn scalar_all_methods() {
        let out = run_json(SCALAR, None);
        assert_eq!(out.exit_code(), 0, "{}", out.to_json());
        let r = out.report.unwrap();
        assert_eq!(r.values.len(), 6);
        for v in r.values.values() {
            assert!((v - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn singular_endpoint_exit_code() {
        let text = SCALAR.replace("\"a\": -1.0", "\"a\": 0.0");
        let out = run_json(&text, None);
        assert_eq!(out.exit_code(), 3);
        assert_eq!(out.error.unwrap().reason(), "endpoint_not_invertible");
    }

    #[test]
    fn regularized_singular_endpoint() {
        let text = SCALAR
            .replace("\"a\": -1.0", "\"a\": 0.0")
            .replace("\"methods\": \"all\"", "\"methods\": [\"winding\", \"analytic\"], \"method_params\": {\"regularization\": {\"eps\": 0.5}}");
        let out = run_json(&text, None);
        assert_eq!(out.exit_code(), 0, "{}", out.to_json());
        assert!(out.report.unwrap().values.values().all(|v| v.abs() < 1e-8));
    }

    #[test]
    fn unknown_family_is_validation_error() {
        let text = SCALAR.replace("scalar_affine", "spiral");
        let out = run_json(&text, None);
        assert_eq!(out.exit_code(), 2);
        match out.error.unwrap() {
            Error::Validation { path, .. } => assert!(path.starts_with("path"), "{path}"),
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn unknown_key_reports_path() {
        let text = SCALAR.replace("\"kind\": \"blocks\"", "\"kind\": \"blocks\", \"colour\": 1");
        match RunSpec::from_json(&text) {
            Err(Error::Validation { path, .. }) => assert!(path.starts_with("backend"), "{path}"),
            other => panic!("{other:?}"),
        }
        let text = SCALAR.replace("\"methods\": \"all\"", "\"methods\": \"all\", \"extra\": {}");
        assert!(matches!(RunSpec::from_json(&text), Err(Error::Validation { .. })));
    }

    #[test]
    fn sampled_paths_are_checked() {
        let text = r#"{
            "backend": {"kind": "blocks", "blocks": [[2, 0.5]]},
            "path": {"family": "sampled", "samples": [
                {"t": 0.0, "value": {"diagonal": [-1.0, 1.0]}},
                {"t": 0.6, "value": {"blocks": [[[0.2, [0.1, 0.1]], [[0.1, -0.1], 1.0]]]}},
                {"t": 0.4, "value": {"diagonal": [1.0, 2.0]}}
            ]},
            "methods": ["analytic"]
        }"#;
        match run_json(text, None).error {
            Some(Error::Validation { path, .. }) => assert_eq!(path, "path.samples[2].t"),
            other => panic!("{other:?}"),
        }
        let ok = text.replace("\"t\": 0.4", "\"t\": 1.0");
        let out = run_json(&ok, None);
        assert_eq!(out.exit_code(), 0, "{}", out.to_json());
        assert_eq!(out.report.unwrap().values["analytic"], 0.5);
    }

    #[test]
    fn empty_method_list() {
        let text = SCALAR.replace("\"all\"", "[]");
        assert_eq!(run_json(&text, None).exit_code(), 2);
    }
}
