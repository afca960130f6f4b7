//! Problem files: JSON descriptions of an operator (or first-order system),
//! its interval, initial vector, data points and optional oracle.

use crate::oracle::{Oracle, OracleSpec};
use hgm_core::expr::Expr;
use hgm_core::operator::{companion_system, gauge_transform, DataPoint, FirstOrderSystem, ScalarOperator};
use hgm_core::Real;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeMap;
use std::path::Path;

/// Errors detected while reading or binding a problem file (exit code 2).
#[derive(Debug, thiserror::Error)]
pub enum ProblemError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed problem JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{context}: {source}")]
    Parse { context: String, source: hgm_core::Error },
    #[error("invalid number {0}")]
    Number(String),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rhs: Option<String>,
    #[serde(default)]
    pub params: BTreeMap<String, Value>,
    pub interval: [Value; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gauge: Option<GaugeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialSpec>,
    #[serde(default)]
    pub data: Vec<DataSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSpec>,
}

/// Explicit `F' = P F + B` given row-major by entry expressions.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub dim: usize,
    pub entries: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rhs: Option<Vec<String>>,
    #[serde(default)]
    pub singular_points: Vec<Value>,
}

/// `F = exp(α t) t^β G`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaugeSpec {
    pub alpha: Value,
    pub beta: Value,
}

/// Initial state at the left end: explicit numbers, or `"oracle"`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialSpec {
    Values(Vec<Value>),
    Keyword(String),
}

/// Data point; a missing `q` is filled in from the oracle.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSpec {
    pub p: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Value>,
    #[serde(default)]
    pub deriv_order: usize,
}

impl ProblemFile {
    pub fn from_json(text: &str) -> Result<Self, ProblemError> {
        let file: ProblemFile = serde_json::from_str(text)?;
        if file.operator.is_some() == file.system.is_some() {
            return Err(ProblemError::Invalid("exactly one of \"operator\" and \"system\" must be given".into()));
        }
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self, ProblemError> {
        let text = std::fs::read_to_string(path).map_err(|source| ProblemError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    /// Bind all numbers at precision `R`.
    pub fn bind<R: Real>(&self) -> Result<Problem<R>, ProblemError> {
        let params = self.params.iter().map(|(k, v)| Ok((k.clone(), number::<R>(v)?))).collect::<Result<BTreeMap<_, _>, ProblemError>>()?;
        let interval = (number::<R>(&self.interval[0])?, number::<R>(&self.interval[1])?);
        if !(interval.1 > interval.0) {
            return Err(ProblemError::Invalid("interval must satisfy a < b".into()));
        }
        let operator = match &self.operator {
            Some(text) => Some(
                ScalarOperator::parse(text, self.rhs.as_deref(), &params).map_err(|source| ProblemError::Parse { context: "operator".into(), source })?,
            ),
            None => None,
        };
        let base = match (&operator, &self.system) {
            (Some(op), _) => companion_system(op),
            (None, Some(spec)) => {
                let parse = |s: &String| Expr::parse(s, &params).map_err(|source| ProblemError::Parse { context: format!("system entry {s:?}"), source });
                let entries = spec.entries.iter().map(parse).collect::<Result<Vec<_>, _>>()?;
                let rhs = spec.rhs.as_ref().map(|v| v.iter().map(parse).collect::<Result<Vec<_>, _>>()).transpose()?;
                let points = spec.singular_points.iter().map(number::<R>).collect::<Result<Vec<_>, _>>()?;
                FirstOrderSystem::from_entries(spec.dim, entries, rhs)
                    .map_err(|source| ProblemError::Parse { context: "system".into(), source })?
                    .with_singular_points(points)
            }
            (None, None) => unreachable!("checked in from_json"),
        };
        let gauge = match &self.gauge {
            Some(g) => Some((number::<R>(&g.alpha)?, number::<R>(&g.beta)?)),
            None => None,
        };
        let system = match gauge {
            Some((a, b)) => gauge_transform(&base, a, b),
            None => base,
        };
        let oracle = self.oracle.as_ref().map(|o| o.bind::<R>()).transpose()?;
        let mut problem = Problem { params, operator, system, interval, gauge, initial: None, data: Vec::new(), oracle };
        problem.initial = match &self.initial {
            None => None,
            Some(InitialSpec::Values(v)) => Some(v.iter().map(number::<R>).collect::<Result<Vec<_>, _>>()?),
            Some(InitialSpec::Keyword(k)) if k == "oracle" => Some(problem.state_reference(interval.0).map_err(|source| ProblemError::Parse { context: "initial vector from oracle".into(), source })?),
            Some(InitialSpec::Keyword(k)) => return Err(ProblemError::Invalid(format!("unknown initial keyword {k:?}"))),
        };
        if let Some(init) = &problem.initial {
            if init.len() != problem.system.dim() {
                return Err(ProblemError::Invalid(format!("initial vector has {} entries, system dimension is {}", init.len(), problem.system.dim())));
            }
        }
        for d in &self.data {
            let p = number::<R>(&d.p)?;
            let q = match &d.q {
                Some(q) => number::<R>(q)?,
                None => {
                    let oracle = problem.oracle.as_ref().ok_or_else(|| ProblemError::Invalid("data point without q needs an oracle".into()))?;
                    oracle.derivatives(p, d.deriv_order).map_err(|source| ProblemError::Parse { context: "data value from oracle".into(), source })?[d.deriv_order]
                }
            };
            problem.data.push(DataPoint::derivative(p, q, d.deriv_order));
        }
        Ok(problem)
    }
}

/// Parse a JSON number or a string holding a decimal or `p/q` rational.
pub fn number<R: Real>(v: &Value) -> Result<R, ProblemError> {
    let text = match v {
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.clone(),
        other => return Err(ProblemError::Number(other.to_string())),
    };
    R::parse_literal(&text).ok_or(ProblemError::Number(text))
}

/// A problem file with every number bound at precision `R`.
#[derive(Clone, Debug)]
pub struct Problem<R> {
    /// Named parameters from the file, available to basis expressions.
    pub params: BTreeMap<String, R>,
    pub operator: Option<ScalarOperator<R>>,
    /// Companion (or explicit) system, gauged when a gauge is given.
    pub system: FirstOrderSystem<R>,
    pub interval: (R, R),
    pub gauge: Option<(R, R)>,
    pub initial: Option<Vec<R>>,
    pub data: Vec<DataPoint<R>>,
    pub oracle: Option<Oracle<R>>,
}

impl<R: Real> Problem<R> {
    /// `exp(−α t) t^(−β)`, the factor taking `F` to the gauged state.
    pub fn inverse_gauge(&self, t: R) -> R {
        match self.gauge {
            Some((a, b)) => (-a * t).exp() * t.abs().powf(-b),
            None => R::one(),
        }
    }

    /// Reference state of the (possibly gauged) system at `t`.
    pub fn state_reference(&self, t: R) -> hgm_core::Result<Vec<R>> {
        let oracle = self.oracle.as_ref().ok_or_else(|| hgm_core::Error::InvalidArgument("problem has no oracle".into()))?;
        let dim = self.system.dim();
        let d = oracle.derivatives(t, dim - 1)?;
        let g = self.inverse_gauge(t);
        Ok(d.into_iter().map(|v| v * g).collect())
    }

    /// Reference value of the first state component at `t`.
    pub fn reference(&self, t: R) -> hgm_core::Result<R> {
        let oracle = self.oracle.as_ref().ok_or_else(|| hgm_core::Error::InvalidArgument("problem has no oracle".into()))?;
        Ok(oracle.derivatives(t, 0)?[0] * self.inverse_gauge(t))
    }

    pub fn require_operator(&self) -> Result<&ScalarOperator<R>, ProblemError> {
        self.operator.as_ref().ok_or_else(|| ProblemError::Invalid("this command needs a scalar \"operator\"".into()))
    }

    pub fn require_initial(&self) -> Result<&[R], ProblemError> {
        self.initial.as_deref().ok_or_else(|| ProblemError::Invalid("this command needs an \"initial\" vector".into()))
    }
}

/// Problem files shipped with the crate, by stem.
pub const BUNDLED: &[(&str, &str)] = &[
    ("easy", include_str!("../problems/easy.json")),
    ("airy", include_str!("../problems/airy.json")),
    ("airy_from_minus20", include_str!("../problems/airy_from_minus20.json")),
    ("airy_bvp", include_str!("../problems/airy_bvp.json")),
    ("airy_ivp_spectral", include_str!("../problems/airy_ivp_spectral.json")),
    ("exp_airy_a", include_str!("../problems/exp_airy_a.json")),
    ("exp_airy_b", include_str!("../problems/exp_airy_b.json")),
    ("hkn_20_60", include_str!("../problems/hkn_20_60.json")),
    ("hkn_10000", include_str!("../problems/hkn_10000.json")),
    ("hkn_gauged", include_str!("../problems/hkn_gauged.json")),
];

pub fn bundled(name: &str) -> Result<ProblemFile, ProblemError> {
    let text = BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, t)| *t).ok_or_else(|| ProblemError::Invalid(format!("no bundled problem {name:?}")))?;
    ProblemFile::from_json(text)
}
