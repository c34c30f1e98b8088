//! Björling data: an analytic curve `β`, a unit normal field `V` along it,
//! validation against the ambient metric, and the initial spinor on `v = 0`.

mod builtin;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use builtin::{builtin_data, builtin_data_names};

use crate::expr::{parse_expr, ComplexDual, Expr, ExprError, Jet2};
use crate::models::{LieGroupModel, ModelError};
use crate::weierstrass::SpinorTriple;

/// Tolerance for `g(V,V) = 1` and `g(β̇,V) = 0`.
pub const DATA_TOL: f64 = 1e-10;
/// Tolerance for `|β̇|_g = 1` in [`geodesic_normal`].
pub const ARC_LENGTH_TOL: f64 = 1e-8;
const SPEED_FLOOR: f64 = 1e-12;
const ACCEL_FLOOR: f64 = 1e-8;
const PERIOD_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BjorlingError {
    #[error("component {component} of {what}: {source}")]
    Expr { what: &'static str, component: usize, source: ExprError },
    #[error("invalid Björling spec: {0}")]
    InvalidSpec(String),
    #[error("unknown Björling data set '{0}'")]
    Unknown(String),
    #[error("at u = {u}: {source}")]
    Model { u: f64, source: ModelError },
    #[error("curve is not parameterized by arc length: |β'|_g = {speed} at u = {u}")]
    NotArcLength { u: f64, speed: f64 },
    #[error("covariant acceleration vanishes at u = {u}; the curvature normal is undefined")]
    GeodesicPoint { u: f64 },
    #[error("Björling data violates its hypotheses: {}", summary(.0))]
    Invalid(Vec<Violation>),
    #[error("initial spinor is not conformal at u = {u}: |Σψ²| = {defect:e}")]
    InitialIdentity { u: f64, defect: f64 },
    #[error("{0} has no holomorphic extension")]
    NoComplexExtension(&'static str),
}

fn summary(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

/// One violated hypothesis with its worst witness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Error)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    #[error("curve leaves the chart at u = {u}")]
    OutsideChart { u: f64 },
    #[error("frame is singular along the curve at u = {u}")]
    SingularFrame { u: f64 },
    #[error("curve is not regular at u = {u} (|β'|_g = {speed:e})")]
    NotRegular { u: f64, speed: f64 },
    #[error("V is not unit at u = {u} (|g(V,V) - 1| = {defect:e})")]
    NotUnit { u: f64, defect: f64 },
    #[error("V is not orthogonal to β' at u = {u} (g(β',V) = {value:e})")]
    NotOrthogonal { u: f64, value: f64 },
    #[error("data is not periodic (mismatch {mismatch:e} between the ends)")]
    NotPeriodic { mismatch: f64 },
    #[error("expression cannot be evaluated at u = {u}: {message}")]
    Evaluation { u: f64, message: String },
}

fn parse3(texts: &[String], what: &'static str) -> Result<[Expr; 3], BjorlingError> {
    if texts.len() != 3 {
        return Err(BjorlingError::InvalidSpec(format!(
            "{what} needs 3 components, found {}",
            texts.len()
        )));
    }
    let mut out = Vec::with_capacity(3);
    for (component, t) in texts.iter().enumerate() {
        out.push(
            parse_expr(t, &["u"])
                .map_err(|source| BjorlingError::Expr { what, component, source })?,
        );
    }
    Ok(out.try_into().expect("three components"))
}

fn eval3(e: &[Expr; 3], u: f64, what: &'static str) -> Result<Vector3<f64>, BjorlingError> {
    let mut v = Vector3::zeros();
    for c in 0..3 {
        v[c] = e[c].eval(&[u]).map_err(|source| BjorlingError::Expr { what, component: c, source })?;
    }
    Ok(v)
}

/// `β(u)` with components given by expressions in `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticCurve {
    components: [Expr; 3],
    pub u_range: (f64, f64),
    pub periodic: bool,
}

/// `β(u)`, `β'(u)`, `β''(u)` in chart coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveJet {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub acceleration: Vector3<f64>,
}

impl AnalyticCurve {
    pub fn new(components: [Expr; 3], u_range: (f64, f64), periodic: bool) -> Result<Self, BjorlingError> {
        if !(u_range.0.is_finite() && u_range.1.is_finite() && u_range.0 < u_range.1) {
            return Err(BjorlingError::InvalidSpec(format!(
                "u_range [{}, {}] is empty",
                u_range.0, u_range.1
            )));
        }
        for (c, e) in components.iter().enumerate() {
            if let Some(bad) = e.free_variables().into_iter().find(|v| *v != "u") {
                return Err(BjorlingError::InvalidSpec(format!(
                    "component {c} uses variable '{bad}'; curves depend on u only"
                )));
            }
        }
        Ok(AnalyticCurve { components, u_range, periodic })
    }

    pub fn parse(texts: &[String], u_range: (f64, f64), periodic: bool) -> Result<Self, BjorlingError> {
        Self::new(parse3(texts, "beta")?, u_range, periodic)
    }

    pub fn components(&self) -> &[Expr; 3] {
        &self.components
    }

    pub fn position(&self, u: f64) -> Result<Vector3<f64>, BjorlingError> {
        eval3(&self.components, u, "beta")
    }

    pub fn jet(&self, u: f64) -> Result<CurveJet, BjorlingError> {
        let mut j = CurveJet {
            position: Vector3::zeros(),
            velocity: Vector3::zeros(),
            acceleration: Vector3::zeros(),
        };
        for c in 0..3 {
            let t = self.components[c]
                .eval_with(&[Jet2::variable(u)])
                .map_err(|source| BjorlingError::Expr { what: "beta", component: c, source })?;
            j.position[c] = t.value;
            j.velocity[c] = t.d1;
            j.acceleration[c] = t.d2;
        }
        Ok(j)
    }

    /// Holomorphic extension `β(z)` and `β'(z)`.
    pub fn complex_jet(&self, z: Complex64) -> Result<([Complex64; 3], [Complex64; 3]), BjorlingError> {
        let mut val = [Complex64::new(0.0, 0.0); 3];
        let mut der = val;
        for c in 0..3 {
            let d = self.components[c]
                .eval_with(&[ComplexDual::variable(z)])
                .map_err(|source| BjorlingError::Expr { what: "beta", component: c, source })?;
            val[c] = d.value;
            der[c] = d.deriv;
        }
        Ok((val, der))
    }

    /// `n` sample parameters covering the interval (the right end is
    /// omitted for periodic curves).
    pub fn samples(&self, n: usize) -> Vec<f64> {
        let (a, b) = self.u_range;
        let n = n.max(2);
        if self.periodic {
            (0..n).map(|k| a + (b - a) * k as f64 / n as f64).collect()
        } else {
            (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
        }
    }
}

/// The prescribed normal `V` along the curve.
#[derive(Debug, Clone, PartialEq)]
pub enum NormalField {
    Expressions([Expr; 3]),
    /// `∇_{β'}β' / |∇_{β'}β'|_g`, evaluated on demand.
    CurvatureNormal,
}

impl NormalField {
    pub fn parse(texts: &[String]) -> Result<Self, BjorlingError> {
        Ok(NormalField::Expressions(parse3(texts, "V")?))
    }

    pub fn at(&self, curve: &AnalyticCurve, model: &LieGroupModel, u: f64) -> Result<Vector3<f64>, BjorlingError> {
        match self {
            NormalField::Expressions(e) => eval3(e, u, "V"),
            NormalField::CurvatureNormal => {
                let (acc, g) = covariant_acceleration(curve, model, u)?;
                let norm = acc.dot(&(g * acc)).sqrt();
                if !(norm > ACCEL_FLOOR) {
                    return Err(BjorlingError::GeodesicPoint { u });
                }
                Ok(acc / norm)
            }
        }
    }

    /// Holomorphic extension `V(z)`.
    pub fn complex_at(&self, z: Complex64) -> Result<[Complex64; 3], BjorlingError> {
        match self {
            NormalField::Expressions(e) => {
                let mut out = [Complex64::new(0.0, 0.0); 3];
                for c in 0..3 {
                    out[c] = e[c]
                        .eval_with(&[z])
                        .map_err(|source| BjorlingError::Expr { what: "V", component: c, source })?;
                }
                Ok(out)
            }
            NormalField::CurvatureNormal => Err(BjorlingError::NoComplexExtension("curvature normal")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BjorlingData {
    pub name: String,
    pub curve: AnalyticCurve,
    pub normal: NormalField,
}

/// On-disk form: `{beta: [..], V: [..] | "curvature-normal", u_range: [a, b], periodic}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BjorlingSpec {
    #[serde(default)]
    pub name: Option<String>,
    pub beta: Vec<String>,
    #[serde(rename = "V")]
    pub normal: NormalSpec,
    pub u_range: [f64; 2],
    #[serde(default)]
    pub periodic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NormalSpec {
    Expressions(Vec<String>),
    Keyword(String),
}

impl BjorlingData {
    pub fn from_spec(spec: &BjorlingSpec) -> Result<Self, BjorlingError> {
        let curve = AnalyticCurve::parse(&spec.beta, (spec.u_range[0], spec.u_range[1]), spec.periodic)?;
        let normal = match &spec.normal {
            NormalSpec::Expressions(v) => NormalField::parse(v)?,
            NormalSpec::Keyword(k) if k == "curvature-normal" => NormalField::CurvatureNormal,
            NormalSpec::Keyword(k) => {
                return Err(BjorlingError::InvalidSpec(format!(
                    "V must be 3 expressions or \"curvature-normal\", got \"{k}\""
                )))
            }
        };
        Ok(BjorlingData {
            name: spec.name.clone().unwrap_or_else(|| "custom".into()),
            curve,
            normal,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, BjorlingError> {
        let spec: BjorlingSpec =
            serde_json::from_str(text).map_err(|e| BjorlingError::InvalidSpec(e.to_string()))?;
        Self::from_spec(&spec)
    }
}

fn model_err(u: f64) -> impl Fn(ModelError) -> BjorlingError {
    move |source| BjorlingError::Model { u, source }
}

/// `∇_{β'}β' = β'' + Γ(β)(β', β')` and the metric at `β(u)`.
pub fn covariant_acceleration(
    curve: &AnalyticCurve,
    model: &LieGroupModel,
    u: f64,
) -> Result<(Vector3<f64>, Matrix3<f64>), BjorlingError> {
    let j = curve.jet(u)?;
    let x = [j.position.x, j.position.y, j.position.z];
    let gamma = model.christoffel_at(&x).map_err(model_err(u))?;
    let g = model.metric_at(&x).map_err(model_err(u))?;
    Ok((j.acceleration + gamma.contract(&j.velocity, &j.velocity), g))
}

/// Worst-case quantities over the sampled curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub samples: usize,
    pub max_unit_defect: f64,
    pub max_orthogonality: f64,
    pub min_speed: f64,
    pub max_speed: f64,
}

/// Checks the Björling hypotheses at `n_samples` parameters with the model
/// metric at `β(u)`. Each violated hypothesis is reported once, at its
/// worst sample.
pub fn validate(
    data: &BjorlingData,
    model: &LieGroupModel,
    n_samples: usize,
) -> Result<Certificate, Vec<Violation>> {
    let mut cert = Certificate {
        samples: 0,
        max_unit_defect: 0.0,
        max_orthogonality: 0.0,
        min_speed: f64::INFINITY,
        max_speed: 0.0,
    };
    let mut worst: Vec<(f64, Violation)> = Vec::new();
    let mut record = |score: f64, v: Violation| {
        let same = worst.iter_mut().find(|(_, w)| std::mem::discriminant(w) == std::mem::discriminant(&v));
        match same {
            Some(slot) if slot.0 >= score => {}
            Some(slot) => *slot = (score, v),
            None => worst.push((score, v)),
        }
    };
    for u in data.curve.samples(n_samples) {
        cert.samples += 1;
        let eval_err = |e: BjorlingError| Violation::Evaluation { u, message: e.to_string() };
        let jet = match data.curve.jet(u).map_err(eval_err) {
            Ok(j) => j,
            Err(v) => {
                record(0.0, v);
                continue;
            }
        };
        let x = [jet.position.x, jet.position.y, jet.position.z];
        if !model.in_chart(&x) {
            record(0.0, Violation::OutsideChart { u });
            continue;
        }
        let g = match model.metric_at(&x) {
            Ok(g) => g,
            Err(_) => {
                record(0.0, Violation::SingularFrame { u });
                continue;
            }
        };
        let speed = jet.velocity.dot(&(g * jet.velocity)).sqrt();
        cert.min_speed = cert.min_speed.min(speed);
        cert.max_speed = cert.max_speed.max(speed);
        if !(speed > SPEED_FLOOR) {
            record(-speed, Violation::NotRegular { u, speed });
        }
        let v = match data.normal.at(&data.curve, model, u).map_err(eval_err) {
            Ok(v) => v,
            Err(e) => {
                record(0.0, e);
                continue;
            }
        };
        let unit = (v.dot(&(g * v)) - 1.0).abs();
        let ortho = jet.velocity.dot(&(g * v));
        cert.max_unit_defect = cert.max_unit_defect.max(unit);
        cert.max_orthogonality = cert.max_orthogonality.max(ortho.abs());
        if !(unit <= DATA_TOL) {
            record(unit, Violation::NotUnit { u, defect: unit });
        }
        if !(ortho.abs() <= DATA_TOL) {
            record(ortho.abs(), Violation::NotOrthogonal { u, value: ortho });
        }
    }
    if data.curve.periodic {
        let (a, b) = data.curve.u_range;
        let ends = data
            .curve
            .position(a)
            .and_then(|pa| Ok((pa, data.curve.position(b)?)))
            .and_then(|(pa, pb)| {
                let va = data.normal.at(&data.curve, model, a)?;
                let vb = data.normal.at(&data.curve, model, b)?;
                Ok((pa - pb).norm().max((va - vb).norm()))
            });
        if let Ok(m) = ends {
            if m > PERIOD_TOL {
                record(m, Violation::NotPeriodic { mismatch: m });
            }
        }
    }
    if worst.is_empty() {
        Ok(cert)
    } else {
        Err(worst.into_iter().map(|(_, v)| v).collect())
    }
}

/// The curvature normal `V = β̈/|β̈|_g` with `β̈ = ∇_{β'}β'`, for a curve
/// parameterized by arc length.
pub fn geodesic_normal(
    curve: &AnalyticCurve,
    model: &LieGroupModel,
    n_samples: usize,
) -> Result<NormalField, BjorlingError> {
    for u in curve.samples(n_samples) {
        let j = curve.jet(u)?;
        let x = [j.position.x, j.position.y, j.position.z];
        let g = model.metric_at(&x).map_err(model_err(u))?;
        let speed = j.velocity.dot(&(g * j.velocity)).sqrt();
        if !((speed - 1.0).abs() <= ARC_LENGTH_TOL) {
            return Err(BjorlingError::NotArcLength { u, speed });
        }
        NormalField::CurvatureNormal.at(curve, model, u)?;
    }
    Ok(NormalField::CurvatureNormal)
}

/// `ψ(u,0) = ½(b + i s (b × w))` with `b = A⁻¹β'`, `w = A⁻¹V` and `s` the
/// model orientation sign, negated when `flip_normal` is set.
pub fn initial_spinor(
    data: &BjorlingData,
    model: &LieGroupModel,
    u: f64,
    flip_normal: bool,
) -> Result<SpinorTriple, BjorlingError> {
    let j = data.curve.jet(u)?;
    let x = [j.position.x, j.position.y, j.position.z];
    let inv = model.frame_inverse_at(&x).map_err(model_err(u))?;
    let v = data.normal.at(&data.curve, model, u)?;
    let b = inv * j.velocity;
    let w = inv * v;
    let s = model.orientation_sign() * if flip_normal { -1.0 } else { 1.0 };
    let c = b.cross(&w) * s;
    let psi = SpinorTriple(std::array::from_fn(|k| Complex64::new(0.5 * b[k], 0.5 * c[k])));
    // |Σψ²| = ¼|(|b|²(1 - |w|²) + (b·w)²)|, so it is tiny for valid data
    let defect = psi.square_sum().norm();
    if !(defect <= 1e-8 * psi.norm_sqr().max(f64::MIN_POSITIVE)) {
        return Err(BjorlingError::InitialIdentity { u, defect });
    }
    Ok(psi)
}

/// Initial spinors at the u-nodes of a grid.
pub fn initial_line(
    data: &BjorlingData,
    model: &LieGroupModel,
    u_nodes: impl IntoIterator<Item = f64>,
    flip_normal: bool,
) -> Result<Vec<SpinorTriple>, BjorlingError> {
    u_nodes.into_iter().map(|u| initial_spinor(data, model, u, flip_normal)).collect()
}
