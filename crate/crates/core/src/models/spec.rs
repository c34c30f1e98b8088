use std::collections::BTreeMap;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use super::{
    check_structure, connection_from_structure, validate_frame, ChartInterval, LieGroupModel,
    ModelError, StructureConstants,
};
use crate::expr::{parse_expr, Expr};

const MATCH_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChartSpec {
    /// `"positive"`, `"negative"` or `"free"`.
    Keyword(String),
    /// `[min, max]`; `null` for an unbounded side.
    Range([Option<f64>; 2]),
}

impl ChartSpec {
    fn interval(&self) -> Result<ChartInterval, ModelError> {
        match self {
            ChartSpec::Keyword(k) => match k.as_str() {
                "positive" => Ok(ChartInterval::POSITIVE),
                "negative" => Ok(ChartInterval { min: None, max: Some(0.0) }),
                "free" => Ok(ChartInterval::FREE),
                other => Err(ModelError::InvalidSpec(format!("unknown chart keyword '{other}'"))),
            },
            ChartSpec::Range([a, b]) => {
                if let (Some(a), Some(b)) = (a, b) {
                    if a >= b {
                        return Err(ModelError::InvalidSpec(format!(
                            "empty chart interval [{a}, {b}]"
                        )));
                    }
                }
                Ok(ChartInterval { min: *a, max: *b })
            }
        }
    }
}

/// Frame entries `A_{ij}` either as three rows of three or as nine entries
/// in row-major order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FrameSpec {
    Flat(Vec<String>),
    Nested(Vec<Vec<String>>),
}

impl FrameSpec {
    fn entries(&self) -> Result<Vec<&str>, ModelError> {
        let flat: Vec<&str> = match self {
            FrameSpec::Flat(v) => v.iter().map(String::as_str).collect(),
            FrameSpec::Nested(rows) => {
                let ok = (rows.len() == 3 && rows.iter().all(|r| r.len() == 3))
                    || (rows.len() == 1 && rows[0].len() == 9);
                if !ok {
                    return Err(ModelError::InvalidSpec(
                        "frame must be 3 rows of 3 entries or 9 entries".into(),
                    ));
                }
                rows.iter().flatten().map(String::as_str).collect()
            }
        };
        if flat.len() != 9 {
            return Err(ModelError::InvalidSpec(format!(
                "frame needs 9 entries, found {}",
                flat.len()
            )));
        }
        Ok(flat)
    }
}

/// On-disk description of a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpecFile {
    pub name: String,
    #[serde(default = "default_variables")]
    pub variables: Vec<String>,
    #[serde(default)]
    pub chart: BTreeMap<String, ChartSpec>,
    pub frame: FrameSpec,
    /// Entries `[l, j, k, value]` (1-based) meaning `[E_j, E_k] ∋ value·E_l`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structure_constants: Option<Vec<(usize, usize, usize, f64)>>,
    /// Validation box per variable; defaults to a box inside the chart.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub sample_box: BTreeMap<String, [f64; 2]>,
}

fn default_variables() -> Vec<String> {
    vec!["x1".into(), "x2".into(), "x3".into()]
}

pub fn load_model(spec: &ModelSpecFile) -> Result<LieGroupModel, ModelError> {
    if spec.variables.len() != 3 {
        return Err(ModelError::InvalidSpec(format!(
            "expected 3 variables, found {}",
            spec.variables.len()
        )));
    }
    let vars: [String; 3] = std::array::from_fn(|i| spec.variables[i].clone());
    if vars[0] == vars[1] || vars[1] == vars[2] || vars[0] == vars[2] {
        return Err(ModelError::InvalidSpec("variable names must be distinct".into()));
    }
    for key in spec.chart.keys().chain(spec.sample_box.keys()) {
        if !vars.contains(key) {
            return Err(ModelError::InvalidSpec(format!("'{key}' is not a model variable")));
        }
    }
    let chart: [ChartInterval; 3] = {
        let mut out = [ChartInterval::FREE; 3];
        for (d, v) in vars.iter().enumerate() {
            if let Some(c) = spec.chart.get(v) {
                out[d] = c.interval()?;
            }
        }
        out
    };
    let sample_box: [(f64, f64); 3] = std::array::from_fn(|d| {
        spec.sample_box.get(&vars[d]).map_or_else(|| chart[d].default_box(), |b| (b[0], b[1]))
    });
    for (d, (lo, hi)) in sample_box.iter().enumerate() {
        if !(lo <= hi) || !chart[d].contains(*lo) || !chart[d].contains(*hi) {
            return Err(ModelError::InvalidSpec(format!(
                "sample box for '{}' must lie inside the chart",
                vars[d]
            )));
        }
    }

    let entries = spec.frame.entries()?;
    let parsed: Vec<Expr> =
        entries.iter().map(|t| parse_expr(t, &vars)).collect::<Result<_, _>>()?;
    let frame: [[Expr; 3]; 3] =
        std::array::from_fn(|r| std::array::from_fn(|c| parsed[3 * r + c].clone()));
    let constant_frame = if parsed.iter().all(|e| e.free_variables().is_empty()) {
        let mut a = Matrix3::zeros();
        for r in 0..3 {
            for c in 0..3 {
                a[(r, c)] = frame[r][c].eval(&[0.0; 3])?;
            }
        }
        Some(a)
    } else {
        None
    };

    let mut model = LieGroupModel {
        name: spec.name.clone(),
        variables: vars,
        chart,
        sample_box,
        frame,
        structure: StructureConstants::zero(),
        connection: Default::default(),
        orientation_sign: 1.0,
        constant_frame,
    };
    let (sign, from_frame) = validate_frame(&model)?;
    let structure = match &spec.structure_constants {
        Some(list) => {
            let mut c = StructureConstants::zero();
            for &(l, j, k, value) in list {
                if !(1..=3).contains(&l) || !(1..=3).contains(&j) || !(1..=3).contains(&k) {
                    return Err(ModelError::InvalidSpec(format!(
                        "structure constant index ({l},{j},{k}) outside 1..3"
                    )));
                }
                if j == k {
                    return Err(ModelError::InvalidSpec(format!(
                        "structure constant [{j},{k}] has equal lower indices"
                    )));
                }
                c.set_bracket(l - 1, j - 1, k - 1, value);
            }
            let deviation = c.max_abs_diff(&from_frame);
            if deviation > MATCH_TOL {
                return Err(ModelError::StructureMismatch { deviation });
            }
            c
        }
        None => clean_structure(from_frame),
    };
    check_structure(&structure)?;
    model.structure = structure;
    model.connection = connection_from_structure(&structure);
    model.orientation_sign = sign;
    Ok(model)
}

/// Snap AD-derived constants that are integers or zero up to rounding.
fn clean_structure(mut c: StructureConstants) -> StructureConstants {
    for l in 0..3 {
        for j in 0..3 {
            for k in (j + 1)..3 {
                let v = c.0[l][j][k];
                let r = v.round();
                let snapped = if (v - r).abs() < 1e-13 { r } else { v };
                c.set_bracket(l, j, k, snapped);
            }
            c.0[l][j][j] = 0.0;
        }
    }
    c
}

fn spec_of(name: &str, chart: &[(&str, ChartSpec)], frame: [[&str; 3]; 3]) -> ModelSpecFile {
    ModelSpecFile {
        name: name.into(),
        variables: default_variables(),
        chart: chart.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
        frame: FrameSpec::Nested(
            frame.iter().map(|r| r.iter().map(|s| s.to_string()).collect()).collect(),
        ),
        structure_constants: None,
        sample_box: BTreeMap::new(),
    }
}

const BUILTINS: [&str; 4] = ["euclidean", "heisenberg", "h3", "h2xr"];

pub fn builtin_names() -> &'static [&'static str] {
    &BUILTINS
}

/// Spec of a built-in model, if `name` is one.
pub fn builtin_spec(name: &str) -> Option<ModelSpecFile> {
    let positive = || ChartSpec::Keyword("positive".into());
    Some(match name {
        "euclidean" => spec_of(name, &[], [["1", "0", "0"], ["0", "1", "0"], ["0", "0", "1"]]),
        // E1 = ∂1 - x2/2 ∂3, E2 = ∂2 + x1/2 ∂3, E3 = ∂3
        "heisenberg" => {
            spec_of(name, &[], [["1", "0", "0"], ["0", "1", "0"], ["-x2/2", "x1/2", "1"]])
        }
        // upper half-space, E_i = x3 ∂_i
        "h3" => spec_of(
            name,
            &[("x3", positive())],
            [["x3", "0", "0"], ["0", "x3", "0"], ["0", "0", "x3"]],
        ),
        // E1 = x2 ∂1, E2 = x2 ∂2, E3 = ∂3 on x2 > 0
        "h2xr" => spec_of(
            name,
            &[("x2", positive())],
            [["x2", "0", "0"], ["0", "x2", "0"], ["0", "0", "1"]],
        ),
        _ => return None,
    })
}

pub fn builtin(name: &str) -> Result<LieGroupModel, ModelError> {
    let spec = builtin_spec(name).ok_or_else(|| ModelError::Unknown(name.to_string()))?;
    load_model(&spec)
}
