use serde::{Deserialize, Serialize};

use super::{bjorling_residuals, gauss_map, induced_metric_residuals, mean_curvature_field, GaussMap, VerifyError};
use crate::bjorling::BjorlingData;
use crate::ck_solver::{constraint_drift, StripGrid};
use crate::models::LieGroupModel;
use crate::stencil::StencilOrder;
use crate::surface::{integrability_residual, SurfacePatch};
use crate::weierstrass::{
    coordinate_holomorphicity_residual, frame_holomorphicity_residual, regularity_margin, RegularityMargin,
    ResidualStat, SpinorField,
};

/// Pass thresholds, all on max-norms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub boundary_position: f64,
    pub boundary_normal: f64,
    pub conformality: f64,
    pub mean_curvature: f64,
    pub holomorphicity: f64,
    pub constraint_drift: f64,
    pub integrability: f64,
    /// `Σ|ψ|²` below this is reported as a possible branch point (warning only).
    pub regularity: f64,
    /// Mean curvature is not evaluated when conformality is worse than this.
    pub conformal_gate: f64,
    /// Relative `|f_u ∧ f_v|` below which the Gauss map is undefined.
    pub degenerate_normal: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            boundary_position: 1e-10,
            boundary_normal: 1e-6,
            conformality: 1e-5,
            mean_curvature: 1e-4,
            holomorphicity: 1e-4,
            constraint_drift: 1e-8,
            integrability: 1e-4,
            regularity: 1e-10,
            conformal_gate: 1e-3,
            degenerate_normal: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conformality {
    pub e_minus_g: ResidualStat,
    pub f: ResidualStat,
    pub mean_e: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Boundary {
    pub position: ResidualStat,
    pub normal: ResidualStat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Holomorphicity {
    pub frame: Vec<ResidualStat>,
    pub coordinate: Vec<ResidualStat>,
    /// max coordinate residual / max frame residual
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub conformality: Conformality,
    pub boundary: Boundary,
    pub mean_curvature: Option<ResidualStat>,
    pub holomorphicity: Holomorphicity,
    pub constraint_drift: ResidualStat,
    pub integrability: ResidualStat,
    pub regularity: RegularityMargin,
    pub degenerate_normals: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// `None` when the quantity could not be evaluated.
    pub value: Option<f64>,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    fn new(name: &str, value: Option<f64>, threshold: f64) -> Self {
        let value = value.filter(|v| !v.is_nan());
        Check { name: name.into(), pass: value.is_some_and(|v| v <= threshold), value, threshold }
    }
}

/// How far the pipeline got.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Config,
    InitialData,
    Solve,
    Reconstruct,
    Verify,
    Complete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub model: String,
    pub data: String,
    pub config_hash: String,
    pub stage: Stage,
    pub error: Option<String>,
    pub grid: Option<StripGrid>,
    pub total_nodes: usize,
    pub trusted_nodes: usize,
    pub residuals: Option<Residuals>,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
    pub pass: bool,
}

impl VerificationReport {
    pub fn new(model: &str, data: &str, config_hash: &str) -> Self {
        VerificationReport {
            model: model.into(),
            data: data.into(),
            config_hash: config_hash.into(),
            stage: Stage::Config,
            error: None,
            grid: None,
            total_nodes: 0,
            trusted_nodes: 0,
            residuals: None,
            checks: Vec::new(),
            warnings: Vec::new(),
            pass: false,
        }
    }

    /// Records an abort at `stage`.
    pub fn failed(mut self, stage: Stage, error: impl ToString) -> Self {
        self.stage = stage;
        self.error = Some(error.to_string());
        self.pass = false;
        self
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Everything `verify_solution` computes; the normals are kept for export.
#[derive(Debug, Clone)]
pub struct Verification {
    pub residuals: Residuals,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
    pub normals: GaussMap,
}

impl Verification {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn into_report(self, mut report: VerificationReport, patch: &SurfacePatch) -> (VerificationReport, GaussMap) {
        report.stage = Stage::Complete;
        report.grid = Some(patch.grid.clone());
        report.total_nodes = patch.grid.len();
        report.trusted_nodes = patch.trusted_count();
        report.pass = self.pass();
        report.residuals = Some(self.residuals);
        report.checks = self.checks;
        report.warnings.extend(self.warnings);
        (report, self.normals)
    }
}

fn max_of(stats: &[ResidualStat]) -> f64 {
    stats.iter().fold(0.0f64, |m, s| if s.max.is_nan() { f64::NAN } else { m.max(s.max) })
}

/// Runs the full check suite on a solved field and its reconstruction.
pub fn verify_solution(
    field: &SpinorField,
    patch: &SurfacePatch,
    data: &BjorlingData,
    model: &LieGroupModel,
    t: &Thresholds,
) -> Result<Verification, VerifyError> {
    let mut warnings = Vec::new();
    let normals = gauss_map(patch, model, t.degenerate_normal)?;
    let metric = induced_metric_residuals(patch, model)?;
    let (position, normal) = bjorling_residuals(patch, data, model, &normals)?;
    let mean_curvature = match mean_curvature_field(patch, model, &normals, t.conformal_gate) {
        Ok(h) => Some(h.stat),
        Err(e @ VerifyError::NonConformal { .. }) => {
            warnings.push(format!("mean curvature skipped: {e}"));
            None
        }
        Err(e) => return Err(e),
    };
    let frame = frame_holomorphicity_residual(field, model.connection(), StencilOrder::Fourth)?.to_vec();
    let coordinate = coordinate_holomorphicity_residual(patch, model, StencilOrder::Fourth)?.to_vec();
    let ratio = max_of(&coordinate) / max_of(&frame);
    let drift = constraint_drift(field);
    let integrability = integrability_residual(patch);
    let regularity = regularity_margin(field, t.regularity);
    if !regularity.is_regular() {
        warnings.push(format!(
            "{} nodes with |ψ|² <= {:e} (possible branch points), first at {:?}",
            regularity.flagged_nodes.len(),
            t.regularity,
            regularity.flagged_nodes[0]
        ));
    }
    let trusted_degenerate = normals
        .degenerate
        .iter()
        .filter(|[i, j]| patch.trusted[patch.grid.index(*i, *j)])
        .count();
    if trusted_degenerate > 0 {
        warnings.push(format!("{trusted_degenerate} trusted nodes with undefined normal"));
    }
    let checks = vec![
        Check::new("boundary_position", Some(position.max), t.boundary_position),
        Check::new("boundary_normal", Some(normal.max), t.boundary_normal),
        Check::new("conformality", Some(metric.e_minus_g.max.max(metric.f.max)), t.conformality),
        Check::new("mean_curvature", mean_curvature.as_ref().map(|h| h.max), t.mean_curvature),
        Check::new("holomorphicity", Some(max_of(&frame)), t.holomorphicity),
        Check::new("constraint_drift", Some(drift.max), t.constraint_drift),
        Check::new("integrability", Some(integrability.max), t.integrability),
    ];
    Ok(Verification {
        residuals: Residuals {
            conformality: Conformality { e_minus_g: metric.e_minus_g, f: metric.f, mean_e: metric.mean_e },
            boundary: Boundary { position, normal },
            mean_curvature,
            holomorphicity: Holomorphicity { frame, coordinate, ratio },
            constraint_drift: drift,
            integrability,
            regularity,
            degenerate_normals: trusted_degenerate,
        },
        checks,
        warnings,
        normals,
    })
}
