//! Geometric checks on a reconstructed patch: conformality of the induced
//! metric, Gauss map, the two Björling conditions, mean curvature, and a
//! closed-form Euclidean oracle.

mod oracle;
mod report;

use nalgebra::Vector3;
use rayon::prelude::*;
use thiserror::Error;

pub use oracle::euclidean_schwarz_oracle;
pub use report::{
    verify_solution, Boundary, Check, Conformality, Holomorphicity, Residuals, Stage, Thresholds,
    Verification, VerificationReport,
};

use crate::bjorling::{BjorlingData, BjorlingError};
use crate::models::{LieGroupModel, ModelError};
use crate::stencil::{first_derivative, second_derivative, StencilOrder};
use crate::surface::SurfacePatch;
use crate::weierstrass::{ResidualStat, WeierstrassError};

const ORDER: StencilOrder = StencilOrder::Fourth;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("model at node {node:?}: {source}")]
    Model { node: [usize; 2], source: ModelError },
    #[error("patch is not conformal (normalized residual {found:e} > {tol:e}); see induced_metric_residuals")]
    NonConformal { found: f64, tol: f64 },
    #[error("the Schwarz oracle needs the flat Euclidean model, got '{0}'")]
    NotEuclidean(String),
    #[error(transparent)]
    Data(#[from] BjorlingError),
    #[error(transparent)]
    Weierstrass(#[from] WeierstrassError),
    #[error("patch has no trusted nodes")]
    EmptyTrustedRegion,
}

fn at(p: &Vector3<f64>) -> [f64; 3] {
    [p.x, p.y, p.z]
}

fn model_at(node: (usize, usize)) -> impl Fn(ModelError) -> VerifyError {
    move |source| VerifyError::Model { node: [node.0, node.1], source }
}

/// Finite-difference partials at a node; `None` when any stencil node is
/// untrusted.
struct Partials {
    fu: Vector3<f64>,
    fv: Vector3<f64>,
    fuu: Vector3<f64>,
    fvv: Vector3<f64>,
}

fn partials(patch: &SurfacePatch, k: usize, second: bool) -> Option<Partials> {
    let g = &patch.grid;
    if !patch.trusted[k] {
        return None;
    }
    let (i, j) = g.node(k);
    let du = first_derivative(g.n_u, i, g.h_u(), ORDER, g.periodic);
    let dv = first_derivative(g.n_levels(), j, g.h_v(), ORDER, false);
    let (duu, dvv) = if second {
        (
            Some(second_derivative(g.n_u, i, g.h_u(), ORDER, g.periodic)),
            Some(second_derivative(g.n_levels(), j, g.h_v(), ORDER, false)),
        )
    } else {
        (None, None)
    };
    let row = |m: &usize| patch.trusted[g.index(*m, j)];
    let col = |m: &usize| patch.trusted[g.index(i, *m)];
    if !du.indices().iter().all(row)
        || !dv.indices().iter().all(col)
        || !duu.as_ref().map_or(true, |s| s.indices().iter().all(row))
        || !dvv.as_ref().map_or(true, |s| s.indices().iter().all(col))
    {
        return None;
    }
    let pu = |m: usize| patch.points[g.index(m, j)];
    let pv = |m: usize| patch.points[g.index(i, m)];
    Some(Partials {
        fu: du.apply(pu),
        fv: dv.apply(pv),
        fuu: duu.map_or(Vector3::zeros(), |s| s.apply(pu)),
        fvv: dvv.map_or(Vector3::zeros(), |s| s.apply(pv)),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricResiduals {
    /// `|E - G'|` over the mean of `E`.
    pub e_minus_g: ResidualStat,
    /// `|F|` over the mean of `E`.
    pub f: ResidualStat,
    pub mean_e: f64,
}

/// `E = g(f_u, f_u)`, `F = g(f_u, f_v)`, `G' = g(f_v, f_v)` from 4th-order
/// differences of the points, with `g` taken at `f(node)`.
pub fn induced_metric_residuals(
    patch: &SurfacePatch,
    model: &LieGroupModel,
) -> Result<MetricResiduals, VerifyError> {
    let g = &patch.grid;
    let raw: Vec<Option<(f64, f64, f64)>> = (0..g.len())
        .into_par_iter()
        .map(|k| {
            let Some(p) = partials(patch, k, false) else { return Ok(None) };
            let metric = model.metric_at(&at(&patch.points[k])).map_err(model_at(g.node(k)))?;
            let e = p.fu.dot(&(metric * p.fu));
            let f = p.fu.dot(&(metric * p.fv));
            let gg = p.fv.dot(&(metric * p.fv));
            Ok(Some((e, f, gg)))
        })
        .collect::<Result<_, VerifyError>>()?;
    let (sum, n) = raw.iter().flatten().fold((0.0, 0usize), |(s, n), r| (s + r.0, n + 1));
    if n == 0 {
        return Err(VerifyError::EmptyTrustedRegion);
    }
    let mean_e = sum / n as f64;
    let scale = if mean_e > 0.0 { 1.0 / mean_e } else { 1.0 };
    let emg: Vec<Option<f64>> = raw.iter().map(|r| r.map(|(e, _, gg)| (e - gg).abs() * scale)).collect();
    let ff: Vec<Option<f64>> = raw.iter().map(|r| r.map(|(_, f, _)| f.abs() * scale)).collect();
    Ok(MetricResiduals {
        e_minus_g: ResidualStat::from_nodes("conformality_e_minus_g", g, &emg),
        f: ResidualStat::from_nodes("conformality_f", g, &ff),
        mean_e,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussMap {
    /// `None` at degenerate nodes.
    pub normals: Vec<Option<Vector3<f64>>>,
    pub degenerate: Vec<[usize; 2]>,
}

impl GaussMap {
    /// Per-node normals for mesh export; degenerate nodes become NaN.
    pub fn dense(&self) -> Vec<Vector3<f64>> {
        self.normals.iter().map(|n| n.unwrap_or(Vector3::repeat(f64::NAN))).collect()
    }
}

/// `N = A n`, `n = s (a × b) / |a × b|` with `a = A⁻¹f_u`, `b = A⁻¹f_v` and `s`
/// the model orientation sign. Uses the tangents stored on the patch; a node
/// is degenerate when `|a × b| <= threshold · |a||b|`.
pub fn gauss_map(patch: &SurfacePatch, model: &LieGroupModel, threshold: f64) -> Result<GaussMap, VerifyError> {
    let g = &patch.grid;
    let s = model.orientation_sign();
    let normals: Vec<Option<Vector3<f64>>> = (0..g.len())
        .into_par_iter()
        .map(|k| {
            let x = at(&patch.points[k]);
            let frames = model.frame_at(&x).and_then(|a| Ok((a, model.frame_inverse_at(&x)?)));
            let (a_mat, inv) = match frames {
                Ok(f) => f,
                Err(_) if !patch.trusted[k] => return Ok(None),
                Err(e) => return Err(model_at(g.node(k))(e)),
            };
            let a = inv * patch.f_u[k];
            let b = inv * patch.f_v[k];
            let c = a.cross(&b);
            let norm = c.norm();
            if !(norm > threshold * a.norm() * b.norm()) {
                return Ok(None);
            }
            Ok(Some(a_mat * (c * (s / norm))))
        })
        .collect::<Result<_, VerifyError>>()?;
    let degenerate = normals
        .iter()
        .enumerate()
        .filter(|(_, n)| n.is_none())
        .map(|(k, _)| {
            let (i, j) = g.node(k);
            [i, j]
        })
        .collect();
    Ok(GaussMap { normals, degenerate })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanCurvature {
    pub values: Vec<Option<f64>>,
    pub stat: ResidualStat,
}

/// `H = g(f_uu + f_vv + Γ(f_u,f_u) + Γ(f_v,f_v), N) / (E + G')`, which is the
/// mean curvature of a conformal parameterization. Refuses patches whose
/// normalized conformality residual exceeds `conformal_tol`.
pub fn mean_curvature_field(
    patch: &SurfacePatch,
    model: &LieGroupModel,
    normals: &GaussMap,
    conformal_tol: f64,
) -> Result<MeanCurvature, VerifyError> {
    let m = induced_metric_residuals(patch, model)?;
    let worst = m.e_minus_g.max.max(m.f.max);
    if !(worst <= conformal_tol) {
        return Err(VerifyError::NonConformal { found: worst, tol: conformal_tol });
    }
    let g = &patch.grid;
    let values: Vec<Option<f64>> = (0..g.len())
        .into_par_iter()
        .map(|k| {
            let (Some(p), Some(n)) = (partials(patch, k, true), normals.normals[k]) else {
                return Ok(None);
            };
            let x = at(&patch.points[k]);
            let metric = model.metric_at(&x).map_err(model_at(g.node(k)))?;
            let gamma = model.christoffel_at(&x).map_err(model_at(g.node(k)))?;
            let lap = p.fuu + p.fvv + gamma.contract(&p.fu, &p.fu) + gamma.contract(&p.fv, &p.fv);
            let two_lambda = p.fu.dot(&(metric * p.fu)) + p.fv.dot(&(metric * p.fv));
            Ok(Some(lap.dot(&(metric * n)) / two_lambda))
        })
        .collect::<Result<_, VerifyError>>()?;
    let abs: Vec<Option<f64>> = values.iter().map(|v| v.map(f64::abs)).collect();
    Ok(MeanCurvature { stat: ResidualStat::from_nodes("mean_curvature", g, &abs), values })
}

/// `max |f(u,0) - β(u)|` and `max |N(u,0) - V(u)|_g` over the `v = 0` row.
pub fn bjorling_residuals(
    patch: &SurfacePatch,
    data: &BjorlingData,
    model: &LieGroupModel,
    normals: &GaussMap,
) -> Result<(ResidualStat, ResidualStat), VerifyError> {
    let g = &patch.grid;
    let j = g.center();
    let mut pos = vec![None; g.len()];
    let mut nrm = vec![None; g.len()];
    for i in 0..g.n_u {
        let k = g.index(i, j);
        let u = g.u(i);
        let f = patch.points[k];
        pos[k] = Some((f - data.curve.position(u)?).norm());
        let v = data.normal.at(&data.curve, model, u)?;
        nrm[k] = Some(match normals.normals[k] {
            Some(n) => {
                let metric = model.metric_at(&at(&f)).map_err(model_at((i, j)))?;
                let d = n - v;
                d.dot(&(metric * d)).max(0.0).sqrt()
            }
            None => f64::NAN,
        });
    }
    Ok((
        ResidualStat::from_nodes("boundary_position", g, &pos),
        ResidualStat::from_nodes("boundary_normal", g, &nrm),
    ))
}

#[cfg(test)]
mod tests;
