//! Reconstruction of the immersion from a spinor field by per-column
//! integration of `∂f/∂v = -2 Im(A(f) ψ)` from `f(u, 0) = β(u)`.

mod export;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

pub use export::{export_mesh, write_obj, write_patch_csv, write_ply, MeshFormat, MeshStats};

use crate::bjorling::{AnalyticCurve, BjorlingError};
use crate::ck_solver::StripGrid;
use crate::models::{LieGroupModel, ModelError};
use crate::stencil::{first_derivative, StencilOrder};
use crate::weierstrass::{ResidualStat, SpinorField, SpinorTriple};

#[derive(Debug, Error)]
pub enum SurfaceError {
    #[error("initial curve: {0}")]
    Curve(#[from] BjorlingError),
    #[error("initial point of column {column} is not usable: {source}")]
    InitialPoint { column: usize, source: ModelError },
    #[error("patch has no trusted nodes")]
    EmptyTrustedRegion,
    #[error("normals: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Provenance {
    pub model: String,
    pub config_hash: String,
}

#[derive(Debug, Clone)]
pub struct SurfacePatch {
    pub grid: StripGrid,
    pub points: Vec<Vector3<f64>>,
    pub f_u: Vec<Vector3<f64>>,
    pub f_v: Vec<Vector3<f64>>,
    /// `φ = A(f) ψ`; `f_u = 2 Re φ`, `f_v = -2 Im φ`.
    pub phi: Vec<[Complex64; 3]>,
    pub trusted: Vec<bool>,
    pub provenance: Provenance,
}

fn tangents(phi: &[Complex64; 3]) -> (Vector3<f64>, Vector3<f64>) {
    (
        Vector3::from_fn(|c, _| 2.0 * phi[c].re),
        Vector3::from_fn(|c, _| -2.0 * phi[c].im),
    )
}

fn times(a: &Matrix3<f64>, psi: &SpinorTriple) -> [Complex64; 3] {
    std::array::from_fn(|r| (0..3).map(|c| psi.0[c] * a[(r, c)]).sum())
}

fn point(f: &Vector3<f64>) -> [f64; 3] {
    [f.x, f.y, f.z]
}

impl SurfacePatch {
    /// Closed-form patch from `(f, f_u, f_v)` at each `(u, v)`; all nodes trusted.
    pub fn from_fn(
        grid: StripGrid,
        f: impl Fn(f64, f64) -> (Vector3<f64>, Vector3<f64>, Vector3<f64>),
    ) -> Self {
        let n = grid.len();
        let mut patch = SurfacePatch {
            points: Vec::with_capacity(n),
            f_u: Vec::with_capacity(n),
            f_v: Vec::with_capacity(n),
            phi: Vec::with_capacity(n),
            trusted: vec![true; n],
            provenance: Provenance::default(),
            grid,
        };
        for k in 0..n {
            let (i, j) = patch.grid.node(k);
            let (p, fu, fv) = f(patch.grid.u(i), patch.grid.v(j));
            patch.points.push(p);
            patch.f_u.push(fu);
            patch.f_v.push(fv);
            patch.phi.push(std::array::from_fn(|c| Complex64::new(0.5 * fu[c], -0.5 * fv[c])));
        }
        patch
    }

    pub fn point(&self, i: usize, j: usize) -> &Vector3<f64> {
        &self.points[self.grid.index(i, j)]
    }

    pub fn trusted_count(&self) -> usize {
        self.trusted.iter().filter(|t| **t).count()
    }
}

/// ψ at the midpoint of levels `a` and `a + 1`, by 4-point Lagrange
/// interpolation (one-sided next to the ends).
fn midpoint(field: &SpinorField, i: usize, a: usize) -> SpinorTriple {
    let n = field.grid().n_levels();
    let at = |j: usize| field.at(i, j).0;
    let (levels, w): ([usize; 4], [f64; 4]) = if n < 4 {
        ([a, a + 1, a, a + 1], [0.25, 0.25, 0.25, 0.25])
    } else if a == 0 {
        ([0, 1, 2, 3], [5.0 / 16.0, 15.0 / 16.0, -5.0 / 16.0, 1.0 / 16.0])
    } else if a + 2 >= n {
        ([n - 4, n - 3, n - 2, n - 1], [1.0 / 16.0, -5.0 / 16.0, 15.0 / 16.0, 5.0 / 16.0])
    } else {
        ([a - 1, a, a + 1, a + 2], [-1.0 / 16.0, 9.0 / 16.0, 9.0 / 16.0, -1.0 / 16.0])
    };
    SpinorTriple(std::array::from_fn(|c| (0..4).map(|m| at(levels[m])[c] * w[m]).sum()))
}

struct Column {
    points: Vec<Vector3<f64>>,
    phi: Vec<[Complex64; 3]>,
    ok: Vec<bool>,
}

fn integrate_column(
    curve: &AnalyticCurve,
    field: &SpinorField,
    model: &LieGroupModel,
    i: usize,
) -> Result<Column, SurfaceError> {
    let grid = field.grid();
    let n = grid.n_levels();
    let c = grid.center();
    let f0 = curve.position(grid.u(i))?;
    let a0 = model
        .frame_at(&point(&f0))
        .map_err(|source| SurfaceError::InitialPoint { column: i, source })?;
    let mut col = Column {
        points: vec![f0; n],
        phi: vec![[Complex64::new(0.0, 0.0); 3]; n],
        ok: vec![false; n],
    };
    col.phi[c] = times(&a0, field.at(i, c));
    col.ok[c] = true;

    // ∂f/∂v = -2 Im(A(f) ψ)
    let rate = |f: &Vector3<f64>, psi: &SpinorTriple| -> Result<Vector3<f64>, ModelError> {
        let a = model.frame_at(&point(f))?;
        let phi = times(&a, psi);
        Ok(Vector3::from_fn(|r, _| -2.0 * phi[r].im))
    };
    let h = grid.h_v();
    for dir in [1isize, -1] {
        let mut f = f0;
        let mut j = c;
        loop {
            let next = j as isize + dir;
            if next < 0 || next as usize >= n {
                break;
            }
            let next = next as usize;
            let lo = j.min(next);
            let (p0, pm, p1) = (field.at(i, j), midpoint(field, i, lo), field.at(i, next));
            let hd = h * dir as f64;
            let step = (|| {
                let k1 = rate(&f, p0)?;
                let k2 = rate(&(f + k1 * (0.5 * hd)), &pm)?;
                let k3 = rate(&(f + k2 * (0.5 * hd)), &pm)?;
                let k4 = rate(&(f + k3 * hd), p1)?;
                let fn_ = f + (k1 + 2.0 * k2 + 2.0 * k3 + k4) * (hd / 6.0);
                let a = model.frame_at(&point(&fn_))?;
                Ok::<_, ModelError>((fn_, times(&a, p1)))
            })();
            match step {
                Ok((fn_, phi)) if fn_.iter().all(|x| x.is_finite()) => {
                    f = fn_;
                    col.points[next] = f;
                    col.phi[next] = phi;
                    col.ok[next] = true;
                    j = next;
                }
                // chart exit or singular frame: the rest of this half-column
                // keeps the last good point and stays untrusted
                _ => {
                    let mut k = next as isize;
                    while k >= 0 && (k as usize) < n {
                        col.points[k as usize] = f;
                        k += dir;
                    }
                    break;
                }
            }
        }
    }
    Ok(col)
}

/// Integrates `f` column by column from `f(u_i, 0) = β(u_i)`; the two
/// halves of each column are independent.
pub fn reconstruct(
    curve: &AnalyticCurve,
    field: &SpinorField,
    model: &LieGroupModel,
) -> Result<SurfacePatch, SurfaceError> {
    let grid = field.grid().clone();
    let columns: Vec<Column> = (0..grid.n_u)
        .into_par_iter()
        .map(|i| integrate_column(curve, field, model, i))
        .collect::<Result<_, _>>()?;
    let n = grid.len();
    let mut patch = SurfacePatch {
        points: vec![Vector3::zeros(); n],
        f_u: vec![Vector3::zeros(); n],
        f_v: vec![Vector3::zeros(); n],
        phi: vec![[Complex64::new(0.0, 0.0); 3]; n],
        trusted: vec![false; n],
        provenance: Provenance { model: model.name().to_string(), config_hash: String::new() },
        grid,
    };
    for (i, col) in columns.into_iter().enumerate() {
        for j in 0..patch.grid.n_levels() {
            let k = patch.grid.index(i, j);
            patch.points[k] = col.points[j];
            patch.phi[k] = col.phi[j];
            let (fu, fv) = tangents(&col.phi[j]);
            patch.f_u[k] = fu;
            patch.f_v[k] = fv;
            patch.trusted[k] = col.ok[j] && field.trusted()[k];
        }
    }
    Ok(patch)
}

/// Max over trusted nodes of `|∂f/∂u - 2 Re φ|`, normalized by the RMS of
/// `|φ|`. `∂f/∂u` is a 4th-order difference; nodes whose stencil touches an
/// untrusted node are excluded.
pub fn integrability_residual(patch: &SurfacePatch) -> ResidualStat {
    let g = &patch.grid;
    let (sum, count) = patch
        .phi
        .iter()
        .zip(&patch.trusted)
        .filter(|(_, t)| **t)
        .fold((0.0, 0usize), |(s, c), (p, _)| (s + p.iter().map(|z| z.norm_sqr()).sum::<f64>(), c + 1));
    let rms = if count > 0 { (sum / count as f64).sqrt() } else { 0.0 };
    let scale = if rms > 0.0 { 1.0 / rms } else { 1.0 };
    let vals: Vec<Option<f64>> = (0..g.len())
        .into_par_iter()
        .map(|k| {
            let (i, j) = g.node(k);
            let st = first_derivative(g.n_u, i, g.h_u(), StencilOrder::Fourth, g.periodic);
            if !st.indices().iter().chain([&i]).all(|&m| patch.trusted[g.index(m, j)]) {
                return None;
            }
            let du = st.apply(|m| patch.points[g.index(m, j)]);
            let two_re = Vector3::from_fn(|c, _| 2.0 * patch.phi[k][c].re);
            Some((du - two_re).norm() * scale)
        })
        .collect();
    ResidualStat::from_nodes("integrability", g, &vals)
}

#[cfg(test)]
mod tests;
