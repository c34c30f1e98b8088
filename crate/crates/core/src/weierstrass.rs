//! Spinor fields on the strip and the residual kernels of the Weierstrass
//! conditions: regularity, conformality and holomorphicity, in frame and in
//! coordinate form.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ck_solver::StripGrid;
use crate::models::{ConnectionCoeffs, LieGroupModel, ModelError};
use crate::stencil::{first_derivative, StencilOrder};
use crate::surface::SurfacePatch;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SpinorTriple(pub [Complex64; 3]);

impl SpinorTriple {
    pub const ZERO: SpinorTriple = SpinorTriple([ZERO; 3]);

    pub fn new(a: Complex64, b: Complex64, c: Complex64) -> Self {
        SpinorTriple([a, b, c])
    }

    /// `ψ1² + ψ2² + ψ3²`
    pub fn square_sum(&self) -> Complex64 {
        self.0.iter().map(|p| p * p).sum()
    }

    /// `|ψ1|² + |ψ2|² + |ψ3|²`
    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|p| p.norm_sqr()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|p| p.re.is_finite() && p.im.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WeierstrassError {
    #[error("field has {found} values but the grid has {expected} nodes")]
    LengthMismatch { expected: usize, found: usize },
    #[error("grid too small for finite differences: need at least 3 nodes per direction")]
    GridTooSmall,
    #[error("equations 1-2 residual {found:e} exceeds tol12 = {tol:e}")]
    Precondition { found: f64, tol: f64 },
    #[error("surface leaves the chart at node {node:?}: {source}")]
    Chart { node: [usize; 2], source: ModelError },
}

/// Spinor values on a [`StripGrid`], with the solver's trust mask.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinorField {
    grid: StripGrid,
    values: Vec<SpinorTriple>,
    trusted: Vec<bool>,
}

impl SpinorField {
    pub fn new(
        grid: StripGrid,
        values: Vec<SpinorTriple>,
        trusted: Vec<bool>,
    ) -> Result<Self, WeierstrassError> {
        for len in [values.len(), trusted.len()] {
            if len != grid.len() {
                return Err(WeierstrassError::LengthMismatch { expected: grid.len(), found: len });
            }
        }
        Ok(SpinorField { grid, values, trusted })
    }

    /// Samples `f(u, v)` at every node; all nodes trusted.
    pub fn from_fn(grid: StripGrid, f: impl Fn(f64, f64) -> SpinorTriple) -> Self {
        let values = (0..grid.len())
            .map(|k| {
                let (i, j) = grid.node(k);
                f(grid.u(i), grid.v(j))
            })
            .collect();
        let trusted = vec![true; grid.len()];
        SpinorField { grid, values, trusted }
    }

    pub fn grid(&self) -> &StripGrid {
        &self.grid
    }

    pub fn values(&self) -> &[SpinorTriple] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [SpinorTriple] {
        &mut self.values
    }

    pub fn trusted(&self) -> &[bool] {
        &self.trusted
    }

    pub fn set_trusted(&mut self, mask: Vec<bool>) -> Result<(), WeierstrassError> {
        if mask.len() != self.grid.len() {
            return Err(WeierstrassError::LengthMismatch {
                expected: self.grid.len(),
                found: mask.len(),
            });
        }
        self.trusted = mask;
        Ok(())
    }

    pub fn at(&self, i: usize, j: usize) -> &SpinorTriple {
        &self.values[self.grid.index(i, j)]
    }

    /// Values on level `j`.
    pub fn level(&self, j: usize) -> &[SpinorTriple] {
        let n = self.grid.n_u;
        &self.values[j * n..(j + 1) * n]
    }

    /// RMS of `sqrt(Σ|ψ_i|²)` over trusted nodes.
    pub fn rms(&self) -> f64 {
        let (sum, count) = self
            .values
            .iter()
            .zip(&self.trusted)
            .filter(|(_, t)| **t)
            .fold((0.0, 0usize), |(s, c), (p, _)| (s + p.norm_sqr(), c + 1));
        if count == 0 {
            0.0
        } else {
            (sum / count as f64).sqrt()
        }
    }

    /// `½(∂_u + i ∂_v) ψ` at node `(i, j)`.
    pub fn dbar(&self, i: usize, j: usize, order: StencilOrder) -> [Complex64; 3] {
        dbar_at(&self.grid, i, j, order, |k| self.values[k].0)
    }
}

/// `½(∂_u + i ∂_v)` of a nodal complex 3-vector field.
pub(crate) fn dbar_at(
    grid: &StripGrid,
    i: usize,
    j: usize,
    order: StencilOrder,
    value: impl Fn(usize) -> [Complex64; 3],
) -> [Complex64; 3] {
    let su = first_derivative(grid.n_u, i, grid.h_u(), order, grid.periodic);
    let sv = first_derivative(grid.n_levels(), j, grid.h_v(), order, false);
    let mut out = [ZERO; 3];
    for (c, o) in out.iter_mut().enumerate() {
        let du = su.apply(|k| value(grid.index(k, j))[c]);
        let dv = sv.apply(|k| value(grid.index(i, k))[c]);
        *o = 0.5 * (du + I * dv);
    }
    out
}

/// One entry of a residual report: `{name, max, rms, worst_node, excluded_nodes}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualStat {
    pub name: String,
    pub max: f64,
    pub rms: f64,
    pub worst_node: [usize; 2],
    pub excluded_nodes: usize,
}

impl ResidualStat {
    /// Reduces per-node values in node order; `None` marks an excluded node.
    /// NaN counts as the worst possible value.
    pub fn from_nodes(name: &str, grid: &StripGrid, values: &[Option<f64>]) -> Self {
        let mut max = 0.0;
        let mut worst = 0usize;
        let mut sum = 0.0;
        let mut count = 0usize;
        let mut seen_nan = false;
        for (k, v) in values.iter().enumerate() {
            let Some(v) = v else { continue };
            count += 1;
            sum += v * v;
            if v.is_nan() {
                if !seen_nan {
                    seen_nan = true;
                    worst = k;
                }
            } else if !seen_nan && *v > max {
                max = *v;
                worst = k;
            }
        }
        let (i, j) = grid.node(worst);
        ResidualStat {
            name: name.to_string(),
            max: if seen_nan { f64::NAN } else { max },
            rms: if count == 0 { 0.0 } else { (sum / count as f64).sqrt() },
            worst_node: [i, j],
            excluded_nodes: values.len() - count,
        }
    }
}

fn masked(field: &SpinorField, f: impl Fn(&SpinorTriple) -> f64 + Sync) -> Vec<Option<f64>> {
    field
        .values
        .par_iter()
        .zip(field.trusted.par_iter())
        .map(|(p, t)| t.then(|| f(p)))
        .collect()
}

/// Max of `|ψ1² + ψ2² + ψ3²|` over trusted nodes.
pub fn conformality_residual(field: &SpinorField) -> ResidualStat {
    let vals = masked(field, |p| p.square_sum().norm());
    ResidualStat::from_nodes("conformality", &field.grid, &vals)
}

/// Smallest `Σ|ψ_i|²`. Nodes below `threshold` are flagged, not rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityMargin {
    pub min: f64,
    pub worst_node: [usize; 2],
    pub threshold: f64,
    pub flagged_nodes: Vec<[usize; 2]>,
}

impl RegularityMargin {
    pub fn is_regular(&self) -> bool {
        self.flagged_nodes.is_empty()
    }
}

pub fn regularity_margin(field: &SpinorField, threshold: f64) -> RegularityMargin {
    let vals = masked(field, SpinorTriple::norm_sqr);
    let mut min = f64::INFINITY;
    let mut worst = 0;
    let mut flagged = Vec::new();
    for (k, v) in vals.iter().enumerate() {
        let Some(v) = *v else { continue };
        if v < min {
            min = v;
            worst = k;
        }
        if v <= threshold {
            let (i, j) = field.grid.node(k);
            flagged.push([i, j]);
        }
    }
    let (i, j) = field.grid.node(worst);
    RegularityMargin {
        min: if min.is_finite() { min } else { 0.0 },
        worst_node: [i, j],
        threshold,
        flagged_nodes: flagged,
    }
}

fn check_size(grid: &StripGrid) -> Result<(), WeierstrassError> {
    if grid.n_u < 3 || grid.n_levels() < 3 {
        Err(WeierstrassError::GridTooSmall)
    } else {
        Ok(())
    }
}

/// Per-node residuals `|½(∂_u + i∂_v)ψ_i + Σ L^i_{jk} conj(ψ_j) ψ_k|`, one
/// vector per equation; untrusted nodes are `None`.
fn frame_residual_nodes(
    field: &SpinorField,
    l: &ConnectionCoeffs,
    order: StencilOrder,
) -> [Vec<Option<f64>>; 3] {
    let grid = &field.grid;
    let per_node: Vec<Option<[f64; 3]>> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            if !field.trusted[k] {
                return None;
            }
            let (i, j) = grid.node(k);
            let d = field.dbar(i, j, order);
            let q = l.quadratic(&field.values[k].0);
            Some(std::array::from_fn(|c| (d[c] + q[c]).norm()))
        })
        .collect();
    std::array::from_fn(|c| per_node.iter().map(|n| n.map(|r| r[c])).collect())
}

/// Residuals of the three frame holomorphicity equations
/// `∂ψ_i/∂z̄ + Σ L^i_{jk} conj(ψ_j) ψ_k = 0` over trusted nodes.
pub fn frame_holomorphicity_residual(
    field: &SpinorField,
    l: &ConnectionCoeffs,
    order: StencilOrder,
) -> Result<[ResidualStat; 3], WeierstrassError> {
    check_size(&field.grid)?;
    let nodes = frame_residual_nodes(field, l, order);
    Ok(std::array::from_fn(|c| {
        ResidualStat::from_nodes(&format!("frame_holomorphicity_{}", c + 1), &field.grid, &nodes[c])
    }))
}

/// Residuals of the coordinate equations
/// `∂φ_i/∂z̄ + Σ Γ^i_{kl}(f) φ_k conj(φ_l) = 0` with `φ = A(f)ψ` from the patch.
pub fn coordinate_holomorphicity_residual(
    patch: &SurfacePatch,
    model: &LieGroupModel,
    order: StencilOrder,
) -> Result<[ResidualStat; 3], WeierstrassError> {
    let grid = &patch.grid;
    check_size(grid)?;
    let per_node: Vec<Result<Option<[f64; 3]>, WeierstrassError>> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            if !patch.trusted[k] {
                return Ok(None);
            }
            let (i, j) = grid.node(k);
            let p = patch.points[k];
            let gamma = model
                .christoffel_at(&[p.x, p.y, p.z])
                .map_err(|source| WeierstrassError::Chart { node: [i, j], source })?;
            let d = dbar_at(grid, i, j, order, |m| patch.phi[m]);
            let phi = patch.phi[k];
            let q = gamma.contract_complex(&phi, &phi.map(|z| z.conj()));
            Ok(Some(std::array::from_fn(|c| (d[c] + q[c]).norm())))
        })
        .collect();
    let per_node: Vec<Option<[f64; 3]>> = per_node.into_iter().collect::<Result<_, _>>()?;
    Ok(std::array::from_fn(|c| {
        let vals: Vec<Option<f64>> = per_node.iter().map(|n| n.map(|r| r[c])).collect();
        ResidualStat::from_nodes(&format!("coordinate_holomorphicity_{}", c + 1), grid, &vals)
    }))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpliedThirdOptions {
    /// Required bound on the equation 1-2 residuals.
    pub tol12: f64,
    /// Nodes with `|ψ3| <` this times the field RMS are excluded.
    pub psi3_threshold: f64,
    /// The bound is `factor · max(eq1, eq2) + discretization`.
    pub factor: f64,
    pub discretization: f64,
    pub order: StencilOrder,
}

impl Default for ImpliedThirdOptions {
    fn default() -> Self {
        ImpliedThirdOptions {
            tol12: 1e-6,
            psi3_threshold: 1e-8,
            factor: 10.0,
            discretization: 0.0,
            order: StencilOrder::Second,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpliedThirdReport {
    pub eq12_max: f64,
    pub eq3: ResidualStat,
    pub bound: f64,
    pub holds: bool,
    /// Trusted nodes dropped because `|ψ3|` is too small.
    pub small_psi3_nodes: Vec<[usize; 2]>,
}

/// Residual of the third equation alone, compared against the bound implied
/// by the first two. Nodes where `ψ3` nearly vanishes are excluded and listed.
pub fn implied_third_residual(
    field: &SpinorField,
    l: &ConnectionCoeffs,
    opts: &ImpliedThirdOptions,
) -> Result<ImpliedThirdReport, WeierstrassError> {
    check_size(&field.grid)?;
    let nodes = frame_residual_nodes(field, l, opts.order);
    let eq12_max = nodes[0]
        .iter()
        .chain(&nodes[1])
        .flatten()
        .fold(0.0f64, |m, v| if v.is_nan() { f64::NAN } else { m.max(*v) });
    if !(eq12_max <= opts.tol12) {
        return Err(WeierstrassError::Precondition { found: eq12_max, tol: opts.tol12 });
    }
    let floor = opts.psi3_threshold * field.rms();
    let mut small = Vec::new();
    let eq3: Vec<Option<f64>> = nodes[2]
        .iter()
        .enumerate()
        .map(|(k, r)| {
            let r = (*r)?;
            if field.values[k].0[2].norm() < floor {
                let (i, j) = field.grid.node(k);
                small.push([i, j]);
                None
            } else {
                Some(r)
            }
        })
        .collect();
    let eq3 = ResidualStat::from_nodes("implied_third", &field.grid, &eq3);
    let bound = opts.factor * eq12_max + opts.discretization;
    Ok(ImpliedThirdReport { eq12_max, holds: eq3.max <= bound, eq3, bound, small_psi3_nodes: small })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::builtin;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn grid(n: usize) -> StripGrid {
        StripGrid::new(n, (0.0, 1.0), n / 2, 0.5, false).unwrap()
    }

    fn constant(p: SpinorTriple) -> SpinorField {
        SpinorField::from_fn(grid(8), |_, _| p)
    }

    fn catenoid_initial(u: f64, v: f64) -> SpinorTriple {
        let z = c(u, v);
        SpinorTriple::new(-0.5 * z.sin(), 0.5 * z.cos(), c(0.0, -0.5))
    }

    #[test]
    fn conformality_examples() {
        assert_eq!(conformality_residual(&constant(SpinorTriple::new(c(1., 0.), c(0., 1.), ZERO))).max, 0.0);
        assert_eq!(conformality_residual(&constant(SpinorTriple::new(c(1., 0.), ZERO, ZERO))).max, 1.0);
        let g = StripGrid::new(64, (0.0, std::f64::consts::TAU), 1, 1e-9, true).unwrap();
        let f = SpinorField::from_fn(g, |u, _| catenoid_initial(u, 0.0));
        assert!(conformality_residual(&f).max < 1e-15);
    }

    #[test]
    fn regularity_examples() {
        let r = regularity_margin(&constant(SpinorTriple::new(c(1., 0.), c(0., 1.), ZERO)), 1e-12);
        assert_eq!(r.min, 2.0);
        assert!(r.is_regular());
        let r = regularity_margin(&constant(SpinorTriple::ZERO), 1e-12);
        assert_eq!(r.min, 0.0);
        assert!(!r.is_regular());
        let g = StripGrid::new(64, (0.0, std::f64::consts::TAU), 1, 1e-9, true).unwrap();
        let f = SpinorField::from_fn(g, |u, _| catenoid_initial(u, 0.0));
        assert!((regularity_margin(&f, 1e-12).min - 0.5).abs() < 1e-15);
    }

    fn l0() -> ConnectionCoeffs {
        ConnectionCoeffs::default()
    }

    #[test]
    fn holomorphic_field_has_second_order_residual() {
        let err = |n: usize| {
            let f = SpinorField::from_fn(grid(n), |u, v| {
                let z = c(u, v);
                SpinorTriple::new(z.exp(), I * z.exp(), ZERO)
            });
            let r = frame_holomorphicity_residual(&f, &l0(), StencilOrder::Second).unwrap();
            r[0].max.max(r[1].max)
        };
        let e: Vec<f64> = [16, 32, 64, 128].iter().map(|&n| err(n)).collect();
        for w in e.windows(2) {
            let slope = (w[0] / w[1]).log2();
            assert!((1.7..=2.3).contains(&slope), "slope {slope}");
        }
        // linear data is differentiated exactly
        let f = SpinorField::from_fn(grid(8), |u, v| SpinorTriple::new(c(u, v), I * c(u, v), ZERO));
        let r = frame_holomorphicity_residual(&f, &l0(), StencilOrder::Second).unwrap();
        assert!(r.iter().all(|s| s.max < 1e-13));
    }

    #[test]
    fn antiholomorphic_field_residual_is_one() {
        // ∂z̄/∂z̄ = 1
        let f = SpinorField::from_fn(grid(8), |u, v| SpinorTriple::new(c(u, -v), ZERO, ZERO));
        let r = frame_holomorphicity_residual(&f, &l0(), StencilOrder::Second).unwrap();
        assert!((r[0].max - 1.0).abs() < 1e-13);
        assert!((r[0].rms - 1.0).abs() < 1e-13);
        assert_eq!(r[1].max, 0.0);
    }

    #[test]
    fn residual_skips_untrusted_and_reports_worst() {
        let mut f = SpinorField::from_fn(grid(16), |u, v| SpinorTriple::new(c(u, v), ZERO, ZERO));
        let k = f.grid().index(5, 3);
        f.values_mut()[k].0[0] += c(1e-3, 0.0);
        let r = frame_holomorphicity_residual(&f, &l0(), StencilOrder::Second).unwrap();
        // the neighbours of the corrupted node see it through the stencil
        assert!(r[0].max > 1e-3);
        let mut mask = vec![true; f.grid().len()];
        for (di, dj) in [(0, 0), (1, 0), (0, 1)] {
            mask[f.grid().index(5 - di, 3 - dj)] = false;
            mask[f.grid().index(5 + di, 3 + dj)] = false;
        }
        f.set_trusted(mask).unwrap();
        let r = frame_holomorphicity_residual(&f, &l0(), StencilOrder::Second).unwrap();
        assert_eq!(r[0].excluded_nodes, 5);
        assert!(r[0].max < 1e-12);
    }

    #[test]
    fn nan_is_worst() {
        let g = grid(8);
        let mut vals = vec![Some(1.0); g.len()];
        vals[10] = Some(f64::NAN);
        vals[3] = Some(5.0);
        let s = ResidualStat::from_nodes("x", &g, &vals);
        assert!(s.max.is_nan());
        assert_eq!(s.worst_node, [2, 1]);
    }

    #[test]
    fn grid_too_small() {
        let g = StripGrid::new_unchecked(2, (0.0, 1.0), 1, 0.1, false);
        let f = SpinorField::from_fn(g, |_, _| SpinorTriple::ZERO);
        assert_eq!(
            frame_holomorphicity_residual(&f, &l0(), StencilOrder::Second),
            Err(WeierstrassError::GridTooSmall)
        );
    }

    #[test]
    fn implied_third_euclidean() {
        // ψ = (cos z, sin z, i): conformal and holomorphic
        let f = SpinorField::from_fn(grid(64), |u, v| {
            let z = c(u, v);
            SpinorTriple::new(z.cos(), z.sin(), I)
        });
        let opts = ImpliedThirdOptions { tol12: 1e-3, ..Default::default() };
        let r = implied_third_residual(&f, &l0(), &opts).unwrap();
        assert!(r.holds);
        assert!(r.eq3.max < 1e-12);
        assert!(r.small_psi3_nodes.is_empty());
        let strict = ImpliedThirdOptions { tol12: 1e-9, ..Default::default() };
        assert!(matches!(
            implied_third_residual(&f, &l0(), &strict),
            Err(WeierstrassError::Precondition { .. })
        ));
    }

    #[test]
    fn implied_third_excludes_vanishing_psi3() {
        let f = SpinorField::from_fn(grid(17), |u, v| SpinorTriple::new(c(1.0, 0.0), I, c(u - 0.5, v)));
        let r = implied_third_residual(&f, &l0(), &Default::default()).unwrap();
        assert_eq!(r.small_psi3_nodes, vec![[8, 8]]);
    }

    #[test]
    fn heisenberg_quadratic_term_matters() {
        // for a constant field only the quadratic term is left
        let h = builtin("heisenberg").unwrap();
        let p = SpinorTriple::new(c(0.5, 0.0), c(0.0, 0.5), c(0.0, 0.3));
        let r = frame_holomorphicity_residual(&constant(p), h.connection(), StencilOrder::Second).unwrap();
        let q = h.connection().quadratic(&p.0);
        for c in 0..3 {
            assert!((r[c].max - q[c].norm()).abs() < 1e-14);
        }
        assert!(r[0].max > 0.0);
    }
}
