//! Three-dimensional Lie groups given in a single chart by a left-invariant
//! orthonormal frame.
//!
//! A model is defined by its frame matrix `A(x)`: column `j` holds the
//! coordinate components of `E_j`. Everything else (the metric
//! `G = (A Aᵀ)⁻¹`, structure constants, the constant connection
//! coefficients `L^i_{jk}` and the Christoffel symbols) is derived.

mod connection;
mod spec;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use thiserror::Error;

use crate::expr::{Dual, Expr, ExprError};

pub use connection::{connection_from_structure, ConnectionCoeffs, StructureConstants};
pub use spec::{builtin, builtin_names, load_model, ChartSpec, FrameSpec, ModelSpecFile};

pub type Point = [f64; 3];

/// Validation lattice points per axis.
pub const LATTICE_PER_AXIS: usize = 5;
const DET_FLOOR: f64 = 1e-12;
const ORTHONORMALITY_TOL: f64 = 1e-12;
const STRUCTURE_TOL: f64 = 1e-9;
const JACOBI_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("point {point:?} is outside the chart domain of '{model}'")]
    OutsideChart { model: String, point: Point },
    #[error("frame is singular at {point:?} (det A = {det:e})")]
    SingularFrame { point: Point, det: f64 },
    #[error("orientation of the frame changes sign at {point:?}")]
    OrientationChanges { point: Point },
    #[error("metric is not positive definite at {point:?}")]
    NotPositiveDefinite { point: Point },
    #[error("frame is not orthonormal for the derived metric at {point:?} (defect {defect:e})")]
    NotOrthonormal { point: Point, defect: f64 },
    #[error("brackets of the frame are not constant: deviation {deviation:e} at {point:?}")]
    NonConstantStructure { point: Point, deviation: f64 },
    #[error("structure constants violate the Jacobi identity (defect {defect:e})")]
    JacobiViolated { defect: f64 },
    #[error("structure constants are not antisymmetric (defect {defect:e})")]
    NotAntisymmetric { defect: f64 },
    #[error("explicit structure constants disagree with the frame brackets by {deviation:e}")]
    StructureMismatch { deviation: f64 },
    #[error("frame entry A[{row}][{col}] at {point:?}: {source}")]
    FrameEval { row: usize, col: usize, point: Point, source: ExprError },
    #[error("expression error in model spec: {0}")]
    Expr(#[from] ExprError),
    #[error("invalid model spec: {0}")]
    InvalidSpec(String),
    #[error("unknown model '{0}'")]
    Unknown(String),
}

/// Open interval `(min, max)`; `None` means unbounded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartInterval {
    pub min: Option<f64>,
    pub max: Option<f64>,
}

impl ChartInterval {
    pub const FREE: ChartInterval = ChartInterval { min: None, max: None };
    pub const POSITIVE: ChartInterval = ChartInterval { min: Some(0.0), max: None };

    pub fn contains(&self, x: f64) -> bool {
        x.is_finite() && self.min.is_none_or(|m| x > m) && self.max.is_none_or(|m| x < m)
    }

    /// Default validation box inside the interval.
    pub fn default_box(&self) -> (f64, f64) {
        match (self.min, self.max) {
            (Some(a), Some(b)) => {
                let w = b - a;
                (a + 0.1 * w, b - 0.1 * w)
            }
            (Some(a), None) => (a + 0.5, a + 2.0),
            (None, Some(b)) => (b - 2.0, b - 0.5),
            (None, None) => (-1.0, 1.0),
        }
    }
}

/// Christoffel symbols `Γ^i_{kl}` stored as `g[i][k][l]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Christoffel(pub [[[f64; 3]; 3]; 3]);

impl Christoffel {
    /// `Σ_{k,l} Γ^i_{kl} a_k b_l` for real vectors.
    pub fn contract(&self, a: &Vector3<f64>, b: &Vector3<f64>) -> Vector3<f64> {
        Vector3::from_fn(|i, _| {
            let mut s = 0.0;
            for k in 0..3 {
                for l in 0..3 {
                    s += self.0[i][k][l] * a[k] * b[l];
                }
            }
            s
        })
    }

    /// `Σ_{k,l} Γ^i_{kl} a_k b_l` for complex vectors (no conjugation).
    pub fn contract_complex(&self, a: &[Complex64; 3], b: &[Complex64; 3]) -> [Complex64; 3] {
        std::array::from_fn(|i| {
            let mut s = Complex64::new(0.0, 0.0);
            for k in 0..3 {
                for l in 0..3 {
                    s += a[k] * b[l] * self.0[i][k][l];
                }
            }
            s
        })
    }
}

/// Frame matrix together with its coordinate derivatives `∂_k A`.
#[derive(Debug, Clone, Copy)]
pub struct FrameJet {
    pub a: Matrix3<f64>,
    pub da: [Matrix3<f64>; 3],
}

#[derive(Debug, Clone)]
pub struct LieGroupModel {
    name: String,
    variables: [String; 3],
    chart: [ChartInterval; 3],
    sample_box: [(f64, f64); 3],
    frame: [[Expr; 3]; 3],
    structure: StructureConstants,
    connection: ConnectionCoeffs,
    orientation_sign: f64,
    /// All frame entries are constants (skips expression evaluation).
    constant_frame: Option<Matrix3<f64>>,
}

impl LieGroupModel {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn variables(&self) -> &[String; 3] {
        &self.variables
    }

    pub fn chart(&self) -> &[ChartInterval; 3] {
        &self.chart
    }

    pub fn sample_box(&self) -> &[(f64, f64); 3] {
        &self.sample_box
    }

    pub fn frame_exprs(&self) -> &[[Expr; 3]; 3] {
        &self.frame
    }

    pub fn structure_constants(&self) -> &StructureConstants {
        &self.structure
    }

    pub fn connection(&self) -> &ConnectionCoeffs {
        &self.connection
    }

    /// Sign of `det A` on the chart (+1 or -1).
    pub fn orientation_sign(&self) -> f64 {
        self.orientation_sign
    }

    pub fn is_flat_euclidean(&self) -> bool {
        self.constant_frame.is_some_and(|a| a == Matrix3::identity())
            && self.connection.nonzero().is_empty()
    }

    pub fn in_chart(&self, x: &Point) -> bool {
        self.chart.iter().zip(x).all(|(c, v)| c.contains(*v))
    }

    fn check_chart(&self, x: &Point) -> Result<(), ModelError> {
        if self.in_chart(x) {
            Ok(())
        } else {
            Err(ModelError::OutsideChart { model: self.name.clone(), point: *x })
        }
    }

    fn raw_frame(&self, x: &Point) -> Result<Matrix3<f64>, ModelError> {
        if let Some(a) = self.constant_frame {
            return Ok(a);
        }
        let mut a = Matrix3::zeros();
        for r in 0..3 {
            for c in 0..3 {
                a[(r, c)] = self.frame[r][c].eval(x).map_err(|source| ModelError::FrameEval {
                    row: r,
                    col: c,
                    point: *x,
                    source,
                })?;
            }
        }
        Ok(a)
    }

    /// `A(x)`; column `j` is `E_j` in coordinates.
    pub fn frame_at(&self, x: &Point) -> Result<Matrix3<f64>, ModelError> {
        self.check_chart(x)?;
        let a = self.raw_frame(x)?;
        let det = a.determinant();
        if det.abs() <= DET_FLOOR || !det.is_finite() {
            return Err(ModelError::SingularFrame { point: *x, det });
        }
        Ok(a)
    }

    pub fn frame_inverse_at(&self, x: &Point) -> Result<Matrix3<f64>, ModelError> {
        let a = self.frame_at(x)?;
        a.try_inverse().ok_or(ModelError::SingularFrame { point: *x, det: a.determinant() })
    }

    /// `A(x)` and `∂_k A(x)` by forward-mode differentiation of the entries.
    pub fn frame_jet_at(&self, x: &Point) -> Result<FrameJet, ModelError> {
        self.check_chart(x)?;
        if let Some(a) = self.constant_frame {
            return Ok(FrameJet { a, da: [Matrix3::zeros(); 3] });
        }
        let seeds = [Dual::variable(x[0], 0), Dual::variable(x[1], 1), Dual::variable(x[2], 2)];
        let mut a = Matrix3::zeros();
        let mut da = [Matrix3::zeros(); 3];
        for r in 0..3 {
            for c in 0..3 {
                let d = self.frame[r][c].eval_with(&seeds).map_err(|source| {
                    ModelError::FrameEval { row: r, col: c, point: *x, source }
                })?;
                a[(r, c)] = d.value;
                for k in 0..3 {
                    da[k][(r, c)] = d.partials[k];
                }
            }
        }
        let det = a.determinant();
        if det.abs() <= DET_FLOOR || !det.is_finite() {
            return Err(ModelError::SingularFrame { point: *x, det });
        }
        Ok(FrameJet { a, da })
    }

    /// `G(x) = (A Aᵀ)⁻¹`, formed as `A⁻ᵀ A⁻¹` so it is symmetric by construction.
    pub fn metric_at(&self, x: &Point) -> Result<Matrix3<f64>, ModelError> {
        let inv = self.frame_inverse_at(x)?;
        Ok(inv.transpose() * inv)
    }

    /// Levi-Civita Christoffel symbols at `x`, from exact derivatives of the
    /// frame entries:
    /// `Γ^i_{kl} = ½ g^{im}(∂_k g_{ml} + ∂_l g_{mk} − ∂_m g_{kl})`.
    pub fn christoffel_at(&self, x: &Point) -> Result<Christoffel, ModelError> {
        let jet = self.frame_jet_at(x)?;
        Ok(christoffel_from_jet(&jet).ok_or(ModelError::SingularFrame {
            point: *x,
            det: jet.a.determinant(),
        })?)
    }

    /// Bracket `[E_j, E_k]` in coordinates at `x`.
    pub fn bracket_at(&self, x: &Point, j: usize, k: usize) -> Result<Vector3<f64>, ModelError> {
        let jet = self.frame_jet_at(x)?;
        Ok(bracket_from_jet(&jet, j, k))
    }

    /// Structure constants read off the frame brackets at `x`.
    pub fn structure_at(&self, x: &Point) -> Result<StructureConstants, ModelError> {
        let jet = self.frame_jet_at(x)?;
        structure_from_jet(&jet).ok_or(ModelError::SingularFrame {
            point: *x,
            det: jet.a.determinant(),
        })
    }

    /// Deterministic `5×5×5` validation lattice inside the sample box.
    pub fn lattice(&self) -> Vec<Point> {
        let n = LATTICE_PER_AXIS;
        let axis = |d: usize| -> Vec<f64> {
            let (lo, hi) = self.sample_box[d];
            (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
        };
        let (a, b, c) = (axis(0), axis(1), axis(2));
        let mut out = Vec::with_capacity(n * n * n);
        for &x in &a {
            for &y in &b {
                for &z in &c {
                    out.push([x, y, z]);
                }
            }
        }
        out
    }
}

/// `[E_j, E_k]^a = Σ_b (A_{bj} ∂_b A_{ak} − A_{bk} ∂_b A_{aj})`.
fn bracket_from_jet(jet: &FrameJet, j: usize, k: usize) -> Vector3<f64> {
    Vector3::from_fn(|a, _| {
        let mut s = 0.0;
        for b in 0..3 {
            s += jet.a[(b, j)] * jet.da[b][(a, k)] - jet.a[(b, k)] * jet.da[b][(a, j)];
        }
        s
    })
}

fn structure_from_jet(jet: &FrameJet) -> Option<StructureConstants> {
    let inv = jet.a.try_inverse()?;
    let mut c = StructureConstants::zero();
    for j in 0..3 {
        for k in (j + 1)..3 {
            let frame_comps = inv * bracket_from_jet(jet, j, k);
            for l in 0..3 {
                c.set_bracket(l, j, k, frame_comps[l]);
            }
        }
    }
    Some(c)
}

pub(crate) fn christoffel_from_jet(jet: &FrameJet) -> Option<Christoffel> {
    let inv = jet.a.try_inverse()?;
    let g = inv.transpose() * inv;
    let w = jet.a * jet.a.transpose();
    let dg: [Matrix3<f64>; 3] = std::array::from_fn(|k| {
        let dw = jet.da[k] * jet.a.transpose() + jet.a * jet.da[k].transpose();
        -(g * dw * g)
    });
    let mut gamma = [[[0.0; 3]; 3]; 3];
    for i in 0..3 {
        for k in 0..3 {
            for l in k..3 {
                let mut s = 0.0;
                for m in 0..3 {
                    s += w[(i, m)] * (dg[k][(m, l)] + dg[l][(m, k)] - dg[m][(k, l)]);
                }
                gamma[i][k][l] = 0.5 * s;
                gamma[i][l][k] = 0.5 * s;
            }
        }
    }
    Some(Christoffel(gamma))
}

/// Checks every model invariant on the validation lattice and returns the
/// orientation sign and the frame-derived structure constants.
pub(crate) fn validate_frame(
    model: &LieGroupModel,
) -> Result<(f64, StructureConstants), ModelError> {
    let lattice = model.lattice();
    let reference = {
        let b = &model.sample_box;
        [0.5 * (b[0].0 + b[0].1), 0.5 * (b[1].0 + b[1].1), 0.5 * (b[2].0 + b[2].1)]
    };
    for p in lattice.iter().chain(std::iter::once(&reference)) {
        if !model.in_chart(p) {
            return Err(ModelError::OutsideChart { model: model.name.clone(), point: *p });
        }
    }
    let det0 = model.frame_at(&reference)?.determinant();
    let sign = det0.signum();
    let c_ref = model.structure_at(&reference)?;
    for p in &lattice {
        let a = model.frame_at(p)?;
        if a.determinant().signum() != sign {
            return Err(ModelError::OrientationChanges { point: *p });
        }
        let g = model.metric_at(p)?;
        if g.cholesky().is_none() {
            return Err(ModelError::NotPositiveDefinite { point: *p });
        }
        let defect = (a.transpose() * g * a - Matrix3::identity()).amax();
        if defect > ORTHONORMALITY_TOL {
            return Err(ModelError::NotOrthonormal { point: *p, defect });
        }
        let c = model.structure_at(p)?;
        let deviation = c.max_abs_diff(&c_ref);
        if deviation > STRUCTURE_TOL * (1.0 + c_ref.0.iter().flatten().flatten().fold(0.0f64, |m, v| m.max(v.abs()))) {
            return Err(ModelError::NonConstantStructure { point: *p, deviation });
        }
    }
    Ok((sign, c_ref))
}

pub(crate) fn check_structure(c: &StructureConstants) -> Result<(), ModelError> {
    let defect = c.antisymmetry_defect();
    if defect > 0.0 {
        return Err(ModelError::NotAntisymmetric { defect });
    }
    let defect = c.jacobi_defect();
    if defect > JACOBI_TOL {
        return Err(ModelError::JacobiViolated { defect });
    }
    Ok(())
}

/// Koszul connection coefficients from structure constants, rejecting
/// brackets that do not come from a Lie algebra.
pub fn connection_coeffs_from_structure(
    c: &StructureConstants,
) -> Result<ConnectionCoeffs, ModelError> {
    check_structure(c)?;
    Ok(connection_from_structure(c))
}
