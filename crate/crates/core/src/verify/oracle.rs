use gauss_quad::legendre::GaussLegendre;
use nalgebra::Vector3;
use num_complex::Complex64;
use rayon::prelude::*;

use super::VerifyError;
use crate::bjorling::{BjorlingData, BjorlingError};
use crate::ck_solver::StripGrid;
use crate::models::LieGroupModel;
use crate::surface::{Provenance, SurfacePatch};

type C3 = [Complex64; 3];

fn cross(a: &C3, b: &C3) -> C3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn re(a: &C3) -> Vector3<f64> {
    Vector3::new(a[0].re, a[1].re, a[2].re)
}

/// `β'(z)` and `(β' × V)(z)`.
fn integrand(data: &BjorlingData, z: Complex64) -> Result<(C3, C3, C3), BjorlingError> {
    let (b, db) = data.curve.complex_jet(z)?;
    let v = data.normal.complex_at(z)?;
    Ok((b, db, cross(&db, &v)))
}

/// Classical Euclidean solution `f(z) = Re β(z) - Im ∫ (β' × V)(w) dw`.
/// The integral runs along the real axis (where it is real) and then
/// vertically, so `f(u + iv) = Re β(z) - ∫_0^v Re (β' × V)(u + it) dt`;
/// each level-to-level interval uses 8-point Gauss-Legendre.
pub fn euclidean_schwarz_oracle(
    data: &BjorlingData,
    model: &LieGroupModel,
    grid: &StripGrid,
) -> Result<SurfacePatch, VerifyError> {
    if !model.is_flat_euclidean() {
        return Err(VerifyError::NotEuclidean(model.name().to_string()));
    }
    let rule = GaussLegendre::new(8.try_into().unwrap());
    let pairs = rule.as_node_weight_pairs();
    let n = grid.n_levels();
    let c = grid.center();
    type Node = (Vector3<f64>, C3);
    let columns: Vec<Vec<Node>> = (0..grid.n_u)
        .into_par_iter()
        .map(|i| -> Result<Vec<Node>, BjorlingError> {
            let u = grid.u(i);
            let mut col = vec![(Vector3::zeros(), [Complex64::new(0.0, 0.0); 3]); n];
            let node = |j: usize, acc: &Vector3<f64>| -> Result<Node, BjorlingError> {
                let z = Complex64::new(u, grid.v(j));
                let (b, db, w) = integrand(data, z)?;
                // φ = F'/2 with F' = β' + i (β' × V)
                let phi: C3 = std::array::from_fn(|m| 0.5 * (db[m] + Complex64::i() * w[m]));
                Ok((re(&b) - acc, phi))
            };
            col[c] = node(c, &Vector3::zeros())?;
            for dir in [1isize, -1] {
                let mut acc = Vector3::zeros();
                let mut j = c;
                while (j as isize + dir) >= 0 && ((j as isize + dir) as usize) < n {
                    let next = (j as isize + dir) as usize;
                    let (a, b) = (grid.v(j), grid.v(next));
                    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
                    for (x, w) in pairs {
                        let t = mid + half * x;
                        let (_, _, bw) = integrand(data, Complex64::new(u, t))?;
                        acc += re(&bw) * (w * half);
                    }
                    col[next] = node(next, &acc)?;
                    j = next;
                }
            }
            Ok(col)
        })
        .collect::<Result<_, _>>()?;
    let mut nodes = vec![(Vector3::zeros(), [Complex64::new(0.0, 0.0); 3]); grid.len()];
    for (i, col) in columns.into_iter().enumerate() {
        for (j, v) in col.into_iter().enumerate() {
            nodes[grid.index(i, j)] = v;
        }
    }
    Ok(SurfacePatch {
        grid: grid.clone(),
        f_u: nodes.iter().map(|(_, p)| Vector3::from_fn(|m, _| 2.0 * p[m].re)).collect(),
        f_v: nodes.iter().map(|(_, p)| Vector3::from_fn(|m, _| -2.0 * p[m].im)).collect(),
        points: nodes.iter().map(|(f, _)| *f).collect(),
        phi: nodes.into_iter().map(|(_, p)| p).collect(),
        trusted: vec![true; grid.len()],
        provenance: Provenance { model: model.name().to_string(), config_hash: "schwarz-oracle".into() },
    })
}
