use std::f64::consts::TAU;

use nalgebra::Vector3;

use super::*;
use crate::bjorling::{builtin_data, initial_line};
use crate::ck_solver::{evolve_strip, SolveConfig, StripGrid};
use crate::models::builtin;
use crate::surface::reconstruct;

fn catenoid(grid: StripGrid) -> SurfacePatch {
    SurfacePatch::from_fn(grid, |u, v| {
        (
            Vector3::new(v.cosh() * u.cos(), v.cosh() * u.sin(), v),
            Vector3::new(-v.cosh() * u.sin(), v.cosh() * u.cos(), 0.0),
            Vector3::new(v.sinh() * u.cos(), v.sinh() * u.sin(), 1.0),
        )
    })
}

fn plane(grid: StripGrid, stretch: f64) -> SurfacePatch {
    SurfacePatch::from_fn(grid, |u, v| {
        (Vector3::new(u, stretch * v, 0.0), Vector3::x(), Vector3::y() * stretch)
    })
}

fn acceptance_grid() -> StripGrid {
    StripGrid::new(256, (0.0, TAU), 128, 0.5, true).unwrap()
}

#[test]
fn catenoid_closed_form_passes() {
    let e = builtin("euclidean").unwrap();
    let patch = catenoid(acceptance_grid());
    let m = induced_metric_residuals(&patch, &e).unwrap();
    assert!(m.e_minus_g.max < 1e-7 && m.f.max < 1e-10, "{m:?}");
    assert_eq!(m.e_minus_g.excluded_nodes, 0);
    let n = gauss_map(&patch, &e, 1e-10).unwrap();
    let h = mean_curvature_field(&patch, &e, &n, 1e-3).unwrap();
    assert!(h.stat.max <= 1e-6, "{:?}", h.stat);
    let data = builtin_data("circle_outward").unwrap();
    let (pos, nrm) = bjorling_residuals(&patch, &data, &e, &n).unwrap();
    assert!(pos.max < 1e-15 && nrm.max < 1e-15);
}

#[test]
fn gauss_map_of_catenoid_and_plane() {
    let e = builtin("euclidean").unwrap();
    let grid = StripGrid::new(16, (0.0, TAU), 4, 0.5, true).unwrap();
    let patch = catenoid(grid.clone());
    let n = gauss_map(&patch, &e, 1e-10).unwrap();
    for i in 0..16 {
        let u = grid.u(i);
        let nn = n.normals[grid.index(i, grid.center())].unwrap();
        assert!((nn - Vector3::new(u.cos(), u.sin(), 0.0)).norm() < 1e-15);
    }
    for k in 0..grid.len() {
        let nn = n.normals[k].unwrap();
        assert!((nn.norm() - 1.0).abs() < 1e-12);
        assert!(nn.dot(&patch.f_u[k]).abs() < 1e-10 && nn.dot(&patch.f_v[k]).abs() < 1e-10);
    }
    let flat = plane(StripGrid::new(16, (0.0, 1.0), 4, 0.5, false).unwrap(), 1.0);
    let n = gauss_map(&flat, &e, 1e-10).unwrap();
    assert!(n.normals.iter().all(|x| *x == Some(Vector3::z())));
    let h = mean_curvature_field(&flat, &e, &n, 1e-3).unwrap();
    assert!(h.values.iter().flatten().all(|x| *x == 0.0));
}

#[test]
fn stretched_plane_is_not_conformal() {
    let e = builtin("euclidean").unwrap();
    let grid = StripGrid::new(16, (0.0, 1.0), 4, 0.5, false).unwrap();
    let patch = plane(grid, 2.0);
    let m = induced_metric_residuals(&patch, &e).unwrap();
    assert!((m.e_minus_g.max - 3.0).abs() < 1e-12);
    assert!(m.f.max < 1e-12);
    let n = gauss_map(&patch, &e, 1e-10).unwrap();
    assert!(matches!(
        mean_curvature_field(&patch, &e, &n, 1e-3),
        Err(VerifyError::NonConformal { .. })
    ));
}

#[test]
fn sphere_has_unit_mean_curvature() {
    // Mercator chart of the unit sphere, conformal with E = G = sech² v
    let e = builtin("euclidean").unwrap();
    let grid = StripGrid::new(128, (0.0, TAU), 32, 0.5, true).unwrap();
    let patch = SurfacePatch::from_fn(grid, |u, v| {
        let (s, t) = (1.0 / v.cosh(), v.tanh());
        (
            Vector3::new(s * u.cos(), s * u.sin(), t),
            Vector3::new(-s * u.sin(), s * u.cos(), 0.0),
            Vector3::new(-s * t * u.cos(), -s * t * u.sin(), s * s),
        )
    });
    let n = gauss_map(&patch, &e, 1e-10).unwrap();
    let h = mean_curvature_field(&patch, &e, &n, 1e-3).unwrap();
    for v in h.values.iter().flatten() {
        assert!((v.abs() - 1.0).abs() < 1e-6, "{v}");
    }
}

#[test]
fn mean_curvature_error_is_fourth_order() {
    let e = builtin("euclidean").unwrap();
    let run = |n: usize| {
        let patch = catenoid(StripGrid::new(n, (0.0, TAU), n / 4, 0.5, true).unwrap());
        let g = gauss_map(&patch, &e, 1e-10).unwrap();
        mean_curvature_field(&patch, &e, &g, 1e-3).unwrap().stat.max
    };
    let (a, b) = (run(32), run(64));
    let slope = (a / b).log2();
    assert!((3.5..=4.5).contains(&slope), "{a} {b}");
}

#[test]
fn flipped_normal_gives_antipodal_residual() {
    let e = builtin("euclidean").unwrap();
    let data = builtin_data("circle_outward").unwrap();
    let grid = StripGrid::new(64, (0.0, TAU), 8, 0.2, true).unwrap();
    let us: Vec<f64> = (0..64).map(|i| grid.u(i)).collect();
    for (flip, expect) in [(false, 0.0), (true, 2.0)] {
        let psi0 = initial_line(&data, &e, us.iter().copied(), flip).unwrap();
        let field = evolve_strip(&psi0, e.connection(), &grid, &SolveConfig::default()).unwrap();
        let patch = reconstruct(&data.curve, &field, &e).unwrap();
        let n = gauss_map(&patch, &e, 1e-10).unwrap();
        let (pos, nrm) = bjorling_residuals(&patch, &data, &e, &n).unwrap();
        assert!(pos.max < 1e-12);
        assert!((nrm.max - expect).abs() < 1e-9, "{flip} {}", nrm.max);
    }
}

#[test]
fn schwarz_oracle_closed_forms() {
    let e = builtin("euclidean").unwrap();
    let grid = StripGrid::new(32, (0.0, TAU), 16, 1.0, true).unwrap();
    let data = builtin_data("circle_outward").unwrap();
    let patch = euclidean_schwarz_oracle(&data, &e, &grid).unwrap();
    let exact = catenoid(grid.clone());
    for k in 0..grid.len() {
        assert!((patch.points[k] - exact.points[k]).norm() < 1e-13);
        assert!((patch.f_v[k] - exact.f_v[k]).norm() < 1e-13);
    }
    let top = patch.points[grid.index(0, grid.n_levels() - 1)];
    assert!((top - Vector3::new(1.5430806348152437, 0.0, 1.0)).norm() < 1e-13);

    let data = builtin_data("line_helicoid").unwrap();
    let grid = StripGrid::new(33, (-2.0, 2.0), 16, 1.0, false).unwrap();
    let patch = euclidean_schwarz_oracle(&data, &e, &grid).unwrap();
    for k in 0..grid.len() {
        let (i, j) = grid.node(k);
        let (u, v) = (grid.u(i), grid.v(j));
        let want = Vector3::new(u, u.cos() * v.sinh(), u.sin() * v.sinh());
        assert!((patch.points[k] - want).norm() < 1e-13);
        if j == grid.center() {
            assert_eq!(patch.points[k], Vector3::new(u, 0.0, 0.0));
        }
    }
    let h = builtin("heisenberg").unwrap();
    assert!(matches!(euclidean_schwarz_oracle(&data, &h, &grid), Err(VerifyError::NotEuclidean(_))));
}

#[test]
fn heisenberg_line_verifies() {
    let h = builtin("heisenberg").unwrap();
    let data = builtin_data("heisenberg_line").unwrap();
    let grid = StripGrid::new(128, (-1.0, 1.0), 64, 0.1, false).unwrap();
    let us = (0..grid.n_u).map(|i| grid.u(i));
    let psi0 = initial_line(&data, &h, us, false).unwrap();
    let field = evolve_strip(&psi0, h.connection(), &grid, &SolveConfig::default()).unwrap();
    let patch = reconstruct(&data.curve, &field, &h).unwrap();
    let t = Thresholds { holomorphicity: 1e-6, ..Default::default() };
    let v = verify_solution(&field, &patch, &data, &h, &t).unwrap();
    assert!(v.pass(), "{:#?}", v.checks);
    // g(N, f_u) = g(N, f_v) = 0
    for k in 0..grid.len() {
        let Some(n) = v.normals.normals[k] else { continue };
        let p = patch.points[k];
        let g = h.metric_at(&[p.x, p.y, p.z]).unwrap();
        assert!(n.dot(&(g * patch.f_u[k])).abs() < 1e-10);
        assert!(n.dot(&(g * patch.f_v[k])).abs() < 1e-10);
        assert!((n.dot(&(g * n)) - 1.0).abs() < 1e-12);
    }
    let ratio = v.residuals.holomorphicity.ratio;
    assert!((0.1..=10.0).contains(&ratio), "{ratio}");
}

#[test]
fn report_serializes_without_nan() {
    let mut r = VerificationReport::new("euclidean", "circle_outward", "abc");
    r.checks.push(Check { name: "x".into(), value: None, threshold: 1.0, pass: false });
    let r = r.failed(Stage::Solve, "blowup");
    let text = r.to_json();
    let back: VerificationReport = serde_json::from_str(&text).unwrap();
    assert_eq!(back, r);
    assert!(text.contains("\"stage\": \"solve\""));
    let t: Thresholds = serde_json::from_str(r#"{"mean_curvature": 1e-3}"#).unwrap();
    assert_eq!(t.mean_curvature, 1e-3);
    assert_eq!(t.boundary_normal, 1e-6);
    assert!(serde_json::from_str::<Thresholds>(r#"{"bogus": 1}"#).is_err());
}
