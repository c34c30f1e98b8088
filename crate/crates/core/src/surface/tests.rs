use std::f64::consts::TAU;

use super::*;
use crate::bjorling::{builtin_data, initial_line};
use crate::ck_solver::{evolve_strip, SolveConfig};
use crate::models::builtin;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn catenoid(u: f64, v: f64) -> SpinorTriple {
    let z = c(u, v);
    SpinorTriple::new(-0.5 * z.sin(), 0.5 * z.cos(), c(0.0, -0.5))
}

#[test]
fn catenoid_from_exact_spinors() {
    let e = builtin("euclidean").unwrap();
    let data = builtin_data("circle_outward").unwrap();
    let grid = StripGrid::new(64, (0.0, TAU), 64, 1.0, true).unwrap();
    let field = SpinorField::from_fn(grid.clone(), catenoid);
    let patch = reconstruct(&data.curve, &field, &e).unwrap();
    assert_eq!(patch.trusted_count(), grid.len());
    let top = patch.point(0, grid.n_levels() - 1);
    assert!((top - Vector3::new(1f64.cosh(), 0.0, 1.0)).norm() < 1e-9, "{top}");
    for k in 0..grid.len() {
        let (i, j) = grid.node(k);
        let (u, v) = (grid.u(i), grid.v(j));
        let exact = Vector3::new(v.cosh() * u.cos(), v.cosh() * u.sin(), v);
        assert!((patch.points[k] - exact).norm() < 1e-9);
    }
    // f_v = (sinh v cos u, sinh v sin u, 1)
    let k = grid.index(5, 10);
    let (u, v) = (grid.u(5), grid.v(10));
    assert!((patch.f_v[k] - Vector3::new(v.sinh() * u.cos(), v.sinh() * u.sin(), 1.0)).norm() < 1e-14);
    assert!(integrability_residual(&patch).max < 1e-5);
    assert_eq!(patch.provenance.model, "euclidean");
}

#[test]
fn column_integration_is_fourth_order() {
    let e = builtin("euclidean").unwrap();
    let data = builtin_data("circle_outward").unwrap();
    let err = |n_v: usize| {
        let grid = StripGrid::new(8, (0.0, TAU), n_v, 1.0, true).unwrap();
        let field = SpinorField::from_fn(grid.clone(), catenoid);
        let patch = reconstruct(&data.curve, &field, &e).unwrap();
        let top = patch.point(1, grid.n_levels() - 1);
        let u = grid.u(1);
        (top - Vector3::new(1f64.cosh() * u.cos(), 1f64.cosh() * u.sin(), 1.0)).norm()
    };
    let (a, b) = (err(16), err(32));
    let slope = (a / b).log2();
    assert!((3.5..=4.5).contains(&slope), "{a} {b} {slope}");
}

#[test]
fn heisenberg_line_lies_on_saddle() {
    let h = builtin("heisenberg").unwrap();
    let data = builtin_data("heisenberg_line").unwrap();
    let grid = StripGrid::new(128, (-1.0, 1.0), 64, 0.1, false).unwrap();
    let psi0 = initial_line(&data, &h, (0..grid.n_u).map(|i| grid.u(i)), false).unwrap();
    let field = evolve_strip(&psi0, h.connection(), &grid, &SolveConfig::default()).unwrap();
    let patch = reconstruct(&data.curve, &field, &h).unwrap();
    assert!(patch.trusted_count() > 0);
    for (p, t) in patch.points.iter().zip(&patch.trusted) {
        if *t {
            assert!((p.z - p.x * p.y / 2.0).abs() < 1e-9, "{p}");
        }
    }
    assert!(integrability_residual(&patch).max < 1e-6);
}

#[test]
fn chart_exit_marks_half_column() {
    // H³ needs x3 > 0; a surface heading down through x3 = 0 leaves the chart
    let h3 = builtin("h3").unwrap();
    let curve = AnalyticCurve::parse(
        &["u".into(), "0".into(), "0.5".into()],
        (0.0, 1.0),
        false,
    )
    .unwrap();
    let grid = StripGrid::new(8, (0.0, 1.0), 16, 2.0, false).unwrap();
    // φ = A ψ with f_v = -x3 ∂3
    let field = SpinorField::from_fn(grid.clone(), |_, _| {
        SpinorTriple::new(c(0.5, 0.0), c(0.0, 0.0), c(0.0, 0.5))
    });
    let patch = reconstruct(&curve, &field, &h3).unwrap();
    // f3 = 0.5 e^{-v}: stays positive, all trusted
    assert_eq!(patch.trusted_count(), grid.len());
    let top = patch.point(0, grid.n_levels() - 1);
    assert!((top.z - 0.5 * (-2f64).exp()).abs() < 1e-6);

    // df3/dv = -10 x3 with h_v = 1: the RK4 stages overshoot below x3 = 0
    let grid = StripGrid::new(8, (0.0, 1.0), 2, 2.0, false).unwrap();
    let field = SpinorField::from_fn(grid.clone(), |_, _| {
        SpinorTriple::new(c(0.0, 0.0), c(0.0, 0.0), c(0.0, 5.0))
    });
    let patch = reconstruct(&curve, &field, &h3).unwrap();
    for i in 0..grid.n_u {
        let t = |j| patch.trusted[grid.index(i, j)];
        assert!(t(0) && t(1) && t(2) && !t(3) && !t(4));
        assert!(patch.point(i, 4).iter().all(|x| x.is_finite()));
    }
}

fn square_patch() -> SurfacePatch {
    let grid = StripGrid::new_unchecked(3, (0.0, 2.0), 1, 1.0, false);
    SurfacePatch::from_fn(grid, |u, v| {
        (Vector3::new(u, v, 0.0), Vector3::x(), Vector3::y())
    })
}

#[test]
fn obj_counts() {
    let patch = square_patch();
    let mut out = Vec::new();
    let stats = write_obj(&patch, None, &mut out).unwrap();
    assert_eq!(stats, MeshStats { vertices: 9, faces: 4 });
    let text = String::from_utf8(out).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("v ")).count(), 9);
    let faces: Vec<&str> = text.lines().filter(|l| l.starts_with("f ")).collect();
    assert_eq!(faces.len(), 4);
    assert_eq!(faces[0], "f 1 2 5 4");

    let mut patch = patch;
    patch.trusted[4] = false;
    let mut out = Vec::new();
    let stats = write_obj(&patch, None, &mut out).unwrap();
    assert_eq!(stats, MeshStats { vertices: 8, faces: 0 });

    patch.trusted = vec![false; 9];
    assert!(matches!(write_obj(&patch, None, Vec::new()), Err(SurfaceError::EmptyTrustedRegion)));
}

#[test]
fn obj_periodic_wraps_and_normals() {
    let grid = StripGrid::new_unchecked(4, (0.0, TAU), 1, 1.0, true);
    let patch = SurfacePatch::from_fn(grid, |u, v| {
        (Vector3::new(u.cos(), u.sin(), v), Vector3::new(-u.sin(), u.cos(), 0.0), Vector3::z())
    });
    let normals: Vec<Vector3<f64>> = patch.points.iter().map(|p| Vector3::new(p.x, p.y, 0.0)).collect();
    let mut out = Vec::new();
    let stats = write_obj(&patch, Some(&normals), &mut out).unwrap();
    assert_eq!(stats.faces, 8);
    let text = String::from_utf8(out).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("vn ")).count(), 12);
    assert!(text.contains("f 4//4 1//1 5//5 8//8"));
    assert!(matches!(
        write_obj(&patch, Some(&normals[..3]), Vec::new()),
        Err(SurfaceError::LengthMismatch { .. })
    ));
}

#[test]
fn ply_layout() {
    let patch = square_patch();
    let mut out = Vec::new();
    write_ply(&patch, None, &mut out).unwrap();
    let end = b"end_header\n";
    let pos = out.windows(end.len()).position(|w| w == end).unwrap() + end.len();
    let header = std::str::from_utf8(&out[..pos]).unwrap();
    assert!(header.contains("binary_little_endian"));
    assert!(header.contains("element vertex 9"));
    assert!(header.contains("element face 4"));
    assert_eq!(out.len() - pos, 9 * 6 * 8 + 4 * (1 + 4 * 4));
    // second vertex x = 1
    let x = f64::from_le_bytes(out[pos + 48..pos + 56].try_into().unwrap());
    assert_eq!(x, 1.0);
}

#[test]
fn patch_csv_round_trips() {
    let mut patch = square_patch();
    patch.points[0].z = 0.1 + 0.2;
    patch.trusted[8] = false;
    let mut out = Vec::new();
    write_patch_csv(&patch, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "i,j,u,v,f1,f2,f3,trust");
    assert_eq!(lines.len(), 10);
    let f3: f64 = lines[1].split(',').nth(6).unwrap().parse().unwrap();
    assert_eq!(f3, 0.1 + 0.2);
    assert!(lines[9].ends_with(",0"));
    assert!(lines[1].ends_with(",1"));
}

#[test]
fn integrability_flags_inconsistent_phi() {
    let grid = StripGrid::new(32, (0.0, TAU), 4, 0.5, true).unwrap();
    let mut patch = SurfacePatch::from_fn(grid, |u, v| {
        (
            Vector3::new(v.cosh() * u.cos(), v.cosh() * u.sin(), v),
            Vector3::new(-v.cosh() * u.sin(), v.cosh() * u.cos(), 0.0),
            Vector3::new(v.sinh() * u.cos(), v.sinh() * u.sin(), 1.0),
        )
    });
    assert!(integrability_residual(&patch).max < 1e-4);
    for p in patch.phi.iter_mut() {
        p[0] = p[0].conj() * 2.0;
    }
    assert!(integrability_residual(&patch).max > 0.1);
}

