use std::f64::consts::TAU;

use num_complex::Complex64;

use super::*;
use crate::weierstrass::SpinorTriple;

fn job(json: &str) -> Job {
    let cfg: JobConfig = serde_json::from_str(json).unwrap();
    Job::resolve(cfg, Path::new(".")).unwrap()
}

#[test]
fn config_defaults_and_hash() {
    let cfg: JobConfig = serde_json::from_str(r#"{"model": "euclidean", "data": "line_helicoid"}"#).unwrap();
    assert_eq!(cfg.grid, GridSpec::default());
    assert_eq!(cfg.outputs.report, PathBuf::from("report.json"));
    let h = cfg.hash();
    assert_eq!(h.len(), 64);
    assert_eq!(h, cfg.clone().hash());
    let mut other = cfg.clone();
    other.flip_normal = true;
    assert_ne!(h, other.hash());
    let j = Job::resolve(cfg, Path::new(".")).unwrap();
    // ε defaults to a tenth of the parameter range
    assert!((j.grid.epsilon - 0.4 * std::f64::consts::PI).abs() < 1e-15);
    assert!(!j.grid.periodic);
}

#[test]
fn config_errors() {
    let bad = |json: &str| {
        let cfg: JobConfig = serde_json::from_str(json).unwrap();
        Job::resolve(cfg, Path::new(".")).unwrap_err()
    };
    assert!(matches!(bad(r#"{"model": "nil", "data": "line_helicoid"}"#), ConfigError::Read { .. }));
    assert!(matches!(
        bad(r#"{"model": "euclidean", "data": "line_helicoid", "grid": {"n_u": 4}}"#),
        ConfigError::Grid(_)
    ));
    assert!(matches!(
        bad(r#"{"model": "euclidean", "data": "line_helicoid", "solver": {"scheme": "spectral-fourier"}}"#),
        ConfigError::Solver(_)
    ));
    assert!(matches!(
        bad(r#"{"model": "euclidean", "data": "circle_outward", "outputs": {"mesh": "x.stl"}}"#),
        ConfigError::Outputs(_)
    ));
    assert!(serde_json::from_str::<JobConfig>(r#"{"model": "euclidean", "data": "x", "extra": 1}"#).is_err());
}

#[test]
fn dump_round_trip_is_exact() {
    let grid = StripGrid::new(8, (0.0, TAU), 2, 0.3, true).unwrap();
    let field = SpinorField::from_fn(grid.clone(), |u, v| {
        let z = Complex64::new(u, v);
        SpinorTriple::new(z.sin() / 3.0, z.cos() * 0.1, Complex64::new(1e-300, -0.7))
    });
    let mut buf = Vec::new();
    write_field_dump(&field, &mut buf).unwrap();
    let back = read_field_dump(&grid, &buf[..]).unwrap();
    assert_eq!(back.values(), field.values());

    let text = String::from_utf8(buf).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines.swap(1, 5);
    assert_eq!(read_field_dump(&grid, lines.join("\n").as_bytes()).unwrap().values(), field.values());
    let short = lines[..lines.len() - 1].join("\n");
    assert!(matches!(read_field_dump(&grid, short.as_bytes()), Err(DumpError::Count { .. })));
    let mut dup = lines.clone();
    dup[2] = dup[1];
    assert!(matches!(read_field_dump(&grid, dup.join("\n").as_bytes()), Err(DumpError::Row { .. })));
    let other = StripGrid::new(8, (0.0, 1.0), 2, 0.3, true).unwrap();
    assert!(read_field_dump(&other, text.as_bytes()).is_err());
    assert!(matches!(read_field_dump(&grid, "a,b\n".as_bytes()), Err(DumpError::Header)));
}

#[test]
fn list_models_table() {
    let t = list_models();
    for name in ["euclidean", "heisenberg", "h3", "h2xr"] {
        assert!(t.lines().any(|l| l == name), "{t}");
    }
    let block = |name: &str| {
        let start = t.lines().position(|l| l == name).unwrap();
        t.lines().skip(start + 1).take(2).collect::<Vec<_>>().join("\n")
    };
    assert!(block("euclidean").contains("L: 0"));
    let heis = block("heisenberg");
    assert_eq!(heis.matches("= 0.5").count() + heis.matches("= -0.5").count(), 6, "{heis}");
    assert!(block("h3").contains("x3 > 0"));
}

#[test]
fn small_catenoid_passes_and_flip_fails() {
    let cfg = r#"{"model": "euclidean", "data": "circle_outward", "grid": {"epsilon": 0.3, "n_u": 64, "n_v": 32}}"#;
    let out = run_job(&job(cfg));
    assert_eq!(out.exit, Exit::Pass, "{}", out.report.to_json());
    assert_eq!(out.report.stage, Stage::Complete);

    let mut j = job(cfg);
    j.config.flip_normal = true;
    let out = run_job(&j);
    assert_eq!(out.exit, Exit::Verification);
    let c = out.report.check("boundary_normal").unwrap();
    assert!(!c.pass && (c.value.unwrap() - 2.0).abs() < 1e-9);
}

#[test]
fn oversized_strip_aborts() {
    let out = run_job(&job(
        r#"{"model": "heisenberg", "data": "heisenberg_circle", "grid": {"epsilon": 10, "n_u": 64, "n_v": 64}}"#,
    ));
    assert_eq!(out.exit, Exit::Abort);
    assert_eq!(out.report.stage, Stage::Solve);
    assert!(out.report.error.as_deref().unwrap().contains("blowup"));
}

#[test]
fn invalid_data_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.json");
    fs::write(&data, r#"{"beta": ["2*u", "0", "0"], "V": ["0", "0", "2"], "u_range": [0, 1]}"#).unwrap();
    let cfg: JobConfig = serde_json::from_str(r#"{"model": "euclidean", "data": "d.json"}"#).unwrap();
    let j = Job::resolve(cfg, dir.path()).unwrap();
    let out = run_job(&j);
    assert_eq!(out.exit, Exit::Config);
    assert_eq!(out.report.stage, Stage::InitialData);
}

#[test]
fn oracle_compare_rejects_other_models() {
    let j = job(r#"{"model": "heisenberg", "data": "heisenberg_line"}"#);
    assert!(oracle_distance(&j).is_err());
}
