//! Job configs and the command implementations behind the `bjorling` binary.
//!
//! Exit codes: 0 pass, 1 config error, 2 verification failure, 3 solver abort.

mod dump;

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use dump::{read_field_dump, write_field_dump, DumpError, HEADER as DUMP_HEADER};

use crate::bjorling::{self, builtin_data, initial_line, BjorlingData, BjorlingError};
use crate::ck_solver::{evolve_strip, GridError, SolveConfig, SolveError, StripGrid};
use crate::models::{builtin, builtin_names, load_model, LieGroupModel, ModelError, ModelSpecFile};
use crate::surface::{export_mesh, reconstruct, write_patch_csv, MeshFormat, SurfacePatch};
use crate::verify::{
    euclidean_schwarz_oracle, verify_solution, GaussMap, Stage, Thresholds, VerificationReport,
};
use crate::weierstrass::SpinorField;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Pass = 0,
    Config = 1,
    Verification = 2,
    Abort = 3,
}

impl Exit {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error("model: {0}")]
    Model(#[from] ModelError),
    #[error("data: {0}")]
    Data(#[from] BjorlingError),
    #[error("grid: {0}")]
    Grid(#[from] GridError),
    #[error("solver: {0}")]
    Solver(#[from] SolveError),
    #[error("outputs: {0}")]
    Outputs(String),
}

/// `epsilon` defaults to a tenth of the curve's parameter range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub epsilon: Option<f64>,
    pub n_u: usize,
    pub n_v: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { epsilon: None, n_u: 128, n_v: 64 }
    }
}

/// Output paths; relative paths are taken against the output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Outputs {
    pub report: PathBuf,
    pub mesh: Option<PathBuf>,
    /// Inferred from the mesh extension when absent.
    pub mesh_format: Option<MeshFormat>,
    pub field_dump: Option<PathBuf>,
    pub patch_csv: Option<PathBuf>,
}

impl Default for Outputs {
    fn default() -> Self {
        Outputs { report: "report.json".into(), mesh: None, mesh_format: None, field_dump: None, patch_csv: None }
    }
}

/// On-disk job description. `model` and `data` are built-in names or paths
/// to JSON specs, relative to the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub model: String,
    pub data: String,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub solver: SolveConfig,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default)]
    pub flip_normal: bool,
}

impl JobConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
        serde_json::from_str(&text).map_err(|source| ConfigError::Parse { path: path.into(), source })
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(serde_json::to_vec(self).expect("config serializes"));
        digest.iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
    serde_json::from_str(&text).map_err(|source| ConfigError::Parse { path: path.into(), source })
}

/// A config with model, data and grid resolved.
#[derive(Debug, Clone)]
pub struct Job {
    pub config: JobConfig,
    pub model: LieGroupModel,
    pub data: BjorlingData,
    pub grid: StripGrid,
    pub hash: String,
}

impl Job {
    pub fn resolve(config: JobConfig, base: &Path) -> Result<Self, ConfigError> {
        let model = if builtin_names().contains(&config.model.as_str()) {
            builtin(&config.model)?
        } else {
            load_model(&read_json::<ModelSpecFile>(&base.join(&config.model))?)?
        };
        let data = match builtin_data(&config.data) {
            Ok(d) => d,
            Err(BjorlingError::Unknown(_)) => {
                bjorling::BjorlingData::from_spec(&read_json(&base.join(&config.data))?)?
            }
            Err(e) => return Err(e.into()),
        };
        let (a, b) = data.curve.u_range;
        let epsilon = config.grid.epsilon.unwrap_or(0.1 * (b - a));
        let grid = StripGrid::new(config.grid.n_u, (a, b), config.grid.n_v, epsilon, data.curve.periodic)?;
        config.solver.validate()?;
        config.solver.resolved_scheme(&grid)?;
        if let Some(m) = &config.outputs.mesh {
            if config.outputs.mesh_format.is_none() && MeshFormat::from_path(m).is_none() {
                return Err(ConfigError::Outputs(format!(
                    "cannot infer mesh format of {}; set mesh_format",
                    m.display()
                )));
            }
        }
        let hash = config.hash();
        Ok(Job { config, model, data, grid, hash })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let config = JobConfig::from_path(path)?;
        Job::resolve(config, path.parent().unwrap_or(Path::new(".")))
    }

    fn report(&self) -> VerificationReport {
        VerificationReport::new(self.model.name(), &self.data.name, &self.hash)
    }
}

/// Everything a run produced, for writing to disk or inspecting in tests.
#[derive(Debug)]
pub struct Outcome {
    pub exit: Exit,
    pub report: VerificationReport,
    pub field: Option<SpinorField>,
    pub patch: Option<SurfacePatch>,
    pub normals: Option<GaussMap>,
}

impl Outcome {
    fn stop(exit: Exit, report: VerificationReport) -> Self {
        Outcome { exit, report, field: None, patch: None, normals: None }
    }
}

/// validate → initial spinors → march → reconstruct → verify.
pub fn run_job(job: &Job) -> Outcome {
    let report = job.report();
    if let Err(violations) = bjorling::validate(&job.data, &job.model, job.grid.n_u) {
        let text: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Outcome::stop(Exit::Config, report.failed(Stage::InitialData, text.join("; ")));
    }
    let us = (0..job.grid.n_u).map(|i| job.grid.u(i));
    let psi0 = match initial_line(&job.data, &job.model, us, job.config.flip_normal) {
        Ok(p) => p,
        Err(e) => return Outcome::stop(Exit::Config, report.failed(Stage::InitialData, e)),
    };
    let field = match evolve_strip(&psi0, job.model.connection(), &job.grid, &job.config.solver) {
        Ok(f) => f,
        Err(e @ (SolveError::InvalidConfig(_) | SolveError::LengthMismatch { .. })) => {
            return Outcome::stop(Exit::Config, report.failed(Stage::Solve, e))
        }
        Err(e) => return Outcome::stop(Exit::Abort, report.failed(Stage::Solve, e)),
    };
    verify_field(job, field, report)
}

/// reconstruct → verify on an existing field.
pub fn verify_field(job: &Job, field: SpinorField, report: VerificationReport) -> Outcome {
    let patch = match reconstruct(&job.data.curve, &field, &job.model) {
        Ok(mut p) => {
            p.provenance.config_hash = job.hash.clone();
            p
        }
        Err(e) => {
            let mut o = Outcome::stop(Exit::Abort, report.failed(Stage::Reconstruct, e));
            o.field = Some(field);
            return o;
        }
    };
    match verify_solution(&field, &patch, &job.data, &job.model, &job.config.thresholds) {
        Ok(v) => {
            let (report, normals) = v.into_report(report, &patch);
            let exit = if report.pass { Exit::Pass } else { Exit::Verification };
            Outcome { exit, report, field: Some(field), patch: Some(patch), normals: Some(normals) }
        }
        Err(e) => Outcome {
            exit: Exit::Verification,
            report: report.failed(Stage::Verify, e),
            field: Some(field),
            patch: Some(patch),
            normals: None,
        },
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub output_dir: Option<PathBuf>,
    pub flip_normal: bool,
}

impl RunOptions {
    fn path(&self, p: &Path) -> PathBuf {
        match &self.output_dir {
            Some(d) => d.join(p),
            None => p.to_path_buf(),
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> String {
    format!("{}: {e}", path.display())
}

fn write_report(report: &VerificationReport, path: &Path) -> Result<(), String> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    fs::write(path, report.to_json() + "\n").map_err(|e| io_err(path, e))
}

fn write_artifacts(job: &Job, out: &Outcome, opts: &RunOptions) -> Result<(), String> {
    let o = &job.config.outputs;
    if let Some(dir) = &opts.output_dir {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    if let (Some(path), Some(field)) = (&o.field_dump, &out.field) {
        let path = opts.path(path);
        let f = File::create(&path).map_err(|e| io_err(&path, e))?;
        write_field_dump(field, BufWriter::new(f)).map_err(|e| io_err(&path, e))?;
    }
    if let Some(patch) = &out.patch {
        if let Some(path) = &o.mesh {
            let format = o.mesh_format.or_else(|| MeshFormat::from_path(path)).unwrap_or(MeshFormat::Obj);
            let path = opts.path(path);
            let normals = out.normals.as_ref().map(GaussMap::dense);
            export_mesh(patch, format, &path, normals.as_deref()).map_err(|e| io_err(&path, e))?;
        }
        if let Some(path) = &o.patch_csv {
            let path = opts.path(path);
            let f = File::create(&path).map_err(|e| io_err(&path, e))?;
            write_patch_csv(patch, BufWriter::new(f)).map_err(|e| io_err(&path, e))?;
        }
    }
    Ok(())
}

fn print_summary(report: &VerificationReport) {
    for c in &report.checks {
        let value = c.value.map_or("n/a".to_string(), |v| format!("{v:.3e}"));
        let status = if c.pass { "ok" } else { "FAIL" };
        println!("{:<20} {:>12} <= {:<9.1e} {status}", c.name, value, c.threshold);
    }
    for w in &report.warnings {
        println!("warning: {w}");
    }
    if let Some(e) = &report.error {
        println!("stopped at {:?}: {e}", report.stage);
    }
}

fn load_for_run(config: &Path, opts: &RunOptions) -> Result<Job, ConfigError> {
    let mut cfg = JobConfig::from_path(config)?;
    cfg.flip_normal |= opts.flip_normal;
    Job::resolve(cfg, config.parent().unwrap_or(Path::new(".")))
}

/// Report path for a config that parsed but failed to resolve.
fn early_report_path(config: &Path, opts: &RunOptions) -> Option<PathBuf> {
    JobConfig::from_path(config).ok().map(|c| opts.path(&c.outputs.report))
}

fn config_failure(config: &Path, opts: &RunOptions, e: ConfigError) -> Exit {
    eprintln!("error: {e}");
    if let (Some(path), Ok(cfg)) = (early_report_path(config, opts), JobConfig::from_path(config)) {
        let report = VerificationReport::new(&cfg.model, &cfg.data, &cfg.hash()).failed(Stage::Config, &e);
        if let Err(w) = write_report(&report, &path) {
            eprintln!("error: {w}");
        }
    }
    Exit::Config
}

pub fn cmd_solve(config: &Path, opts: &RunOptions) -> Exit {
    let job = match load_for_run(config, opts) {
        Ok(j) => j,
        Err(e) => return config_failure(config, opts, e),
    };
    let out = run_job(&job);
    print_summary(&out.report);
    let mut exit = out.exit;
    if let Err(e) = write_artifacts(&job, &out, opts) {
        eprintln!("error: {e}");
        exit = Exit::Config;
    }
    if let Err(e) = write_report(&out.report, &opts.path(&job.config.outputs.report)) {
        eprintln!("error: {e}");
        exit = Exit::Config;
    }
    exit
}

pub fn cmd_verify(dump: &Path, config: &Path, opts: &RunOptions) -> Exit {
    let job = match load_for_run(config, opts) {
        Ok(j) => j,
        Err(e) => return config_failure(config, opts, e),
    };
    let field = File::open(dump)
        .map_err(DumpError::from)
        .and_then(|f| read_field_dump(&job.grid, std::io::BufReader::new(f)));
    let mut field = match field {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e}");
            let report = job.report().failed(Stage::Config, &e);
            let _ = write_report(&report, &opts.path(&job.config.outputs.report));
            return Exit::Config;
        }
    };
    field
        .set_trusted(job.config.solver.trust_mask(&job.grid))
        .expect("mask matches grid");
    let out = verify_field(&job, field, job.report());
    print_summary(&out.report);
    match write_report(&out.report, &opts.path(&job.config.outputs.report)) {
        Ok(()) => out.exit,
        Err(e) => {
            eprintln!("error: {e}");
            Exit::Config
        }
    }
}

/// Built-in models with chart domains and nonzero `L^i_{jk}`.
pub fn list_models() -> String {
    let mut s = String::new();
    for name in builtin_names() {
        let m = builtin(name).expect("built-in models load");
        let _ = writeln!(s, "{name}");
        let chart: Vec<String> = m
            .variables()
            .iter()
            .zip(m.chart())
            .map(|(v, c)| match (c.min, c.max) {
                (None, None) => format!("{v} free"),
                (Some(a), None) => format!("{v} > {a}"),
                (None, Some(b)) => format!("{v} < {b}"),
                (Some(a), Some(b)) => format!("{a} < {v} < {b}"),
            })
            .collect();
        let _ = writeln!(s, "  chart: {}", chart.join(", "));
        let nz = m.connection().nonzero();
        if nz.is_empty() {
            let _ = writeln!(s, "  L: 0");
        } else {
            let entries: Vec<String> =
                nz.iter().map(|(i, j, k, v)| format!("L^{}_{}{} = {v}", i + 1, j + 1, k + 1)).collect();
            let _ = writeln!(s, "  L: {}", entries.join(", "));
        }
    }
    s
}

/// Max node distance between the pipeline and the Schwarz oracle over
/// trusted nodes.
pub fn oracle_distance(job: &Job) -> Result<(f64, Outcome), String> {
    if !job.model.is_flat_euclidean() {
        return Err(format!("oracle-compare needs the Euclidean model, got '{}'", job.model.name()));
    }
    let out = run_job(job);
    let Some(patch) = &out.patch else {
        return Err(out.report.error.clone().unwrap_or_else(|| "no patch".into()));
    };
    let oracle = euclidean_schwarz_oracle(&job.data, &job.model, &job.grid).map_err(|e| e.to_string())?;
    let d = patch
        .points
        .iter()
        .zip(&oracle.points)
        .zip(&patch.trusted)
        .filter(|(_, t)| **t)
        .map(|((a, b), _)| (a - b).norm())
        .fold(0.0, f64::max);
    Ok((d, out))
}

pub const ORACLE_TOL: f64 = 1e-6;

pub fn cmd_oracle_compare(config: &Path, opts: &RunOptions) -> Exit {
    let job = match load_for_run(config, opts) {
        Ok(j) => j,
        Err(e) => return config_failure(config, opts, e),
    };
    match oracle_distance(&job) {
        Ok((d, _)) => {
            let ok = d <= ORACLE_TOL;
            println!("max node distance to the Schwarz oracle: {d:.3e} ({})", if ok { "ok" } else { "FAIL" });
            if ok {
                Exit::Pass
            } else {
                Exit::Verification
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            if job.model.is_flat_euclidean() {
                Exit::Abort
            } else {
                Exit::Config
            }
        }
    }
}

/// `--threads`, else `BJORLING_THREADS`, else rayon's default.
pub fn configure_threads(flag: Option<usize>) -> Result<(), String> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var("BJORLING_THREADS") {
            Ok(v) => Some(v.trim().parse::<usize>().map_err(|e| format!("BJORLING_THREADS: {e}"))?),
            Err(_) => None,
        },
    };
    match n {
        Some(0) => Err("thread count must be positive".into()),
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string()),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests;
