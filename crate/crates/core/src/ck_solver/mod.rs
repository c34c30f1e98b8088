//! March of the frame holomorphicity system off the initial line:
//! `∂_v ψ_i = i(∂_u ψ_i + 2 Σ L^i_{jk} conj(ψ_j) ψ_k)`, RK4 in `v`.

mod grid;
mod operator;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use grid::{GridError, StripGrid, MIN_NODES_U};
use operator::UOperator;

use crate::models::ConnectionCoeffs;
use crate::weierstrass::{ResidualStat, SpinorField, SpinorTriple};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Spectral for periodic data, finite differences otherwise.
    #[default]
    Auto,
    SpectralFourier,
    #[serde(rename = "finite-difference-order-4")]
    FiniteDifferenceOrder4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Formulation {
    /// Evolve ψ1, ψ2, ψ3 with their own equations.
    #[default]
    EvolveAllThree,
    /// Evolve ψ1, ψ2 and take ψ3 as the root of `-ψ1² - ψ2²` continuous
    /// with its previous value.
    SquareRoot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveConfig {
    pub scheme: Scheme,
    /// Fraction of the spectrum damped per step (spectral), or damping of the
    /// Nyquist mode per step (finite differences). In `[0, 1]`.
    pub filter: f64,
    /// Fourier modes below this fraction of the largest one are zeroed
    /// after each step (spectral only; 0 disables).
    pub noise_floor: f64,
    pub max_growth_factor: f64,
    /// Width in nodes of the cosine taper at the ends of a non-periodic interval.
    pub taper_width: usize,
    /// Extra untrusted nodes beyond the taper and the `|v|` cone.
    pub trim_margin: usize,
    /// Slope of the untrusted cone: nodes within `cone_slope·|v|` (plus the
    /// taper and margin) of an interval end are untrusted.
    pub cone_slope: f64,
    pub formulation: Formulation,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            scheme: Scheme::Auto,
            filter: 1.0 / 3.0,
            noise_floor: 1e-13,
            max_growth_factor: 1e3,
            taper_width: 8,
            trim_margin: 8,
            cone_slope: 5.0,
            formulation: Formulation::EvolveAllThree,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<(), SolveError> {
        let bad = |m: String| Err(SolveError::InvalidConfig(m));
        if !(0.0..=1.0).contains(&self.filter) {
            return bad(format!("filter strength {} outside [0, 1]", self.filter));
        }
        if !(0.0..1.0).contains(&self.noise_floor) {
            return bad(format!("noise_floor {} outside [0, 1)", self.noise_floor));
        }
        if !(self.max_growth_factor > 1.0) {
            return bad(format!("max_growth_factor {} must exceed 1", self.max_growth_factor));
        }
        if !(self.cone_slope >= 1.0) {
            return bad(format!("cone_slope {} must be at least 1", self.cone_slope));
        }
        Ok(())
    }

    /// The scheme actually used on `grid`.
    pub fn resolved_scheme(&self, grid: &StripGrid) -> Result<Scheme, SolveError> {
        match (self.scheme, grid.periodic) {
            (Scheme::Auto, true) => Ok(Scheme::SpectralFourier),
            (Scheme::Auto, false) => Ok(Scheme::FiniteDifferenceOrder4),
            (Scheme::SpectralFourier, false) => Err(SolveError::InvalidConfig(
                "spectral-fourier needs periodic data".into(),
            )),
            (s, _) => Ok(s),
        }
    }

    /// Trust mask of the march: for non-periodic data, nodes closer to an end
    /// of the interval than `cone_slope·|v|` plus the taper and margin are
    /// untrusted.
    pub fn trust_mask(&self, grid: &StripGrid) -> Vec<bool> {
        let pad = (self.taper_width + self.trim_margin) as f64 * grid.h_u();
        (0..grid.len())
            .map(|k| {
                let (i, j) = grid.node(k);
                grid.periodic || grid.boundary_distance(i) >= self.cone_slope * grid.v(j).abs() + pad - 1e-12
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("invalid solver config: {0}")]
    InvalidConfig(String),
    #[error("initial data has {found} nodes, grid has n_u = {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("initial data is not finite at node {0}")]
    NonFiniteInitial(usize),
    #[error(
        "blowup at v = {v} (level {level}): |ψ| = {magnitude:e} at node {node:?} exceeds {limit:e}"
    )]
    Blowup { v: f64, level: usize, node: [usize; 2], magnitude: f64, limit: f64 },
    #[error("NaN at v = {v} (level {level})")]
    NotANumber { v: f64, level: usize },
}

impl SolveError {
    /// Last `v` reached before an abort, if any.
    pub fn v_reached(&self) -> Option<f64> {
        match self {
            SolveError::Blowup { v, .. } | SolveError::NotANumber { v, .. } => Some(*v),
            _ => None,
        }
    }
}

type State = [Vec<Complex64>; 3];

struct Marcher<'a> {
    l: &'a ConnectionCoeffs,
    op: UOperator,
    formulation: Formulation,
    du: Vec<Complex64>,
    /// ψ3 at the start of the step (square-root formulation).
    psi3_ref: Vec<Complex64>,
}

fn root_near(w: Complex64, near: Complex64) -> Complex64 {
    let r = w.sqrt();
    if (r - near).norm_sqr() <= (-r - near).norm_sqr() {
        r
    } else {
        -r
    }
}

impl Marcher<'_> {
    fn evolved(&self) -> usize {
        match self.formulation {
            Formulation::EvolveAllThree => 3,
            Formulation::SquareRoot => 2,
        }
    }

    fn close(&self, y: &mut State) {
        if self.formulation == Formulation::SquareRoot {
            for i in 0..y[2].len() {
                y[2][i] = root_near(-y[0][i] * y[0][i] - y[1][i] * y[1][i], self.psi3_ref[i]);
            }
        }
    }

    fn rhs(&mut self, y: &State, out: &mut State) {
        let n = y[0].len();
        let m = self.evolved();
        for c in 0..m {
            self.op.derivative(&y[c], &mut self.du);
            out[c].copy_from_slice(&self.du);
        }
        for i in 0..n {
            let psi = [y[0][i], y[1][i], y[2][i]];
            let q = self.l.quadratic(&psi);
            let w = self.op.taper(i);
            for c in 0..m {
                out[c][i] = I * (out[c][i] * w + 2.0 * q[c]);
            }
        }
    }

    fn step(&mut self, y: &mut State, h: f64, k: &mut [State; 4], tmp: &mut State) {
        let m = self.evolved();
        if self.formulation == Formulation::SquareRoot {
            self.psi3_ref.copy_from_slice(&y[2]);
        }
        self.rhs(y, &mut k[0]);
        for (s, frac) in [(1, 0.5), (2, 0.5), (3, 1.0)] {
            for c in 0..m {
                for i in 0..y[c].len() {
                    tmp[c][i] = y[c][i] + k[s - 1][c][i] * (h * frac);
                }
            }
            if m == 2 {
                tmp[2].copy_from_slice(&y[2]);
            }
            self.close(tmp);
            self.rhs(tmp, &mut k[s]);
        }
        for c in 0..m {
            for i in 0..y[c].len() {
                y[c][i] += (k[0][c][i] + 2.0 * k[1][c][i] + 2.0 * k[2][c][i] + k[3][c][i]) * (h / 6.0);
            }
        }
        let [a, b, c] = y;
        if m == 3 {
            self.op.filter(&mut [a, b, c]);
        } else {
            self.op.filter(&mut [a, b]);
        }
        self.close(y);
    }
}

/// Marches `psi0` (one triple per u-node) to both sides of `v = 0`.
///
/// The `v = 0` level of the result is `psi0` bitwise. Aborts when a node
/// exceeds `max_growth_factor` times the RMS of `psi0`, or on NaN.
pub fn evolve_strip(
    psi0: &[SpinorTriple],
    l: &ConnectionCoeffs,
    grid: &StripGrid,
    config: &SolveConfig,
) -> Result<SpinorField, SolveError> {
    config.validate()?;
    let n = grid.n_u;
    if psi0.len() != n {
        return Err(SolveError::LengthMismatch { expected: n, found: psi0.len() });
    }
    if let Some(bad) = psi0.iter().position(|p| !p.is_finite()) {
        return Err(SolveError::NonFiniteInitial(bad));
    }
    let scheme = config.resolved_scheme(grid)?;
    let rms0 = (psi0.iter().map(SpinorTriple::norm_sqr).sum::<f64>() / n as f64).sqrt();
    let limit = config.max_growth_factor * rms0;

    let mut values = vec![SpinorTriple::ZERO; grid.len()];
    let center = grid.center();
    values[center * n..(center + 1) * n].copy_from_slice(psi0);

    for dir in [1isize, -1] {
        let op = match scheme {
            Scheme::SpectralFourier => UOperator::spectral(grid, config.filter, config.noise_floor),
            _ => UOperator::fd4(grid, config.filter, config.taper_width),
        };
        let mut marcher = Marcher {
            l,
            op,
            formulation: config.formulation,
            du: vec![ZERO; n],
            psi3_ref: vec![ZERO; n],
        };
        let mut y: State = std::array::from_fn(|c| psi0.iter().map(|p| p.0[c]).collect());
        let mut k: [State; 4] = std::array::from_fn(|_| std::array::from_fn(|_| vec![ZERO; n]));
        let mut tmp: State = std::array::from_fn(|_| vec![ZERO; n]);
        let h = dir as f64 * grid.h_v();
        for s in 1..=grid.n_v {
            marcher.step(&mut y, h, &mut k, &mut tmp);
            let level = (center as isize + dir * s as isize) as usize;
            let last_v = grid.v((center as isize + dir * (s as isize - 1)) as usize);
            let mut worst = (0.0f64, 0usize);
            for i in 0..n {
                let mag = (y[0][i].norm_sqr() + y[1][i].norm_sqr() + y[2][i].norm_sqr()).sqrt();
                if mag.is_nan() {
                    return Err(SolveError::NotANumber { v: last_v, level });
                }
                if mag > worst.0 {
                    worst = (mag, i);
                }
            }
            if rms0 > 0.0 && worst.0 > limit {
                return Err(SolveError::Blowup {
                    v: last_v,
                    level,
                    node: [worst.1, level],
                    magnitude: worst.0,
                    limit,
                });
            }
            for i in 0..n {
                values[level * n + i] = SpinorTriple([y[0][i], y[1][i], y[2][i]]);
            }
        }
    }
    let trusted = config.trust_mask(grid);
    Ok(SpinorField::new(grid.clone(), values, trusted).expect("sizes match the grid"))
}

/// Max over trusted nodes of `|ψ1² + ψ2² + ψ3²|`, normalized by the field's
/// mean `Σ|ψ_i|²`.
pub fn constraint_drift(field: &SpinorField) -> ResidualStat {
    let rms2 = field.rms().powi(2);
    let scale = if rms2 > 0.0 { 1.0 / rms2 } else { 1.0 };
    let vals: Vec<Option<f64>> = field
        .values()
        .iter()
        .zip(field.trusted())
        .map(|(p, t)| t.then(|| p.square_sum().norm() * scale))
        .collect();
    ResidualStat::from_nodes("constraint_drift", field.grid(), &vals)
}
