//! u-derivative operators and per-step filters for the strip march.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::StripGrid;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Exponential filter `exp(-α ((η - η_c)/(1 - η_c))^p)` above the cutoff.
const FILTER_ALPHA: f64 = 36.0;
const FILTER_ORDER: i32 = 8;

/// Binomial row for the 10th-order explicit filter.
const BINOM10: [f64; 11] = [1., 10., 45., 120., 210., 252., 210., 120., 45., 10., 1.];

pub(crate) enum UOperator {
    Spectral(Spectral),
    Fd4(Fd4),
}

pub(crate) struct Spectral {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// `i k_m / n` (inverse normalization folded in).
    ik: Vec<Complex64>,
    /// Low-pass factor per mode, `1/n` folded in.
    sigma: Vec<f64>,
    noise_floor: f64,
    buf: Vec<Complex64>,
    spectra: [Vec<Complex64>; 3],
}

pub(crate) struct Fd4 {
    n: usize,
    h: f64,
    periodic: bool,
    strength: f64,
    taper: Vec<f64>,
    tmp: Vec<Complex64>,
}

impl UOperator {
    pub(crate) fn spectral(grid: &StripGrid, strength: f64, noise_floor: f64) -> Self {
        let n = grid.n_u;
        let mut planner = FftPlanner::new();
        let period = grid.u_range.1 - grid.u_range.0;
        let half = n / 2;
        let cut = 1.0 - strength;
        let mut ik = Vec::with_capacity(n);
        let mut sigma = Vec::with_capacity(n);
        for m in 0..n {
            let signed = if m <= half { m as f64 } else { m as f64 - n as f64 };
            let k = if n % 2 == 0 && m == half { 0.0 } else { 2.0 * PI * signed / period };
            ik.push(I * k / n as f64);
            let eta = signed.abs() / half as f64;
            let s = if strength > 0.0 && eta > cut {
                (-FILTER_ALPHA * ((eta - cut) / strength).powi(FILTER_ORDER)).exp()
            } else {
                1.0
            };
            sigma.push(s / n as f64);
        }
        UOperator::Spectral(Spectral {
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
            ik,
            sigma,
            noise_floor,
            buf: vec![ZERO; n],
            spectra: [vec![ZERO; n], vec![ZERO; n], vec![ZERO; n]],
        })
    }

    pub(crate) fn fd4(grid: &StripGrid, strength: f64, taper_width: usize) -> Self {
        let n = grid.n_u;
        let taper = (0..n)
            .map(|i| {
                let d = i.min(n - 1 - i);
                if grid.periodic || d >= taper_width {
                    1.0
                } else {
                    0.5 * (1.0 - (PI * d as f64 / taper_width as f64).cos())
                }
            })
            .collect();
        UOperator::Fd4(Fd4 {
            n,
            h: grid.h_u(),
            periodic: grid.periodic,
            strength,
            taper,
            tmp: vec![ZERO; n],
        })
    }

    /// `out = ∂_u f`.
    pub(crate) fn derivative(&mut self, f: &[Complex64], out: &mut [Complex64]) {
        match self {
            UOperator::Spectral(s) => {
                s.buf.copy_from_slice(f);
                s.fwd.process(&mut s.buf);
                for (b, ik) in s.buf.iter_mut().zip(&s.ik) {
                    *b *= ik;
                }
                s.inv.process(&mut s.buf);
                out.copy_from_slice(&s.buf);
            }
            UOperator::Fd4(d) => d.derivative(f, out),
        }
    }

    /// Damping weight applied to `∂_u` at node `i`.
    pub(crate) fn taper(&self, i: usize) -> f64 {
        match self {
            UOperator::Spectral(_) => 1.0,
            UOperator::Fd4(d) => d.taper[i],
        }
    }

    /// Per-step low-pass filter applied to the evolved components.
    pub(crate) fn filter(&mut self, comps: &mut [&mut Vec<Complex64>]) {
        match self {
            UOperator::Spectral(s) => s.filter(comps),
            UOperator::Fd4(d) => {
                for c in comps.iter_mut() {
                    d.filter(c);
                }
            }
        }
    }
}

impl Spectral {
    fn filter(&mut self, comps: &mut [&mut Vec<Complex64>]) {
        let mut peak: f64 = 0.0;
        for (c, spec) in comps.iter().zip(self.spectra.iter_mut()) {
            spec.copy_from_slice(c);
            self.fwd.process(spec);
            for (z, s) in spec.iter_mut().zip(&self.sigma) {
                *z *= *s;
                peak = peak.max(z.norm());
            }
        }
        // modes at rounding level only seed the instability; drop them
        let floor = self.noise_floor * peak;
        for (c, spec) in comps.iter_mut().zip(self.spectra.iter_mut()) {
            if floor > 0.0 {
                for z in spec.iter_mut() {
                    if z.norm() < floor {
                        *z = ZERO;
                    }
                }
            }
            self.inv.process(spec);
            c.copy_from_slice(spec);
        }
    }
}

impl Fd4 {
    fn at(&self, f: &[Complex64], i: isize) -> Complex64 {
        f[i.rem_euclid(self.n as isize) as usize]
    }

    fn derivative(&self, f: &[Complex64], out: &mut [Complex64]) {
        let n = self.n;
        let s = 1.0 / (12.0 * self.h);
        for i in 0..n {
            let ii = i as isize;
            out[i] = if self.periodic || (i >= 2 && i + 2 < n) {
                (self.at(f, ii - 2) - 8.0 * self.at(f, ii - 1) + 8.0 * self.at(f, ii + 1)
                    - self.at(f, ii + 2))
                    * s
            } else if i == 0 {
                (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) * s
            } else if i == 1 {
                (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) * s
            } else if i == n - 2 {
                (3.0 * f[n - 1] + 10.0 * f[n - 2] - 18.0 * f[n - 3] + 6.0 * f[n - 4] - f[n - 5]) * s
            } else {
                (25.0 * f[n - 1] - 48.0 * f[n - 2] + 36.0 * f[n - 3] - 16.0 * f[n - 4]
                    + 3.0 * f[n - 5])
                    * s
            };
        }
    }

    /// `f ← f + s 2⁻¹⁰ (δ²)⁵ f`; symbol `1 - s sin¹⁰(θ/2)`.
    fn filter(&mut self, f: &mut [Complex64]) {
        if self.strength == 0.0 {
            return;
        }
        let n = self.n;
        let w = self.strength / 1024.0;
        self.tmp.copy_from_slice(f);
        let (lo, hi) = if self.periodic { (0, n) } else { (5, n.saturating_sub(5)) };
        for i in lo..hi {
            let mut acc = ZERO;
            for (m, b) in BINOM10.iter().enumerate() {
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                acc += self.at(&self.tmp, i as isize + m as isize - 5) * (sign * b);
            }
            f[i] = self.tmp[i] + acc * w;
        }
    }
}
