//! Structure constants of a frame and the Levi-Civita connection
//! coefficients they determine.

use num_complex::Complex64;
use serde::Serialize;

/// `C^l_{jk}` with `[E_j, E_k] = Σ_l C^l_{jk} E_l`; stored as `c[l][j][k]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct StructureConstants(pub [[[f64; 3]; 3]; 3]);

impl StructureConstants {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn get(&self, l: usize, j: usize, k: usize) -> f64 {
        self.0[l][j][k]
    }

    /// Sets `C^l_{jk} = value` and `C^l_{kj} = -value`.
    pub fn set_bracket(&mut self, l: usize, j: usize, k: usize, value: f64) {
        self.0[l][j][k] = value;
        self.0[l][k][j] = -value;
    }

    /// Largest `|C^l_{jk} + C^l_{kj}|`.
    pub fn antisymmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for l in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    worst = worst.max((self.0[l][j][k] + self.0[l][k][j]).abs());
                }
            }
        }
        worst
    }

    /// Largest component of the cyclic sum `[E_i,[E_j,E_k]] + cyc`.
    pub fn jacobi_defect(&self) -> f64 {
        let c = &self.0;
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        let mut s = 0.0;
                        for m in 0..3 {
                            s += c[m][j][k] * c[l][i][m]
                                + c[m][k][i] * c[l][j][m]
                                + c[m][i][j] * c[l][k][m];
                        }
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut worst: f64 = 0.0;
        for l in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    worst = worst.max((self.0[l][j][k] - other.0[l][j][k]).abs());
                }
            }
        }
        worst
    }
}

/// `L^i_{jk} = g(∇_{E_j} E_k, E_i)`; stored as `l[i][j][k]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ConnectionCoeffs(pub [[[f64; 3]; 3]; 3]);

impl ConnectionCoeffs {
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.0[i][j][k]
    }

    /// Non-zero entries as `(i, j, k, value)`, in index order.
    pub fn nonzero(&self) -> Vec<(usize, usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    let v = self.0[i][j][k];
                    if v != 0.0 {
                        out.push((i, j, k, v));
                    }
                }
            }
        }
        out
    }

    /// Largest `|L^i_{jk} + L^k_{ji}|`; zero for a metric connection.
    pub fn antisymmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    worst = worst.max((self.0[i][j][k] + self.0[k][j][i]).abs());
                }
            }
        }
        worst
    }

    /// The quadratic term `Σ_{j,k} L^i_{jk} conj(ψ_j) ψ_k` of the frame
    /// holomorphicity equations.
    pub fn quadratic(&self, psi: &[Complex64; 3]) -> [Complex64; 3] {
        let mut out = [Complex64::new(0.0, 0.0); 3];
        for (i, o) in out.iter_mut().enumerate() {
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..3 {
                let pj = psi[j].conj();
                for k in 0..3 {
                    let l = self.0[i][j][k];
                    if l != 0.0 {
                        s += pj * psi[k] * l;
                    }
                }
            }
            *o = s;
        }
        out
    }
}

/// Koszul formula for an orthonormal left-invariant frame:
/// `2 L^i_{jk} = C^i_{jk} - C^j_{ki} + C^k_{ij}`.
///
/// The result is antisymmetrized in `(i, k)` so that `L^i_{jk} + L^k_{ji}`
/// is exactly zero in floating point.
pub fn connection_from_structure(c: &StructureConstants) -> ConnectionCoeffs {
    let c = &c.0;
    let mut raw = [[[0.0; 3]; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                raw[i][j][k] = 0.5 * (c[i][j][k] - c[j][k][i] + c[k][i][j]);
            }
        }
    }
    let mut l = [[[0.0; 3]; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                l[i][j][k] = 0.5 * (raw[i][j][k] - raw[k][j][i]);
            }
        }
    }
    ConnectionCoeffs(l)
}
