use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MIN_NODES_U: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("epsilon must be positive and finite, got {0}")]
    Epsilon(f64),
    #[error("n_u must be at least {MIN_NODES_U}, got {0}")]
    TooFewU(usize),
    #[error("n_v must be at least 1")]
    TooFewV,
    #[error("u_range [{0}, {1}] is empty or not finite")]
    Range(f64, f64),
}

/// Uniform grid on the strip `[u_min, u_max] × [-ε, ε]`.
///
/// Levels are indexed `j = 0..=2 n_v` with `v_j = (j - n_v) h_v`, so level
/// `n_v` is the initial line. Node `(i, j)` is stored at `j * n_u + i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripGrid {
    pub n_u: usize,
    pub u_range: (f64, f64),
    pub n_v: usize,
    pub epsilon: f64,
    pub periodic: bool,
    /// Base point `z0 = (u0, 0)`.
    pub u0: f64,
}

impl StripGrid {
    pub fn new(
        n_u: usize,
        u_range: (f64, f64),
        n_v: usize,
        epsilon: f64,
        periodic: bool,
    ) -> Result<Self, GridError> {
        let grid = Self::new_unchecked(n_u, u_range, n_v, epsilon, periodic);
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(GridError::Epsilon(epsilon));
        }
        if n_u < MIN_NODES_U {
            return Err(GridError::TooFewU(n_u));
        }
        if n_v == 0 {
            return Err(GridError::TooFewV);
        }
        let (a, b) = u_range;
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(GridError::Range(a, b));
        }
        Ok(grid)
    }

    /// No validation; for tiny test patches and closed-form fixtures.
    pub fn new_unchecked(
        n_u: usize,
        u_range: (f64, f64),
        n_v: usize,
        epsilon: f64,
        periodic: bool,
    ) -> Self {
        StripGrid { n_u, u_range, n_v, epsilon, periodic, u0: u_range.0 }
    }

    pub fn h_u(&self) -> f64 {
        let span = self.u_range.1 - self.u_range.0;
        if self.periodic {
            span / self.n_u as f64
        } else {
            span / (self.n_u - 1) as f64
        }
    }

    pub fn h_v(&self) -> f64 {
        self.epsilon / self.n_v as f64
    }

    pub fn u(&self, i: usize) -> f64 {
        self.u_range.0 + i as f64 * self.h_u()
    }

    pub fn v(&self, j: usize) -> f64 {
        (j as f64 - self.n_v as f64) * self.h_v()
    }

    pub fn n_levels(&self) -> usize {
        2 * self.n_v + 1
    }

    /// Index of the `v = 0` level.
    pub fn center(&self) -> usize {
        self.n_v
    }

    pub fn len(&self) -> usize {
        self.n_u * self.n_levels()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n_u + i
    }

    pub fn node(&self, k: usize) -> (usize, usize) {
        (k % self.n_u, k / self.n_u)
    }

    /// Distance from `u_i` to the nearest end of a non-periodic interval.
    pub fn boundary_distance(&self, i: usize) -> f64 {
        if self.periodic {
            f64::INFINITY
        } else {
            (i.min(self.n_u - 1 - i)) as f64 * self.h_u()
        }
    }
}
