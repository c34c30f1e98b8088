//! Finite-difference weights on uniform grids, with periodic wrap or
//! one-sided closures of matching order at the ends.

use std::ops::{Add, Mul};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StencilOrder {
    Second,
    #[default]
    Fourth,
}

/// Resolved stencil: node indices and weights (already divided by `h^p`).
#[derive(Debug, Clone, Copy)]
pub struct Stencil {
    idx: [usize; 6],
    w: [f64; 6],
    len: usize,
}

impl Stencil {
    fn build(points: &[(isize, f64)], base: usize, n: usize, periodic: bool, scale: f64) -> Stencil {
        let mut s = Stencil { idx: [0; 6], w: [0.0; 6], len: points.len() };
        for (slot, &(off, w)) in points.iter().enumerate() {
            let j = base as isize + off;
            s.idx[slot] = if periodic { j.rem_euclid(n as isize) as usize } else { j as usize };
            s.w[slot] = w * scale;
        }
        s
    }

    pub fn apply<T>(&self, value: impl Fn(usize) -> T) -> T
    where
        T: Copy + Add<Output = T> + Mul<f64, Output = T>,
    {
        let mut acc = value(self.idx[0]) * self.w[0];
        for k in 1..self.len {
            acc = acc + value(self.idx[k]) * self.w[k];
        }
        acc
    }

    pub fn indices(&self) -> &[usize] {
        &self.idx[..self.len]
    }
}

const D1_C2: [(isize, f64); 2] = [(-1, -0.5), (1, 0.5)];
const D1_L2: [(isize, f64); 3] = [(0, -1.5), (1, 2.0), (2, -0.5)];
const D1_C4: [(isize, f64); 4] = [(-2, 1.0 / 12.0), (-1, -8.0 / 12.0), (1, 8.0 / 12.0), (2, -1.0 / 12.0)];
const D1_L4_0: [(isize, f64); 5] =
    [(0, -25.0 / 12.0), (1, 48.0 / 12.0), (2, -36.0 / 12.0), (3, 16.0 / 12.0), (4, -3.0 / 12.0)];
const D1_L4_1: [(isize, f64); 5] =
    [(-1, -3.0 / 12.0), (0, -10.0 / 12.0), (1, 18.0 / 12.0), (2, -6.0 / 12.0), (3, 1.0 / 12.0)];

const D2_C2: [(isize, f64); 3] = [(-1, 1.0), (0, -2.0), (1, 1.0)];
const D2_L2: [(isize, f64); 4] = [(0, 2.0), (1, -5.0), (2, 4.0), (3, -1.0)];
const D2_C4: [(isize, f64); 5] =
    [(-2, -1.0 / 12.0), (-1, 16.0 / 12.0), (0, -30.0 / 12.0), (1, 16.0 / 12.0), (2, -1.0 / 12.0)];
const D2_L4_0: [(isize, f64); 6] = [
    (0, 45.0 / 12.0),
    (1, -154.0 / 12.0),
    (2, 214.0 / 12.0),
    (3, -156.0 / 12.0),
    (4, 61.0 / 12.0),
    (5, -10.0 / 12.0),
];
const D2_L4_1: [(isize, f64); 6] = [
    (-1, 10.0 / 12.0),
    (0, -15.0 / 12.0),
    (1, -4.0 / 12.0),
    (2, 14.0 / 12.0),
    (3, -6.0 / 12.0),
    (4, 1.0 / 12.0),
];

fn mirror(points: &[(isize, f64)], odd: bool) -> Vec<(isize, f64)> {
    let sign = if odd { -1.0 } else { 1.0 };
    points.iter().map(|&(o, w)| (-o, sign * w)).collect()
}

fn select(
    n: usize,
    i: usize,
    periodic: bool,
    centered: &[(isize, f64)],
    left: &[&[(isize, f64)]],
    odd: bool,
) -> Vec<(isize, f64)> {
    let reach = left.len();
    if periodic || (i >= reach && i + reach < n) {
        return centered.to_vec();
    }
    if i < reach {
        left[i].to_vec()
    } else {
        mirror(left[n - 1 - i], odd)
    }
}

/// First-derivative stencil at node `i` of `n` nodes with spacing `h`.
pub fn first_derivative(n: usize, i: usize, h: f64, order: StencilOrder, periodic: bool) -> Stencil {
    let pts = match order {
        StencilOrder::Second => select(n, i, periodic, &D1_C2, &[&D1_L2], true),
        StencilOrder::Fourth => select(n, i, periodic, &D1_C4, &[&D1_L4_0, &D1_L4_1], true),
    };
    Stencil::build(&pts, i, n, periodic, 1.0 / h)
}

/// Second-derivative stencil at node `i` of `n` nodes with spacing `h`.
pub fn second_derivative(n: usize, i: usize, h: f64, order: StencilOrder, periodic: bool) -> Stencil {
    let pts = match order {
        StencilOrder::Second => select(n, i, periodic, &D2_C2, &[&D2_L2], false),
        StencilOrder::Fourth => select(n, i, periodic, &D2_C4, &[&D2_L4_0, &D2_L4_1], false),
    };
    Stencil::build(&pts, i, n, periodic, 1.0 / (h * h))
}

/// Minimum node count a stencil of this order needs.
pub fn min_nodes(order: StencilOrder) -> usize {
    match order {
        StencilOrder::Second => 4,
        StencilOrder::Fourth => 6,
    }
}

/// Half-width of the centered stencil.
pub fn reach(order: StencilOrder) -> usize {
    match order {
        StencilOrder::Second => 1,
        StencilOrder::Fourth => 2,
    }
}
