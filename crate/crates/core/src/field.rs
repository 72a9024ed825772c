//! Uniform grids on `[-L, L]` and piecewise-cubic fields sampled on them.

use serde::{Deserialize, Serialize};

use crate::error::{config, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub half_width: f64,
    pub nx: usize,
}

impl Grid {
    pub fn new(half_width: f64, nx: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(config(format!("grid half width must be positive, got {half_width}")));
        }
        if nx < 4 {
            return Err(config(format!("grid needs at least 4 nodes, got {nx}")));
        }
        Ok(Self { half_width, nx })
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / (self.nx - 1) as f64
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.dx()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.x(i)).collect()
    }

    /// Cubic Lagrange stencil for the point `x`: first node index and the four
    /// weights. Near the ends the stencil is shifted inward. Returns `None`
    /// outside `[-L, L]`.
    #[inline]
    pub fn stencil(&self, x: f64) -> Option<(usize, [f64; 4])> {
        let l = self.half_width;
        if !(x >= -l && x <= l) {
            return None;
        }
        let u = (x + l) / self.dx();
        let cell = (u.floor() as isize).clamp(0, self.nx as isize - 2);
        let start = (cell - 1).clamp(0, self.nx as isize - 4) as usize;
        Some((start, lagrange4(u - start as f64)))
    }
}

/// Weights of the cubic through nodes 0, 1, 2, 3 evaluated at `p`.
#[inline]
pub(crate) fn lagrange4(p: f64) -> [f64; 4] {
    let a = p;
    let b = p - 1.0;
    let c = p - 2.0;
    let d = p - 3.0;
    [
        -b * c * d / 6.0,
        a * c * d / 2.0,
        -a * b * d / 2.0,
        a * b * c / 6.0,
    ]
}

/// A function of `x` at one time, stored on a grid, extended by constants
/// `far_left` / `far_right` outside the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field {
    pub t: f64,
    pub grid: Grid,
    pub values: Vec<f64>,
    pub far_left: f64,
    pub far_right: f64,
}

impl Field {
    pub fn new(t: f64, grid: Grid, values: Vec<f64>, far_left: f64, far_right: f64) -> Result<Self> {
        if values.len() != grid.nx {
            return Err(config(format!(
                "field has {} values for a grid of {} nodes",
                values.len(),
                grid.nx
            )));
        }
        Ok(Self { t, grid, values, far_left, far_right })
    }

    pub fn from_fn(t: f64, grid: Grid, far_left: f64, far_right: f64, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..grid.nx).map(|i| f(grid.x(i))).collect();
        Self { t, grid, values, far_left, far_right }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self.grid.stencil(x) {
            Some((start, w)) => {
                let v = &self.values[start..start + 4];
                w[0] * v[0] + w[1] * v[1] + w[2] * v[2] + w[3] * v[3]
            }
            None if x < 0.0 => self.far_left,
            None => self.far_right,
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Central first difference at interior nodes; one-sided at the ends.
    pub fn dx_values(&self) -> Vec<f64> {
        let h = self.grid.dx();
        let v = &self.values;
        let n = v.len();
        (0..n)
            .map(|i| match i {
                0 => (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h),
                i if i == n - 1 => (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h),
                i => (v[i + 1] - v[i - 1]) / (2.0 * h),
            })
            .collect()
    }

    /// Central second difference at interior nodes; copied from the neighbour at the ends.
    pub fn dxx_values(&self) -> Vec<f64> {
        let h2 = self.grid.dx().powi(2);
        let v = &self.values;
        let n = v.len();
        let mut out = vec![0.0; n];
        for i in 1..n - 1 {
            out[i] = (v[i + 1] - 2.0 * v[i] + v[i - 1]) / h2;
        }
        out[0] = out[1];
        out[n - 1] = out[n - 2];
        out
    }

    /// Samples this field on another grid.
    pub fn resample(&self, grid: Grid) -> Field {
        Field::from_fn(self.t, grid, self.far_left, self.far_right, |x| self.eval(x))
    }
}
