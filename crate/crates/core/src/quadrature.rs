//! Quadrature rules and their configuration.
//!
//! Gaussian-weighted integrals over the real line are written in the scaled
//! variable `lambda` with weight `exp(-lambda^2)`; node placement is then
//! independent of the kernel width.

use std::num::NonZeroUsize;

use gauss_quad::hermite::GaussHermite;
use gauss_quad::legendre::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::error::{config, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureSpec {
    /// Nodes of the fixed-order rule used for Gaussian-weighted integrals.
    pub hermite_order: usize,
    /// Panels for the singular time integral.
    pub panel_count: usize,
    /// Gaussian mass allowed outside the truncated integration window.
    pub tail_epsilon: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            hermite_order: 60,
            panel_count: 4,
            tail_epsilon: 1e-14,
        }
    }
}

impl QuadratureSpec {
    pub fn new(hermite_order: usize, panel_count: usize, tail_epsilon: f64) -> Result<Self> {
        let q = Self {
            hermite_order,
            panel_count,
            tail_epsilon,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if self.hermite_order < 2 {
            return Err(config(format!(
                "hermite_order must be at least 2, got {}",
                self.hermite_order
            )));
        }
        if self.panel_count == 0 {
            return Err(config("panel_count must be positive"));
        }
        if !(self.tail_epsilon > 0.0 && self.tail_epsilon <= 1e-6) {
            return Err(config(format!(
                "tail_epsilon must lie in (0, 1e-6], got {:e}",
                self.tail_epsilon
            )));
        }
        Ok(())
    }

    /// Smallest `lambda_max` with `erfc(lambda_max) <= tail_epsilon`, i.e. the
    /// normalized Gaussian mass outside `[-lambda_max, lambda_max]` is below the
    /// tail budget.
    pub fn tail_halfwidth(&self) -> f64 {
        tail_halfwidth(self.tail_epsilon)
    }

    pub fn hermite_rule(&self) -> GaussRule {
        GaussRule::hermite(self.hermite_order)
    }

    pub fn legendre_rule(&self) -> GaussRule {
        GaussRule::legendre(self.hermite_order)
    }
}

pub fn tail_halfwidth(eps: f64) -> f64 {
    let (mut lo, mut hi) = (0.0_f64, 40.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if libm::erfc(mid) > eps {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Nodes and weights of a Gaussian rule.
///
/// Hermite rules integrate `exp(-x^2) f(x)` over the real line; Legendre rules
/// integrate `f(x)` over `[-1, 1]` and are mapped with [`GaussRule::integrate_on`].
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn hermite(n: usize) -> Self {
        let rule = GaussHermite::new(NonZeroUsize::new(n.max(1)).unwrap());
        let (nodes, weights) = rule.as_node_weight_pairs().iter().copied().unzip();
        Self { nodes, weights }
    }

    pub fn legendre(n: usize) -> Self {
        let rule = GaussLegendre::new(NonZeroUsize::new(n.max(1)).unwrap());
        let (nodes, weights) = rule.as_node_weight_pairs().iter().copied().unzip();
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// Legendre rule mapped to `[a, b]`.
    pub fn integrate_on(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        half * self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
    }

    /// Legendre rule applied on each consecutive pair of `edges`.
    pub fn integrate_panels(&self, edges: &[f64], mut f: impl FnMut(f64) -> f64) -> f64 {
        edges
            .windows(2)
            .map(|e| self.integrate_on(e[0], e[1], &mut f))
            .sum()
    }
}

/// Finite-difference weights for the `order`-th derivative at `x0` on the
/// arbitrary stencil `xs` (Fornberg's recursion).
pub fn fd_weights(x0: f64, xs: &[f64], order: usize) -> Vec<f64> {
    let n = xs.len();
    assert!(n > order, "stencil too small for derivative order");
    let m = order;
    // c[j][k]: weight of node j for derivative k
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[m]).collect()
}
