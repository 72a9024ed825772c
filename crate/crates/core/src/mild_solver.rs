//! Mild solutions by Picard iteration on the Duhamel form
//!
//! `u(x,t) = H(x,t) + int_{t0}^t int (u^2/2)(s,tau) [G h'(s) + G_s h(s)] ds dtau`
//!
//! where `H` is the heat evolution of the data from `t0`.
//!
//! With `s = x + 2 rho lambda`, `tau = t - rho^2` and `rho = R sin(theta)`,
//! `R^2 = t - t0`, the double integral becomes
//!
//! `(2/sqrt(pi)) int_0^{pi/2} R cos(theta) int exp(-lambda^2)
//!  (f(s,tau) - f(x,tau)) (rho h'(s) - lambda h(s)) dlambda dtheta`
//!
//! with `f = u^2/2`. Subtracting `f(x,tau)` is exact because the bracket
//! integrates to zero against `exp(-lambda^2)`, and it makes constants exact
//! fixed points. After the substitution `tau - t0 = R^2 cos^2(theta)`, so the
//! inverse square-root singularity at `tau = t` and the endpoint behaviour at
//! `tau = t0` are both gone.
//!
//! For data with jumps the solution is stored as `u = H + w`: `H` is known in
//! closed form and only the remainder `w` is kept on the grid. Smooth data
//! (including restart data) stores `u` itself.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::coeff::Coefficient;
use crate::error::{config, domain, Error, Result};
use crate::field::{Field, Grid};
use crate::initial_data::InitialData;
use crate::parallel;
use crate::quadrature::{GaussRule, QuadratureSpec};

/// Nodes per Gauss-Legendre panel in `theta` and in the graded `lambda` rule.
const PANEL_ORDER: usize = 8;
/// Below this ratio of smoothing width to `lambda` scale the jump front is
/// integrated with graded panels instead of Gauss-Hermite.
const GRADED_BELOW: f64 = 1.0;
/// Panel edges around a jump, in units of the front width.
const FRONT_EDGES: [f64; 9] = [-6.0, -3.0, -1.5, -0.5, 0.0, 0.5, 1.5, 3.0, 6.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Truncation half-width `L` of the grid.
    pub half_width: f64,
    pub nx: usize,
    pub picard_tol: f64,
    pub max_iterations: usize,
    pub quad: QuadratureSpec,
    /// Gauss-Legendre panels for the time integral.
    pub time_panels: usize,
    /// Earliest report time as a fraction of the patch length.
    pub t_min_report_fraction: f64,
    /// Report times per halving of the distance to the patch start.
    pub slices_per_octave: usize,
    /// Largest admissible ratio of consecutive Picard updates.
    pub contraction_limit: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            half_width: 3.0,
            nx: 801,
            picard_tol: 1e-8,
            max_iterations: 40,
            quad: QuadratureSpec { hermite_order: 32, ..QuadratureSpec::default() },
            time_panels: 2,
            t_min_report_fraction: 1e-3,
            slices_per_octave: 4,
            contraction_limit: 0.55,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.half_width.is_finite() && self.half_width > 0.0) {
            return Err(config(format!("half_width must be positive, got {}", self.half_width)));
        }
        if self.nx < 64 {
            return Err(config(format!("nx must be at least 64, got {}", self.nx)));
        }
        if self.picard_tol.is_nan() || self.picard_tol <= 0.0 {
            return Err(config("picard_tol must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(config("max_iterations must be positive"));
        }
        if self.time_panels == 0 {
            return Err(config("time_panels must be positive"));
        }
        if !(self.t_min_report_fraction > 0.0 && self.t_min_report_fraction < 0.5) {
            return Err(config("t_min_report_fraction must lie in (0, 0.5)"));
        }
        if self.slices_per_octave == 0 {
            return Err(config("slices_per_octave must be positive"));
        }
        if !(self.contraction_limit > 0.0 && self.contraction_limit < 1.0) {
            return Err(config("contraction_limit must lie in (0, 1)"));
        }
        self.quad.validate()
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.half_width, self.nx)
    }

    /// Smallest half-width for which the Gaussian tail beyond the grid is
    /// below `quad.tail_epsilon` over a patch of length `step`.
    pub fn required_half_width(&self, d: &InitialData, step: f64) -> f64 {
        let outer = d.jumps().iter().fold(0.0_f64, |m, (b, _)| m.max(b.abs()));
        outer + 2.0 * step.sqrt() * self.quad.tail_halfwidth()
    }

    /// Offsets from the patch start of the stored time slices, beginning with 0.
    pub fn slice_offsets(&self, step: f64) -> Vec<f64> {
        let m = self.slices_per_octave as f64;
        let levels = (m * (1.0 / self.t_min_report_fraction).log2()).floor() as usize;
        let mut out = vec![0.0];
        out.extend((0..=levels).rev().map(|j| step * 2f64.powf(-(j as f64) / m)));
        out
    }
}

/// `min{1, ((N+1)^2 A)^-2, (4 (N+1) A)^-2}` with `A = sup|h'|/2 + 1/sqrt(pi)`.
pub fn certified_step(norm_u0: f64, c: &Coefficient) -> Result<f64> {
    if !(norm_u0.is_finite() && norm_u0 >= 0.0) {
        return Err(domain(format!("data norm must be finite and nonnegative, got {norm_u0}")));
    }
    let a = c.sup_dh() / 2.0 + 1.0 / PI.sqrt();
    let n1 = norm_u0 + 1.0;
    Ok(1f64.min((n1 * n1 * a).powi(-2)).min((4.0 * n1 * a).powi(-2)))
}

#[derive(Debug, Clone, Copy)]
struct ThetaNode {
    rho: f64,
    sigma: f64,
    weight: f64,
    start: usize,
    tw: [f64; 4],
    graded: bool,
}

/// Everything needed to apply the Duhamel map on one patch.
struct Machine {
    data: InitialData,
    coeff: Coefficient,
    grid: Grid,
    offsets: Vec<f64>,
    theta: Vec<Vec<ThetaNode>>,
    jumps: Vec<(f64, f64)>,
    base: f64,
    smooth: bool,
    /// Far-field limits of the closed-form part.
    bg_far: (f64, f64),
    hermite: GaussRule,
    legendre: GaussRule,
    tail: f64,
    base_edges: Vec<f64>,
}

impl Machine {
    fn new(d: &InitialData, step: f64, c: &Coefficient, cfg: &SolverConfig) -> Result<Self> {
        cfg.validate()?;
        let need = cfg.required_half_width(d, step);
        if cfg.half_width < need {
            return Err(config(format!(
                "half_width {} too small for step {step}: need at least {need:.3}",
                cfg.half_width
            )));
        }
        let offsets = cfg.slice_offsets(step);
        if offsets.len() < 5 {
            return Err(config("too few time slices; lower t_min_report_fraction"));
        }
        let sigmas: Vec<f64> = offsets.iter().map(|o| o.sqrt()).collect();
        let smooth = d.is_smooth();
        let jumps = if smooth { Vec::new() } else { d.jumps() };

        let legendre = GaussRule::legendre(PANEL_ORDER);
        let mut theta_nodes = Vec::new();
        let mut theta_weights = Vec::new();
        let width = FRAC_PI_2 / cfg.time_panels as f64;
        for p in 0..cfg.time_panels {
            let a = p as f64 * width;
            for (x, w) in legendre.nodes.iter().zip(&legendre.weights) {
                theta_nodes.push(a + 0.5 * width * (x + 1.0));
                theta_weights.push(0.5 * width * w);
            }
        }

        let last = offsets.len() - 1;
        let mut theta = vec![Vec::new()];
        for &r in &sigmas[1..] {
            let nodes = theta_nodes
                .iter()
                .zip(&theta_weights)
                .map(|(&th, &w)| {
                    let (sin, cos) = th.sin_cos();
                    let sigma = r * cos;
                    let j = sigmas.partition_point(|&s| s <= sigma).saturating_sub(1).min(last - 1);
                    let start = j.saturating_sub(1).min(last - 3);
                    ThetaNode {
                        rho: r * sin,
                        sigma,
                        weight: w * r * cos * 2.0 / PI.sqrt(),
                        start,
                        tw: lagrange_nonuniform(&sigmas[start..start + 4], sigma),
                        graded: !jumps.is_empty() && cos < GRADED_BELOW * sin,
                    }
                })
                .collect();
            theta.push(nodes);
        }

        let tail = cfg.quad.tail_halfwidth();
        let n_base = (2.0 * tail).ceil() as usize;
        let base_edges = (0..=n_base).map(|i| -tail + 2.0 * tail * i as f64 / n_base as f64).collect();
        let bg_far = if smooth { (0.0, 0.0) } else { (d.left_limit(), d.right_limit()) };
        Ok(Self {
            data: d.clone(),
            coeff: *c,
            grid: cfg.grid()?,
            offsets,
            theta,
            base: d.left_limit(),
            jumps,
            smooth,
            bg_far,
            hermite: cfg.quad.hermite_rule(),
            legendre,
            tail,
            base_edges,
        })
    }

    fn slices(&self) -> usize {
        self.offsets.len()
    }

    /// Closed-form part of the solution at smoothing width `sigma = sqrt(tau - t0)`.
    #[inline]
    fn background(&self, s: f64, sigma: f64) -> f64 {
        if self.smooth {
            return 0.0;
        }
        let mut v = self.base;
        for &(b, jump) in &self.jumps {
            let z = (b - s) / (2.0 * sigma);
            if z < -6.0 {
                v += jump;
            } else if z <= 6.0 {
                v += jump * 0.5 * libm::erfc(z);
            }
        }
        v
    }

    /// Stored rows hold `nx` grid values followed by the far-left and
    /// far-right constants.
    #[inline]
    fn interp(&self, prof: &[f64], s: f64) -> f64 {
        match self.grid.stencil(s) {
            Some((i, w)) => w[0] * prof[i] + w[1] * prof[i + 1] + w[2] * prof[i + 2] + w[3] * prof[i + 3],
            None if s < 0.0 => prof[self.grid.nx],
            None => prof[self.grid.nx + 1],
        }
    }

    #[inline]
    fn flux(&self, s: f64, sigma: f64, prof: &[f64]) -> f64 {
        let u = self.background(s, sigma) + self.interp(prof, s);
        0.5 * u * u
    }

    /// Heat evolution of the data, in stored form (zero for jump data).
    fn heat_stored(&self) -> Vec<Vec<f64>> {
        let n = self.slices();
        let mut out = vec![vec![0.0; self.grid.nx + 2]; n];
        out[0] = self.initial_slice();
        if self.smooth {
            let rows = parallel::map_indices((n - 1) * self.grid.nx, |idx| {
                let (k, i) = (1 + idx / self.grid.nx, idx % self.grid.nx);
                self.heat_full(self.grid.x(i), k)
            });
            for (k, row) in rows.chunks(self.grid.nx).enumerate() {
                let mut r = row.to_vec();
                r.extend([self.data.left_limit(), self.data.right_limit()]);
                out[k + 1] = r;
            }
        }
        out
    }

    fn initial_slice(&self) -> Vec<f64> {
        if self.smooth {
            let mut r: Vec<f64> = (0..self.grid.nx).map(|i| self.data.eval(self.grid.x(i))).collect();
            r.extend([self.data.left_limit(), self.data.right_limit()]);
            r
        } else {
            vec![0.0; self.grid.nx + 2]
        }
    }

    fn heat_full(&self, x: f64, k: usize) -> f64 {
        if self.smooth {
            let w = 2.0 * self.offsets[k].sqrt();
            self.hermite.integrate(|l| self.data.eval(x + w * l)) / PI.sqrt()
        } else {
            self.background(x, self.offsets[k].sqrt())
        }
    }

    /// Stored values interpolated in time to every quadrature node of slice `k`.
    fn node_profiles(&self, stored: &[Vec<f64>], k: usize) -> Vec<Vec<f64>> {
        self.theta[k]
            .iter()
            .map(|node| {
                let rows = &stored[node.start..node.start + 4];
                (0..self.grid.nx + 2)
                    .map(|i| {
                        node.tw[0] * rows[0][i]
                            + node.tw[1] * rows[1][i]
                            + node.tw[2] * rows[2][i]
                            + node.tw[3] * rows[3][i]
                    })
                    .collect()
            })
            .collect()
    }

    /// The Duhamel integral at `(x, t0 + offsets[k])`.
    fn duhamel(&self, x: f64, k: usize, profiles: &[Vec<f64>]) -> f64 {
        let mut total = 0.0;
        for (node, prof) in self.theta[k].iter().zip(profiles) {
            let fx = self.flux(x, node.sigma, prof);
            let integrand = |l: f64| {
                let s = x + 2.0 * node.rho * l;
                let (h, dh) = self.coeff.h_and_dh(s);
                (self.flux(s, node.sigma, prof) - fx) * (node.rho * dh - l * h)
            };
            let inner = if node.graded {
                let width = node.sigma / node.rho;
                let mut edges = self.base_edges.clone();
                for &(b, _) in &self.jumps {
                    let centre = (b - x) / (2.0 * node.rho);
                    edges.extend(
                        FRONT_EDGES
                            .iter()
                            .map(|e| centre + e * width)
                            .filter(|e| e.abs() < self.tail),
                    );
                }
                edges.sort_by(f64::total_cmp);
                edges.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
                self.legendre.integrate_panels(&edges, |l| (-l * l).exp() * integrand(l))
            } else {
                self.hermite.integrate(integrand)
            };
            total += node.weight * inner;
        }
        total
    }

    /// One application of the map in stored form; slice 0 is carried over.
    /// The Duhamel term vanishes in the far field, so the far constants are
    /// those of the heat part.
    fn apply(&self, stored: &[Vec<f64>], heat: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = self.slices();
        let nx = self.grid.nx;
        let profiles: Vec<Vec<Vec<f64>>> =
            parallel::map_indices(n, |k| if k == 0 { Vec::new() } else { self.node_profiles(stored, k) });
        let values = parallel::map_indices((n - 1) * nx, |idx| {
            let (k, i) = (1 + idx / nx, idx % nx);
            heat[k][i] + self.duhamel(self.grid.x(i), k, &profiles[k])
        });
        let mut out = Vec::with_capacity(n);
        out.push(stored[0].clone());
        out.extend(values.chunks(nx).enumerate().map(|(j, c)| {
            let mut r = c.to_vec();
            r.extend_from_slice(&heat[j + 1][nx..]);
            r
        }));
        out
    }

    /// Largest `|u|` over the stored slices after `t0`.
    fn sup_abs(&self, stored: &[Vec<f64>]) -> f64 {
        let nx = self.grid.nx;
        let mut m = 0.0_f64;
        for (k, row) in stored.iter().enumerate().skip(1) {
            let sigma = self.offsets[k].sqrt();
            for (i, v) in row[..nx].iter().enumerate() {
                m = m.max((self.background(self.grid.x(i), sigma) + v).abs());
            }
            m = m.max((self.bg_far.0 + row[nx]).abs()).max((self.bg_far.1 + row[nx + 1]).abs());
        }
        m
    }

    fn to_fields(&self, t0: f64, stored: &[Vec<f64>]) -> Vec<Field> {
        let nx = self.grid.nx;
        (1..self.slices())
            .map(|k| {
                let sigma = self.offsets[k].sqrt();
                let values = (0..nx).map(|i| self.background(self.grid.x(i), sigma) + stored[k][i]).collect();
                Field {
                    t: t0 + self.offsets[k],
                    grid: self.grid,
                    values,
                    far_left: self.bg_far.0 + stored[k][nx],
                    far_right: self.bg_far.1 + stored[k][nx + 1],
                }
            })
            .collect()
    }

    fn store_fields(&self, fields: &[Field]) -> Result<Vec<Vec<f64>>> {
        if fields.len() + 1 != self.slices() {
            return Err(config(format!(
                "expected {} fields, got {}",
                self.slices() - 1,
                fields.len()
            )));
        }
        let mut stored = vec![self.initial_slice()];
        for (k, f) in fields.iter().enumerate() {
            if f.grid != self.grid {
                return Err(config("field grid does not match the solver grid"));
            }
            let sigma = self.offsets[k + 1].sqrt();
            let mut row: Vec<f64> =
                f.values.iter().enumerate().map(|(i, v)| v - self.background(self.grid.x(i), sigma)).collect();
            row.extend([f.far_left - self.bg_far.0, f.far_right - self.bg_far.1]);
            stored.push(row);
        }
        Ok(stored)
    }
}

/// Lagrange weights of the cubic through `xs` (4 nodes) at `x`.
fn lagrange_nonuniform(xs: &[f64], x: f64) -> [f64; 4] {
    let mut w = [1.0; 4];
    for j in 0..4 {
        for m in 0..4 {
            if m != j {
                w[j] *= (x - xs[m]) / (xs[j] - xs[m]);
            }
        }
    }
    w
}

/// A local mild solution on `(t0, t0 + t_star]`.
#[derive(Debug, Clone)]
pub struct SolutionPatch {
    pub t0: f64,
    /// Length of the patch.
    pub t_star: f64,
    /// The solution at each stored time after `t0`, ascending.
    pub fields: Vec<Field>,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    /// `||u0|| + 1`, the radius of the set the map acts on.
    pub bound: f64,
    pub data_lower: f64,
    pub data_upper: f64,
    data: InitialData,
    coeff: Coefficient,
    config: SolverConfig,
    stored: Vec<Vec<f64>>,
}

/// Serializable summary of a patch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchMeta {
    pub t0: f64,
    pub t_star: f64,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub bound: f64,
    pub data_lower: f64,
    pub data_upper: f64,
    pub report_times: Vec<f64>,
}

impl SolutionPatch {
    pub fn times(&self) -> Vec<f64> {
        self.fields.iter().map(|f| f.t).collect()
    }

    pub fn terminal(&self) -> &Field {
        self.fields.last().expect("patch has fields")
    }

    pub fn data(&self) -> &InitialData {
        &self.data
    }

    pub fn meta(&self) -> PatchMeta {
        PatchMeta {
            t0: self.t0,
            t_star: self.t_star,
            iterations: self.iterations,
            residual_history: self.residual_history.clone(),
            bound: self.bound,
            data_lower: self.data_lower,
            data_upper: self.data_upper,
            report_times: self.times(),
        }
    }

    /// Evaluates the representation formula with the converged solution at
    /// arbitrary points, at the time of `fields[index]`.
    pub fn evaluate(&self, xs: &[f64], index: usize) -> Result<Vec<f64>> {
        if index >= self.fields.len() {
            return Err(config(format!("field index {index} out of range")));
        }
        let m = Machine::new(&self.data, self.t_star, &self.coeff, &self.config)?;
        let k = index + 1;
        let profiles = m.node_profiles(&self.stored, k);
        Ok(parallel::map_slice(xs, |&x| m.heat_full(x, k) + m.duhamel(x, k, &profiles)))
    }

    /// The solution at `fields[index]`'s time on a uniform grid over
    /// `[centre - half_width, centre + half_width]`.
    pub fn refined_field(&self, index: usize, centre: f64, half_width: f64, nx: usize) -> Result<Field> {
        let grid = Grid::new(half_width, nx)?;
        let xs: Vec<f64> = grid.nodes().iter().map(|x| x + centre).collect();
        let values = self.evaluate(&xs, index)?;
        let f = &self.fields[index];
        Field::new(f.t, grid, values, f.far_left, f.far_right)
    }
}

/// Applies the Duhamel map to `v`, given at the stored times of the patch of
/// length `step` starting at `t0`.
pub fn apply_m(
    v: &[Field],
    d: &InitialData,
    step: f64,
    c: &Coefficient,
    cfg: &SolverConfig,
) -> Result<Vec<Field>> {
    let m = Machine::new(d, step, c, cfg)?;
    let t0 = v.first().map(|f| f.t - m.offsets[1]).unwrap_or(0.0);
    let stored = m.store_fields(v)?;
    let bound = d.sup_norm() + 1.0;
    let sup = m.sup_abs(&stored);
    if sup > bound {
        return Err(Error::Precondition(format!("sup|v| = {sup} exceeds {bound}")));
    }
    let heat = m.heat_stored();
    Ok(m.to_fields(t0, &m.apply(&stored, &heat)))
}

pub fn solve_local(d: &InitialData, t0: f64, c: &Coefficient, cfg: &SolverConfig) -> Result<SolutionPatch> {
    let step = certified_step(d.sup_norm(), c)?;
    solve_local_with_step(d, t0, step, c, cfg)
}

/// As [`solve_local`] with a patch length no larger than the certified step.
pub fn solve_local_with_step(
    d: &InitialData,
    t0: f64,
    step: f64,
    c: &Coefficient,
    cfg: &SolverConfig,
) -> Result<SolutionPatch> {
    let certified = certified_step(d.sup_norm(), c)?;
    if !(step > 0.0 && step <= certified * (1.0 + 1e-12)) {
        return Err(Error::Precondition(format!(
            "patch length {step} outside (0, {certified}]"
        )));
    }
    let m = Machine::new(d, step, c, cfg)?;
    let bound = d.sup_norm() + 1.0;
    let heat = m.heat_stored();
    let check = |stored: &[Vec<f64>], iteration: usize| -> Result<()> {
        let sup = m.sup_abs(stored);
        if sup > bound {
            return Err(Error::Precondition(format!(
                "iterate {iteration} has sup|v| = {sup}, outside the bound {bound}"
            )));
        }
        Ok(())
    };

    let mut v = heat.clone();
    check(&v, 0)?;
    let mut history: Vec<f64> = Vec::new();
    for n in 1..=cfg.max_iterations {
        let next = m.apply(&v, &heat);
        let r = next[1..]
            .iter()
            .zip(&v[1..])
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0_f64, f64::max);
        check(&next, n)?;
        if let Some(&prev) = history.last() {
            if r > cfg.contraction_limit * prev + cfg.picard_tol {
                history.push(r);
                return Err(Error::Certification {
                    iteration: n,
                    ratio: r / prev,
                    limit: cfg.contraction_limit,
                    residual_history: history,
                });
            }
        }
        history.push(r);
        v = next;
        if r <= cfg.picard_tol {
            return Ok(SolutionPatch {
                t0,
                t_star: step,
                fields: m.to_fields(t0, &v),
                iterations: n,
                residual_history: history,
                bound,
                data_lower: d.inf(),
                data_upper: d.sup(),
                data: d.clone(),
                coeff: *c,
                config: cfg.clone(),
                stored: v,
            });
        }
    }
    Err(Error::Convergence { iterations: cfg.max_iterations, tolerance: cfg.picard_tol, residual_history: history })
}

pub fn solve_global(d: &InitialData, t_final: f64, c: &Coefficient, cfg: &SolverConfig) -> Result<Vec<SolutionPatch>> {
    let step = certified_step(d.sup_norm(), c)?;
    solve_global_with_step(d, t_final, step, c, cfg)
}

/// Chains local patches of length `step` (the last one shortened to end at
/// `t_final`), restarting each from the previous terminal profile with the
/// original data bounds.
pub fn solve_global_with_step(
    d: &InitialData,
    t_final: f64,
    step: f64,
    c: &Coefficient,
    cfg: &SolverConfig,
) -> Result<Vec<SolutionPatch>> {
    if !(t_final.is_finite() && t_final > 0.0) {
        return Err(domain(format!("final time must be positive, got {t_final}")));
    }
    let count = ((t_final / step) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let (lower, upper) = (d.inf(), d.sup());
    let mut patches: Vec<SolutionPatch> = Vec::with_capacity(count);
    for index in 0..count {
        let t0 = index as f64 * step;
        let len = if index + 1 == count { t_final - t0 } else { step };
        let data = match patches.last() {
            None => d.clone(),
            Some(p) => InitialData::from_field(p.terminal().clone(), lower, upper)?,
        };
        let patch = solve_local_with_step(&data, t0, len, c, cfg)
            .map_err(|e| Error::Patch { index, source: Box::new(e) })?;
        patches.push(patch);
    }
    Ok(patches)
}

/// `sup |u - M[u]|` over the stored times of the patch.
pub fn integral_residual(
    patch: &SolutionPatch,
    d: &InitialData,
    c: &Coefficient,
    cfg: &SolverConfig,
) -> Result<f64> {
    let m = Machine::new(d, patch.t_star, c, cfg)?;
    let stored = m.store_fields(&patch.fields)?;
    let heat = m.heat_stored();
    let next = m.apply(&stored, &heat);
    Ok(next[1..]
        .iter()
        .zip(&stored[1..])
        .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
        .fold(0.0_f64, f64::max))
}

/// All fields of a global solution in time order.
pub fn all_fields(patches: &[SolutionPatch]) -> Vec<&Field> {
    patches.iter().flat_map(|p| p.fields.iter()).collect()
}
