//! Finite-difference reference solver and solver-to-solver comparison.
//!
//! Cell-centred grid `x_j = -L + (j + 1/2) dx` with an even cell count, so a
//! jump at `x = 0` falls between nodes. Far-field limits are imposed as
//! Dirichlet ghost values. Diffusion is the standard three-point Laplacian;
//! advection `h(x) u u_x` is non-conservative.

use serde::{Deserialize, Serialize};

use crate::coeff::Coefficient;
use crate::error::{config, domain, Result};
use crate::field::{Field, Grid};
use crate::initial_data::InitialData;
use crate::mild_solver::{all_fields, SolutionPatch};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Forward Euler for everything.
    Explicit,
    /// Backward Euler diffusion, explicit advection.
    SemiImplicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Advection {
    /// Centred difference for `u_x` (second order).
    Central,
    /// One-sided difference against the sign of `h u` (first order).
    Upwind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FdConfig {
    pub half_width: f64,
    /// Number of cells; must be even.
    pub nx: usize,
    /// Time step as a multiple of `dx^2`.
    pub dt_factor: f64,
    pub scheme: Scheme,
    pub advection: Advection,
}

impl Default for FdConfig {
    fn default() -> Self {
        Self { half_width: 3.0, nx: 800, dt_factor: 0.4, scheme: Scheme::Explicit, advection: Advection::Central }
    }
}

impl FdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.half_width.is_finite() && self.half_width > 0.0) {
            return Err(config("fd half_width must be positive"));
        }
        if self.nx < 128 || !self.nx.is_multiple_of(2) {
            return Err(config(format!("fd nx must be even and at least 128, got {}", self.nx)));
        }
        if !(self.dt_factor > 0.0 && self.dt_factor.is_finite()) {
            return Err(config("dt_factor must be positive"));
        }
        if self.scheme == Scheme::Explicit && self.dt_factor > 0.5 {
            return Err(config(format!(
                "explicit scheme is unstable for dt_factor {} > 0.5",
                self.dt_factor
            )));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.nx as f64
    }

    /// The node grid of the cell centres.
    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.half_width - 0.5 * self.dx(), self.nx)
    }
}

/// Runs the scheme from `t = 0` and returns the solution at each of the
/// ascending `report_times`.
pub fn solve_fd(
    d: &InitialData,
    report_times: &[f64],
    c: &Coefficient,
    cfg: &FdConfig,
) -> Result<Vec<Field>> {
    cfg.validate()?;
    if report_times.is_empty() {
        return Err(config("no report times"));
    }
    if report_times.windows(2).any(|w| w[0] >= w[1]) || report_times[0].is_nan() || report_times[0] <= 0.0 {
        return Err(domain("report times must be positive and ascending"));
    }
    let grid = cfg.grid()?;
    let dx = cfg.dx();
    let n = cfg.nx;
    let xs = grid.nodes();
    let h: Vec<f64> = xs.iter().map(|&x| c.h(x)).collect();
    let (left, right) = (d.left_limit(), d.right_limit());

    // largest advection speed the explicit update can see
    let a_max = d.sup_norm();
    if cfg.advection == Advection::Central && a_max * dx > 2.0 {
        return Err(config("grid too coarse for centred advection"));
    }
    let dt_max = cfg.dt_factor * dx * dx;

    let mut u: Vec<f64> = xs.iter().map(|&x| d.eval(x)).collect();
    let mut next = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    let mut out = Vec::with_capacity(report_times.len());
    let mut t = 0.0;
    for &target in report_times {
        let steps = ((target - t) / dt_max).ceil().max(1.0) as usize;
        let dt = (target - t) / steps as f64;
        for _ in 0..steps {
            let r = dt / (dx * dx);
            for j in 0..n {
                let um = if j == 0 { left } else { u[j - 1] };
                let up = if j + 1 == n { right } else { u[j + 1] };
                let a = h[j] * u[j];
                let ux = match cfg.advection {
                    Advection::Central => (up - um) / (2.0 * dx),
                    Advection::Upwind if a > 0.0 => (u[j] - um) / dx,
                    Advection::Upwind => (up - u[j]) / dx,
                };
                match cfg.scheme {
                    Scheme::Explicit => next[j] = u[j] + r * (up - 2.0 * u[j] + um) - dt * a * ux,
                    Scheme::SemiImplicit => rhs[j] = u[j] - dt * a * ux,
                }
            }
            if cfg.scheme == Scheme::SemiImplicit {
                rhs[0] += r * left;
                rhs[n - 1] += r * right;
                solve_diffusion(r, &rhs, &mut next, &mut scratch);
            }
            std::mem::swap(&mut u, &mut next);
        }
        t = target;
        out.push(Field::new(t, grid, u.clone(), left, right)?);
    }
    Ok(out)
}

/// Solves `(1 + 2r) y_j - r y_{j-1} - r y_{j+1} = b_j` with zero ghosts
/// (Thomas algorithm).
fn solve_diffusion(r: f64, b: &[f64], y: &mut [f64], c: &mut [f64]) {
    let n = b.len();
    let diag = 1.0 + 2.0 * r;
    c[0] = -r / diag;
    y[0] = b[0] / diag;
    for j in 1..n {
        let m = diag + r * c[j - 1];
        c[j] = -r / m;
        y[j] = (b[j] + r * y[j - 1]) / m;
    }
    for j in (0..n - 1).rev() {
        y[j] -= c[j] * y[j + 1];
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyRow {
    pub t: f64,
    pub sup: f64,
    /// `sqrt(dx * sum e_j^2)` over the compared nodes.
    pub l2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discrepancy {
    pub rows: Vec<DiscrepancyRow>,
}

impl Discrepancy {
    pub fn max_sup(&self) -> f64 {
        self.rows.iter().fold(0.0, |m, r| m.max(r.sup))
    }
}

/// Compares each field of `other` with the field of `reference` at the same
/// time, at the nodes of `other` inside the reference grid.
pub fn compare_fields(reference: &[&Field], other: &[Field]) -> Result<Discrepancy> {
    let mut rows = Vec::with_capacity(other.len());
    for f in other {
        let tol = 1e-12 * f.t.abs().max(1.0);
        let r = reference
            .iter()
            .find(|r| (r.t - f.t).abs() <= tol)
            .ok_or_else(|| config(format!("no reference field at t = {}", f.t)))?;
        let (mut sup, mut sq, mut count) = (0.0_f64, 0.0, 0usize);
        let reach = r.grid.half_width;
        for (i, v) in f.values.iter().enumerate() {
            let x = f.grid.x(i);
            if x.abs() <= reach {
                let e = (r.eval(x) - v).abs();
                sup = sup.max(e);
                sq += e * e;
                count += 1;
            }
        }
        if count == 0 {
            return Err(config("fields do not overlap"));
        }
        rows.push(DiscrepancyRow { t: f.t, sup, l2: (sq * f.grid.dx()).sqrt() });
    }
    Ok(Discrepancy { rows })
}

/// Discrepancy between a mild solution and finite-difference fields at the
/// finite-difference report times.
pub fn compare(mild: &[SolutionPatch], fd: &[Field]) -> Result<Discrepancy> {
    compare_fields(&all_fields(mild), fd)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alpha1() -> Coefficient {
        Coefficient::new(1.0).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(FdConfig { nx: 100, ..FdConfig::default() }.validate().is_err());
        assert!(FdConfig { nx: 201, ..FdConfig::default() }.validate().is_err());
        assert!(FdConfig { dt_factor: 0.6, ..FdConfig::default() }.validate().is_err());
        let semi = FdConfig { dt_factor: 5.0, scheme: Scheme::SemiImplicit, ..FdConfig::default() };
        assert!(semi.validate().is_ok());
    }

    #[test]
    fn grid_straddles_the_origin() {
        let cfg = FdConfig { nx: 128, ..FdConfig::default() };
        let g = cfg.grid().unwrap();
        assert!((g.x(63) + 0.5 * cfg.dx()).abs() < 1e-14);
        assert!((g.x(64) - 0.5 * cfg.dx()).abs() < 1e-14);
    }

    #[test]
    fn constant_data_is_exact() {
        let d = InitialData::constant(0.4).unwrap();
        for scheme in [Scheme::Explicit, Scheme::SemiImplicit] {
            let cfg = FdConfig { nx: 128, scheme, ..FdConfig::default() };
            let out = solve_fd(&d, &[0.01, 0.02], &alpha1(), &cfg).unwrap();
            assert!(out.iter().all(|f| f.values.iter().all(|&v| (v - 0.4).abs() <= 1e-13)));
        }
    }

    #[test]
    fn report_times_are_hit_exactly() {
        let d = InitialData::step(-1.0, 1.0).unwrap();
        let cfg = FdConfig { nx: 128, ..FdConfig::default() };
        let out = solve_fd(&d, &[0.003, 0.0101], &alpha1(), &cfg).unwrap();
        assert_eq!(out[0].t, 0.003);
        assert_eq!(out[1].t, 0.0101);
        assert!(solve_fd(&d, &[0.02, 0.01], &alpha1(), &cfg).is_err());
    }

    #[test]
    fn thomas_solver_inverts_the_matrix() {
        let r = 0.7;
        let b = [1.0, -2.0, 0.5, 3.0, 0.0];
        let mut y = [0.0; 5];
        let mut c = [0.0; 5];
        solve_diffusion(r, &b, &mut y, &mut c);
        for j in 0..5 {
            let ym = if j == 0 { 0.0 } else { y[j - 1] };
            let yp = if j == 4 { 0.0 } else { y[j + 1] };
            assert!(((1.0 + 2.0 * r) * y[j] - r * ym - r * yp - b[j]).abs() < 1e-13);
        }
    }

    #[test]
    fn schemes_agree_and_converge() {
        let d = InitialData::step(-1.0, 1.0).unwrap();
        let run = |nx, scheme| {
            let cfg = FdConfig { nx, scheme, ..FdConfig::default() };
            solve_fd(&d, &[0.02], &alpha1(), &cfg).unwrap().remove(0)
        };
        let fine = run(1200, Scheme::Explicit);
        let coarse = compare_fields(&[&fine], &[run(300, Scheme::Explicit)]).unwrap().max_sup();
        let mid = compare_fields(&[&fine], &[run(600, Scheme::Explicit)]).unwrap().max_sup();
        assert!(mid < coarse / 3.0, "{coarse} {mid}");
        let semi = compare_fields(&[&fine], &[run(600, Scheme::SemiImplicit)]).unwrap().max_sup();
        assert!(semi < 1e-3);
    }

    #[test]
    fn identical_fields_have_zero_discrepancy() {
        let d = InitialData::step(-1.0, 1.0).unwrap();
        let cfg = FdConfig { nx: 128, ..FdConfig::default() };
        let a = solve_fd(&d, &[0.01], &alpha1(), &cfg).unwrap();
        let refs: Vec<&Field> = a.iter().collect();
        let r = compare_fields(&refs, &a).unwrap();
        assert_eq!(r.max_sup(), 0.0);
        assert_eq!(r.rows[0].l2, 0.0);
        let shifted = vec![Field { t: 0.5, ..a[0].clone() }];
        assert!(compare_fields(&refs, &shifted).is_err());
    }
}
