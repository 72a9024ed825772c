//! Executable checks of the qualitative and quantitative properties of
//! solutions: bounds, monotonicity, far-field limits, derivative decay,
//! Hölder continuity, PDE residual, small-time behaviour and continuous
//! dependence on the data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coeff::Coefficient;
use crate::error::{config, domain, Result};
use crate::fd_oracle::Discrepancy;
use crate::field::{Field, Grid};
use crate::initial_data::InitialData;
use crate::mild_solver::{all_fields, certified_step, solve_global_with_step, SolutionPatch, SolverConfig};
use crate::quadrature::{fd_weights, QuadratureSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    NotApplicable,
    /// A rate fit was too poor for its exponent to mean anything.
    Inconclusive,
}

impl Status {
    pub fn is_failure(self) -> bool {
        matches!(self, Status::Fail | Status::Inconclusive)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    pub name: String,
    pub value: f64,
}

fn q(name: &str, value: f64) -> Quantity {
    Quantity { name: name.to_string(), value }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detail {
    pub t: f64,
    pub name: String,
    pub value: f64,
}

fn detail(t: f64, name: &str, value: f64) -> Detail {
    Detail { t, name: name.to_string(), value }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub name: String,
    pub status: Status,
    pub passed: bool,
    pub measured: Vec<Quantity>,
    pub threshold: Vec<Quantity>,
    pub details: Vec<Detail>,
}

impl InvariantReport {
    fn new(name: &str, status: Status, measured: Vec<Quantity>, threshold: Vec<Quantity>, details: Vec<Detail>) -> Self {
        Self { name: name.to_string(), status, passed: status == Status::Pass, measured, threshold, details }
    }

    fn not_applicable(name: &str) -> Self {
        Self::new(name, Status::NotApplicable, Vec::new(), Vec::new(), Vec::new())
    }

    fn verdict(ok: bool) -> Status {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    pub fn measured(&self, name: &str) -> Option<f64> {
        self.measured.iter().find(|m| m.name == name).map(|m| m.value)
    }
}

/// Pass thresholds of the checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub bound_tol: f64,
    pub monotone_slack: f64,
    pub strict_slope: f64,
    pub far_field_factor: f64,
    pub far_field_floor: f64,
    pub ux_exponent: (f64, f64),
    pub second_order_exponent: (f64, f64),
    pub min_r_squared: f64,
    pub ut_agreement: f64,
    pub holder_stability: f64,
    pub residual_order: f64,
    /// Residuals below this are rounding error and need no convergence order.
    pub residual_floor: f64,
    pub dependence_stability: f64,
    pub small_time_exponent: f64,
    /// Largest sup-norm gap between the mild and finite-difference solutions.
    pub fd_agreement: f64,
    /// Smallest factor by which that gap shrinks when both grids are refined.
    pub fd_refinement_gain: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            bound_tol: 1e-4,
            monotone_slack: 1e-10,
            strict_slope: 1e-8,
            far_field_factor: 10.0,
            far_field_floor: 1e-10,
            ux_exponent: (-0.6, -0.4),
            second_order_exponent: (-1.15, -0.85),
            min_r_squared: 0.98,
            ut_agreement: 0.05,
            holder_stability: 0.25,
            residual_order: 1.5,
            residual_floor: 1e-10,
            dependence_stability: 0.10,
            small_time_exponent: 0.9,
            fd_agreement: 1e-3,
            fd_refinement_gain: 3.0,
        }
    }
}

/// Least-squares fit of `norm = C t^p` on log-log data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    pub fitted_exponent: f64,
    pub fitted_constant: f64,
    pub r_squared: f64,
}

impl RateFit {
    pub fn fit(times: &[f64], norms: &[f64]) -> Result<Self> {
        if times.len() != norms.len() || times.len() < 3 {
            return Err(config("a rate fit needs at least three (time, norm) pairs"));
        }
        if times.iter().chain(norms).any(|v| v.is_nan() || *v <= 0.0) {
            return Err(domain("rate fits need positive times and norms"));
        }
        let xs: Vec<f64> = times.iter().map(|t| t.ln()).collect();
        let ys: Vec<f64> = norms.iter().map(|n| n.ln()).collect();
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
        Ok(Self {
            times: times.to_vec(),
            norms: norms.to_vec(),
            fitted_exponent: slope,
            fitted_constant: intercept.exp(),
            r_squared,
        })
    }
}

/// `sum_{n=1}^{n_max} scale^n t^(n/2) / (pi^(n/2) n Gamma(n/2))`, stopping
/// early once a term falls below `1e-14` of the running sum.
pub fn gronwall_series(t: f64, scale: f64, n_max: usize) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(domain(format!("series time must be positive, got {t}")));
    }
    if !(scale >= 0.0 && scale.is_finite()) {
        return Err(domain(format!("series scale must be nonnegative, got {scale}")));
    }
    if scale == 0.0 {
        return Ok(0.0);
    }
    let log_z = scale.ln() + 0.5 * (t / std::f64::consts::PI).ln();
    let mut sum = 0.0;
    for n in 1..=n_max {
        let nf = n as f64;
        let term = (nf * log_z - nf.ln() - libm::lgamma(0.5 * nf)).exp();
        sum += term;
        if n > 2 && term < 1e-14 * sum {
            break;
        }
    }
    Ok(sum)
}

// ---------------------------------------------------------------- bounds

/// `inf u0 - tol <= u <= sup u0 + tol` over every field.
pub fn check_max_principle(sol: &[SolutionPatch], d: &InitialData, th: &Thresholds) -> InvariantReport {
    check_bounds(&all_fields(sol), d.inf(), d.sup(), th.bound_tol)
}

pub fn check_bounds(fields: &[&Field], lower: f64, upper: f64, tol: f64) -> InvariantReport {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut details = Vec::with_capacity(fields.len());
    for f in fields {
        let (a, b) = (f.min(), f.max());
        lo = lo.min(a);
        hi = hi.max(b);
        details.push(detail(f.t, "excess", (lower - a).max(b - upper)));
    }
    let ok = lo >= lower - tol && hi <= upper + tol;
    InvariantReport::new(
        "max_principle",
        InvariantReport::verdict(ok),
        vec![q("min", lo), q("max", hi)],
        vec![q("lower", lower - tol), q("upper", upper + tol)],
        details,
    )
}

// ----------------------------------------------------------- contraction

/// Ratios of consecutive Picard updates in every patch, ignoring updates
/// already below `floor`, against `limit`; also bounds the iteration count.
pub fn check_contraction(sol: &[SolutionPatch], limit: f64, floor: f64, max_iterations: usize) -> InvariantReport {
    let mut worst = 0.0_f64;
    let mut iterations = 0;
    let mut details = Vec::new();
    for p in sol {
        iterations = iterations.max(p.iterations);
        for pair in p.residual_history.windows(2) {
            if pair[0] > floor && pair[1] > floor {
                worst = worst.max(pair[1] / pair[0]);
            }
        }
        details.push(detail(p.t0, "iterations", p.iterations as f64));
        details.push(detail(p.t0, "final_update", p.residual_history.last().copied().unwrap_or(0.0)));
    }
    let ok = !sol.is_empty() && worst <= limit && iterations <= max_iterations;
    InvariantReport::new(
        "contraction",
        InvariantReport::verdict(ok),
        vec![q("max_ratio", worst), q("iterations", iterations as f64)],
        vec![q("limit", limit), q("max_iterations", max_iterations as f64)],
        details,
    )
}

// ------------------------------------------------------- solver agreement

/// Mild against finite-difference solutions at a base resolution, and
/// optionally the gain in agreement when both grids are refined.
pub fn check_fd_agreement(base: &Discrepancy, refined: Option<&Discrepancy>, th: &Thresholds) -> InvariantReport {
    let coarse = base.max_sup();
    let mut measured = vec![q("max_sup", coarse)];
    let mut threshold = vec![q("max_sup", th.fd_agreement)];
    let mut ok = !base.rows.is_empty() && coarse <= th.fd_agreement;
    if let Some(fine) = refined {
        let f = fine.max_sup();
        let gain = if f == 0.0 { f64::INFINITY } else { coarse / f };
        measured.push(q("max_sup_refined", f));
        measured.push(q("refinement_gain", gain));
        threshold.push(q("refinement_gain", th.fd_refinement_gain));
        ok &= !fine.rows.is_empty() && gain >= th.fd_refinement_gain;
    }
    let mut details: Vec<Detail> = base.rows.iter().map(|r| detail(r.t, "sup", r.sup)).collect();
    if let Some(fine) = refined {
        details.extend(fine.rows.iter().map(|r| detail(r.t, "sup_refined", r.sup)));
    }
    InvariantReport::new("fd_agreement", InvariantReport::verdict(ok), measured, threshold, details)
}

// ---------------------------------------------------------- monotonicity

/// Step data only: forward differences carry the sign of `u+ - u-` up to a
/// slack, and the slope is strictly signed across the front.
pub fn check_monotonicity(sol: &[SolutionPatch], d: &InitialData, th: &Thresholds) -> InvariantReport {
    let (um, up) = match d {
        InitialData::Step { u_minus, u_plus } => (*u_minus, *u_plus),
        _ => return InvariantReport::not_applicable("monotonicity"),
    };
    if um == up {
        return InvariantReport::not_applicable("monotonicity");
    }
    check_monotone_fields(&all_fields(sol), (up - um).signum(), um.abs().max(up.abs()), th)
}

/// `sign` is `+1` for increasing profiles; `speed` bounds the front drift.
pub fn check_monotone_fields(fields: &[&Field], sign: f64, speed: f64, th: &Thresholds) -> InvariantReport {
    let mut worst = f64::INFINITY;
    let mut weakest = f64::INFINITY;
    let mut details = Vec::with_capacity(fields.len());
    for f in fields {
        let dx = f.grid.dx();
        let mut w = f64::INFINITY;
        for pair in f.values.windows(2) {
            w = w.min(sign * (pair[1] - pair[0]));
        }
        let reach = 2.0 * f.t.sqrt() + speed * f.t;
        let mut s = f64::INFINITY;
        for (i, pair) in f.values.windows(2).enumerate() {
            let mid = f.grid.x(i) + 0.5 * dx;
            if mid.abs() <= reach.max(dx) {
                s = s.min(sign * (pair[1] - pair[0]) / dx);
            }
        }
        worst = worst.min(w);
        weakest = weakest.min(s);
        details.push(detail(f.t, "min_signed_difference", w));
    }
    let ok = worst >= -th.monotone_slack && weakest >= th.strict_slope;
    InvariantReport::new(
        "monotonicity",
        InvariantReport::verdict(ok),
        vec![q("min_signed_difference", worst), q("min_front_slope", weakest)],
        vec![q("slack", -th.monotone_slack), q("strict_slope", th.strict_slope)],
        details,
    )
}

// ------------------------------------------------------------- far field

/// Largest deviation of `u(+-x_probe, t)` from the data's limits over all
/// report times, against `factor * |u+ - u-|/2 * erfc(x_probe / (2 sqrt(t_max)))`
/// plus a floor.
pub fn check_far_field(sol: &[SolutionPatch], d: &InitialData, x_probe: f64, th: &Thresholds) -> Result<InvariantReport> {
    let fields = all_fields(sol);
    far_field_fields(&fields, d.left_limit(), d.right_limit(), x_probe, th)
}

pub fn far_field_fields(fields: &[&Field], left: f64, right: f64, x_probe: f64, th: &Thresholds) -> Result<InvariantReport> {
    let mut dev = 0.0_f64;
    let mut t_max = 0.0_f64;
    let mut details = Vec::with_capacity(fields.len());
    for f in fields {
        if !(x_probe > 0.0 && x_probe < f.grid.half_width) {
            return Err(config(format!("probe {x_probe} outside the grid (0, {})", f.grid.half_width)));
        }
        let e = (f.eval(x_probe) - right).abs().max((f.eval(-x_probe) - left).abs());
        dev = dev.max(e);
        t_max = t_max.max(f.t);
        details.push(detail(f.t, "deviation", e));
    }
    let bound = th.far_field_factor * 0.5 * (right - left).abs() * libm::erfc(x_probe / (2.0 * t_max.sqrt()))
        + th.far_field_floor;
    Ok(InvariantReport::new(
        "far_field",
        InvariantReport::verdict(dev <= bound),
        vec![q("x_probe", x_probe), q("deviation", dev)],
        vec![q("bound", bound)],
        details,
    ))
}

/// Runs the far-field check at ascending probes and also requires the
/// deviation not to grow outward.
pub fn check_far_field_probes(sol: &[SolutionPatch], d: &InitialData, probes: &[f64], th: &Thresholds) -> Result<InvariantReport> {
    let mut measured = Vec::new();
    let mut threshold = Vec::new();
    let mut details = Vec::new();
    let mut ok = true;
    let mut last = f64::INFINITY;
    for &p in probes {
        let r = check_far_field(sol, d, p, th)?;
        let dev = r.measured("deviation").unwrap_or(f64::NAN);
        ok &= r.passed && dev <= last;
        last = dev;
        measured.push(q(&format!("deviation@{p}"), dev));
        threshold.push(q(&format!("bound@{p}"), r.threshold[0].value));
        details.push(detail(0.0, &format!("probe@{p}"), dev));
    }
    Ok(InvariantReport::new("far_field", InvariantReport::verdict(ok), measured, threshold, details))
}

// ------------------------------------------------------ derivative decay

/// Points per refined profile in the derivative checks.
const REFINED_POINTS: usize = 481;
/// Half-width of a refined profile in units of `sqrt(t - t0)`.
const REFINED_REACH: f64 = 12.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeDecay {
    pub ux: RateFit,
    pub uxx: RateFit,
    /// `u_t` from differences in time.
    pub ut: RateFit,
    /// `u_t` from `u_xx - h u u_x`.
    pub ut_pde: RateFit,
    /// Largest relative difference between the two `u_t` norms.
    pub ut_disagreement: f64,
    pub report: InvariantReport,
}

/// Sup norms of `u_x`, `u_xx` and `u_t` at report times in
/// `[t0 + lo T, t0 + hi T]`, fitted against `t - t0`.
///
/// Profiles are re-evaluated from the representation formula on a fine grid
/// around the data's jumps (scaled with `sqrt(t - t0)`) for jump data and taken
/// from the stored grid for smooth data. `u_t` uses a seven-point stencil over
/// neighbouring report times.
pub fn fit_derivative_decay(patch: &SolutionPatch, c: &Coefficient, window: (f64, f64), th: &Thresholds) -> Result<DerivativeDecay> {
    let (lo, hi) = window;
    let offsets: Vec<f64> = patch.fields.iter().map(|f| f.t - patch.t0).collect();
    let idx: Vec<usize> = (0..offsets.len())
        .filter(|&k| offsets[k] >= lo * patch.t_star * (1.0 - 1e-9) && offsets[k] <= hi * patch.t_star * (1.0 + 1e-9))
        .collect();
    if idx.len() < 3 || (hi / lo).log10() < 1.5 - 1e-9 {
        return Err(config("derivative fits need report times spanning at least 1.5 decades"));
    }
    if idx[0] < 3 || idx[idx.len() - 1] + 3 >= offsets.len() {
        return Err(config("derivative window leaves no room for time differences"));
    }
    let jumps = patch.data().jumps();
    let centre = if jumps.is_empty() { 0.0 } else { jumps.iter().map(|j| j.0).sum::<f64>() / jumps.len() as f64 };
    let spread = jumps.iter().fold(0.0_f64, |m, j| m.max((j.0 - centre).abs()));

    let mut rows = Vec::with_capacity(idx.len());
    for &k in &idx {
        let stencil: Vec<usize> = (k - 3..=k + 3).collect();
        let times: Vec<f64> = stencil.iter().map(|&m| offsets[m]).collect();
        let profiles: Vec<Field> = if jumps.is_empty() {
            stencil.iter().map(|&m| patch.fields[m].clone()).collect()
        } else {
            let reach = spread + REFINED_REACH * offsets[k].sqrt();
            stencil
                .iter()
                .map(|&m| patch.refined_field(m, centre, reach, REFINED_POINTS))
                .collect::<Result<_>>()?
        };
        let shift = if jumps.is_empty() { 0.0 } else { centre };
        let xs: Vec<f64> = profiles[3].grid.nodes().iter().map(|x| x + shift).collect();
        let here = &profiles[3];
        let ux = here.dx_values();
        let uxx = here.dxx_values();
        let w = fd_weights(offsets[k], &times, 1);
        let n = here.values.len();
        let (mut nx, mut nxx, mut nt, mut npde) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
        for i in 1..n - 1 {
            let ut: f64 = profiles.iter().zip(&w).map(|(p, wj)| wj * p.values[i]).sum();
            let pde = uxx[i] - c.h(xs[i]) * here.values[i] * ux[i];
            nx = nx.max(ux[i].abs());
            nxx = nxx.max(uxx[i].abs());
            nt = nt.max(ut.abs());
            npde = npde.max(pde.abs());
        }
        rows.push((offsets[k], nx, nxx, nt, npde));
    }

    let ts: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let col = |f: fn(&(f64, f64, f64, f64, f64)) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
    let ux = RateFit::fit(&ts, &col(|r| r.1))?;
    let uxx = RateFit::fit(&ts, &col(|r| r.2))?;
    let ut = RateFit::fit(&ts, &col(|r| r.3))?;
    let ut_pde = RateFit::fit(&ts, &col(|r| r.4))?;
    let ut_disagreement = rows.iter().map(|r| (r.3 - r.4).abs() / r.4).fold(0.0, f64::max);

    let within = |p: f64, (a, b): (f64, f64)| p >= a && p <= b;
    let fits = [&ux, &uxx, &ut];
    let status = if fits.iter().any(|f| f.r_squared < th.min_r_squared) {
        Status::Inconclusive
    } else {
        InvariantReport::verdict(
            within(ux.fitted_exponent, th.ux_exponent)
                && within(uxx.fitted_exponent, th.second_order_exponent)
                && within(ut.fitted_exponent, th.second_order_exponent)
                && ut_disagreement <= th.ut_agreement,
        )
    };
    let details = rows
        .iter()
        .flat_map(|r| [detail(r.0, "ux", r.1), detail(r.0, "uxx", r.2), detail(r.0, "ut", r.3), detail(r.0, "ut_pde", r.4)])
        .collect();
    let report = InvariantReport::new(
        "derivative_decay",
        status,
        vec![
            q("ux_exponent", ux.fitted_exponent),
            q("uxx_exponent", uxx.fitted_exponent),
            q("ut_exponent", ut.fitted_exponent),
            q("ux_r_squared", ux.r_squared),
            q("uxx_r_squared", uxx.r_squared),
            q("ut_r_squared", ut.r_squared),
            q("ut_disagreement", ut_disagreement),
        ],
        vec![
            q("ux_exponent_min", th.ux_exponent.0),
            q("ux_exponent_max", th.ux_exponent.1),
            q("second_order_exponent_min", th.second_order_exponent.0),
            q("second_order_exponent_max", th.second_order_exponent.1),
            q("min_r_squared", th.min_r_squared),
            q("ut_agreement", th.ut_agreement),
        ],
        details,
    );
    Ok(DerivativeDecay { ux, uxx, ut, ut_pde, ut_disagreement, report })
}

// ----------------------------------------------------------------- Hölder

/// `|u1 - u2| / (|x1 - x2| / sqrt t)^beta`, zero when the points coincide.
pub fn holder_ratio(u1: f64, u2: f64, x1: f64, x2: f64, t: f64, beta: f64) -> f64 {
    if x1 == x2 {
        return 0.0;
    }
    (u1 - u2).abs() / ((x1 - x2).abs() / t.sqrt()).powf(beta)
}

/// Samples pairs at a random report time `t` (measured from the patch start),
/// with `x1 = centre + sqrt(t) eta`, `eta` uniform in `[-4, 4]`, and
/// `|x1 - x2| / sqrt(t)` log-uniform in `[1e-3, 10]`. The first `samples`
/// pairs give one estimate of the constant, all `2 samples` pairs another;
/// the check passes if they agree within the stability threshold.
pub fn check_holder(sol: &[SolutionPatch], beta: f64, samples: usize, seed: u64, th: &Thresholds) -> Result<InvariantReport> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(domain(format!("beta must lie in (0, 1), got {beta}")));
    }
    if samples == 0 || sol.is_empty() {
        return Err(config("Hölder check needs samples and a solution"));
    }
    let slots: Vec<(usize, usize)> =
        sol.iter().enumerate().flat_map(|(p, patch)| (0..patch.fields.len()).map(move |k| (p, k))).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = 2 * samples;
    let mut pairs: Vec<(usize, f64, f64, f64)> = Vec::with_capacity(total);
    for _ in 0..total {
        let slot = rng.random_range(0..slots.len());
        let (p, k) = slots[slot];
        let patch = &sol[p];
        let t = patch.fields[k].t - patch.t0;
        let jumps = patch.data().jumps();
        let centre = jumps.first().map(|j| j.0).unwrap_or(0.0);
        let eta: f64 = rng.random_range(-4.0..4.0);
        let ratio = 10f64.powf(rng.random_range(-3.0..1.0));
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let x1 = centre + t.sqrt() * eta;
        pairs.push((slot, x1, x1 + sign * ratio * t.sqrt(), t));
    }
    let mut values = vec![(0.0, 0.0); total];
    for (slot, &(p, k)) in slots.iter().enumerate() {
        let members: Vec<usize> = (0..total).filter(|&i| pairs[i].0 == slot).collect();
        if members.is_empty() {
            continue;
        }
        let xs: Vec<f64> = members.iter().flat_map(|&i| [pairs[i].1, pairs[i].2]).collect();
        let us = sol[p].evaluate(&xs, k)?;
        for (j, &i) in members.iter().enumerate() {
            values[i] = (us[2 * j], us[2 * j + 1]);
        }
    }
    let ratios: Vec<f64> = pairs
        .iter()
        .zip(&values)
        .map(|(&(_, x1, x2, t), &(u1, u2))| holder_ratio(u1, u2, x1, x2, t, beta))
        .collect();
    let first = ratios[..samples].iter().copied().fold(0.0, f64::max);
    let all = ratios.iter().copied().fold(0.0, f64::max);
    let stable = if first == 0.0 { all == 0.0 } else { (all - first) / first <= th.holder_stability };
    Ok(InvariantReport::new(
        "holder",
        InvariantReport::verdict(all.is_finite() && stable),
        vec![q("beta", beta), q("constant", first), q("constant_doubled", all)],
        vec![q("stability", th.holder_stability)],
        Vec::new(),
    ))
}

// ---------------------------------------------------------- PDE residual

/// `sup |u_t - u_xx + h u u_x|` at `fields[index]` over nodes at least three
/// cells inside the grid. `u_t` uses up to seven neighbouring fields.
pub fn field_residual(fields: &[Field], index: usize, c: &Coefficient) -> Result<f64> {
    if fields.len() < 5 || index >= fields.len() {
        return Err(config("residual needs at least five fields around the target"));
    }
    let lo = index.saturating_sub(3).min(fields.len().saturating_sub(7));
    let hi = (lo + 7).min(fields.len());
    let times: Vec<f64> = fields[lo..hi].iter().map(|f| f.t).collect();
    let w = fd_weights(fields[index].t, &times, 1);
    let f = &fields[index];
    if fields[lo..hi].iter().any(|g| g.grid != f.grid) {
        return Err(config("residual fields must share a grid"));
    }
    let ux = f.dx_values();
    let uxx = f.dxx_values();
    let n = f.values.len();
    let mut r = 0.0_f64;
    for i in 3..n - 3 {
        let ut: f64 = fields[lo..hi].iter().zip(&w).map(|(g, wj)| wj * g.values[i]).sum();
        r = r.max((ut - uxx[i] + c.h(f.grid.x(i)) * f.values[i] * ux[i]).abs());
    }
    Ok(r)
}

/// Residuals of successively refined solutions at the report time nearest to
/// `t`, with the observed order `ln(r_c / r_f) / ln(dx_c / dx_f)` between
/// consecutive levels. Passes if every order reaches the threshold.
pub fn pde_residual(levels: &[&[Field]], t: f64, c: &Coefficient, th: &Thresholds) -> Result<InvariantReport> {
    if levels.len() < 2 {
        return Err(config("the residual study needs at least two resolutions"));
    }
    let mut res = Vec::with_capacity(levels.len());
    let mut measured = Vec::new();
    for fields in levels {
        let index = fields
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1.t - t).abs().total_cmp(&(b.1.t - t).abs()))
            .map(|(i, _)| i)
            .ok_or_else(|| config("empty level"))?;
        let r = field_residual(fields, index, c)?;
        let dx = fields[index].grid.dx();
        measured.push(q(&format!("residual@dx={dx:.6}"), r));
        res.push((dx, r));
    }
    let mut ok = true;
    for pair in res.windows(2) {
        let order = if pair[1].1 == 0.0 && pair[0].1 == 0.0 {
            f64::INFINITY
        } else {
            (pair[0].1 / pair[1].1).ln() / (pair[0].0 / pair[1].0).ln()
        };
        ok &= order >= th.residual_order || pair[1].1 <= th.residual_floor;
        measured.push(q(&format!("order@dx={:.6}", pair[1].0), order));
    }
    Ok(InvariantReport::new(
        "pde_residual",
        InvariantReport::verdict(ok),
        measured,
        vec![q("min_order", th.residual_order), q("residual_floor", th.residual_floor)],
        Vec::new(),
    ))
}

/// The heat evolution of `d` alone sampled like a solution; not a solution
/// of the nonlinear equation unless `d` is constant.
pub fn heat_fields(d: &InitialData, grid: Grid, times: &[f64], quad: &QuadratureSpec) -> Result<Vec<Field>> {
    times
        .iter()
        .map(|&t| {
            let values = grid.nodes().iter().map(|&x| d.heat_convolution(x, t, quad)).collect::<Result<_>>()?;
            Field::new(t, grid, values, d.left_limit(), d.right_limit())
        })
        .collect()
}

// ------------------------------------------------------------ small time

/// Fits `sup_x |u - H|` against `t - t0` over all report times of the patch,
/// where `H` is the heat evolution of the patch data.
pub fn small_time_consistency(patch: &SolutionPatch, th: &Thresholds) -> Result<(RateFit, InvariantReport)> {
    let quad = QuadratureSpec::default();
    let d = patch.data();
    let mut ts = Vec::new();
    let mut norms = Vec::new();
    for f in &patch.fields {
        let dt = f.t - patch.t0;
        let mut m = 0.0_f64;
        for (i, v) in f.values.iter().enumerate() {
            m = m.max((v - d.heat_convolution(f.grid.x(i), dt, &quad)?).abs());
        }
        ts.push(dt);
        norms.push(m);
    }
    if norms.iter().all(|&n| n == 0.0) {
        let report = InvariantReport::new("small_time", Status::Pass, vec![q("exponent", f64::INFINITY)], vec![q("min_exponent", th.small_time_exponent)], Vec::new());
        let fit = RateFit { times: ts, norms, fitted_exponent: f64::INFINITY, fitted_constant: 0.0, r_squared: 1.0 };
        return Ok((fit, report));
    }
    let fit = RateFit::fit(&ts, &norms)?;
    let status = if fit.r_squared < th.min_r_squared {
        Status::Inconclusive
    } else {
        InvariantReport::verdict(fit.fitted_exponent >= th.small_time_exponent)
    };
    let details = ts.iter().zip(&norms).map(|(&t, &n)| detail(t, "sup_u_minus_heat", n)).collect();
    let report = InvariantReport::new(
        "small_time",
        status,
        vec![q("exponent", fit.fitted_exponent), q("constant", fit.fitted_constant), q("r_squared", fit.r_squared)],
        vec![q("min_exponent", th.small_time_exponent), q("min_r_squared", th.min_r_squared)],
        details,
    );
    Ok((fit, report))
}

// -------------------------------------------------- continuous dependence

/// The data halfway between `a` and `b`, for data of matching shape.
pub fn midpoint(a: &InitialData, b: &InitialData) -> Result<InitialData> {
    match (a, b) {
        (InitialData::Step { u_minus: a1, u_plus: a2 }, InitialData::Step { u_minus: b1, u_plus: b2 }) => {
            InitialData::step(0.5 * (a1 + b1), 0.5 * (a2 + b2))
        }
        (
            InitialData::PiecewiseConstant { breakpoints: ba, values: va },
            InitialData::PiecewiseConstant { breakpoints: bb, values: vb },
        ) if ba == bb => InitialData::piecewise(ba.clone(), va.iter().zip(vb).map(|(x, y)| 0.5 * (x + y)).collect()),
        (InitialData::Smooth(sa), InitialData::Smooth(sb)) => {
            let (fa, fb) = (sa.clone(), sb.clone());
            InitialData::smooth(
                move |x| 0.5 * (fa.eval(x) + fb.eval(x)),
                sa.lower.min(sb.lower),
                sa.upper.max(sb.upper),
                0.5 * (sa.left_limit + sb.left_limit),
                0.5 * (sa.right_limit + sb.right_limit),
                format!("mid({},{})", sa.label, sb.label),
            )
        }
        _ => Err(config("midpoint needs two data of the same shape")),
    }
}

/// `sup |a - b|` for data of matching shape; sampled for smooth data.
pub fn data_gap(a: &InitialData, b: &InitialData, grid: Grid) -> Result<f64> {
    match (a, b) {
        (InitialData::Step { u_minus: a1, u_plus: a2 }, InitialData::Step { u_minus: b1, u_plus: b2 }) => {
            Ok((a1 - b1).abs().max((a2 - b2).abs()))
        }
        (
            InitialData::PiecewiseConstant { breakpoints: ba, values: va },
            InitialData::PiecewiseConstant { breakpoints: bb, values: vb },
        ) if ba == bb => Ok(va.iter().zip(vb).fold(0.0, |m, (x, y)| m.max((x - y).abs()))),
        (InitialData::Smooth(_), InitialData::Smooth(_)) => {
            let limits = (a.left_limit() - b.left_limit()).abs().max((a.right_limit() - b.right_limit()).abs());
            Ok(grid.nodes().iter().fold(limits, |m, &x| m.max((a.eval(x) - b.eval(x)).abs())))
        }
        _ => Err(config("data gap needs two data of the same shape")),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependenceStudy {
    pub times: Vec<f64>,
    /// `||u1 - u2|| / ||u01 - u02||` at each time.
    pub ratio: Vec<f64>,
    /// The same with the data gap halved.
    pub ratio_half_gap: Vec<f64>,
    /// Smallest `scale` with `ratio <= 1 + gronwall_series(t, scale)` at every time.
    pub envelope_scale: f64,
    pub report: InvariantReport,
}

/// Solves from `d1`, `d2` and their midpoint with a common step, and compares
/// the response ratios of the full and the halved gap.
pub fn continuous_dependence(
    d1: &InitialData,
    d2: &InitialData,
    t_final: f64,
    c: &Coefficient,
    cfg: &SolverConfig,
    th: &Thresholds,
) -> Result<DependenceStudy> {
    let gap = data_gap(d1, d2, cfg.grid()?)?;
    if gap == 0.0 {
        let report = InvariantReport::not_applicable("continuous_dependence");
        return Ok(DependenceStudy { times: Vec::new(), ratio: Vec::new(), ratio_half_gap: Vec::new(), envelope_scale: 0.0, report });
    }
    let mid = midpoint(d1, d2)?;
    let step = [d1, d2, &mid]
        .iter()
        .map(|d| certified_step(d.sup_norm(), c))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let s1 = solve_global_with_step(d1, t_final, step, c, cfg)?;
    let s2 = solve_global_with_step(d2, t_final, step, c, cfg)?;
    let sm = solve_global_with_step(&mid, t_final, step, c, cfg)?;
    let (f1, f2, fm) = (all_fields(&s1), all_fields(&s2), all_fields(&sm));
    let sup_diff = |a: &Field, b: &Field| a.values.iter().zip(&b.values).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
    let times: Vec<f64> = f1.iter().map(|f| f.t).collect();
    let ratio: Vec<f64> = f1.iter().zip(&f2).map(|(a, b)| sup_diff(a, b) / gap).collect();
    let ratio_half: Vec<f64> = f1.iter().zip(&fm).map(|(a, b)| sup_diff(a, b) / (0.5 * gap)).collect();

    let instability = ratio.iter().zip(&ratio_half).map(|(r, h)| (r - h).abs() / h).fold(0.0, f64::max);
    let fits = |scale: f64| -> bool {
        times.iter().zip(&ratio).all(|(&t, &r)| r <= 1.0 + gronwall_series(t, scale, 400).unwrap_or(f64::INFINITY))
    };
    let envelope_scale = if fits(0.0) {
        0.0
    } else if !fits(1e3) {
        f64::INFINITY
    } else {
        let (mut a, mut b) = (0.0, 1e3);
        for _ in 0..100 {
            let m = 0.5 * (a + b);
            if fits(m) {
                b = m;
            } else {
                a = m;
            }
        }
        b
    };
    let ok = instability <= th.dependence_stability && envelope_scale.is_finite();
    let details = times
        .iter()
        .zip(&ratio)
        .zip(&ratio_half)
        .flat_map(|((&t, &r), &h)| [detail(t, "ratio", r), detail(t, "ratio_half_gap", h)])
        .collect();
    let report = InvariantReport::new(
        "continuous_dependence",
        InvariantReport::verdict(ok),
        vec![
            q("max_ratio", ratio.iter().copied().fold(0.0, f64::max)),
            q("instability", instability),
            q("envelope_scale", envelope_scale),
        ],
        vec![q("stability", th.dependence_stability)],
        details,
    );
    Ok(DependenceStudy { times, ratio, ratio_half_gap: ratio_half, envelope_scale, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rate_fit_recovers_power_laws() {
        let ts: Vec<f64> = (0..10).map(|i| 10f64.powf(-3.0 + 0.2 * i as f64)).collect();
        let ns: Vec<f64> = ts.iter().map(|t| 2.5 * t.powf(-0.5)).collect();
        let f = RateFit::fit(&ts, &ns).unwrap();
        assert_relative_eq!(f.fitted_exponent, -0.5, epsilon = 1e-12);
        assert_relative_eq!(f.fitted_constant, 2.5, epsilon = 1e-10);
        assert_relative_eq!(f.r_squared, 1.0, epsilon = 1e-12);
        assert!(RateFit::fit(&ts[..2], &ns[..2]).is_err());
        assert!(RateFit::fit(&[1.0, 2.0, 3.0], &[1.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn gronwall_series_basics() {
        assert_eq!(gronwall_series(1.0, 0.0, 100).unwrap(), 0.0);
        assert!(gronwall_series(0.0, 1.0, 100).is_err());
        let a = gronwall_series(1e-8, 1.0, 200).unwrap();
        let lead = (1e-8 / std::f64::consts::PI).sqrt() / libm::tgamma(0.5);
        assert_relative_eq!(a, lead, max_relative = 1e-3);
    }

    #[test]
    fn holder_ratio_of_coincident_points_is_zero() {
        assert_eq!(holder_ratio(1.0, 2.0, 0.3, 0.3, 0.1, 0.5), 0.0);
        assert_relative_eq!(holder_ratio(0.0, 1.0, 0.0, 0.1, 0.01, 0.5), 1.0);
    }

    #[test]
    fn bounds_catch_overshoot() {
        let g = Grid::new(1.0, 11).unwrap();
        let mut f = Field::from_fn(0.1, g, -1.0, 1.0, |x| x.clamp(-1.0, 1.0));
        let th = Thresholds::default();
        assert!(check_bounds(&[&f], -1.0, 1.0, th.bound_tol).passed);
        f.values[5] = 1.01;
        assert!(!check_bounds(&[&f], -1.0, 1.0, th.bound_tol).passed);
    }

    #[test]
    fn monotone_fields_catch_dips() {
        let g = Grid::new(1.0, 101).unwrap();
        let mut f = Field::from_fn(0.01, g, -1.0, 1.0, |x| (x / 0.2).tanh());
        let th = Thresholds::default();
        assert!(check_monotone_fields(&[&f], 1.0, 1.0, &th).passed);
        assert!(!check_monotone_fields(&[&f], -1.0, 1.0, &th).passed);
        f.values[70] -= 0.1;
        assert!(!check_monotone_fields(&[&f], 1.0, 1.0, &th).passed);
    }

    #[test]
    fn midpoint_and_gap() {
        let a = InitialData::step(-1.0, 1.0).unwrap();
        let b = a.shifted(0.02);
        let g = Grid::new(1.0, 11).unwrap();
        assert_relative_eq!(data_gap(&a, &b, g).unwrap(), 0.02, epsilon = 1e-15);
        let m = midpoint(&a, &b).unwrap();
        assert_relative_eq!(data_gap(&a, &m, g).unwrap(), 0.01, epsilon = 1e-15);
        assert!(midpoint(&a, &InitialData::constant(0.0).unwrap()).is_err());
    }
}
