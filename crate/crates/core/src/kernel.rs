//! The heat kernel `G(x,t;s,tau) = (4 pi (t-tau))^(-1/2) exp(-(x-s)^2 / (4 (t-tau)))`,
//! its `s`-derivatives, and numerical checks of its integral identities and
//! Hölder-type difference bounds.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::parallel;
use crate::quadrature::{GaussRule, QuadratureSpec};

/// Arguments `(x, t; s, tau)` of the kernel. Requires `t > tau`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelPoint {
    pub x: f64,
    pub t: f64,
    pub s: f64,
    pub tau: f64,
}

impl KernelPoint {
    pub fn new(x: f64, t: f64, s: f64, tau: f64) -> Result<Self> {
        let p = Self { x, t, s, tau };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if ![self.x, self.t, self.s, self.tau].iter().all(|v| v.is_finite()) {
            return Err(domain(format!("non-finite kernel argument {self:?}")));
        }
        if self.t <= self.tau {
            return Err(domain(format!(
                "kernel requires t > tau, got t = {}, tau = {}",
                self.t, self.tau
            )));
        }
        Ok(())
    }

    #[inline]
    fn offsets(&self) -> (f64, f64) {
        (self.x - self.s, self.t - self.tau)
    }
}

#[inline]
pub(crate) fn g_raw(dx: f64, dt: f64) -> f64 {
    (-dx * dx / (4.0 * dt)).exp() / (4.0 * PI * dt).sqrt()
}

#[inline]
pub(crate) fn gs_raw(dx: f64, dt: f64) -> f64 {
    dx / (2.0 * dt) * g_raw(dx, dt)
}

#[inline]
pub(crate) fn gss_raw(dx: f64, dt: f64) -> f64 {
    (dx * dx / (4.0 * dt * dt) - 0.5 / dt) * g_raw(dx, dt)
}

pub fn eval_g(p: &KernelPoint) -> Result<f64> {
    p.validate()?;
    let (dx, dt) = p.offsets();
    Ok(g_raw(dx, dt))
}

/// `dG/ds`.
pub fn eval_gs(p: &KernelPoint) -> Result<f64> {
    p.validate()?;
    let (dx, dt) = p.offsets();
    Ok(gs_raw(dx, dt))
}

/// `d^2 G / ds^2`.
pub fn eval_gss(p: &KernelPoint) -> Result<f64> {
    p.validate()?;
    let (dx, dt) = p.offsets();
    Ok(gss_raw(dx, dt))
}

fn check_dt(dt: f64) -> Result<()> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(domain(format!("time gap must be positive and finite, got {dt}")));
    }
    Ok(())
}

/// Integrates a kernel against `ds` after `s = 2 sqrt(dt) lambda`, with the
/// Gaussian weight divided back out so the kernel itself is evaluated.
fn hermite_kernel_integral(rule: &GaussRule, dt: f64, k: impl Fn(f64, f64) -> f64) -> f64 {
    let w = 2.0 * dt.sqrt();
    rule.integrate(|l| k(-w * l, dt) * w * (l * l).exp())
}

/// `int G ds`, which is exactly 1 for every `t > tau`.
pub fn integral_g(dt: f64, q: &QuadratureSpec) -> Result<f64> {
    check_dt(dt)?;
    q.validate()?;
    Ok(hermite_kernel_integral(&q.hermite_rule(), dt, g_raw))
}

/// `int |G_s| ds`, which equals `1 / sqrt(pi dt)`. The integrand is split at
/// its sign change `s = x`.
pub fn integral_abs_gs(dt: f64, q: &QuadratureSpec) -> Result<f64> {
    check_dt(dt)?;
    q.validate()?;
    let rule = q.legendre_rule();
    let lam = q.tail_halfwidth();
    let w = 2.0 * dt.sqrt();
    Ok(rule.integrate_panels(&[-lam, 0.0, lam], |l| gs_raw(-w * l, dt).abs() * w))
}

/// `(int G_ss ds, int |G_ss| ds)`. The signed integral vanishes; the absolute
/// one scales like `1/dt`. Absolute values are integrated between the roots
/// `lambda^2 = 1/2`.
pub fn integral_gss_signed_and_abs(dt: f64, q: &QuadratureSpec) -> Result<(f64, f64)> {
    check_dt(dt)?;
    q.validate()?;
    let signed = hermite_kernel_integral(&q.hermite_rule(), dt, gss_raw);
    let rule = q.legendre_rule();
    let lam = q.tail_halfwidth();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let w = 2.0 * dt.sqrt();
    let abs = rule.integrate_panels(&[-lam, -r, r, lam], |l| gss_raw(-w * l, dt).abs() * w);
    Ok((signed, abs))
}

/// One row of the kernel identity suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub identity_name: String,
    pub parameter: f64,
    pub computed: f64,
    pub expected: f64,
    pub abs_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl IdentityCheck {
    fn new(name: &str, parameter: f64, computed: f64, expected: f64, tolerance: f64) -> Self {
        let abs_error = (computed - expected).abs();
        Self {
            identity_name: name.to_string(),
            parameter,
            computed,
            expected,
            abs_error,
            tolerance,
            passed: abs_error <= tolerance,
        }
    }
}

pub const IDENTITY_NAMES: [&str; 4] = [
    "integral_G",
    "integral_absGs_scaled",
    "integral_Gss_signed",
    "integral_absGss_scaling",
];

/// Evaluates the four integral identities at each time gap in `dts`.
///
/// `integral_absGs_scaled` reports `sqrt(pi dt) int |G_s|`, and
/// `integral_absGss_scaling` compares `dt int |G_ss|` with its value at `dt = 1`.
pub fn identity_suite(dts: &[f64], q: &QuadratureSpec) -> Result<Vec<IdentityCheck>> {
    let (_, abs_unit) = integral_gss_signed_and_abs(1.0, q)?;
    let mut rows = Vec::with_capacity(4 * dts.len());
    for &dt in dts {
        rows.push(IdentityCheck::new(IDENTITY_NAMES[0], dt, integral_g(dt, q)?, 1.0, 1e-10));
        let scaled = integral_abs_gs(dt, q)? * (PI * dt).sqrt();
        rows.push(IdentityCheck::new(IDENTITY_NAMES[1], dt, scaled, 1.0, 1e-7));
        let (signed, abs) = integral_gss_signed_and_abs(dt, q)?;
        rows.push(IdentityCheck::new(IDENTITY_NAMES[2], dt, signed, 0.0, 1e-8));
        rows.push(IdentityCheck::new(IDENTITY_NAMES[3], dt, abs * dt, abs_unit, 1e-6));
    }
    Ok(rows)
}

/// Which kernel the difference bound is about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KernelKind {
    G,
    Gs,
    Gss,
}

impl KernelKind {
    pub const ALL: [KernelKind; 3] = [KernelKind::G, KernelKind::Gs, KernelKind::Gss];

    #[inline]
    fn eval(self, dx: f64, dt: f64) -> f64 {
        match self {
            KernelKind::G => g_raw(dx, dt),
            KernelKind::Gs => gs_raw(dx, dt),
            KernelKind::Gss => gss_raw(dx, dt),
        }
    }

    /// Power of `dt` in the prefactor of the bound: 0, 1/2, 1.
    fn prefactor_power(self) -> f64 {
        match self {
            KernelKind::G => 0.0,
            KernelKind::Gs => 0.5,
            KernelKind::Gss => 1.0,
        }
    }
}

/// One of the six difference bounds: spatial (`x1` vs `x2`) or temporal
/// (`t1` vs `t2`) for each kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HolderBound {
    Spatial(KernelKind),
    Temporal(KernelKind),
}

impl HolderBound {
    pub const ALL: [HolderBound; 6] = [
        HolderBound::Spatial(KernelKind::G),
        HolderBound::Spatial(KernelKind::Gs),
        HolderBound::Spatial(KernelKind::Gss),
        HolderBound::Temporal(KernelKind::G),
        HolderBound::Temporal(KernelKind::Gs),
        HolderBound::Temporal(KernelKind::Gss),
    ];

    pub fn name(&self) -> &'static str {
        match self {
            HolderBound::Spatial(KernelKind::G) => "spatial_G",
            HolderBound::Spatial(KernelKind::Gs) => "spatial_Gs",
            HolderBound::Spatial(KernelKind::Gss) => "spatial_Gss",
            HolderBound::Temporal(KernelKind::G) => "temporal_G",
            HolderBound::Temporal(KernelKind::Gs) => "temporal_Gs",
            HolderBound::Temporal(KernelKind::Gss) => "temporal_Gss",
        }
    }
}

/// Arguments of a difference integral.
///
/// Spatial: `a`, `b` are `x1`, `x2` at common `(t, tau)`, stored in `t_hi`.
/// Temporal: `a = b = x`, with `t_hi = t1 > t_lo = t2 > tau`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DifferenceSample {
    pub a: f64,
    pub b: f64,
    pub t_hi: f64,
    pub t_lo: f64,
    pub tau: f64,
}

impl DifferenceSample {
    pub fn spatial(x1: f64, x2: f64, t: f64, tau: f64) -> Self {
        Self { a: x1, b: x2, t_hi: t, t_lo: t, tau }
    }

    pub fn temporal(x: f64, t1: f64, t2: f64, tau: f64) -> Self {
        Self { a: x, b: x, t_hi: t1, t_lo: t2, tau }
    }
}

/// Left-hand side `int |K(x1 or t1) - K(x2 or t2)| ds` of a difference bound.
///
/// The integrand's sign changes are located by a scan plus bisection and the
/// integral is assembled panel by panel between them.
pub fn difference_integral(
    bound: HolderBound,
    p: &DifferenceSample,
    rule: &GaussRule,
    tail: f64,
) -> Result<f64> {
    let (kind, dt_a, dt_b) = match bound {
        HolderBound::Spatial(k) => (k, p.t_hi - p.tau, p.t_hi - p.tau),
        HolderBound::Temporal(k) => (k, p.t_hi - p.tau, p.t_lo - p.tau),
    };
    check_dt(dt_a)?;
    check_dt(dt_b)?;
    if matches!(bound, HolderBound::Temporal(_)) && p.t_hi < p.t_lo {
        return Err(domain("temporal difference requires t1 >= t2"));
    }
    if p.a == p.b && dt_a == dt_b {
        return Ok(0.0);
    }
    let w_narrow = 2.0 * dt_a.min(dt_b).sqrt();
    let w_wide = 2.0 * dt_a.max(dt_b).sqrt();
    let lo = p.a.min(p.b) - tail * w_wide;
    let hi = p.a.max(p.b) + tail * w_wide;
    let f = |s: f64| kind.eval(p.a - s, dt_a) - kind.eval(p.b - s, dt_b);

    let scan_step = w_narrow / 16.0;
    let n_scan = (((hi - lo) / scan_step).ceil() as usize).clamp(64, 200_000);
    let h = (hi - lo) / n_scan as f64;
    let mut edges = vec![lo];
    let mut prev = f(lo);
    for i in 1..=n_scan {
        let s = if i == n_scan { hi } else { lo + i as f64 * h };
        let cur = f(s);
        if prev != 0.0 && cur == 0.0 {
            // a scan node hit the root exactly
            edges.push(s);
        } else if prev != 0.0 && (prev < 0.0) != (cur < 0.0) {
            edges.push(bisect_root(&f, s - h, s, prev));
        }
        prev = cur;
    }
    edges.push(hi);

    // keep panels no longer than two narrow widths
    let mut panels = Vec::with_capacity(edges.len() * 4);
    for e in edges.windows(2) {
        let n = ((e[1] - e[0]) / (2.0 * w_narrow)).ceil().max(1.0) as usize;
        for j in 0..n {
            panels.push(e[0] + (e[1] - e[0]) * j as f64 / n as f64);
        }
    }
    panels.push(hi);
    Ok(rule.integrate_panels(&panels, |s| f(s).abs()))
}

fn bisect_root(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, fa: f64) -> f64 {
    let neg = fa < 0.0;
    for _ in 0..80 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if (f(m) < 0.0) == neg {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Scale factor the difference integral is divided by.
pub fn difference_scale(bound: HolderBound, p: &DifferenceSample, beta: f64) -> f64 {
    match bound {
        HolderBound::Spatial(k) => {
            let dt = p.t_hi - p.tau;
            ((p.a - p.b).abs() / dt.sqrt()).powf(beta) / dt.powf(k.prefactor_power())
        }
        HolderBound::Temporal(k) => {
            let dt2 = p.t_lo - p.tau;
            ((p.t_hi - p.t_lo).abs() / dt2).powf(beta / 2.0) / dt2.powf(k.prefactor_power())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderFit {
    pub bound: HolderBound,
    pub name: String,
    /// Largest observed ratio of the difference integral to its scale factor.
    pub constant: f64,
    /// Scale ratio (`|x1-x2|/sqrt(t-tau)` or `|t1-t2|/(t2-tau)`) at the maximum.
    pub argmax_ratio: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderTable {
    pub beta: f64,
    pub seed: u64,
    pub fits: Vec<HolderFit>,
}

impl HolderTable {
    pub fn get(&self, bound: HolderBound) -> Option<&HolderFit> {
        self.fits.iter().find(|f| f.bound == bound)
    }
}

/// Draws `sample_count` random spatial and temporal samples and records the
/// maximum ratio of each difference integral to its bound's scale factor.
///
/// Scale ratios are drawn log-uniformly from `[1e-3, 10]`, time gaps
/// log-uniformly from `[1e-4, 1e2]`, positions uniformly from `[-5, 5]`.
/// Sample `i` is the same for every `sample_count > i`, so doubling the count
/// extends the previous sample set.
pub fn fit_holder_constants(
    beta: f64,
    sample_count: usize,
    q: &QuadratureSpec,
    seed: u64,
) -> Result<HolderTable> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(domain(format!("beta must lie in (0, 1), got {beta}")));
    }
    if sample_count == 0 {
        return Err(domain("sample_count must be positive"));
    }
    q.validate()?;
    let rule = GaussRule::legendre(q.hermite_order.min(24));
    let tail = q.tail_halfwidth();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<([f64; 5], [f64; 5])> = (0..sample_count)
        .map(|_| {
            let s = [rng.random(), rng.random(), rng.random(), rng.random(), rng.random()];
            let t = [rng.random(), rng.random(), rng.random(), rng.random(), rng.random()];
            (s, t)
        })
        .collect();
    let log_uniform = |u: f64, lo: f64, hi: f64| 10f64.powf(lo + (hi - lo) * u);

    let samples: Vec<(DifferenceSample, f64, DifferenceSample, f64)> = draws
        .iter()
        .map(|(s, t)| {
            let tau = s[0];
            let dt = log_uniform(s[1], -4.0, 2.0);
            let x1 = -5.0 + 10.0 * s[2];
            let ratio = log_uniform(s[3], -3.0, 1.0);
            let sign = if s[4] < 0.5 { -1.0 } else { 1.0 };
            let spatial = DifferenceSample::spatial(x1, x1 + sign * ratio * dt.sqrt(), tau + dt, tau);

            let tau = t[0];
            let dt2 = log_uniform(t[1], -4.0, 2.0);
            let x = -5.0 + 10.0 * t[2];
            let tratio = log_uniform(t[3], -3.0, 1.0);
            let t2 = tau + dt2;
            let temporal = DifferenceSample::temporal(x, t2 + tratio * dt2, t2, tau);
            (spatial, ratio, temporal, tratio)
        })
        .collect();

    let mut fits = Vec::with_capacity(6);
    for bound in HolderBound::ALL {
        let ratios: Vec<Result<(f64, f64)>> = parallel::map_slice(&samples, |(sp, r, tp, tr)| {
            let (p, scale_ratio) = match bound {
                HolderBound::Spatial(_) => (sp, *r),
                HolderBound::Temporal(_) => (tp, *tr),
            };
            let lhs = difference_integral(bound, p, &rule, tail)?;
            let scale = difference_scale(bound, p, beta);
            Ok((if scale > 0.0 { lhs / scale } else { 0.0 }, scale_ratio))
        });
        let mut best = (0.0_f64, 0.0_f64);
        for r in ratios {
            let (v, sr) = r?;
            if v > best.0 {
                best = (v, sr);
            }
        }
        fits.push(HolderFit {
            bound,
            name: bound.name().to_string(),
            constant: best.0,
            argmax_ratio: best.1,
            samples: sample_count,
        });
    }
    Ok(HolderTable { beta, seed, fits })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn q() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn g_point_values() {
        let p = KernelPoint::new(0.0, 1.0, 0.0, 0.0).unwrap();
        assert_abs_diff_eq!(eval_g(&p).unwrap(), 0.282_094_791_773_878_1, epsilon = 1e-15);
        let p = KernelPoint::new(2.0, 1.0, 0.0, 0.0).unwrap();
        assert_abs_diff_eq!(eval_g(&p).unwrap(), 0.103_776_874_355_148_7, epsilon = 1e-12);
        let swapped = KernelPoint::new(0.0, 1.0, 2.0, 0.0).unwrap();
        assert_eq!(eval_g(&p).unwrap(), eval_g(&swapped).unwrap());
    }

    #[test]
    fn derivative_point_values() {
        let p = KernelPoint::new(0.3, 1.0, 0.3, 0.0).unwrap();
        assert_eq!(eval_gs(&p).unwrap(), 0.0);
        let p = KernelPoint::new(1.0, 1.0, 0.0, 0.0).unwrap();
        // central difference of G in s, frozen
        assert_abs_diff_eq!(eval_gs(&p).unwrap(), 0.109_847_822_7, epsilon = 1e-9);
        let q = KernelPoint::new(0.0, 1.0, 1.0, 0.0).unwrap();
        assert_eq!(eval_gs(&p).unwrap(), -eval_gs(&q).unwrap());
        let p = KernelPoint::new(0.0, 2.0, 0.0, 1.0).unwrap();
        assert_abs_diff_eq!(eval_gss(&p).unwrap(), -0.141_047_395_886_939, epsilon = 1e-12);
        let root = KernelPoint::new(2f64.sqrt(), 1.5, 0.0, 0.5).unwrap();
        assert_abs_diff_eq!(eval_gss(&root).unwrap(), 0.0, epsilon = 1e-16);
    }

    #[test]
    fn domain_errors() {
        assert!(KernelPoint::new(0.0, 1.0, 0.0, 1.0).is_err());
        assert!(KernelPoint::new(f64::NAN, 1.0, 0.0, 0.0).is_err());
        let bad = KernelPoint { x: 0.0, t: 0.0, s: 0.0, tau: 1.0 };
        assert!(eval_g(&bad).is_err());
        assert!(eval_gs(&bad).is_err());
        assert!(eval_gss(&bad).is_err());
        assert!(integral_g(0.0, &q()).is_err());
        assert!(integral_abs_gs(-1.0, &q()).is_err());
        assert!(integral_gss_signed_and_abs(f64::INFINITY, &q()).is_err());
        assert!(fit_holder_constants(1.0, 10, &q(), 1).is_err());
        assert!(fit_holder_constants(0.0, 10, &q(), 1).is_err());
    }

    #[test]
    fn integral_identities() {
        for dt in [1e-4, 1e-2, 1.0, 1e2] {
            assert!((integral_g(dt, &q()).unwrap() - 1.0).abs() <= 1e-10);
            let a = integral_abs_gs(dt, &q()).unwrap();
            assert!((a * (PI * dt).sqrt() - 1.0).abs() <= 1e-7);
            let (s, _) = integral_gss_signed_and_abs(dt, &q()).unwrap();
            assert!(s.abs() <= 1e-8, "dt {dt}: signed {s}");
        }
        assert_relative_eq!(integral_abs_gs(1.0, &q()).unwrap(), 0.564_189_583_547_756_3, max_relative = 1e-9);
        assert_relative_eq!(integral_abs_gs(4.0, &q()).unwrap(), 0.282_094_791_773_878_1, max_relative = 1e-9);
        assert_relative_eq!(integral_abs_gs(0.25, &q()).unwrap(), std::f64::consts::FRAC_2_SQRT_PI, max_relative = 1e-9);
    }

    #[test]
    fn gss_absolute_scales_like_inverse_dt() {
        let (_, unit) = integral_gss_signed_and_abs(1.0, &q()).unwrap();
        let (_, small) = integral_gss_signed_and_abs(0.01, &q()).unwrap();
        assert_abs_diff_eq!(small * 0.01, unit, epsilon = 1e-6);
    }

    #[test]
    fn identity_suite_passes_at_default_order() {
        let rows = identity_suite(&[1e-4, 1.0], &q()).unwrap();
        assert_eq!(rows.len(), 8);
        assert!(rows.iter().all(|r| r.passed), "{rows:#?}");
    }

    #[test]
    fn identity_suite_fails_when_underresolved() {
        for order in [4, 8] {
            let coarse = QuadratureSpec::new(order, 4, 1e-14).unwrap();
            let rows = identity_suite(&[1.0], &coarse).unwrap();
            assert!(rows.iter().any(|r| !r.passed), "order {order}");
        }
    }

    #[test]
    fn identical_arguments_give_zero_difference() {
        let rule = GaussRule::legendre(24);
        for bound in HolderBound::ALL {
            let p = match bound {
                HolderBound::Spatial(_) => DifferenceSample::spatial(0.4, 0.4, 1.0, 0.2),
                HolderBound::Temporal(_) => DifferenceSample::temporal(0.4, 1.0, 1.0, 0.2),
            };
            assert_eq!(difference_integral(bound, &p, &rule, 6.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn spatial_g_difference_matches_closed_form() {
        // int |G(x1-s) - G(x2-s)| ds = 2 erf(|x1-x2| / (4 sqrt(dt)))
        let rule = GaussRule::legendre(24);
        for (d, dt) in [(0.1, 1.0), (3.0, 0.5), (1e-3, 1e-4)] {
            let p = DifferenceSample::spatial(0.2, 0.2 + d, 0.3 + dt, 0.3);
            let v = difference_integral(HolderBound::Spatial(KernelKind::G), &p, &rule, 6.0).unwrap();
            let expect = 2.0 * libm::erf(d / (4.0 * dt.sqrt()));
            assert_relative_eq!(v, expect, max_relative = 1e-9);
        }
    }

    proptest! {
        #[test]
        fn derivatives_match_finite_differences(
            x in -3.0f64..3.0, s in -3.0f64..3.0, tau in 0.0f64..1.0, dt in 0.05f64..3.0
        ) {
            let t = tau + dt;
            let h = 1e-4;
            let g = |s: f64| g_raw(x - s, dt);
            let p = KernelPoint::new(x, t, s, tau).unwrap();
            let fd1 = (g(s + h) - g(s - h)) / (2.0 * h);
            let fd2 = (g(s + h) - 2.0 * g(s) + g(s - h)) / (h * h);
            let scale = g_raw(0.0, dt);
            let e1 = eval_gs(&p).unwrap();
            let e2 = eval_gss(&p).unwrap();
            prop_assert!((fd1 - e1).abs() <= 1e-5 * e1.abs().max(scale / dt.sqrt()));
            prop_assert!((fd2 - e2).abs() <= 1e-5 * e2.abs().max(scale / dt));
        }

        #[test]
        fn mass_identities_hold_across_scales(log_dt in -4.0f64..2.0) {
            let dt = 10f64.powf(log_dt);
            prop_assert!((integral_g(dt, &q()).unwrap() - 1.0).abs() <= 1e-10);
            let a = integral_abs_gs(dt, &q()).unwrap();
            prop_assert!((a * (PI * dt).sqrt() - 1.0).abs() <= 1e-7);
        }
    }
}
