//! Bounded initial data and its evolution under the heat semigroup.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Result};
use crate::field::{Field, Grid};
use crate::quadrature::{GaussRule, QuadratureSpec};

type Profile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A smooth profile with caller-certified bounds `lower <= f <= upper` and
/// limits at `-inf` / `+inf`.
#[derive(Clone)]
pub struct SmoothData {
    profile: Profile,
    pub lower: f64,
    pub upper: f64,
    pub left_limit: f64,
    pub right_limit: f64,
    pub label: String,
}

impl SmoothData {
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.profile)(x)
    }
}

impl fmt::Debug for SmoothData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothData")
            .field("label", &self.label)
            .field("lower", &self.lower)
            .field("upper", &self.upper)
            .field("left_limit", &self.left_limit)
            .field("right_limit", &self.right_limit)
            .finish()
    }
}

#[derive(Debug, Clone)]
pub enum InitialData {
    /// `u_minus` for `x <= 0`, `u_plus` for `x > 0`.
    Step { u_minus: f64, u_plus: f64 },
    /// `values[i]` on `(breakpoints[i-1], breakpoints[i]]`, with `values.len() == breakpoints.len() + 1`.
    PiecewiseConstant { breakpoints: Vec<f64>, values: Vec<f64> },
    Smooth(SmoothData),
}

impl InitialData {
    pub fn step(u_minus: f64, u_plus: f64) -> Result<Self> {
        if !(u_minus.is_finite() && u_plus.is_finite()) {
            return Err(domain("step levels must be finite"));
        }
        Ok(Self::Step { u_minus, u_plus })
    }

    pub fn constant(value: f64) -> Result<Self> {
        Self::piecewise(Vec::new(), vec![value])
    }

    pub fn piecewise(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.len() != breakpoints.len() + 1 {
            return Err(domain(format!(
                "{} breakpoints need {} values, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                values.len()
            )));
        }
        if !breakpoints.iter().chain(&values).all(|v| v.is_finite()) {
            return Err(domain("piecewise data must be finite"));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(domain("breakpoints must be strictly ascending"));
        }
        Ok(Self::PiecewiseConstant { breakpoints, values })
    }

    /// Smooth data with certified bounds. The limits must lie within the bounds.
    pub fn smooth(
        profile: impl Fn(f64) -> f64 + Send + Sync + 'static,
        lower: f64,
        upper: f64,
        left_limit: f64,
        right_limit: f64,
        label: impl Into<String>,
    ) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite() && lower <= upper) {
            return Err(domain(format!("invalid bounds [{lower}, {upper}]")));
        }
        for lim in [left_limit, right_limit] {
            if !(lim >= lower && lim <= upper) {
                return Err(domain(format!("limit {lim} outside bounds [{lower}, {upper}]")));
            }
        }
        Ok(Self::Smooth(SmoothData {
            profile: Arc::new(profile),
            lower,
            upper,
            left_limit,
            right_limit,
            label: label.into(),
        }))
    }

    /// `mid + half * tanh((x - center) / width)` running from `left` to `right`.
    pub fn tanh_profile(left: f64, right: f64, center: f64, width: f64) -> Result<Self> {
        if !(width.is_finite() && width > 0.0) {
            return Err(domain(format!("tanh width must be positive, got {width}")));
        }
        let mid = 0.5 * (left + right);
        let half = 0.5 * (right - left);
        Self::smooth(
            move |x| mid + half * ((x - center) / width).tanh(),
            left.min(right),
            left.max(right),
            left,
            right,
            format!("tanh({left},{right},{center},{width})"),
        )
    }

    /// Smooth data given by the interpolant of a field, with externally
    /// supplied bounds (used to restart from a terminal profile).
    pub fn from_field(field: Field, lower: f64, upper: f64) -> Result<Self> {
        let label = format!("field(t={})", field.t);
        let (l, r) = (field.far_left, field.far_right);
        let f = Arc::new(field);
        Self::smooth(move |x| f.eval(x), lower.min(l).min(r), upper.max(l).max(r), l, r, label)
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Self::Step { u_minus, u_plus } => {
                if x <= 0.0 {
                    *u_minus
                } else {
                    *u_plus
                }
            }
            Self::PiecewiseConstant { breakpoints, values } => {
                values[breakpoints.partition_point(|&b| b < x)]
            }
            Self::Smooth(s) => s.eval(x),
        }
    }

    /// Lower bound of the data (exact for step and piecewise data).
    pub fn inf(&self) -> f64 {
        match self {
            Self::Step { u_minus, u_plus } => u_minus.min(*u_plus),
            Self::PiecewiseConstant { values, .. } => values.iter().copied().fold(f64::INFINITY, f64::min),
            Self::Smooth(s) => s.lower,
        }
    }

    /// Upper bound of the data (exact for step and piecewise data).
    pub fn sup(&self) -> f64 {
        match self {
            Self::Step { u_minus, u_plus } => u_minus.max(*u_plus),
            Self::PiecewiseConstant { values, .. } => {
                values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            }
            Self::Smooth(s) => s.upper,
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.inf().abs().max(self.sup().abs())
    }

    pub fn left_limit(&self) -> f64 {
        match self {
            Self::Step { u_minus, .. } => *u_minus,
            Self::PiecewiseConstant { values, .. } => values[0],
            Self::Smooth(s) => s.left_limit,
        }
    }

    pub fn right_limit(&self) -> f64 {
        match self {
            Self::Step { u_plus, .. } => *u_plus,
            Self::PiecewiseConstant { values, .. } => values[values.len() - 1],
            Self::Smooth(s) => s.right_limit,
        }
    }

    /// Jump locations and jump sizes `(b, right value - left value)`.
    pub fn jumps(&self) -> Vec<(f64, f64)> {
        match self {
            Self::Step { u_minus, u_plus } if u_minus != u_plus => vec![(0.0, u_plus - u_minus)],
            Self::Step { .. } => Vec::new(),
            Self::PiecewiseConstant { breakpoints, values } => breakpoints
                .iter()
                .enumerate()
                .filter(|(i, _)| values[i + 1] != values[*i])
                .map(|(i, &b)| (b, values[i + 1] - values[i]))
                .collect(),
            Self::Smooth(_) => Vec::new(),
        }
    }

    pub fn is_smooth(&self) -> bool {
        matches!(self, Self::Smooth(_))
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Self::Smooth(s) => s.lower == s.upper,
            _ => self.jumps().is_empty(),
        }
    }

    /// The same data plus a constant.
    pub fn shifted(&self, delta: f64) -> Self {
        match self {
            Self::Step { u_minus, u_plus } => Self::Step { u_minus: u_minus + delta, u_plus: u_plus + delta },
            Self::PiecewiseConstant { breakpoints, values } => Self::PiecewiseConstant {
                breakpoints: breakpoints.clone(),
                values: values.iter().map(|v| v + delta).collect(),
            },
            Self::Smooth(s) => {
                let p = s.profile.clone();
                Self::Smooth(SmoothData {
                    profile: Arc::new(move |x| p(x) + delta),
                    lower: s.lower + delta,
                    upper: s.upper + delta,
                    left_limit: s.left_limit + delta,
                    right_limit: s.right_limit + delta,
                    label: format!("{}{:+}", s.label, delta),
                })
            }
        }
    }

    /// `int u0(s) G(x,t;s,0) ds`. Closed form (erfc sums) for piecewise-constant
    /// data, Gauss-Hermite quadrature for smooth data.
    pub fn heat_convolution(&self, x: f64, t: f64, q: &QuadratureSpec) -> Result<f64> {
        check_time(t)?;
        Ok(match self {
            Self::Smooth(s) => {
                let w = 2.0 * t.sqrt();
                q.hermite_rule().integrate(|l| s.eval(x + w * l)) / PI.sqrt()
            }
            _ => self.heat_convolution_closed(x, t),
        })
    }

    /// Closed form for jump data; panics on smooth data.
    #[inline]
    pub(crate) fn heat_convolution_closed(&self, x: f64, t: f64) -> f64 {
        let w = 2.0 * t.sqrt();
        self.left_limit()
            + self
                .jumps()
                .iter()
                .map(|&(b, jump)| jump * 0.5 * libm::erfc((b - x) / w))
                .sum::<f64>()
    }

    /// Direct composite Gauss-Legendre quadrature of the convolution over
    /// `lambda = (s - x) / (2 sqrt t)` in `[-Lambda, Lambda]`, split at the
    /// breakpoints. Independent of the closed form.
    pub fn heat_convolution_quadrature(&self, x: f64, t: f64, q: &QuadratureSpec) -> Result<f64> {
        check_time(t)?;
        q.validate()?;
        let w = 2.0 * t.sqrt();
        let lam = q.tail_halfwidth();
        let mut edges: Vec<f64> = self
            .jumps()
            .iter()
            .map(|&(b, _)| (b - x) / w)
            .filter(|l| l.abs() < lam)
            .collect();
        edges.push(-lam);
        edges.push(lam);
        let n = (2.0 * lam / 0.25).ceil() as usize;
        edges.extend((1..n).map(|i| -lam + 2.0 * lam * i as f64 / n as f64));
        edges.sort_by(f64::total_cmp);
        edges.dedup();
        let rule = GaussRule::legendre(16);
        let body = rule.integrate_panels(&edges, |l| self.eval(x + w * l) * (-l * l).exp()) / PI.sqrt();
        // constant tails beyond +-Lambda
        let tail = 0.5 * libm::erfc(lam);
        Ok(body + tail * (self.left_limit() + self.right_limit()))
    }

    /// Samples the data at grid nodes, with far-field constants from its limits.
    pub fn sample_field(&self, grid: Grid) -> Result<Field> {
        for (b, _) in self.jumps() {
            if b.abs() >= grid.half_width {
                return Err(config(format!(
                    "grid half width {} does not contain breakpoint {b}",
                    grid.half_width
                )));
            }
        }
        Ok(Field::from_fn(0.0, grid, self.left_limit(), self.right_limit(), |x| self.eval(x)))
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t.is_finite() && t > 0.0) {
        return Err(domain(format!("time must be positive and finite, got {t}")));
    }
    Ok(())
}

/// Serializable description of initial data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSpec {
    Step { u_minus: f64, u_plus: f64 },
    Constant { value: f64 },
    PiecewiseConstant { breakpoints: Vec<f64>, values: Vec<f64> },
    Tanh { left: f64, right: f64, center: f64, width: f64 },
}

impl DataSpec {
    pub fn build(&self) -> Result<InitialData> {
        match self {
            DataSpec::Step { u_minus, u_plus } => InitialData::step(*u_minus, *u_plus),
            DataSpec::Constant { value } => InitialData::constant(*value),
            DataSpec::PiecewiseConstant { breakpoints, values } => {
                InitialData::piecewise(breakpoints.clone(), values.clone())
            }
            DataSpec::Tanh { left, right, center, width } => {
                InitialData::tanh_profile(*left, *right, *center, *width)
            }
        }
    }

    /// The same description with every level shifted by `delta`.
    pub fn shifted(&self, delta: f64) -> Self {
        match self.clone() {
            DataSpec::Step { u_minus, u_plus } => DataSpec::Step { u_minus: u_minus + delta, u_plus: u_plus + delta },
            DataSpec::Constant { value } => DataSpec::Constant { value: value + delta },
            DataSpec::PiecewiseConstant { breakpoints, values } => DataSpec::PiecewiseConstant {
                breakpoints,
                values: values.into_iter().map(|v| v + delta).collect(),
            },
            DataSpec::Tanh { left, right, center, width } => {
                DataSpec::Tanh { left: left + delta, right: right + delta, center, width }
            }
        }
    }
}
