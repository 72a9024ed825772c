//! The advection coefficient `h(x) = (1 + x^2)^(-alpha)`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CoefficientRepr", into = "CoefficientRepr")]
pub struct Coefficient {
    alpha: f64,
}

#[derive(Serialize, Deserialize)]
struct CoefficientRepr {
    alpha: f64,
}

impl TryFrom<CoefficientRepr> for Coefficient {
    type Error = crate::Error;
    fn try_from(r: CoefficientRepr) -> Result<Self> {
        Coefficient::new(r.alpha)
    }
}

impl From<Coefficient> for CoefficientRepr {
    fn from(c: Coefficient) -> Self {
        Self { alpha: c.alpha }
    }
}

impl Coefficient {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(domain(format!("alpha must be positive and finite, got {alpha}")));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    #[inline]
    pub fn h(&self, x: f64) -> f64 {
        (-self.alpha * (x * x).ln_1p()).exp()
    }

    #[inline]
    pub fn dh(&self, x: f64) -> f64 {
        let q = 1.0 + x * x;
        -2.0 * self.alpha * x * self.h(x) / q
    }

    /// `(h(x), h'(x))` sharing one power evaluation.
    #[inline]
    pub fn h_and_dh(&self, x: f64) -> (f64, f64) {
        let x2 = x * x;
        let h = (-self.alpha * x2.ln_1p()).exp();
        (h, -2.0 * self.alpha * x * h / (1.0 + x2))
    }

    /// `sup |h| = h(0) = 1`.
    pub fn sup_h(&self) -> f64 {
        1.0
    }

    /// `sup |h'|`, attained at `x^2 = 1 / (2 alpha + 1)`.
    pub fn sup_dh(&self) -> f64 {
        let a = self.alpha;
        2.0 * a * (2.0 * a + 1.0).powf(a + 0.5) / (2.0 * a + 2.0).powf(a + 1.0)
    }

    /// Positive location of the maximum of `|h'|`.
    pub fn argmax_dh(&self) -> f64 {
        (2.0 * self.alpha + 1.0).sqrt().recip()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn c(alpha: f64) -> Coefficient {
        Coefficient::new(alpha).unwrap()
    }

    #[test]
    fn point_values() {
        assert_eq!(c(1.7).h(0.0), 1.0);
        assert_abs_diff_eq!(c(1.0).h(1.0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(c(2.0).h(3.0), 0.01, epsilon = 1e-15);
        assert_eq!(c(1.0).dh(0.0), 0.0);
        assert_abs_diff_eq!(c(1.0).dh(1.0), -0.5, epsilon = 1e-15);
        assert_eq!(c(1.0).sup_h(), 1.0);
        assert_eq!(c(0.3).sup_h(), 1.0);
    }

    #[test]
    fn rejects_bad_alpha() {
        assert!(Coefficient::new(0.0).is_err());
        assert!(Coefficient::new(-1.0).is_err());
        assert!(Coefficient::new(f64::NAN).is_err());
        assert!(serde_json::from_str::<Coefficient>(r#"{"alpha": -2}"#).is_err());
    }

    // grid-search oracle for the two sup-norms
    fn grid_sup(f: impl Fn(f64) -> f64) -> f64 {
        let mut best = 0.0_f64;
        for i in 0..=2_000_000 {
            let x = -100.0 + 200.0 * i as f64 / 2_000_000.0;
            best = best.max(f(x).abs());
        }
        best
    }

    fn log_grid_sup(f: impl Fn(f64) -> f64) -> f64 {
        // 10^6 log-spaced points in [1e-6, 1e6]
        let n = 1_000_000;
        (0..n)
            .map(|i| 10f64.powf(-6.0 + 12.0 * i as f64 / (n - 1) as f64))
            .map(|x| f(x).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn sup_h_matches_grid_search() {
        for a in [0.3, 1.0, 2.5] {
            let k = c(a);
            assert_abs_diff_eq!(grid_sup(|x| k.h(x)), k.sup_h(), epsilon = 1e-12);
        }
    }

    #[test]
    fn sup_dh_matches_grid_search() {
        let k = c(1.0);
        assert_abs_diff_eq!(k.sup_dh(), 2.0 * 3f64.powf(1.5) / 16.0, epsilon = 1e-15);
        assert_abs_diff_eq!(k.sup_dh(), 0.649_519_052_838_329, epsilon = 1e-12);
        for a in [0.5, 1.0, 2.0, 0.25] {
            let k = c(a);
            let grid = log_grid_sup(|x| k.dh(x));
            assert_relative_eq!(grid, k.sup_dh(), max_relative = 1e-9);
            assert!(grid <= k.sup_dh() * (1.0 + 1e-14));
        }
    }

    #[test]
    fn argmax_is_stationary() {
        for a in [0.5, 1.0, 3.0] {
            let k = c(a);
            let x = k.argmax_dh();
            let d = 1e-5;
            let slope = (k.dh(x + d) - k.dh(x - d)) / (2.0 * d);
            assert!(slope.abs() < 1e-8, "alpha {a}: slope {slope}");
            assert_relative_eq!(k.dh(x).abs(), k.sup_dh(), max_relative = 1e-14);
        }
    }

    #[test]
    fn sup_dh_bounds_random_points() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for a in [0.5, 1.0, 2.0] {
            let k = c(a);
            let sup = k.sup_dh();
            let mut seen = 0.0_f64;
            for _ in 0..100_000 {
                let x: f64 = rng.random_range(-10.0..10.0);
                seen = seen.max(k.dh(x).abs());
            }
            assert!(seen <= sup);
            assert!(seen > sup * (1.0 - 1e-6));
        }
    }

    #[test]
    fn far_field_decay() {
        for a in [0.5, 1.0, 2.0] {
            assert!(c(a).dh(1e6).abs() < 1e-5);
        }
    }

    proptest! {
        #[test]
        fn symmetry_and_range(a in 0.05f64..5.0, x in -50.0f64..50.0) {
            let k = c(a);
            prop_assert_eq!(k.h(x), k.h(-x));
            prop_assert_eq!(k.dh(x), -k.dh(-x));
            prop_assert!(k.h(x) > 0.0 && k.h(x) <= 1.0);
            prop_assert!(k.dh(x).abs() <= k.sup_dh() * (1.0 + 1e-12));
            let (h, dh) = k.h_and_dh(x);
            prop_assert!((h - k.h(x)).abs() <= 1e-15 && (dh - k.dh(x)).abs() <= 1e-15);
        }

        #[test]
        fn decreasing_in_abs_x(a in 0.05f64..5.0, x in 0.0f64..50.0, dx in 1e-3f64..10.0) {
            let k = c(a);
            prop_assert!(k.h(x + dx) < k.h(x));
        }

        #[test]
        fn dh_matches_finite_difference(a in 0.1f64..4.0, x in -5.0f64..5.0) {
            let k = c(a);
            let d = 1e-5;
            let fd = (k.h(x + d) - k.h(x - d)) / (2.0 * d);
            let exact = k.dh(x);
            prop_assert!((fd - exact).abs() <= 1e-8 * exact.abs().max(1e-2));
        }
    }
}
