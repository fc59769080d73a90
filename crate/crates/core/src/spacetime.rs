//! The Reissner–Nordström background: metric potential, horizons, surface
//! gravities and the tortoise coordinate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative distance (in units of `M`) below which a radius counts as on a horizon.
pub const HORIZON_TOLERANCE: f64 = 1e-10;

/// Mass, charge and the derived horizon data of a subextremal Reissner–Nordström spacetime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpacetimeParams {
    pub mass: f64,
    pub charge: f64,
    pub r_minus: f64,
    pub r_plus: f64,
    pub kappa_minus: f64,
    pub kappa_plus: f64,
}

impl SpacetimeParams {
    pub fn new(mass: f64, charge: f64) -> Result<Self> {
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::NonpositiveMass(mass));
        }
        if !charge.is_finite() || charge * charge >= mass * mass {
            return Err(Error::SubextremalityViolated { mass, charge });
        }
        let disc = (mass * mass - charge * charge).sqrt();
        let r_plus = mass + disc;
        // r_- = e^2 / r_+ avoids cancellation for small charge.
        let r_minus = charge * charge / r_plus;
        let gap = r_plus - r_minus;
        let kappa_plus = gap / (2.0 * r_plus * r_plus);
        let kappa_minus = if r_minus > 0.0 {
            gap / (2.0 * r_minus * r_minus)
        } else {
            f64::INFINITY
        };
        Ok(Self {
            mass,
            charge,
            r_minus,
            r_plus,
            kappa_minus,
            kappa_plus,
        })
    }

    /// Whether the inner horizon is absent (Schwarzschild limit).
    pub fn is_uncharged(&self) -> bool {
        self.r_minus == 0.0
    }

    /// `-r^2 + 2Mr - e^2 = -r^2 h(r)`, positive strictly between the horizons.
    #[inline]
    pub fn radicand(&self, r: f64) -> f64 {
        (self.r_plus - r) * (r - self.r_minus)
    }

    /// h(r) without validation.
    #[inline]
    pub fn h(&self, r: f64) -> f64 {
        (r - self.r_plus) * (r - self.r_minus) / (r * r)
    }

    /// h'(r) without validation.
    #[inline]
    pub fn h_prime(&self, r: f64) -> f64 {
        2.0 * self.mass / (r * r) - 2.0 * self.charge * self.charge / (r * r * r)
    }

    pub fn metric_h(&self, r: f64) -> Result<f64> {
        check_radius(r)?;
        Ok(1.0 - 2.0 * self.mass / r + self.charge * self.charge / (r * r))
    }

    pub fn metric_h_prime(&self, r: f64) -> Result<f64> {
        check_radius(r)?;
        Ok(self.h_prime(r))
    }

    /// Coefficients `(a, b)` of `r* = r + a ln|r - r+| - b ln|r - r-|`.
    pub fn tortoise_coefficients(&self) -> (f64, f64) {
        let gap = self.r_plus - self.r_minus;
        (
            self.r_plus * self.r_plus / gap,
            self.r_minus * self.r_minus / gap,
        )
    }

    /// Tortoise coordinate. Returns ±∞ on a horizon instead of failing.
    pub fn tortoise_unchecked(&self, r: f64) -> f64 {
        let (a, b) = self.tortoise_coefficients();
        let mut rs = r + a * (r - self.r_plus).abs().ln();
        if b > 0.0 {
            rs -= b * (r - self.r_minus).abs().ln();
        }
        rs
    }

    pub fn tortoise(&self, r: f64) -> Result<f64> {
        check_radius(r)?;
        if self.near_horizon(r) {
            return Err(Error::OnHorizon(r));
        }
        Ok(self.tortoise_unchecked(r))
    }

    pub fn near_horizon(&self, r: f64) -> bool {
        let tol = HORIZON_TOLERANCE * self.mass;
        (r - self.r_plus).abs() < tol || (!self.is_uncharged() && (r - self.r_minus).abs() < tol)
    }

    /// Invert `r*` on the open interval `(lo, hi)` where it is monotone.
    pub fn inverse_tortoise(&self, rstar: f64, lo: f64, hi: f64) -> f64 {
        let f = |r: f64| self.tortoise_unchecked(r) - rstar;
        let increasing = self.h(0.5 * (lo + hi)) > 0.0;
        let (mut a, mut b) = (lo, hi);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            let val = f(m);
            if (val > 0.0) == increasing {
                b = m;
            } else {
                a = m;
            }
        }
        0.5 * (a + b)
    }

    /// The root `r_*` of `-2r^2 + 3Mr - e^2` above the inner horizon.
    pub fn r_star(&self) -> f64 {
        let m = self.mass;
        let e2 = self.charge * self.charge;
        (3.0 * m + (9.0 * m * m - 8.0 * e2).sqrt()) / 4.0
    }
}

pub fn make_params(mass: f64, charge: f64) -> Result<SpacetimeParams> {
    SpacetimeParams::new(mass, charge)
}

fn check_radius(r: f64) -> Result<()> {
    if r > 0.0 {
        Ok(())
    } else {
        Err(Error::NonpositiveRadius(r))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rn() -> SpacetimeParams {
        make_params(1.0, 0.6).unwrap()
    }

    #[test]
    fn horizons() {
        let p = rn();
        assert!((p.r_minus - 0.2).abs() < 1e-15);
        assert!((p.r_plus - 1.8).abs() < 1e-15);
        assert!(p.metric_h(p.r_plus).unwrap().abs() < 1e-12);
        assert!(p.metric_h(p.r_minus).unwrap().abs() < 1e-12);
        assert!(p.kappa_plus > 0.0 && p.kappa_minus > 0.0);
        assert!((p.kappa_plus - p.h_prime(p.r_plus).abs() / 2.0).abs() < 1e-14);
        assert!((p.kappa_minus - p.h_prime(p.r_minus).abs() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn validation() {
        assert_eq!(make_params(0.0, 0.0).unwrap_err().kind(), "NonpositiveMass");
        assert_eq!(
            make_params(1.0, 1.0).unwrap_err().kind(),
            "SubextremalityViolated"
        );
        let s = make_params(1.0, 0.0).unwrap();
        assert_eq!(s.r_minus, 0.0);
        assert_eq!(s.r_plus, 2.0);
        assert_eq!(rn().metric_h(0.0).unwrap_err().kind(), "NonpositiveRadius");
        assert_eq!(
            rn().metric_h_prime(-1.0).unwrap_err().kind(),
            "NonpositiveRadius"
        );
    }

    #[test]
    fn h_values() {
        let p = rn();
        assert!((p.metric_h(1.0).unwrap() + 0.64).abs() < 1e-15);
        assert!((p.metric_h(1e12).unwrap() - 1.0).abs() < 1e-11);
        let expected = 2.0 / 3.24 - 2.0 * 0.36 / 5.832;
        assert!((p.metric_h_prime(1.8).unwrap() - expected).abs() < 1e-15);
        assert!((p.metric_h_prime(1.8).unwrap() - 0.493827).abs() < 1e-6);
        let s = make_params(1.0, 0.0).unwrap();
        assert_eq!(s.metric_h_prime(2.0).unwrap(), 0.5);
    }

    #[test]
    fn h_sign_pattern_and_fd_derivative() {
        let p = rn();
        for i in 0..=400 {
            let r = 0.01 * 10f64.powf(4.0 * i as f64 / 400.0);
            let h = p.metric_h(r).unwrap();
            if r > p.r_minus + 1e-9 && r < p.r_plus - 1e-9 {
                assert!(h < 0.0);
            } else if r < p.r_minus - 1e-9 || r > p.r_plus + 1e-9 {
                assert!(h > 0.0);
            }
            let d = 1e-6 * r;
            let fd = (p.metric_h(r + d).unwrap() - p.metric_h(r - d).unwrap()) / (2.0 * d);
            let exact = p.metric_h_prime(r).unwrap();
            assert!((fd - exact).abs() < 1e-6 * exact.abs().max(1.0), "r = {r}");
        }
    }

    #[test]
    fn tortoise_derivative_is_inverse_h() {
        let p = rn();
        let (r, d) = (2.5, 1e-5);
        let fd = (p.tortoise(r + d).unwrap() - p.tortoise(r - d).unwrap()) / (2.0 * d);
        assert!((fd - 1.0 / p.h(r)).abs() < 1e-6);
        assert_eq!(p.tortoise(p.r_plus).unwrap_err().kind(), "OnHorizon");
    }

    #[test]
    fn tortoise_matches_quadrature_of_inverse_h() {
        // Composite Simpson of 1/h as an independent reference.
        let p = rn();
        let simpson = |a: f64, b: f64| {
            let n = 20_000;
            let step = (b - a) / n as f64;
            let mut s = 1.0 / p.h(a) + 1.0 / p.h(b);
            for i in 1..n {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                s += w / p.h(a + i as f64 * step);
            }
            s * step / 3.0
        };
        for &(a, b) in &[(3.0, 4.0), (0.5, 1.5), (0.05, 0.15)] {
            let diff = p.tortoise(b).unwrap() - p.tortoise(a).unwrap();
            assert!((diff - simpson(a, b)).abs() < 1e-9, "[{a}, {b}]");
        }
    }

    #[test]
    fn tortoise_monotone_on_each_side() {
        let p = rn();
        let mut prev = f64::NEG_INFINITY;
        for i in 1..200 {
            let r = p.r_plus + 1e-6 * 1.1f64.powi(i);
            let v = p.tortoise(r).unwrap();
            assert!(v > prev);
            prev = v;
        }
        let mut prev = f64::NEG_INFINITY;
        for i in 1..100 {
            let r = p.r_plus - 1e-6 * 1.1f64.powi(i);
            let v = p.tortoise(r).unwrap();
            assert!(v > prev, "tortoise must rise as r decreases from r+");
            prev = v;
        }
        assert_eq!(p.tortoise_unchecked(p.r_plus), f64::NEG_INFINITY);
        assert_eq!(p.tortoise_unchecked(p.r_minus), f64::INFINITY);
    }

    #[test]
    fn schwarzschild_tortoise() {
        let s = make_params(1.0, 0.0).unwrap();
        let reference = |r: f64| r + 2.0 * (r / 2.0 - 1.0).abs().ln();
        let offset = s.tortoise(3.0).unwrap() - reference(3.0);
        for &r in &[0.5, 1.0, 2.5, 4.0, 10.0, 100.0] {
            assert!((s.tortoise(r).unwrap() - reference(r) - offset).abs() < 1e-12);
        }
    }

    #[test]
    fn inverse_tortoise_round_trip() {
        let p = rn();
        for &(r, lo, hi) in &[
            (3.0, p.r_plus, 1e6),
            (1.0, p.r_minus, p.r_plus),
            (0.1, 0.0, p.r_minus),
        ] {
            let rs = p.tortoise_unchecked(r);
            assert!((p.inverse_tortoise(rs, lo, hi) - r).abs() < 1e-12);
        }
    }
}
