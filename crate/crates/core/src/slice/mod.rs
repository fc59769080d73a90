//! Pointwise mathematics of spherically symmetric CMC slices `t = f(r)`:
//! the first integral, branch slopes, the envelopes `F` and `G` and their
//! critical points, cylinders, and the admissible r-domains.

pub mod profile;

pub use profile::{
    integrate_profile, Coord, EndKind, Endpoint, Profile, ProfilePiece, ProfileSample,
};

use serde::{Deserialize, Serialize};

use crate::atlas::{BlockAddress, Region};
use crate::error::{Error, Result};
use crate::quadrature::bisect;
use crate::spacetime::SpacetimeParams;

/// Tolerance on `|c - C_H|` below which a slice is classified as tangent (case B).
pub const CASE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    PositiveSlope,
    NegativeSlope,
}

impl Branch {
    pub fn from_sign(s: f64) -> Branch {
        if s >= 0.0 {
            Branch::PositiveSlope
        } else {
            Branch::NegativeSlope
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Branch::PositiveSlope => 1.0,
            Branch::NegativeSlope => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CaseTag {
    A,
    B,
    C,
    D,
}

/// Which of the two throats of a given `c` the slice passes through
/// (`Inner` below `R_H`, `Outer` above it).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Inner,
    Outer,
}

/// How the remaining time-translation freedom is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Placement {
    /// Value of `t` at the slice's core point (throat, `R_H`, or interval midpoint).
    Offset(f64),
    /// Core point on the axis `X = 0` of the diagram.
    Axisymmetric,
}

/// A CMC slice: mean curvature, first-integral constant and placement.
///
/// `primed` selects the sheet whose interior portion lies in `II'`
/// (throats on the `G` envelope) instead of `II` (throats on `F`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceSpec {
    #[serde(rename = "H")]
    pub h: f64,
    pub c: f64,
    pub placement: Placement,
    pub primed: bool,
    pub side: Side,
    pub branch: Branch,
    pub copy_index: i64,
    pub case_tag: CaseTag,
    /// Radius of the cylinder for case D.
    pub cylinder: Option<f64>,
    pub region_path: Vec<BlockAddress>,
}

impl SliceSpec {
    /// Unprimed slice with the outer throat, positive branch, axisymmetric placement in copy 0.
    pub fn new(p: &SpacetimeParams, h: f64, c: f64) -> Result<Self> {
        check_finite("H", h)?;
        check_finite("c", c)?;
        let mut spec = Self {
            h,
            c,
            placement: Placement::Axisymmetric,
            primed: false,
            side: Side::Outer,
            branch: Branch::PositiveSlope,
            copy_index: 0,
            case_tag: CaseTag::A,
            cylinder: None,
            region_path: Vec::new(),
        };
        spec.case_tag = classify(p, h, c, false)?;
        spec.side = default_side(p, &spec)?;
        Ok(spec)
    }

    /// The cylinder `r = R_H` (unprimed) or `r = r_H` (primed).
    pub fn cylinder(p: &SpacetimeParams, h: f64, primed: bool) -> Result<Self> {
        check_finite("H", h)?;
        let cp = critical_points(p, h)?;
        let (r0, c) = if primed {
            (cp.r_small, cp.c_small)
        } else {
            (cp.r_big, cp.c_big)
        };
        Ok(Self {
            h,
            c,
            placement: Placement::Axisymmetric,
            primed,
            side: Side::Outer,
            branch: Branch::PositiveSlope,
            copy_index: 0,
            case_tag: CaseTag::D,
            cylinder: Some(r0),
            region_path: Vec::new(),
        })
    }

    pub fn with_primed(mut self, p: &SpacetimeParams, primed: bool) -> Result<Self> {
        self.primed = primed;
        if self.case_tag != CaseTag::D {
            self.case_tag = classify(p, self.h, self.c, primed)?;
            self.side = default_side(p, &self)?;
        } else {
            let cp = critical_points(p, self.h)?;
            let (r0, c) = if primed {
                (cp.r_small, cp.c_small)
            } else {
                (cp.r_big, cp.c_big)
            };
            self.cylinder = Some(r0);
            self.c = c;
        }
        Ok(self)
    }

    pub fn with_side(mut self, side: Side) -> Self {
        self.side = side;
        self
    }

    pub fn with_branch(mut self, branch: Branch) -> Self {
        self.branch = branch;
        self
    }

    pub fn with_copy(mut self, k: i64) -> Self {
        self.copy_index = k;
        self
    }

    pub fn with_placement(mut self, placement: Placement) -> Self {
        self.placement = placement;
        self
    }

    pub fn is_cylinder(&self) -> bool {
        self.case_tag == CaseTag::D
    }
}

/// Outer throat when it exists, otherwise the inner one.
fn default_side(p: &SpacetimeParams, spec: &SliceSpec) -> Result<Side> {
    if spec.case_tag != CaseTag::A {
        return Ok(Side::Outer);
    }
    let (roots, critical) = if spec.primed {
        (
            throat_radius_primed(p, spec.h, spec.c),
            critical_points(p, spec.h)?.r_small,
        )
    } else {
        (
            throat_radius(p, spec.h, spec.c),
            critical_points(p, spec.h)?.r_big,
        )
    };
    // The other sheet may have no throat at all; that is reported on embedding.
    let roots = roots.unwrap_or_default();
    Ok(if roots.iter().any(|&r| r >= critical) {
        Side::Outer
    } else {
        Side::Inner
    })
}

fn check_finite(name: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be finite, got {x}"
        )))
    }
}

/// Case of a non-cylindrical slice on the given sheet.
pub fn classify(p: &SpacetimeParams, h: f64, c: f64, primed: bool) -> Result<CaseTag> {
    let cp = critical_points(p, h)?;
    let gap = if primed { cp.c_small - c } else { c - cp.c_big };
    Ok(if gap.abs() < CASE_TOLERANCE {
        CaseTag::B
    } else if gap > 0.0 {
        CaseTag::C
    } else {
        CaseTag::A
    })
}

/// Locations and values of the interior extrema of the envelopes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoints {
    /// `R_H`, maximiser of `F(H, ·)`.
    pub r_big: f64,
    /// `C_H = F(H, R_H)`.
    pub c_big: f64,
    /// `r_H`, minimiser of `G(H, ·)`.
    pub r_small: f64,
    /// `c_H = G(H, r_H)`.
    pub c_small: f64,
}

fn check_envelope_domain(p: &SpacetimeParams, r: f64) -> Result<()> {
    let slack = 1e-12 * p.mass;
    if r.is_nan() || r < p.r_minus - slack || r > p.r_plus + slack {
        return Err(Error::OutOfDomain {
            r,
            lo: p.r_minus,
            hi: p.r_plus,
        });
    }
    Ok(())
}

fn sqrt_radicand(p: &SpacetimeParams, r: f64) -> f64 {
    p.radicand(r).max(0.0).sqrt()
}

/// `F(H, r) = H r^3 + r sqrt(-r^2 + 2Mr - e^2)`.
pub fn envelope_f(p: &SpacetimeParams, h: f64, r: f64) -> Result<f64> {
    check_envelope_domain(p, r)?;
    Ok(h * r * r * r + r * sqrt_radicand(p, r))
}

/// `G(H, r) = H r^3 - r sqrt(-r^2 + 2Mr - e^2)`.
pub fn envelope_g(p: &SpacetimeParams, h: f64, r: f64) -> Result<f64> {
    check_envelope_domain(p, r)?;
    Ok(h * r * r * r - r * sqrt_radicand(p, r))
}

/// `q(r) = (-2r^2 + 3Mr - e^2) / sqrt(-r^2 + 2Mr - e^2)`, so that `∂F/∂r = 3Hr^2 + q`.
pub fn q_function(p: &SpacetimeParams, r: f64) -> f64 {
    let e2 = p.charge * p.charge;
    (-2.0 * r * r + 3.0 * p.mass * r - e2) / p.radicand(r).sqrt()
}

pub fn critical_points(p: &SpacetimeParams, h: f64) -> Result<CriticalPoints> {
    check_finite("H", h)?;
    let (r_big, r_small) = if h == 0.0 {
        let rs = p.r_star();
        (rs, rs)
    } else {
        let m = p.mass;
        let e2 = p.charge * p.charge;
        // (∂F/∂r)·sqrt(rad)/r and (∂G/∂r)·sqrt(rad)/r; finite at both horizons.
        let tail = |r: f64| {
            if r == 0.0 {
                3.0 * m
            } else {
                3.0 * m - 2.0 * r - e2 / r
            }
        };
        let df = |r: f64| 3.0 * h * r * sqrt_radicand(p, r) + tail(r);
        let dg = |r: f64| 3.0 * h * r * sqrt_radicand(p, r) - tail(r);
        let r_big = bisect(df, p.r_minus, p.r_plus, 0.0, 400)?;
        let r_small = bisect(dg, p.r_minus, p.r_plus, 0.0, 400)?;
        (r_big, r_small)
    };
    Ok(CriticalPoints {
        r_big,
        c_big: envelope_f(p, h, r_big)?,
        r_small,
        c_small: envelope_g(p, h, r_small)?,
    })
}

/// Mean curvature of the cylinder `r = r0` inside `II` (or `II'` when `primed`).
pub fn cylinder_h(p: &SpacetimeParams, r0: f64, primed: bool) -> Result<f64> {
    if !(r0 > p.r_minus && r0 < p.r_plus) {
        return Err(Error::OutOfDomain {
            r: r0,
            lo: p.r_minus,
            hi: p.r_plus,
        });
    }
    let e2 = p.charge * p.charge;
    let val = (2.0 * r0 * r0 - 3.0 * p.mass * r0 + e2) / (3.0 * r0 * r0 * p.radicand(r0).sqrt());
    Ok(if primed { -val } else { val })
}

/// Roots of `c = F(H, r)` in ascending order: the inner one on `[r-, R_H]`
/// and the outer one on `[R_H, r+]`, each present only if bracketed.
pub fn throat_radius(p: &SpacetimeParams, h: f64, c: f64) -> Result<Vec<f64>> {
    let cp = critical_points(p, h)?;
    if (c - cp.c_big).abs() < CASE_TOLERANCE {
        return Ok(vec![cp.r_big]);
    }
    if c > cp.c_big {
        return Err(Error::NoThroat {
            c,
            critical: cp.c_big,
        });
    }
    let f = |r: f64| h * r * r * r + r * sqrt_radicand(p, r) - c;
    let tol = 1e-14 * (1.0 + c.abs());
    let mut roots = Vec::with_capacity(2);
    let (f_minus, f_plus) = (f(p.r_minus), f(p.r_plus));
    if f_minus.abs() <= tol {
        roots.push(p.r_minus);
    } else if f_minus < 0.0 {
        roots.push(bisect(f, p.r_minus, cp.r_big, 0.0, 400)?);
    }
    if f_plus.abs() <= tol {
        roots.push(p.r_plus);
    } else if f_plus < 0.0 {
        roots.push(bisect(f, cp.r_big, p.r_plus, 0.0, 400)?);
    }
    if roots.is_empty() {
        return Err(Error::EmptyDomain(format!(
            "c = {c} lies below F(H, r) at both horizons"
        )));
    }
    Ok(roots)
}

/// Roots of `c = G(H, r)`, obtained from `G(H, r) = -F(-H, r)`.
pub fn throat_radius_primed(p: &SpacetimeParams, h: f64, c: f64) -> Result<Vec<f64>> {
    throat_radius(p, -h, -c).map_err(|e| match e {
        Error::NoThroat { c, critical } => Error::NoThroat {
            c: -c,
            critical: -critical,
        },
        other => other,
    })
}

/// `J = c/r^2 - H r`; equals `-n` where `n` is the future normal's r-component.
#[inline]
pub fn first_integral(h: f64, c: f64, r: f64) -> f64 {
    c / (r * r) - h * r
}

/// `h + J^2`, evaluated as a difference of squares inside the horizons.
pub fn spacelike_measure(p: &SpacetimeParams, h: f64, c: f64, r: f64) -> f64 {
    let j = first_integral(h, c, r);
    let hr = p.h(r);
    if hr < 0.0 {
        let w = (-hr).sqrt();
        (j - w) * (j + w)
    } else {
        hr + j * j
    }
}

/// `h + J^2` at `r = r0 + delta`, where `r0` is a root of `c = F` or `c = G`
/// inside the horizons. The vanishing factor is formed from `delta` directly,
/// so the result keeps full relative precision as `delta -> 0`.
pub fn spacelike_measure_anchored(p: &SpacetimeParams, h: f64, c: f64, r0: f64, delta: f64) -> f64 {
    let r = r0 + delta;
    let (m, e2) = (p.mass, p.charge * p.charge);
    let sp0 = r0 * sqrt_radicand(p, r0);
    let sp = r * sqrt_radicand(p, r);
    let sigma = if (c - h * r0.powi(3) - sp0).abs() <= (c - h * r0.powi(3) + sp0).abs() {
        1.0
    } else {
        -1.0
    };
    let q = -(r0.powi(3) + r0 * r0 * r + r0 * r * r + r.powi(3))
        + 2.0 * m * (r0 * r0 + r0 * r + r * r)
        - e2 * (r0 + r);
    let denom = sp0 + sp;
    let vanishing = -delta * h * (r0 * r0 + r0 * r + r * r)
        - if denom > 0.0 {
            sigma * delta * q / denom
        } else {
            0.0
        };
    let other = c - h * r.powi(3) + sigma * sp;
    vanishing * other / r.powi(4)
}

/// Time orientation sign `ε` of a branch in a block: the slope is `-ε J / (h S)`.
pub fn branch_epsilon(block: BlockAddress, branch: Branch) -> f64 {
    match block.region {
        Region::II => branch.sign(),
        Region::IIPrime => -branch.sign(),
        r => r.static_orientation().unwrap_or(1.0),
    }
}

/// `dt/dr` along the branch with orientation `eps`; ±∞ where `S = 0`.
pub fn slope_with_epsilon(p: &SpacetimeParams, h: f64, c: f64, r: f64, eps: f64) -> f64 {
    let j = first_integral(h, c, r);
    let s2 = spacelike_measure(p, h, c, r);
    let hr = p.h(r);
    if s2 <= 0.0 {
        return -eps * j.signum() * hr.signum() * f64::INFINITY;
    }
    -eps * j / (hr * s2.sqrt())
}

/// Slope `f'(r)` of the slice in `block` on the chosen branch.
pub fn slope_fprime(
    p: &SpacetimeParams,
    spec: &SliceSpec,
    r: f64,
    block: BlockAddress,
    branch: Branch,
) -> Result<f64> {
    Ok(branch_sample(p, spec, r, block, branch)?.fprime)
}

/// Slope, `l` value and branch at one radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchSample {
    pub r: f64,
    pub fprime: f64,
    pub l_value: Option<f64>,
    pub branch: Branch,
}

/// `l(r)` in `II` (`J/sqrt(-h)`) or `II'` (`-J/sqrt(-h)`).
pub fn l_value(p: &SpacetimeParams, h: f64, c: f64, r: f64, region: Region) -> Option<f64> {
    let hr = p.h(r);
    if hr >= 0.0 {
        return None;
    }
    let j = first_integral(h, c, r);
    let w = (-hr).sqrt();
    match region {
        Region::II => Some(j / w),
        Region::IIPrime => Some(-j / w),
        _ => None,
    }
}

pub fn branch_sample(
    p: &SpacetimeParams,
    spec: &SliceSpec,
    r: f64,
    block: BlockAddress,
    branch: Branch,
) -> Result<BranchSample> {
    if !block.contains_r(p, r) {
        return Err(Error::WrongRegion {
            r,
            block: block.to_string(),
        });
    }
    let (h, c) = (spec.h, spec.c);
    let s2 = spacelike_measure(p, h, c, r);
    let l = l_value(p, h, c, r, block.region);
    if let Some(l) = l {
        if l < 1.0 - 1e-12 {
            return Err(Error::SpacelikeViolated(format!(
                "l({r}) = {l} < 1 in block {block}"
            )));
        }
    } else if s2 <= 0.0 {
        return Err(Error::SpacelikeViolated(format!(
            "h + J^2 = {s2} at r = {r}"
        )));
    }
    let eps = branch_epsilon(block, branch);
    let fprime = slope_with_epsilon(p, h, c, r, eps);
    Ok(BranchSample {
        r,
        fprime,
        l_value: l,
        branch: Branch::from_sign(fprime),
    })
}

/// Analytic `f''` along the branch with orientation `eps`.
pub fn slope_derivative(p: &SpacetimeParams, h: f64, c: f64, r: f64, eps: f64) -> f64 {
    let j = first_integral(h, c, r);
    let dj = -2.0 * c / (r * r * r) - h;
    let hr = p.h(r);
    let dh = p.h_prime(r);
    let s = spacelike_measure(p, h, c, r).sqrt();
    let ds = (dh + 2.0 * j * dj) / (2.0 * s);
    let d = hr * s;
    let dd = dh * s + hr * ds;
    -eps * (dj * d - j * dd) / (d * d)
}

/// Residual of the SS-CMC equation
/// `f'' + ((1/h - h f'^2)(2h/r + h'/2) + h'/h) f' - 3 ε H (1/h - h f'^2)^{3/2}`.
pub fn ode_residual(p: &SpacetimeParams, h: f64, eps: f64, r: f64, fp: f64, fpp: f64) -> f64 {
    let hr = p.h(r);
    let dh = p.h_prime(r);
    let w = 1.0 / hr - hr * fp * fp;
    fpp + (w * (2.0 * hr / r + 0.5 * dh) + dh / hr) * fp - 3.0 * eps * h * w.powf(1.5)
}

/// Invert the slope formula: the first-integral constant through `(r, f')`.
pub fn recover_c(p: &SpacetimeParams, h: f64, r: f64, fprime: f64, eps: f64) -> Result<f64> {
    let hr = p.h(r);
    let w = 1.0 / hr - hr * fprime * fprime;
    if !(w > 0.0) {
        return Err(Error::SpacelikeViolated(format!(
            "1/h - h f'^2 = {w} at r = {r}"
        )));
    }
    let j = -eps * hr * fprime / w.sqrt();
    Ok(r * r * (h * r + j))
}

/// Admissible r-intervals of a slice with constants `(H, c)` in one region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainInterval {
    pub lo: Endpoint,
    pub hi: Endpoint,
}

pub fn slice_domain(
    p: &SpacetimeParams,
    h: f64,
    c: f64,
    region: Region,
) -> Result<Vec<DomainInterval>> {
    let ep = |r: f64, kind: EndKind| Endpoint { r, kind };
    match region {
        Region::I | Region::IPrime => Ok(vec![DomainInterval {
            lo: ep(p.r_plus, EndKind::Horizon),
            hi: ep(f64::INFINITY, EndKind::Infinity),
        }]),
        Region::III | Region::IIIPrime => {
            if p.is_uncharged() {
                return Err(Error::EmptyDomain("region III is empty when e = 0".into()));
            }
            Ok(vec![DomainInterval {
                lo: ep(0.0, EndKind::Singularity),
                hi: ep(p.r_minus, EndKind::Horizon),
            }])
        }
        // G(H, r) = -F(-H, r): the primed domain is the unprimed one of (-H, -c).
        Region::IIPrime => slice_domain(p, -h, -c, Region::II),
        Region::II => {
            let cp = critical_points(p, h)?;
            let inner_kind = if p.is_uncharged() {
                EndKind::Singularity
            } else {
                EndKind::Horizon
            };
            let lo_h = ep(p.r_minus, inner_kind);
            let hi_h = ep(p.r_plus, EndKind::Horizon);
            if (c - cp.c_big).abs() < CASE_TOLERANCE {
                let t = ep(cp.r_big, EndKind::Tangency);
                return Ok(vec![
                    DomainInterval { lo: lo_h, hi: t },
                    DomainInterval { lo: t, hi: hi_h },
                ]);
            }
            if c > cp.c_big {
                return Ok(vec![DomainInterval { lo: lo_h, hi: hi_h }]);
            }
            let mut out = Vec::new();
            for r0 in throat_radius(p, h, c)? {
                if r0 < cp.r_big && r0 > p.r_minus {
                    out.push(DomainInterval {
                        lo: lo_h,
                        hi: ep(r0, EndKind::Throat),
                    });
                } else if r0 > cp.r_big && r0 < p.r_plus {
                    out.push(DomainInterval {
                        lo: ep(r0, EndKind::Throat),
                        hi: hi_h,
                    });
                }
            }
            if out.is_empty() {
                return Err(Error::EmptyDomain(format!(
                    "c = {c} admits no portion in region II"
                )));
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rn() -> SpacetimeParams {
        SpacetimeParams::new(1.0, 0.6).unwrap()
    }

    #[test]
    fn envelope_values() {
        let p = rn();
        assert_eq!(envelope_f(&p, 0.0, p.r_plus).unwrap(), 0.0);
        assert!((envelope_f(&p, 0.3, p.r_minus).unwrap() - 0.3 * 0.008).abs() < 1e-15);
        assert!((envelope_f(&p, 0.0, 1.0).unwrap() - 0.8).abs() < 1e-14);
        assert!((envelope_g(&p, 0.2, 1.0).unwrap() + 0.6).abs() < 1e-14);
        assert!((envelope_g(&p, 0.7, p.r_plus).unwrap() - 0.7 * 1.8f64.powi(3)).abs() < 1e-12);
        assert!(matches!(
            envelope_f(&p, 0.0, 2.0),
            Err(Error::OutOfDomain { .. })
        ));
    }

    #[test]
    fn critical_points_h0_against_grid_scan() {
        let p = rn();
        let cp = critical_points(&p, 0.0).unwrap();
        assert!((cp.r_big - (3.0 + 6.12f64.sqrt()) / 4.0).abs() < 1e-15);
        assert_eq!(cp.r_small, cp.r_big);
        assert_eq!(cp.c_small, -cp.c_big);
        let n = 1_000_000;
        let (mut best_r, mut best) = (0.0, f64::MIN);
        for i in 0..=n {
            let r = p.r_minus + (p.r_plus - p.r_minus) * i as f64 / n as f64;
            let v = envelope_f(&p, 0.0, r).unwrap();
            if v > best {
                best = v;
                best_r = r;
            }
        }
        assert!((best_r - cp.r_big).abs() < 1e-5);
        assert!((best - cp.c_big).abs() < 1e-10);
        assert!((cp.c_big - 0.9718).abs() < 1e-4);
    }

    #[test]
    fn schwarzschild_critical_radius() {
        let p = SpacetimeParams::new(1.0, 0.0).unwrap();
        assert_eq!(critical_points(&p, 0.0).unwrap().r_big, 1.5);
        assert_eq!(cylinder_h(&p, 1.5, false).unwrap(), 0.0);
        let cp = critical_points(&p, 0.4).unwrap();
        assert!((cylinder_h(&p, cp.r_big, false).unwrap() - 0.4).abs() < 1e-9);
    }

    #[test]
    fn cylinder_value_and_inverse() {
        let p = rn();
        let h = cylinder_h(&p, 1.0, false).unwrap();
        assert!((h + 0.64 / 2.4).abs() < 1e-14);
        // H with R_H = 1 found by bisection over H reproduces the cylinder value.
        let found = bisect(
            |hh| critical_points(&p, hh).unwrap().r_big - 1.0,
            -5.0,
            5.0,
            1e-14,
            200,
        )
        .unwrap();
        assert!((found - h).abs() < 1e-10);
        assert!(cylinder_h(&p, 1.8, false).is_err());
    }

    #[test]
    fn throat_roots_against_grid_scan() {
        let p = rn();
        let roots = throat_radius(&p, 0.0, 0.5).unwrap();
        assert_eq!(roots.len(), 2);
        let rb = critical_points(&p, 0.0).unwrap().r_big;
        assert!(roots[0] < rb && roots[1] > rb);
        let n = 1_000_000;
        let mut crossings = Vec::new();
        let mut prev = envelope_f(&p, 0.0, p.r_minus).unwrap() - 0.5;
        for i in 1..=n {
            let r = p.r_minus + (p.r_plus - p.r_minus) * i as f64 / n as f64;
            let v = envelope_f(&p, 0.0, r).unwrap() - 0.5;
            if v.signum() != prev.signum() {
                let r0 = r - (p.r_plus - p.r_minus) / n as f64;
                // Linear interpolation inside the grid cell.
                crossings.push(r0 + (r - r0) * prev / (prev - v));
            }
            prev = v;
        }
        assert_eq!(crossings.len(), 2);
        for (a, b) in roots.iter().zip(&crossings) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
        for r0 in roots {
            assert!((envelope_f(&p, 0.0, r0).unwrap() - 0.5).abs() < 1e-10);
        }
    }

    #[test]
    fn throat_edge_cases() {
        let p = rn();
        let cp = critical_points(&p, 0.2).unwrap();
        assert_eq!(throat_radius(&p, 0.2, cp.c_big).unwrap(), vec![cp.r_big]);
        let roots = throat_radius(&p, 0.2, 0.2 * p.r_minus.powi(3)).unwrap();
        assert!((roots[0] - p.r_minus).abs() < 1e-12);
        assert!(matches!(
            throat_radius(&p, 0.2, cp.c_big + 0.1),
            Err(Error::NoThroat { .. })
        ));
        let primed = throat_radius_primed(&p, 0.2, cp.c_small + 0.05).unwrap();
        for r0 in primed {
            assert!((envelope_g(&p, 0.2, r0).unwrap() - cp.c_small - 0.05).abs() < 1e-10);
        }
    }

    #[test]
    fn static_slice_has_zero_slope() {
        let p = rn();
        let spec = SliceSpec::new(&p, 0.0, 0.0).unwrap();
        let b = BlockAddress::new(0, Region::I);
        for r in [1.9, 3.0, 50.0] {
            assert_eq!(
                slope_fprime(&p, &spec, r, b, Branch::PositiveSlope).unwrap(),
                0.0
            );
        }
    }

    #[test]
    fn tangent_slope_blows_up_like_inverse_distance() {
        let p = rn();
        let cp = critical_points(&p, 0.2).unwrap();
        let spec = SliceSpec::new(&p, 0.2, cp.c_big).unwrap();
        assert_eq!(spec.case_tag, CaseTag::B);
        let b = BlockAddress::new(0, Region::II);
        let at = slope_fprime(&p, &spec, cp.r_big, b, Branch::PositiveSlope).unwrap();
        assert!(at.is_infinite());
        let d1 = 1e-3;
        let d2 = 1e-4;
        let f1 = slope_fprime(&p, &spec, cp.r_big + d1, b, Branch::PositiveSlope).unwrap();
        let f2 = slope_fprime(&p, &spec, cp.r_big + d2, b, Branch::PositiveSlope).unwrap();
        let ratio = f2 / f1;
        assert!((ratio - 10.0).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn domains_by_case() {
        let p = rn();
        let cp = critical_points(&p, 0.2).unwrap();
        let d = slice_domain(&p, 0.2, cp.c_big + 0.1, Region::II).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!((d[0].lo.r, d[0].hi.r), (p.r_minus, p.r_plus));
        let d = slice_domain(&p, 0.2, cp.c_big, Region::II).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d[0].hi.kind, EndKind::Tangency);
        let c = 0.5 * (cp.c_big + 0.2 * p.r_plus.powi(3));
        let d = slice_domain(&p, 0.2, c, Region::II).unwrap();
        let throat = d.iter().find(|iv| iv.lo.kind == EndKind::Throat).unwrap();
        assert!((c - envelope_f(&p, 0.2, throat.lo.r).unwrap()).abs() < 1e-10);
        assert!(matches!(
            slice_domain(&p, 0.2, -5.0, Region::II),
            Err(Error::EmptyDomain(_))
        ));
        let d = slice_domain(&p, 0.2, -5.0, Region::IIPrime).unwrap();
        assert_eq!(d.len(), 1);
    }

    #[test]
    fn classification() {
        let p = rn();
        let cp = critical_points(&p, 0.2).unwrap();
        assert_eq!(
            classify(&p, 0.2, cp.c_big - 0.01, false).unwrap(),
            CaseTag::A
        );
        assert_eq!(
            classify(&p, 0.2, cp.c_big + 0.01, false).unwrap(),
            CaseTag::C
        );
        assert_eq!(
            classify(&p, 0.2, cp.c_small - 0.01, true).unwrap(),
            CaseTag::C
        );
        assert_eq!(classify(&p, 0.2, cp.c_small, true).unwrap(), CaseTag::B);
        assert_eq!(
            SliceSpec::cylinder(&p, 0.2, false).unwrap().case_tag,
            CaseTag::D
        );
    }

    /// Random admissible `(H, c, r, block, ε)` with `h + J^2` bounded away from zero.
    fn admissible() -> impl Strategy<Value = (f64, f64, f64, Region, f64)> {
        (
            -1.0f64..1.0,
            -3.0f64..3.0,
            0.0f64..1.0,
            0usize..6,
            prop::bool::ANY,
        )
            .prop_filter_map("inadmissible", |(h, c, x, ri, pos)| {
                let p = rn();
                let region = Region::ALL[ri];
                let (lo, hi) = BlockAddress::new(0, region).r_range(&p);
                let hi = hi.min(20.0);
                let r = lo + (hi - lo) * (0.02 + 0.96 * x);
                let ok = match region {
                    Region::II => l_value(&p, h, c, r, region)? > 1.01,
                    Region::IIPrime => l_value(&p, h, c, r, region)? > 1.01,
                    _ => spacelike_measure(&p, h, c, r) > 1e-6,
                };
                ok.then(|| {
                    let b = BlockAddress::new(0, region);
                    let branch = if pos {
                        Branch::PositiveSlope
                    } else {
                        Branch::NegativeSlope
                    };
                    (h, c, r, region, branch_epsilon(b, branch))
                })
            })
    }

    proptest! {
        #[test]
        fn slope_solves_the_cmc_equation((h, c, r, _region, eps) in admissible()) {
            let p = rn();
            let fp = slope_with_epsilon(&p, h, c, r, eps);
            let fpp = slope_derivative(&p, h, c, r, eps);
            let scale = 1.0 + fpp.abs() + fp.abs();
            let res = ode_residual(&p, h, eps, r, fp, fpp);
            prop_assert!(res.abs() < 1e-9 * scale, "residual {res}");
        }

        #[test]
        fn slope_derivative_matches_finite_difference((h, c, r, _region, eps) in admissible()) {
            let p = rn();
            let d = 1e-6 * r;
            let fd = (slope_with_epsilon(&p, h, c, r + d, eps) - slope_with_epsilon(&p, h, c, r - d, eps)) / (2.0 * d);
            let an = slope_derivative(&p, h, c, r, eps);
            prop_assert!((fd - an).abs() < 1e-4 * (1.0 + an.abs()), "{fd} vs {an}");
        }

        #[test]
        fn first_integral_is_recovered((h, c, r, _region, eps) in admissible()) {
            let p = rn();
            let fp = slope_with_epsilon(&p, h, c, r, eps);
            let back = recover_c(&p, h, r, fp, eps).unwrap();
            prop_assert!((back - c).abs() < 1e-9 * (1.0 + c.abs() + r.powi(3)), "{back} vs {c}");
        }

        #[test]
        fn g_is_reflected_f(h in -2.0f64..2.0, x in 0.0f64..1.0) {
            let p = rn();
            let r = p.r_minus + x * (p.r_plus - p.r_minus);
            prop_assert_eq!(envelope_g(&p, h, r).unwrap(), -envelope_f(&p, -h, r).unwrap());
        }

        #[test]
        fn cylinder_at_critical_radius(h in 0.0f64..3.0) {
            let p = rn();
            let cp = critical_points(&p, h).unwrap();
            prop_assert!((cylinder_h(&p, cp.r_big, false).unwrap() - h).abs() < 1e-8);
            prop_assert!((cylinder_h(&p, cp.r_small, true).unwrap() - h).abs() < 1e-8);
        }
    }
}
