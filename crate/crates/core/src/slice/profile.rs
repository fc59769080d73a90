use serde::{Deserialize, Serialize};

use super::{
    branch_epsilon, first_integral, l_value, slope_with_epsilon, spacelike_measure,
    spacelike_measure_anchored, DomainInterval, SliceSpec,
};
use crate::atlas::BlockAddress;
use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadratureOptions};
use crate::spacetime::SpacetimeParams;

/// Distance (in units of `M`) at which a tangent branch is cut off short of `R_H`.
pub const TANGENCY_CUTOFF: f64 = 1e-7;

/// `|J|` at a horizon below which the crossing is treated as a bifurcation sphere.
pub const BIFURCATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EndKind {
    Throat,
    Horizon,
    Bifurcation,
    Tangency,
    Infinity,
    Singularity,
    Interior,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Endpoint {
    pub r: f64,
    pub kind: EndKind,
}

impl Endpoint {
    pub fn new(r: f64, kind: EndKind) -> Self {
        Self { r, kind }
    }
}

/// The coordinate integrated along a piece: static time or one of the null coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Coord {
    T,
    U,
    V,
}

impl Coord {
    /// Convert a value of `self` at a point with tortoise radius `rs` to `(t, u, v)`.
    pub fn to_tuv(self, w: f64, rs: f64) -> (f64, f64, f64) {
        match self {
            Coord::T => (w, w - rs, w + rs),
            Coord::V => (w - rs, w - 2.0 * rs, w),
            Coord::U => (w + rs, w, w + 2.0 * rs),
        }
    }

    pub fn pick(self, t: f64, u: f64, v: f64) -> f64 {
        match self {
            Coord::T => t,
            Coord::U => u,
            Coord::V => v,
        }
    }
}

/// One monotone-in-r portion of a slice inside a single block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfilePiece {
    pub block: BlockAddress,
    /// Orientation sign in `f' = -ε J / (h S)`.
    pub eps: f64,
    pub start: Endpoint,
    pub end: Endpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileSample {
    pub r: f64,
    pub t: f64,
    pub u: f64,
    pub v: f64,
    pub fprime: f64,
    pub l_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub piece: ProfilePiece,
    pub coord: Coord,
    pub samples: Vec<ProfileSample>,
}

impl Profile {
    pub fn first(&self) -> &ProfileSample {
        &self.samples[0]
    }

    pub fn last(&self) -> &ProfileSample {
        self.samples.last().expect("profiles are never empty")
    }

    /// Whether `r` lies in the closed radial range covered by the samples.
    pub fn covers(&self, r: f64) -> bool {
        let a = self.first().r;
        let b = self.last().r;
        r >= a.min(b) && r <= a.max(b)
    }

    /// `(t, u, v)` of the slice at radius `r`, integrated from the nearest sample.
    pub fn value_at(
        &self,
        p: &SpacetimeParams,
        h: f64,
        c: f64,
        r: f64,
        opts: &QuadratureOptions,
    ) -> Result<(f64, f64, f64)> {
        if !self.covers(r) {
            return Err(Error::OutOfDomain {
                r,
                lo: self.first().r.min(self.last().r),
                hi: self.first().r.max(self.last().r),
            });
        }
        let x = self.piece.param_of(r);
        let (_, t, u, v) = self.value_at_param(p, h, c, x, opts)?;
        Ok((t, u, v))
    }

    /// `(r, t, u, v)` at the piece's internal parameter `x ∈ [0, 1)`.
    pub fn value_at_param(
        &self,
        p: &SpacetimeParams,
        h: f64,
        c: f64,
        x: f64,
        opts: &QuadratureOptions,
    ) -> Result<(f64, f64, f64, f64)> {
        let n = self.samples.len();
        let x = x.clamp(0.0, 1.0);
        let i = ((x * (n - 1) as f64).floor() as usize).min(n - 2);
        let xi = i as f64 / (n - 1) as f64;
        // Samples are stored in curve order, which may run against the piece.
        let forward = self.samples[0].r == self.piece.start.r;
        let s = if forward {
            &self.samples[i]
        } else {
            &self.samples[n - 1 - i]
        };
        let w0 = self.coord.pick(s.t, s.u, s.v);
        let f = |y: f64| self.piece.rate_in_x(p, h, c, self.coord, y);
        let w = if x > xi {
            w0 + integrate(&f, xi, x, opts)?
        } else {
            w0
        };
        let r = if x == 0.0 {
            self.piece.start.r
        } else {
            self.piece.map(x).0
        };
        let (t, u, v) = self.coord.to_tuv(w, p.tortoise_unchecked(r));
        Ok((r, t, u, v))
    }
}

/// Which null coordinate stays finite when `εJ` has the given sign at an end.
fn regular_null(eps_j: f64) -> Coord {
    if eps_j > 0.0 {
        Coord::V
    } else {
        Coord::U
    }
}

impl ProfilePiece {
    /// Coordinate that stays finite at the end of the piece where it matters.
    pub fn coord(&self, h: f64, c: f64) -> Coord {
        let at = |e: &Endpoint| match e.kind {
            EndKind::Horizon => Some(regular_null(self.eps * first_integral(h, c, e.r))),
            EndKind::Infinity if h != 0.0 => Some(regular_null(-self.eps * h)),
            _ => None,
        };
        at(&self.start)
            .or_else(|| at(&self.end))
            .unwrap_or(Coord::T)
    }

    /// Offset of `map(x)` from an endpoint: a root of `S^2` if either end is
    /// one (flagged `true`), else a horizon end.
    fn anchor(&self, x: f64) -> Option<(f64, f64, bool)> {
        let (a, b) = (self.start.r, self.end.r);
        let on_horizon = |k: EndKind| matches!(k, EndKind::Horizon | EndKind::Bifurcation);
        if self.end.kind == EndKind::Tangency {
            let span = b - a;
            let rho = (TANGENCY_CUTOFF / span.abs()).min(0.5);
            return Some((b, -span * rho.powf(x), true));
        }
        if self.end.kind == EndKind::Infinity {
            return (on_horizon(self.start.kind) && x < 1.0)
                .then(|| (a, a.max(1.0) * x / (1.0 - x), false));
        }
        let d = b - a;
        let from_start = Some((
            a,
            d * x * x * (3.0 - 2.0 * x),
            self.start.kind == EndKind::Throat,
        ));
        let from_end = Some((
            b,
            -d * (1.0 - x) * (1.0 - x) * (1.0 + 2.0 * x),
            self.end.kind == EndKind::Throat,
        ));
        match (self.start.kind, self.end.kind) {
            (EndKind::Throat, _) => from_start,
            (_, EndKind::Throat) => from_end,
            (s, e) if on_horizon(s) && (x <= 0.5 || !on_horizon(e)) => from_start,
            (_, e) if on_horizon(e) => from_end,
            _ => None,
        }
    }

    fn map(&self, x: f64) -> (f64, f64) {
        let a = self.start.r;
        let b = self.end.r;
        match self.end.kind {
            EndKind::Infinity => {
                let l = a.max(1.0);
                if x >= 1.0 {
                    (f64::INFINITY, f64::INFINITY)
                } else {
                    let y = 1.0 - x;
                    (a + l * x / y, l / (y * y))
                }
            }
            EndKind::Tangency => {
                let span = b - a;
                let rho = (TANGENCY_CUTOFF / span.abs()).min(0.5);
                let g = rho.powf(x);
                (a + span * (1.0 - g), -span * g * rho.ln())
            }
            _ => {
                let d = b - a;
                (a + d * x * x * (3.0 - 2.0 * x), 6.0 * d * x * (1.0 - x))
            }
        }
    }

    /// `d coord / dx` in the piece's internal parameter `x ∈ [0, 1]`.
    pub fn rate_in_x(&self, p: &SpacetimeParams, h: f64, c: f64, coord: Coord, x: f64) -> f64 {
        let (r, dr) = self.map(x);
        // Near an endpoint `r` itself is too coarse to resolve h(r) or S^2.
        let (j, s2, hr) = match self.anchor(x) {
            Some((r0, delta, root)) => {
                let hr = ((r0 - p.r_plus) + delta) * ((r0 - p.r_minus) + delta) / (r * r);
                let j = ((c - h * r0.powi(3)) - h * delta * (r0 * r0 + r0 * r + r * r)) / (r * r);
                let s2 = if root {
                    spacelike_measure_anchored(p, h, c, r0, delta)
                } else {
                    hr + j * j
                };
                (j, s2, hr)
            }
            None => (
                first_integral(h, c, r),
                spacelike_measure(p, h, c, r),
                p.h(r),
            ),
        };
        rate_from_measure(self.eps, coord, j, s2, hr) * dr
    }

    /// Parameter `x` with `map(x) = r`, by bisection on the monotone map.
    fn param_of(&self, r: f64) -> f64 {
        let increasing = self.end.r > self.start.r;
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if (self.map(mid).0 < r) == increasing {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Radius reached at the final sample (short of `R_H` for tangent ends).
    pub fn final_radius(&self) -> f64 {
        self.map(1.0).0
    }
}

/// Derivative of `coord` with respect to `r` along a branch, in forms that stay
/// finite at whichever horizon the coordinate is regular on.
pub fn coord_rate(p: &SpacetimeParams, h: f64, c: f64, eps: f64, coord: Coord, r: f64) -> f64 {
    rate_from_measure(
        eps,
        coord,
        first_integral(h, c, r),
        spacelike_measure(p, h, c, r),
        p.h(r),
    )
}

fn rate_from_measure(eps: f64, coord: Coord, j: f64, s2: f64, hr: f64) -> f64 {
    let s = s2.max(0.0).sqrt();
    let ej = eps * j;
    match coord {
        Coord::T => -ej / (hr * s),
        Coord::V => {
            if ej >= 0.0 {
                1.0 / (s * (s + ej))
            } else {
                (s - ej) / (hr * s)
            }
        }
        Coord::U => {
            if ej <= 0.0 {
                -1.0 / (s * (s - ej))
            } else {
                -(s + ej) / (hr * s)
            }
        }
    }
}

/// Integrate one piece starting from `start_value`, given as `(coord, value)` at `piece.start.r`.
pub fn integrate_piece(
    p: &SpacetimeParams,
    h: f64,
    c: f64,
    piece: ProfilePiece,
    start_value: (Coord, f64),
    n: usize,
    opts: &QuadratureOptions,
) -> Result<Profile> {
    if piece.start.kind == EndKind::Tangency {
        return Err(Error::InvalidParameter(
            "a piece cannot start at a tangency".into(),
        ));
    }
    let n = n.max(2);
    let coord = piece.coord(h, c);
    let rs0 = p.tortoise_unchecked(piece.start.r);
    let w0 = if start_value.0 == coord {
        start_value.1
    } else {
        let (t, u, v) = start_value.0.to_tuv(start_value.1, rs0);
        let w = coord.pick(t, u, v);
        if !w.is_finite() {
            return Err(Error::GluingMismatch(format!(
                "{:?} is not finite at r = {} in {}",
                coord, piece.start.r, piece.block
            )));
        }
        w
    };
    let integrand = |x: f64| piece.rate_in_x(p, h, c, coord, x);
    let mut samples = Vec::with_capacity(n);
    let mut w = w0;
    let mut x_prev = 0.0;
    for i in 0..n {
        let x = i as f64 / (n - 1) as f64;
        if i > 0 {
            w += integrate(&integrand, x_prev, x, opts)?;
        }
        x_prev = x;
        let r = if i == 0 {
            piece.start.r
        } else {
            piece.map(x).0
        };
        samples.push(make_sample(p, h, c, &piece, coord, w, r));
    }
    Ok(Profile {
        piece,
        coord,
        samples,
    })
}

fn make_sample(
    p: &SpacetimeParams,
    h: f64,
    c: f64,
    piece: &ProfilePiece,
    coord: Coord,
    w: f64,
    r: f64,
) -> ProfileSample {
    let (t, u, v) = if r.is_infinite() {
        match coord {
            Coord::T => (w, f64::NEG_INFINITY, f64::INFINITY),
            Coord::U => (f64::INFINITY, w, f64::INFINITY),
            Coord::V => (f64::NEG_INFINITY, f64::NEG_INFINITY, w),
        }
    } else {
        coord.to_tuv(w, p.tortoise_unchecked(r))
    };
    let fprime = if r.is_infinite() {
        f64::NAN
    } else {
        slope_with_epsilon(p, h, c, r, piece.eps)
    };
    ProfileSample {
        r,
        t,
        u,
        v,
        fprime,
        l_value: if r.is_finite() {
            l_value(p, h, c, r, piece.block.region)
        } else {
            None
        },
    }
}

/// Profile of one admissible interval from [`super::slice_domain`] inside `block`.
///
/// `t` is anchored to the placement offset at the throat end when there is one,
/// otherwise the horizon-regular null coordinate is set to the offset at a horizon end.
pub fn integrate_profile(
    p: &SpacetimeParams,
    spec: &SliceSpec,
    block: BlockAddress,
    interval: DomainInterval,
    n: usize,
    opts: &QuadratureOptions,
) -> Result<Vec<Profile>> {
    if n < 16 {
        return Err(Error::InvalidParameter(format!("sample count {n} < 16")));
    }
    let (h, c) = (spec.h, spec.c);
    let offset = match spec.placement {
        super::Placement::Offset(x) => x,
        super::Placement::Axisymmetric => 0.0,
    };
    let eps = branch_epsilon(block, spec.branch);
    let classify_horizon = |e: Endpoint| {
        if e.kind == EndKind::Horizon && first_integral(h, c, e.r).abs() < BIFURCATION_TOLERANCE {
            Endpoint::new(e.r, EndKind::Bifurcation)
        } else {
            e
        }
    };
    let lo = classify_horizon(interval.lo);
    let hi = classify_horizon(interval.hi);
    let finite_anchor = |e: &Endpoint| matches!(e.kind, EndKind::Throat | EndKind::Bifurcation);
    let (start, end) = if finite_anchor(&lo) {
        (lo, hi)
    } else if finite_anchor(&hi) {
        (hi, lo)
    } else if lo.kind == EndKind::Horizon {
        (lo, hi)
    } else if hi.kind == EndKind::Horizon {
        (hi, lo)
    } else {
        (lo, hi)
    };
    let first = ProfilePiece {
        block,
        eps,
        start,
        end,
    };
    let anchor_coord = first.coord(h, c);
    let anchor = if start.kind == EndKind::Horizon {
        (anchor_coord, offset)
    } else {
        (Coord::T, offset)
    };
    if end.kind != EndKind::Infinity {
        return Ok(vec![integrate_piece(p, h, c, first, anchor, n, opts)?]);
    }
    let mid = Endpoint::new(split_radius(p, start.r), EndKind::Interior);
    let near = integrate_piece(p, h, c, ProfilePiece { end: mid, ..first }, anchor, n, opts)?;
    let w = near.last();
    let far = integrate_piece(
        p,
        h,
        c,
        ProfilePiece {
            start: mid,
            ..first
        },
        (Coord::T, w.t),
        n,
        opts,
    )?;
    Ok(vec![near, far])
}

/// Radius at which pieces running out to infinity are split in two.
pub fn split_radius(p: &SpacetimeParams, from: f64) -> f64 {
    (2.0 * from).max(p.r_plus + 2.0 * p.mass)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atlas::Region;
    use crate::slice::{critical_points, slice_domain, Branch, Placement};

    fn rn() -> SpacetimeParams {
        SpacetimeParams::new(1.0, 0.6).unwrap()
    }

    #[test]
    fn static_slice_is_constant_in_t() {
        let p = rn();
        let spec = SliceSpec::new(&p, 0.0, 0.0)
            .unwrap()
            .with_placement(Placement::Offset(0.7));
        let block = BlockAddress::new(0, Region::I);
        let iv = slice_domain(&p, 0.0, 0.0, Region::I).unwrap()[0];
        let prof =
            integrate_profile(&p, &spec, block, iv, 32, &QuadratureOptions::default()).unwrap();
        for s in prof.iter().flat_map(|pr| &pr.samples) {
            assert!((s.t - 0.7).abs() < 1e-12, "{s:?}");
            if s.r.is_finite() && s.r > p.r_plus {
                let rs = p.tortoise_unchecked(s.r);
                assert!((s.u - (0.7 - rs)).abs() < 1e-9);
                assert!((s.v - (0.7 + rs)).abs() < 1e-9);
            }
        }
    }

    /// `t(r0 + δ) - t(r0)` with the piece stopped at `r0 + δ`.
    fn throat_increment(p: &SpacetimeParams, h: f64, c: f64, r0: f64, delta: f64) -> f64 {
        let piece = ProfilePiece {
            block: BlockAddress::new(0, Region::II),
            eps: 1.0,
            start: Endpoint::new(r0, EndKind::Throat),
            end: Endpoint::new(r0 + delta, EndKind::Interior),
        };
        let prof = integrate_piece(
            p,
            h,
            c,
            piece,
            (Coord::T, 0.0),
            4,
            &QuadratureOptions::default(),
        )
        .unwrap();
        prof.last().t
    }

    #[test]
    fn throat_is_finite_with_sqrt_rate() {
        let p = rn();
        let h = 0.2;
        let cp = critical_points(&p, h).unwrap();
        let c = cp.c_big - 0.2;
        let iv = slice_domain(&p, h, c, Region::II).unwrap();
        let r0 = iv
            .iter()
            .find(|i| i.lo.kind == EndKind::Throat)
            .unwrap()
            .lo
            .r;
        let d1 = throat_increment(&p, h, c, r0, 1e-4).abs();
        let d2 = throat_increment(&p, h, c, r0, 1e-6).abs();
        assert!(d1 < 1.0 && d2 < d1, "{d1} {d2}");
        // Cauchy at rate sqrt(δ): shrinking δ by 100 shrinks the increment by ~10.
        assert!((d1 / d2 - 10.0).abs() < 0.5, "{}", d1 / d2);
    }

    #[test]
    fn advanced_time_is_regular_at_the_horizon() {
        let p = rn();
        let h = 0.2;
        let cp = critical_points(&p, h).unwrap();
        let c = cp.c_big - 0.2;
        let spec = SliceSpec::new(&p, h, c)
            .unwrap()
            .with_branch(Branch::PositiveSlope);
        let block = BlockAddress::new(0, Region::II);
        let iv = *slice_domain(&p, h, c, Region::II)
            .unwrap()
            .iter()
            .find(|i| i.lo.kind == EndKind::Throat)
            .unwrap();
        let opts = QuadratureOptions::default();
        let coarse = integrate_profile(&p, &spec, block, iv, 16, &opts).unwrap();
        let fine = integrate_profile(&p, &spec, block, iv, 64, &opts).unwrap();
        let (a, b) = (coarse[0].last(), fine[0].last());
        assert_eq!(coarse[0].coord, Coord::V);
        assert!(a.v.is_finite() && (a.v - b.v).abs() < 1e-9);
        assert!(a.t.is_infinite());
        // Oracle: the raw t diverges while t + r* converges as r approaches r+.
        let near = &fine[0].samples[fine[0].samples.len() - 2];
        assert!(near.t.abs() > 5.0);
    }

    #[test]
    fn rates_agree_with_slope() {
        let p = rn();
        let (h, c) = (0.3, 0.1);
        for &r in &[2.5, 7.0, 0.1] {
            for eps in [1.0, -1.0] {
                let rs_dot = 1.0 / p.h(r);
                let t = coord_rate(&p, h, c, eps, Coord::T, r);
                assert!(
                    (coord_rate(&p, h, c, eps, Coord::V, r) - (t + rs_dot)).abs()
                        < 1e-9 * (1.0 + t.abs())
                );
                assert!(
                    (coord_rate(&p, h, c, eps, Coord::U, r) - (t - rs_dot)).abs()
                        < 1e-9 * (1.0 + t.abs())
                );
            }
        }
    }

    #[test]
    fn infinity_piece_reaches_null_infinity() {
        let p = rn();
        let spec = SliceSpec::new(&p, 0.2, 0.5).unwrap();
        let block = BlockAddress::new(0, Region::I);
        let iv = slice_domain(&p, 0.2, 0.5, Region::I).unwrap()[0];
        let prof =
            integrate_profile(&p, &spec, block, iv, 32, &QuadratureOptions::default()).unwrap();
        let last = prof.last().unwrap().last();
        assert!(last.r.is_infinite());
        assert!(last.u.is_finite() && last.v == f64::INFINITY);
    }
}
