//! The closed loop of throat data at fixed `H` and the leaves it indexes.

use serde::{Deserialize, Serialize};

use super::{CurveKind, FoliationCurve, Leaf};
use crate::atlas::{embed_slice, throat_spec, EmbedOptions, EmbeddedSlice};
use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadratureOptions};
use crate::slice::{critical_points, SliceSpec};
use crate::spacetime::SpacetimeParams;

const TABLE_NODES: usize = 256;
const MARKER_TOLERANCE: f64 = 1e-12;

/// Loop parameters of the special leaves, as fractions of the period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoopMarkers {
    /// Minimum of `G`: the cylinder `r = r_H` in `II'`.
    pub s1: f64,
    /// The outer horizon `r = r+`.
    pub s2: f64,
    /// Maximum of `F`: the cylinder `r = R_H` in `II`.
    pub s3: f64,
    pub s_period: f64,
}

/// Throat datum at one loop parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoopPoint {
    pub r: f64,
    pub c: f64,
    /// On the graph of `G` (throat in `II'`) rather than `F`.
    pub lower: bool,
    pub copy_index: i64,
}

/// Arclength parameterization of the loop formed by the graphs of `F` and `G`.
///
/// Both graphs are written in the angle `θ` with `r = r- + (r+ - r-)(1 - cos θ)/2`,
/// which turns the square-root endpoints into smooth ones. The parameter `s`
/// is arclength divided by the total length, so the period is 1; `s = 0` is
/// `(r-, H r-^3)` and the loop runs along `G` first (counterclockwise).
#[derive(Debug, Clone)]
pub struct FixedHLoop {
    params: SpacetimeParams,
    h: f64,
    lower_table: Vec<f64>,
    upper_table: Vec<f64>,
    markers: LoopMarkers,
    quadrature: QuadratureOptions,
}

impl FixedHLoop {
    pub fn new(p: &SpacetimeParams, h: f64) -> Result<Self> {
        if !h.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "H must be finite, got {h}"
            )));
        }
        let quadrature = QuadratureOptions {
            abs_tol: 1e-14,
            rel_tol: 1e-14,
            max_depth: 40,
        };
        let mut lp = Self {
            params: *p,
            h,
            lower_table: Vec::new(),
            upper_table: Vec::new(),
            markers: LoopMarkers {
                s1: 0.0,
                s2: 0.0,
                s3: 0.0,
                s_period: 1.0,
            },
            quadrature,
        };
        lp.lower_table = lp.table(true)?;
        lp.upper_table = lp.table(false)?;
        let (ll, lu) = (lp.lower_length(), lp.upper_length());
        let total = ll + lu;
        let cp = critical_points(p, h)?;
        let s1 = lp.length_to(true, lp.theta_of(cp.r_small))? / total;
        let s3 = (ll + lu - lp.length_to(false, lp.theta_of(cp.r_big))?) / total;
        lp.markers = LoopMarkers {
            s1,
            s2: ll / total,
            s3,
            s_period: 1.0,
        };
        Ok(lp)
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn markers(&self) -> LoopMarkers {
        self.markers
    }

    fn half_width(&self) -> f64 {
        0.5 * (self.params.r_plus - self.params.r_minus)
    }

    fn radius(&self, theta: f64) -> f64 {
        self.params.r_minus + self.half_width() * (1.0 - theta.cos())
    }

    fn theta_of(&self, r: f64) -> f64 {
        (1.0 - (r - self.params.r_minus) / self.half_width())
            .clamp(-1.0, 1.0)
            .acos()
    }

    /// `c` on the lower (`G`) or upper (`F`) graph at angle `θ`.
    fn value(&self, lower: bool, theta: f64) -> f64 {
        let r = self.radius(theta);
        let root = r * self.half_width() * theta.sin();
        let cubic = self.h * r.powi(3);
        if lower {
            cubic - root
        } else {
            cubic + root
        }
    }

    fn speed(&self, lower: bool, theta: f64) -> f64 {
        let p = &self.params;
        let r = self.radius(theta);
        let dr = self.half_width() * theta.sin();
        let tail = -2.0 * r * r + 3.0 * p.mass * r - p.charge * p.charge;
        let dc = 3.0 * self.h * r * r * dr + if lower { -tail } else { tail };
        dr.hypot(dc)
    }

    fn table(&self, lower: bool) -> Result<Vec<f64>> {
        let step = std::f64::consts::PI / TABLE_NODES as f64;
        let f = |th: f64| self.speed(lower, th);
        let mut out = Vec::with_capacity(TABLE_NODES + 1);
        out.push(0.0);
        let mut acc = 0.0;
        for i in 0..TABLE_NODES {
            acc += integrate(&f, i as f64 * step, (i + 1) as f64 * step, &self.quadrature)?;
            out.push(acc);
        }
        Ok(out)
    }

    fn lower_length(&self) -> f64 {
        self.lower_table[TABLE_NODES]
    }

    fn upper_length(&self) -> f64 {
        self.upper_table[TABLE_NODES]
    }

    /// Arclength from `θ = 0` to `θ` along one graph.
    fn length_to(&self, lower: bool, theta: f64) -> Result<f64> {
        let table = if lower {
            &self.lower_table
        } else {
            &self.upper_table
        };
        let step = std::f64::consts::PI / TABLE_NODES as f64;
        let i = ((theta / step).floor() as usize).min(TABLE_NODES - 1);
        let f = |th: f64| self.speed(lower, th);
        Ok(table[i] + integrate(&f, i as f64 * step, theta, &self.quadrature)?)
    }

    /// Angle at which the arclength along one graph equals `target`.
    fn theta_at(&self, lower: bool, target: f64) -> Result<f64> {
        let table = if lower {
            &self.lower_table
        } else {
            &self.upper_table
        };
        let step = std::f64::consts::PI / TABLE_NODES as f64;
        let i = table
            .partition_point(|&v| v <= target)
            .clamp(1, TABLE_NODES)
            - 1;
        let (mut lo, mut hi) = (i as f64 * step, (i + 1) as f64 * step);
        let span = table[i + 1] - table[i];
        let mut th = lo + step * ((target - table[i]) / span).clamp(0.0, 1.0);
        for _ in 0..100 {
            let g = self.length_to(lower, th)? - target;
            if g.abs() <= 1e-15 * (1.0 + target.abs()) {
                break;
            }
            if g > 0.0 {
                hi = th;
            } else {
                lo = th;
            }
            let newton = th - g / self.speed(lower, th);
            th = if newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo < 1e-16 {
                break;
            }
        }
        Ok(th)
    }

    /// Throat datum at parameter `s` (any real; the integer part is the copy).
    pub fn point(&self, s: f64) -> Result<LoopPoint> {
        if !s.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "loop parameter must be finite, got {s}"
            )));
        }
        let k = s.floor();
        let frac = s - k;
        let total = self.lower_length() + self.upper_length();
        let arc = frac * total;
        let (lower, theta) = if arc < self.lower_length() {
            (true, self.theta_at(true, arc)?)
        } else {
            let back = self.upper_length() - (arc - self.lower_length());
            (false, self.theta_at(false, back.max(0.0))?)
        };
        Ok(LoopPoint {
            r: self.radius(theta),
            c: self.value(lower, theta),
            lower,
            copy_index: k as i64,
        })
    }

    /// Slice spec of the leaf at parameter `s`.
    pub fn leaf_spec(&self, s: f64) -> Result<SliceSpec> {
        let p = &self.params;
        let near = |a: f64, b: f64| (a - b).abs() < MARKER_TOLERANCE;
        let k = s.floor();
        let frac = s - k;
        let (k, frac) = if near(frac, 1.0) {
            (k + 1.0, 0.0)
        } else {
            (k, frac)
        };
        let k = k as i64;
        let m = self.markers;
        if near(frac, 0.0) {
            return throat_spec(p, self.h, p.r_minus, true, k);
        }
        if near(frac, m.s1) {
            return Ok(SliceSpec::cylinder(p, self.h, true)?.with_copy(k));
        }
        if near(frac, m.s2) {
            return throat_spec(p, self.h, p.r_plus, false, k);
        }
        if near(frac, m.s3) {
            return Ok(SliceSpec::cylinder(p, self.h, false)?.with_copy(k));
        }
        let pt = self.point(s)?;
        throat_spec(p, self.h, pt.r, pt.lower, k)
    }

    /// Embedded leaf at parameter `s`.
    pub fn leaf(&self, s: f64, opts: &EmbedOptions) -> Result<Leaf> {
        let spec = self.leaf_spec(s)?;
        let slice = embed_slice(&self.params, &spec, opts)?;
        let pt = self.point(s)?;
        Ok(Leaf::new(s, (pt.r, spec.c), slice))
    }

    /// Parameters of `n` leaves per period: each of the four arcs between
    /// markers gets a share proportional to its length, starting at its marker.
    pub fn grid(&self, n: usize) -> Vec<f64> {
        let m = self.markers;
        let bounds = [0.0, m.s1, m.s2, m.s3, 1.0];
        let mut counts = [0usize; 4];
        let mut assigned = 0;
        for j in 0..4 {
            let share = ((bounds[j + 1] - bounds[j]) * n as f64).round() as usize;
            counts[j] = share.max(1);
            assigned += counts[j];
        }
        while assigned > n.max(4) {
            let j = (0..4).max_by_key(|&j| counts[j]).unwrap_or(0);
            counts[j] -= 1;
            assigned -= 1;
        }
        while assigned < n {
            let j = (0..4)
                .max_by(|&a, &b| {
                    let da = (bounds[a + 1] - bounds[a]) / counts[a] as f64;
                    let db = (bounds[b + 1] - bounds[b]) / counts[b] as f64;
                    da.total_cmp(&db)
                })
                .unwrap_or(0);
            counts[j] += 1;
            assigned += 1;
        }
        let mut out = Vec::with_capacity(assigned);
        for j in 0..4 {
            for i in 0..counts[j] {
                out.push(bounds[j] + (bounds[j + 1] - bounds[j]) * i as f64 / counts[j] as f64);
            }
        }
        out
    }

    /// Sampled loop as a curve in the `(r, c)` plane, closed (first = last).
    pub fn curve(&self, n: usize) -> Result<FoliationCurve> {
        let n = n.max(8);
        let mut samples = Vec::with_capacity(n + 1);
        for i in 0..n {
            let pt = self.point(i as f64 / n as f64)?;
            samples.push((pt.r, pt.c));
        }
        samples.push(samples[0]);
        Ok(FoliationCurve {
            kind: CurveKind::Loop,
            samples,
            s_period: Some(1.0),
            markers: Some(self.markers),
        })
    }

    pub fn embedded(&self, s: f64, opts: &EmbedOptions) -> Result<EmbeddedSlice> {
        embed_slice(&self.params, &self.leaf_spec(s)?, opts)
    }
}

/// The closed loop `γ` of throat data at fixed `H`, sampled at `n` parameters.
pub fn loop_gamma(p: &SpacetimeParams, h: f64, n: usize) -> Result<FoliationCurve> {
    if n < 8 {
        return Err(Error::InvalidParameter(format!(
            "loop needs at least 8 samples, got {n}"
        )));
    }
    FixedHLoop::new(p, h)?.curve(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::slice::{envelope_f, envelope_g};

    fn rn() -> SpacetimeParams {
        SpacetimeParams::new(1.0, 0.6).unwrap()
    }

    #[test]
    fn loop_starts_at_inner_horizon() {
        let p = rn();
        let c = loop_gamma(&p, 0.2, 64).unwrap();
        assert_eq!(c.samples[0].0, p.r_minus);
        assert!((c.samples[0].1 - 0.2 * p.r_minus.powi(3)).abs() < 1e-15);
        assert_eq!(c.samples.first(), c.samples.last());
    }

    #[test]
    fn maximal_loop_is_symmetric() {
        let p = rn();
        let lp = FixedHLoop::new(&p, 0.0).unwrap();
        let m = lp.markers();
        assert!((m.s2 - 0.5).abs() < 1e-12);
        for s in [0.05, 0.2, 0.37] {
            let a = lp.point(s).unwrap();
            let b = lp.point(1.0 - s).unwrap();
            assert!(
                (a.r - b.r).abs() < 1e-9 && (a.c + b.c).abs() < 1e-9,
                "{a:?} {b:?}"
            );
        }
    }

    #[test]
    fn markers_sit_on_the_extrema() {
        let p = rn();
        let h = 0.2;
        let lp = FixedHLoop::new(&p, h).unwrap();
        let m = lp.markers();
        assert!(0.0 < m.s1 && m.s1 < m.s2 && m.s2 < m.s3 && m.s3 < 1.0);
        let cp = critical_points(&p, h).unwrap();
        let top = lp.point(m.s3).unwrap();
        assert!((top.r - cp.r_big).abs() < 1e-8 && (top.c - cp.c_big).abs() < 1e-8);
        let bottom = lp.point(m.s1).unwrap();
        assert!((bottom.r - cp.r_small).abs() < 1e-8 && (bottom.c - cp.c_small).abs() < 1e-8);
        assert!((lp.point(m.s2).unwrap().r - p.r_plus).abs() < 1e-9);
    }

    #[test]
    fn points_lie_on_the_envelopes() {
        let p = rn();
        let lp = FixedHLoop::new(&p, -0.3).unwrap();
        for i in 0..40 {
            let pt = lp.point(i as f64 / 40.0 + 0.0123).unwrap();
            let env = if pt.lower {
                envelope_g(&p, -0.3, pt.r)
            } else {
                envelope_f(&p, -0.3, pt.r)
            };
            assert!((env.unwrap() - pt.c).abs() < 1e-12);
        }
    }

    #[test]
    fn arclength_matches_polygon() {
        let p = rn();
        let lp = FixedHLoop::new(&p, 0.2).unwrap();
        let n = 20000;
        let mut len = 0.0;
        let mut prev = lp.point(0.0).unwrap();
        for i in 1..=n {
            let pt = lp.point(i as f64 / n as f64).unwrap();
            len += (pt.r - prev.r).hypot(pt.c - prev.c);
            prev = pt;
        }
        let exact = lp.lower_length() + lp.upper_length();
        assert!((len - exact).abs() / exact < 1e-6, "{len} {exact}");
    }

    #[test]
    fn grid_contains_markers() {
        let p = rn();
        let lp = FixedHLoop::new(&p, 0.2).unwrap();
        let g = lp.grid(200);
        assert_eq!(g.len(), 200);
        let m = lp.markers();
        for s in [0.0, m.s1, m.s2, m.s3] {
            assert!(g.contains(&s));
        }
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }
}
