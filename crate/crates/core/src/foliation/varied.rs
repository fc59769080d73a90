//! Monotone transversal curves in the `(r, c)` plane and the varied-`H` chain.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{CurveKind, FoliationCurve, Leaf};
use crate::atlas::{embed_slice, reflect_time, throat_spec, EmbedOptions};
use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadratureOptions};
use crate::spacetime::SpacetimeParams;

pub const DEFAULT_ALPHA: f64 = -2.0;
/// Upper bound for the doubling search on the forcing constant.
pub const FORCING_CAP: f64 = 1_152_921_504_606_846_976.0;

pub(crate) const TABLE_NODES: usize = 256;
const TEST_GRID: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Horizon {
    Minus,
    Plus,
}

/// Mean curvature at which `F(H, r±) = G(H, r±) = c`.
pub fn h_at_boundary(p: &SpacetimeParams, c: f64, horizon: Horizon) -> f64 {
    match horizon {
        Horizon::Minus => c / p.r_minus.powi(3),
        Horizon::Plus => c / p.r_plus.powi(3),
    }
}

/// `∫_{r-}^{r} q(x) χ(x) / x^3 dx` with `χ` the indicator of `(r-, r_*)`,
/// tabulated in the angle `θ` where `q dx` is smooth.
#[derive(Debug, Clone)]
struct ForcingIntegral {
    params: SpacetimeParams,
    theta_star: f64,
    table: Vec<f64>,
    nodes: usize,
    quadrature: QuadratureOptions,
}

impl ForcingIntegral {
    fn new(p: &SpacetimeParams, quadrature: QuadratureOptions, nodes: usize) -> Result<Self> {
        if p.is_uncharged() {
            return Err(Error::InvalidParameter(
                "the forcing integral diverges at r = 0 when e = 0".into(),
            ));
        }
        let mut out = Self {
            params: *p,
            theta_star: 0.0,
            table: Vec::new(),
            nodes: nodes.max(1),
            quadrature,
        };
        out.theta_star = out.theta_of(p.r_star());
        let step = out.theta_star / out.nodes as f64;
        let mut acc = 0.0;
        out.table.push(0.0);
        for i in 0..out.nodes {
            acc += integrate(
                &|th| out.integrand(th),
                i as f64 * step,
                (i + 1) as f64 * step,
                &quadrature,
            )?;
            out.table.push(acc);
        }
        Ok(out)
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

    fn integrand(&self, theta: f64) -> f64 {
        let p = &self.params;
        let x = self.radius(theta);
        (-2.0 * x * x + 3.0 * p.mass * x - p.charge * p.charge) / x.powi(3)
    }

    /// Integral from `r-` to `min(r, r_*)`.
    fn above_minus(&self, r: f64) -> Result<f64> {
        let th = self.theta_of(r).min(self.theta_star);
        let step = self.theta_star / self.nodes as f64;
        let i = ((th / step).floor() as usize).min(self.nodes - 1);
        Ok(self.table[i]
            + integrate(
                &|t| self.integrand(t),
                i as f64 * step,
                th,
                &self.quadrature,
            )?)
    }

    fn total(&self) -> f64 {
        self.table[self.nodes]
    }

    /// Integral over `[a, b]` (clipped to `[r-, r_*]`), evaluated locally.
    fn between(&self, a: f64, b: f64) -> Result<f64> {
        let ta = self.theta_of(a).min(self.theta_star);
        let tb = self.theta_of(b).min(self.theta_star);
        integrate(&|t| self.integrand(t), ta, tb, &self.quadrature)
    }
}

fn sqrt_radicand(p: &SpacetimeParams, r: f64) -> f64 {
    p.radicand(r).max(0.0).sqrt()
}

/// `q(r) = (-2r^2 + 3Mr - e^2) / sqrt(-r^2 + 2Mr - e^2)`.
pub fn q_of(p: &SpacetimeParams, r: f64) -> f64 {
    (-2.0 * r * r + 3.0 * p.mass * r - p.charge * p.charge) / sqrt_radicand(p, r)
}

/// `q̃(r) = (-r^2 + 3Mr - 2e^2) / sqrt(-r^2 + 2Mr - e^2)`.
pub fn q_tilde(p: &SpacetimeParams, r: f64) -> f64 {
    (-r * r + 3.0 * p.mass * r - 2.0 * p.charge * p.charge) / sqrt_radicand(p, r)
}

fn test_grid(p: &SpacetimeParams, n: usize) -> impl Iterator<Item = f64> + '_ {
    let half = 0.5 * (p.r_plus - p.r_minus);
    (1..=n).map(move |i| {
        let th = std::f64::consts::PI * i as f64 / (n + 1) as f64;
        p.r_minus + half * (1.0 - th.cos())
    })
}

/// Decreasing graph built from `c = y(r+)` with forcing `q χ + C r^α`.
#[derive(Debug, Clone)]
pub struct Prop1Graph {
    params: SpacetimeParams,
    pub y_plus: f64,
    pub alpha: f64,
    pub forcing_constant: f64,
    integral: ForcingIntegral,
}

impl Prop1Graph {
    fn power_integral(&self, r: f64) -> f64 {
        let a = self.alpha - 2.0;
        self.forcing_constant * (self.params.r_plus.powf(a) - r.powf(a)) / a
    }

    /// Forcing `p(r)`.
    pub fn forcing(&self, r: f64) -> f64 {
        let q = if r < self.params.r_star() {
            q_of(&self.params, r)
        } else {
            0.0
        };
        q + self.forcing_constant * r.powf(self.alpha)
    }

    /// `∫_r^{r+} p(x) / x^3 dx`.
    pub fn tail_integral(&self, r: f64) -> Result<f64> {
        Ok(self.integral.total() - self.integral.above_minus(r)? + self.power_integral(r))
    }

    /// `∫_a^b p(x) / x^3 dx`, evaluated locally.
    pub fn integral_between(&self, a: f64, b: f64) -> Result<f64> {
        Ok(self.integral.between(a, b)? + self.power_integral(a) - self.power_integral(b))
    }

    pub fn y(&self, r: f64) -> Result<f64> {
        let p = &self.params;
        Ok(self.y_plus * (r / p.r_plus).powi(3)
            + r * sqrt_radicand(p, r)
            + r.powi(3) * self.tail_integral(r)?)
    }

    /// `y'(r)`; the `q` terms cancel below `r_*` and are dropped there.
    pub fn y_prime(&self, r: f64) -> Result<f64> {
        let p = &self.params;
        let q = if r > p.r_star() { q_of(p, r) } else { 0.0 };
        Ok(
            3.0 * self.y_plus * r * r / p.r_plus.powi(3) + 3.0 * r * r * self.tail_integral(r)?
                - self.forcing_constant * r.powf(self.alpha)
                + q,
        )
    }

    /// `y(r-)`.
    pub fn end_value(&self) -> Result<f64> {
        self.y(self.params.r_minus)
    }

    pub fn curve(&self, n: usize) -> Result<FoliationCurve> {
        let p = &self.params;
        let mut samples = vec![(p.r_minus, self.end_value()?)];
        for r in test_grid(p, n.max(2) - 2) {
            samples.push((r, self.y(r)?));
        }
        samples.push((p.r_plus, self.y_plus));
        Ok(FoliationCurve {
            kind: CurveKind::Prop1Graph,
            samples,
            s_period: None,
            markers: None,
        })
    }
}

/// Graph of the first proposition starting at `c_start = y(r+)`. The forcing constant
/// is found by doubling from 1 until `y' < 0` on a test grid.
pub fn prop1_curve(
    p: &SpacetimeParams,
    c_start: f64,
    alpha: f64,
    cap: Option<f64>,
) -> Result<Prop1Graph> {
    prop1_with(
        p,
        c_start,
        alpha,
        cap,
        QuadratureOptions::default(),
        TABLE_NODES,
    )
}

pub(crate) fn prop1_with(
    p: &SpacetimeParams,
    c_start: f64,
    alpha: f64,
    cap: Option<f64>,
    quadrature: QuadratureOptions,
    nodes: usize,
) -> Result<Prop1Graph> {
    if !(c_start >= 0.0) || !c_start.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "y(r+) must be finite and >= 0, got {c_start}"
        )));
    }
    if !(alpha < -1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must be < -1, got {alpha}"
        )));
    }
    let cap = cap.unwrap_or(FORCING_CAP);
    let mut graph = Prop1Graph {
        params: *p,
        y_plus: c_start,
        alpha,
        forcing_constant: 1.0,
        integral: ForcingIntegral::new(p, quadrature, nodes)?,
    };
    loop {
        let mut ok = true;
        for r in test_grid(p, TEST_GRID) {
            if !(graph.y_prime(r)? < 0.0) {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(graph);
        }
        graph.forcing_constant *= 2.0;
        if graph.forcing_constant > cap {
            return Err(Error::ForcingSearchFailed(cap));
        }
    }
}

/// Increasing graph built from `c = y(r-)` with forcing `q χ`.
#[derive(Debug, Clone)]
pub struct Prop2Graph {
    params: SpacetimeParams,
    pub y_minus: f64,
    integral: ForcingIntegral,
}

impl Prop2Graph {
    pub fn forcing(&self, r: f64) -> f64 {
        if r < self.params.r_star() {
            q_of(&self.params, r)
        } else {
            0.0
        }
    }

    /// `∫_{r-}^r p(x) / x^3 dx`.
    pub fn head_integral(&self, r: f64) -> Result<f64> {
        self.integral.above_minus(r)
    }

    pub fn integral_between(&self, a: f64, b: f64) -> Result<f64> {
        self.integral.between(a, b)
    }

    pub fn y(&self, r: f64) -> Result<f64> {
        let p = &self.params;
        Ok(
            self.y_minus * (r / p.r_minus).powi(3) - r * sqrt_radicand(p, r)
                + r.powi(3) * self.head_integral(r)?,
        )
    }

    pub fn y_prime(&self, r: f64) -> Result<f64> {
        let p = &self.params;
        let q = if r > p.r_star() { -q_of(p, r) } else { 0.0 };
        Ok(3.0 * self.y_minus * r * r / p.r_minus.powi(3)
            + 3.0 * r * r * self.head_integral(r)?
            + q)
    }

    /// `y(r+)`.
    pub fn end_value(&self) -> Result<f64> {
        self.y(self.params.r_plus)
    }

    pub fn curve(&self, n: usize) -> Result<FoliationCurve> {
        let p = &self.params;
        let mut samples = vec![(p.r_minus, self.y_minus)];
        for r in test_grid(p, n.max(2) - 2) {
            samples.push((r, self.y(r)?));
        }
        samples.push((p.r_plus, self.end_value()?));
        Ok(FoliationCurve {
            kind: CurveKind::Prop2Graph,
            samples,
            s_period: None,
            markers: None,
        })
    }
}

/// Graph of the second proposition starting at `c_start = y(r-) > 0`.
pub fn prop2_curve(p: &SpacetimeParams, c_start: f64) -> Result<Prop2Graph> {
    prop2_with(p, c_start, QuadratureOptions::default(), TABLE_NODES)
}

pub(crate) fn prop2_with(
    p: &SpacetimeParams,
    c_start: f64,
    quadrature: QuadratureOptions,
    nodes: usize,
) -> Result<Prop2Graph> {
    if !(c_start > 0.0) || !c_start.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "y(r-) must be finite and > 0, got {c_start}"
        )));
    }
    Ok(Prop2Graph {
        params: *p,
        y_minus: c_start,
        integral: ForcingIntegral::new(p, quadrature, nodes)?,
    })
}

/// One link of the chain with its handoff values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSegment {
    pub curve: FoliationCurve,
    pub c_start: f64,
    pub c_end: f64,
    #[serde(rename = "H_start")]
    pub h_start: f64,
    #[serde(rename = "H_end")]
    pub h_end: f64,
    pub copy_index: i64,
    pub forcing_constant: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariedFoliation {
    pub segments: Vec<ChainSegment>,
    /// Ordered by increasing `H`: reflected leaves, the `H = 0` leaf, then the chain.
    pub leaves: Vec<Leaf>,
}

/// Chain of alternating graphs from `c = 0` at `r+`, with `n` leaves per segment,
/// completed by the reflection `T -> -T`.
pub fn foliate_varied(
    p: &SpacetimeParams,
    segments: usize,
    n: usize,
    opts: &EmbedOptions,
) -> Result<VariedFoliation> {
    if segments == 0 {
        return Err(Error::InvalidParameter("need at least one segment".into()));
    }
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 leaves per segment, got {n}"
        )));
    }
    let half = 0.5 * (p.r_plus - p.r_minus);
    let radius = |th: f64| p.r_minus + half * (1.0 - th.cos());
    let mut chain = Vec::with_capacity(segments);
    // (radius, c, primed, copy, chain position)
    let mut points: Vec<(f64, f64, bool, i64, f64)> = Vec::new();
    let mut c = 0.0;
    for j in 0..segments {
        let last = j + 1 == segments;
        let count = if last { n + 1 } else { n };
        if j % 2 == 0 {
            let k = (j / 2) as i64;
            let g = prop1_curve(p, c, DEFAULT_ALPHA, None)?;
            let c_end = g.end_value()?;
            for i in 0..count {
                let th = std::f64::consts::PI * (1.0 - i as f64 / n as f64);
                let r = if i == 0 {
                    p.r_plus
                } else if i == n {
                    p.r_minus
                } else {
                    radius(th)
                };
                let y = if i == 0 {
                    c
                } else if i == n {
                    c_end
                } else {
                    g.y(r)?
                };
                points.push((r, y, false, k, j as f64 + i as f64 / n as f64));
            }
            chain.push(ChainSegment {
                curve: g.curve(n + 1)?,
                c_start: c,
                c_end,
                h_start: h_at_boundary(p, c, Horizon::Plus),
                h_end: h_at_boundary(p, c_end, Horizon::Minus),
                copy_index: k,
                forcing_constant: Some(g.forcing_constant),
            });
            c = c_end;
        } else {
            let k = (j / 2 + 1) as i64;
            let g = prop2_curve(p, c)?;
            let c_end = g.end_value()?;
            for i in 0..count {
                let th = std::f64::consts::PI * i as f64 / n as f64;
                let r = if i == 0 {
                    p.r_minus
                } else if i == n {
                    p.r_plus
                } else {
                    radius(th)
                };
                let y = if i == 0 {
                    c
                } else if i == n {
                    c_end
                } else {
                    g.y(r)?
                };
                points.push((r, y, true, k, j as f64 + i as f64 / n as f64));
            }
            chain.push(ChainSegment {
                curve: g.curve(n + 1)?,
                c_start: c,
                c_end,
                h_start: h_at_boundary(p, c, Horizon::Minus),
                h_end: h_at_boundary(p, c_end, Horizon::Plus),
                copy_index: k,
                forcing_constant: None,
            });
            c = c_end;
        }
    }
    let positive: Vec<Leaf> = points
        .par_iter()
        .map(|&(r, y, primed, k, pos)| {
            let rad = r * p.radicand(r).max(0.0).sqrt();
            let h = if primed {
                (y + rad) / r.powi(3)
            } else {
                (y - rad) / r.powi(3)
            };
            let spec = throat_spec(p, h, r, primed, k)?;
            Ok(Leaf::new(pos, (r, y), embed_slice(p, &spec, opts)?))
        })
        .collect::<Result<_>>()?;
    let mut leaves: Vec<Leaf> = positive[1..]
        .iter()
        .rev()
        .map(|l| {
            Leaf::new(
                -l.parameter,
                (l.curve_point.0, -l.curve_point.1),
                reflect_time(&l.slice),
            )
        })
        .collect();
    leaves.extend(positive);
    Ok(VariedFoliation {
        segments: chain,
        leaves,
    })
}
