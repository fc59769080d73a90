//! The initial-value problem through a diagram point and the symmetric
//! Dirichlet problem, solved by first-integral inversion and shooting.

use serde::{Deserialize, Serialize};

use crate::atlas::{
    chart_derivatives, embed_slice, penrose_to_block, BlockAddress, BlockPoint, DiagramPoint,
    EmbedOptions, EmbeddedSlice, Region,
};
use crate::error::{Error, Result};
use crate::foliation::FixedHLoop;
use crate::slice::{recover_c, Branch, Placement, ProfileSample, Side, SliceSpec};
use crate::spacetime::SpacetimeParams;

/// A point of the diagram with the slope `dT/dX` of the slice through it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IvpData {
    #[serde(rename = "H")]
    pub h: f64,
    pub point: DiagramPoint,
    #[serde(rename = "V")]
    pub slope: f64,
}

/// Diagram slope `dT/dX` of a curve `t = f(r)` with slope `f'` at `(t, r)` in `block`.
pub fn diagram_slope(p: &SpacetimeParams, block: BlockAddress, t: f64, r: f64, fprime: f64) -> f64 {
    let rs = p.tortoise_unchecked(r);
    let (a, b) = chart_derivatives(p, block, t - rs, t + rs);
    let g = 1.0 / p.h(r);
    if fprime.abs() > 1.0 {
        let k = g / fprime;
        (a * (1.0 - k) + b * (1.0 + k)) / (b * (1.0 + k) - a * (1.0 - k))
    } else {
        (a * (fprime - g) + b * (fprime + g)) / (b * (fprime + g) - a * (fprime - g))
    }
}

/// Inverse of [`diagram_slope`]: the block slope `f'` of a diagram slope `V`.
pub fn block_slope(p: &SpacetimeParams, block: BlockAddress, t: f64, r: f64, slope: f64) -> f64 {
    let rs = p.tortoise_unchecked(r);
    let (a, b) = chart_derivatives(p, block, t - rs, t + rs);
    let g = 1.0 / p.h(r);
    -g * (b * (slope - 1.0) + a * (slope + 1.0)) / (b * (slope - 1.0) - a * (slope + 1.0))
}

/// Orientation sign of a slice with slope `f'` in `block`.
pub fn datum_epsilon(block: BlockAddress, fprime: f64) -> f64 {
    match block.region {
        Region::II => fprime.signum(),
        Region::IIPrime => -fprime.signum(),
        r => r.static_orientation().unwrap_or(1.0),
    }
}

/// Block coordinates, slope and constants of an IVP datum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolvedDatum {
    pub at: BlockPoint,
    pub fprime: f64,
    pub eps: f64,
    pub c: f64,
}

pub fn resolve_datum(p: &SpacetimeParams, data: &IvpData) -> Result<ResolvedDatum> {
    if !data.h.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "H must be finite, got {}",
            data.h
        )));
    }
    if !(data.slope.abs() < 1.0) {
        return Err(Error::SpacelikeViolated(format!(
            "|V| = {} is not below 1",
            data.slope.abs()
        )));
    }
    let at = penrose_to_block(p, data.point)?;
    if p.near_horizon(at.r) {
        return Err(Error::OnHorizonDatum(format!(
            "r = {} in {}",
            at.r, at.block
        )));
    }
    let fprime = block_slope(p, at.block, at.t, at.r, data.slope);
    if !fprime.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "slope V = {} is tangent to r = {} (a cylinder)",
            data.slope, at.r
        )));
    }
    let eps = datum_epsilon(at.block, fprime);
    let c = recover_c(p, data.h, at.r, fprime, eps)?;
    Ok(ResolvedDatum { at, fprime, eps, c })
}

fn candidates(p: &SpacetimeParams, h: f64, c: f64) -> Vec<SliceSpec> {
    let mut out: Vec<SliceSpec> = Vec::new();
    for primed in [false, true] {
        let Ok(base) = SliceSpec::new(p, h, c).and_then(|s| s.with_primed(p, primed)) else {
            continue;
        };
        for side in [Side::Outer, Side::Inner] {
            for branch in [Branch::PositiveSlope, Branch::NegativeSlope] {
                let spec = base
                    .clone()
                    .with_side(side)
                    .with_branch(branch)
                    .with_placement(Placement::Offset(0.0));
                if !out.contains(&spec) {
                    out.push(spec);
                }
            }
        }
    }
    out
}

/// The unique slice with mean curvature `H` through `point` with diagram slope `V`.
pub fn solve_ivp(
    p: &SpacetimeParams,
    data: &IvpData,
    opts: &EmbedOptions,
) -> Result<EmbeddedSlice> {
    let d = resolve_datum(p, data)?;
    let (h, c) = (data.h, d.c);
    for spec in candidates(p, h, c) {
        let Ok(trial) = embed_slice(p, &spec, opts) else {
            continue;
        };
        let Some(prof) = trial.profiles.iter().find(|pr| {
            pr.piece.block.region == d.at.block.region && pr.piece.eps == d.eps && pr.covers(d.at.r)
        }) else {
            continue;
        };
        let shift = d.at.block.copy_index - prof.piece.block.copy_index;
        let (t, _, _) = prof.value_at(p, h, c, d.at.r, &opts.quadrature)?;
        let tau = d.at.t - t;
        let k = spec.copy_index + shift;
        let spec = spec.with_copy(k).with_placement(Placement::Offset(tau));
        return embed_slice(p, &spec, opts);
    }
    Err(Error::EmptyDomain(format!(
        "no slice with H = {h}, c = {c} passes through r = {} in {}",
        d.at.r, d.at.block
    )))
}

/// Datum read off a profile sample of an embedded slice.
pub fn datum_at(
    p: &SpacetimeParams,
    h: f64,
    block: BlockAddress,
    sample: &ProfileSample,
) -> Result<IvpData> {
    let rs = p.tortoise_unchecked(sample.r);
    let point = crate::atlas::chart_uv(p, block, sample.t - rs, sample.t + rs);
    Ok(IvpData {
        h,
        point,
        slope: diagram_slope(p, block, sample.t, sample.r, sample.fprime),
    })
}

/// Largest distance between two sampled curves: pointwise when they share a
/// sampling, otherwise the vertical gap over the common `X` range.
pub fn sup_distance(a: &crate::atlas::PenrosePolyline, b: &crate::atlas::PenrosePolyline) -> f64 {
    if a.len() == b.len() {
        return a
            .samples
            .iter()
            .zip(&b.samples)
            .map(|(x, y)| (x.time - y.time).hypot(x.space - y.space))
            .fold(0.0, f64::max);
    }
    let gap = |u: &crate::atlas::PenrosePolyline, v: &crate::atlas::PenrosePolyline| {
        u.samples
            .iter()
            .filter_map(|pt| Some((pt.time - v.time_at(pt.space)?).abs()))
            .fold(0.0, f64::max)
    };
    gap(a, b).max(gap(b, a))
}

/// Settings of the shooting method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirichletOptions {
    /// Loop-parameter bracket; found by scanning when absent.
    pub bracket: Option<(f64, f64)>,
    pub parameter_tol: f64,
    pub miss_tol: f64,
    pub max_iterations: usize,
    /// Scan points per loop period when searching for a bracket.
    pub scan: usize,
}

impl Default for DirichletOptions {
    fn default() -> Self {
        Self {
            bracket: None,
            parameter_tol: 1e-10,
            miss_tol: 1e-8,
            max_iterations: 200,
            scan: 24,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirichletSolution {
    pub slice: EmbeddedSlice,
    /// Converged loop parameter of the axisymmetric family.
    pub parameter: f64,
    pub iterations: usize,
    /// `T(X0) - T0` of the returned slice.
    pub miss: f64,
}

/// The symmetric slice with mean curvature `H` through `(T0, ±X0)`, by
/// bisection on the loop parameter of the axisymmetric family.
pub fn solve_dirichlet(
    p: &SpacetimeParams,
    h: f64,
    t0: f64,
    x0: f64,
    opts: &DirichletOptions,
    embed: &EmbedOptions,
) -> Result<DirichletSolution> {
    if !(x0 > 0.0) || !x0.is_finite() || !t0.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "need finite T0 and X0 > 0, got ({t0}, {x0})"
        )));
    }
    penrose_to_block(
        p,
        DiagramPoint {
            time: t0,
            space: x0,
        },
    )?;
    let family = FixedHLoop::new(p, h)?;
    let miss = |s: f64| -> Result<Option<(f64, EmbeddedSlice)>> {
        let slice = family.embedded(s, embed)?;
        Ok(slice
            .time_at_exact(p, x0, &embed.quadrature)?
            .map(|t| (t - t0, slice)))
    };
    let mut refine_steps = 0;
    let (mut lo, mut hi, mut m_lo, mut m_hi) = match opts.bracket {
        Some((a, b)) => {
            let ma = miss(a)?.ok_or_else(|| no_reach(a, x0))?.0;
            let mb = miss(b)?.ok_or_else(|| no_reach(b, x0))?.0;
            if ma > 0.0 || mb < 0.0 {
                return Err(Error::NoConvergence(format!(
                    "bracket [{a}, {b}] gives misses {ma} and {mb}"
                )));
            }
            (a, b, ma, mb)
        }
        None => {
            let (found, steps) = scan_bracket(t0, opts.scan.max(4), opts.max_iterations, &miss)?;
            refine_steps = steps;
            found
        }
    };
    let mut best = if m_lo.abs() < m_hi.abs() { lo } else { hi };
    let mut iterations = refine_steps;
    while iterations < opts.max_iterations && hi - lo > opts.parameter_tol {
        let mid = 0.5 * (lo + hi);
        iterations += 1;
        let m = miss(mid)?
            .ok_or_else(|| Error::NoConvergence(format!("leaf {mid} does not reach X = {x0}")))?
            .0;
        if m.abs() < m_lo.abs().min(m_hi.abs()) {
            best = mid;
        }
        if m == 0.0 {
            break;
        }
        if m < 0.0 {
            lo = mid;
            m_lo = m;
        } else {
            hi = mid;
            m_hi = m;
        }
    }
    let (m, slice) = miss(best)?.ok_or_else(|| no_reach(best, x0))?;
    if m.abs() > opts.miss_tol {
        return Err(Error::NoConvergence(format!(
            "miss {m} after {iterations} bisections exceeds {}",
            opts.miss_tol
        )));
    }
    Ok(DirichletSolution {
        slice,
        parameter: best,
        iterations,
        miss: m,
    })
}

fn no_reach(s: f64, x0: f64) -> Error {
    Error::NoConvergence(format!("leaf {s} does not reach X = {x0}"))
}

type MissFn<'a> = dyn Fn(f64) -> Result<Option<(f64, EmbeddedSlice)>> + 'a;

/// Scan three loop periods around the copy containing `T0` for a sign change.
/// Scan the family over three loop periods around `t0` for a sign change
/// of the miss. Leaves reach `X0` only on part of each period, so a scan
/// step that enters or leaves that part is refined by bisecting on reach.
/// Returns the bracket and the number of refinement steps.
fn scan_bracket(
    t0: f64,
    per_period: usize,
    max_steps: usize,
    miss: &MissFn<'_>,
) -> Result<((f64, f64, f64, f64), usize)> {
    let k0 = (0.5 * t0).round();
    let n = 3 * per_period;
    let mut steps = 0;
    let mut prev: Option<(f64, Option<f64>)> = None;
    for i in 0..=n {
        let s = k0 - 1.0 + i as f64 / per_period as f64;
        let m = miss(s)?.map(|(m, _)| m);
        if let Some((sa, ma)) = prev {
            match (ma, m) {
                (Some(ma), Some(mb)) if ma <= 0.0 && mb >= 0.0 => {
                    return Ok(((sa, s, ma, mb), steps))
                }
                (None, Some(mb)) if mb > 0.0 => {
                    if let Some(found) = refine_edge(s, sa, mb, max_steps, &mut steps, miss)? {
                        return Ok((found, steps));
                    }
                }
                (Some(ma), None) if ma < 0.0 => {
                    if let Some(found) = refine_edge(sa, s, ma, max_steps, &mut steps, miss)? {
                        return Ok((found, steps));
                    }
                }
                _ => {}
            }
        }
        prev = Some((s, m));
    }
    Err(Error::NoConvergence(format!(
        "no sign change of the miss function for T0 = {t0} over loop periods {} to {}",
        k0 - 1.0,
        k0 + 2.0
    )))
}

/// Bisect between a reaching leaf `inside` (miss `m_in`) and a leaf `outside`
/// that misses `X0`, looking for a reaching leaf whose miss has the other sign.
fn refine_edge(
    mut inside: f64,
    mut outside: f64,
    mut m_in: f64,
    max_steps: usize,
    steps: &mut usize,
    miss: &MissFn<'_>,
) -> Result<Option<(f64, f64, f64, f64)>> {
    let sign = m_in.signum();
    while *steps < max_steps && (inside - outside).abs() > 1e-15 * inside.abs().max(1.0) {
        *steps += 1;
        let mid = 0.5 * (inside + outside);
        match miss(mid)?.map(|(m, _)| m) {
            None => outside = mid,
            Some(m) if m * sign <= 0.0 => {
                let (a, b, ma, mb) = if sign > 0.0 {
                    (mid, inside, m, m_in)
                } else {
                    (inside, mid, m_in, m)
                };
                return Ok(Some((a.min(b), a.max(b), ma, mb)));
            }
            Some(m) => {
                inside = mid;
                m_in = m;
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rn() -> SpacetimeParams {
        SpacetimeParams::new(1.0, 0.6).unwrap()
    }

    #[test]
    fn slope_conversion_round_trip() {
        let p = rn();
        for (region, r) in [
            (Region::I, 3.0),
            (Region::II, 1.2),
            (Region::IIIPrime, 0.1),
            (Region::IPrime, 2.5),
        ] {
            let block = BlockAddress::new(0, region);
            for fp in [-3.0, -0.2, 0.0, 0.7, 40.0] {
                let v = diagram_slope(&p, block, 0.4, r, fp);
                let back = block_slope(&p, block, 0.4, r, v);
                assert!(
                    (back - fp).abs() < 1e-9 * (1.0 + fp.abs()),
                    "{region:?} {fp} {back}"
                );
            }
        }
    }

    #[test]
    fn static_maximal_datum() {
        let p = rn();
        let data = IvpData {
            h: 0.0,
            point: DiagramPoint {
                time: 0.0,
                space: 0.4,
            },
            slope: 0.0,
        };
        let s = solve_ivp(&p, &data, &EmbedOptions::default()).unwrap();
        assert!(s.spec.c.abs() < 1e-12);
        for pt in &s.polyline.samples {
            assert!(pt.time.abs() < 1e-9, "{pt:?}");
        }
    }

    #[test]
    fn null_datum_rejected() {
        let p = rn();
        let data = IvpData {
            h: 0.0,
            point: DiagramPoint {
                time: 0.0,
                space: 0.4,
            },
            slope: 1.0,
        };
        assert!(matches!(
            solve_ivp(&p, &data, &EmbedOptions::default()),
            Err(Error::SpacelikeViolated(_))
        ));
        let edge = IvpData {
            point: DiagramPoint {
                time: 0.25,
                space: 0.25,
            },
            slope: 0.0,
            ..data
        };
        assert!(matches!(
            solve_ivp(&p, &edge, &EmbedOptions::default()),
            Err(Error::OnHorizonDatum(_))
        ));
    }

    #[test]
    fn recovers_constant_of_embedded_slice() {
        let p = rn();
        let spec = SliceSpec::new(&p, 0.2, 0.3)
            .unwrap()
            .with_placement(Placement::Offset(0.7));
        let e = embed_slice(&p, &spec, &EmbedOptions::default()).unwrap();
        let prof = &e.profiles[1];
        let data = datum_at(&p, 0.2, prof.piece.block, &prof.samples[20]).unwrap();
        let s = solve_ivp(&p, &data, &EmbedOptions::default()).unwrap();
        assert!((s.spec.c - 0.3).abs() < 1e-8, "{}", s.spec.c);
        assert!(sup_distance(&s.polyline, &e.polyline) < 1e-6);
    }

    #[test]
    fn dirichlet_maximal_through_axis() {
        let p = rn();
        let sol = solve_dirichlet(
            &p,
            0.0,
            0.0,
            0.6,
            &DirichletOptions::default(),
            &EmbedOptions::default(),
        )
        .unwrap();
        assert!(sol.miss.abs() < 1e-8);
        assert!(sol.slice.spec.c.abs() < 1e-6);
        assert!(sol.slice.polyline.symmetry_residual() < 1e-6);
    }
}
