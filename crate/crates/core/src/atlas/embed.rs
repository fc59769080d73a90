//! Gluing slice profiles across horizons and mapping them into the diagram.

use serde::{Deserialize, Serialize};

use super::block::{BlockAddress, Null, Region};
use super::chart::{chart_uv, DiagramPoint};
use crate::error::{Error, Result};
use crate::quadrature::QuadratureOptions;
use crate::slice::profile::{integrate_piece, split_radius, BIFURCATION_TOLERANCE};
use crate::slice::{
    critical_points, first_integral, slice_domain, throat_radius, Branch, CaseTag, Coord, EndKind,
    Endpoint, Placement, Profile, ProfilePiece, ProfileSample, Side, SliceSpec,
};
use crate::spacetime::SpacetimeParams;

/// Sampling and quadrature settings used when embedding slices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmbedOptions {
    pub samples_per_piece: usize,
    pub cylinder_samples: usize,
    pub quadrature: QuadratureOptions,
}

impl Default for EmbedOptions {
    fn default() -> Self {
        Self {
            samples_per_piece: 48,
            cylinder_samples: 97,
            quadrature: QuadratureOptions::default(),
        }
    }
}

/// Sampled image of a slice in the diagram.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PenrosePolyline {
    pub samples: Vec<DiagramPoint>,
    pub block_tags: Vec<BlockAddress>,
    pub r_values: Vec<f64>,
}

impl PenrosePolyline {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    fn push(&mut self, point: DiagramPoint, block: BlockAddress, r: f64) {
        if let Some(last) = self.samples.last() {
            if (last.time - point.time).abs() < 1e-15 && (last.space - point.space).abs() < 1e-15 {
                return;
            }
        }
        self.samples.push(point);
        self.block_tags.push(block);
        self.r_values.push(r);
    }

    fn reverse(&mut self) {
        self.samples.reverse();
        self.block_tags.reverse();
        self.r_values.reverse();
    }

    /// Range of `X` covered.
    pub fn x_range(&self) -> (f64, f64) {
        let first = self.samples.first().map_or(0.0, |s| s.space);
        let last = self.samples.last().map_or(0.0, |s| s.space);
        (first.min(last), first.max(last))
    }

    /// Linear interpolation of `T` at `x`; `None` outside the sampled range.
    pub fn time_at(&self, x: f64) -> Option<f64> {
        let s = &self.samples;
        if s.is_empty() || x < s[0].space || x > s[s.len() - 1].space {
            return None;
        }
        let i = s.partition_point(|pt| pt.space < x);
        if i == 0 {
            return Some(s[0].time);
        }
        let (a, b) = (s[i - 1], s[i]);
        if b.space == a.space {
            return Some(a.time);
        }
        let w = (x - a.space) / (b.space - a.space);
        Some(a.time + w * (b.time - a.time))
    }

    /// `T` where the curve meets the axis `X = 0`.
    pub fn intercept(&self) -> Option<f64> {
        self.time_at(0.0)
    }

    /// Largest `|T(X) - T(-X)|` over the sampled abscissae.
    pub fn symmetry_residual(&self) -> f64 {
        self.samples
            .iter()
            .filter_map(|pt| Some((pt.time - self.time_at(-pt.space)?).abs()))
            .fold(0.0, f64::max)
    }

    /// Largest `|ΔT/ΔX|` between consecutive samples in the same block.
    pub fn max_slope(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 1..self.samples.len() {
            if self.block_tags[i] != self.block_tags[i - 1] {
                continue;
            }
            let (a, b) = (self.samples[i - 1], self.samples[i]);
            let dx = b.space - a.space;
            if dx.abs() < 1e-13 {
                continue;
            }
            m = m.max(((b.time - a.time) / dx).abs());
        }
        m
    }

    fn reflect_time(&mut self) {
        for pt in &mut self.samples {
            pt.time = -pt.time;
        }
        for b in &mut self.block_tags {
            *b = b.mirror_t();
        }
    }
}

/// A slice with its integrated profiles (in curve order) and diagram image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddedSlice {
    pub spec: SliceSpec,
    pub profiles: Vec<Profile>,
    pub polyline: PenrosePolyline,
}

impl EmbeddedSlice {
    /// `(t, u, v)` at radius `r` in `block`, evaluated on the profile covering it.
    pub fn value_at(
        &self,
        p: &SpacetimeParams,
        block: BlockAddress,
        r: f64,
        opts: &QuadratureOptions,
    ) -> Result<(f64, f64, f64)> {
        let prof = self
            .profiles
            .iter()
            .find(|pr| pr.piece.block == block && pr.covers(r))
            .ok_or_else(|| {
                Error::OutOfBlockRange(format!("slice has no point at r = {r} in {block}"))
            })?;
        prof.value_at(p, self.spec.h, self.spec.c, r, opts)
    }

    /// Diagram point at radius `r` in `block`.
    pub fn point_at(
        &self,
        p: &SpacetimeParams,
        block: BlockAddress,
        r: f64,
        opts: &QuadratureOptions,
    ) -> Result<DiagramPoint> {
        let (_, u, v) = self.value_at(p, block, r, opts)?;
        Ok(chart_uv(p, block, u, v))
    }

    /// `(t, u, v)` at radius `r` on the portion of the slice in `block` with orientation `eps`.
    pub fn value_on(
        &self,
        p: &SpacetimeParams,
        block: BlockAddress,
        eps: f64,
        r: f64,
        opts: &QuadratureOptions,
    ) -> Result<(f64, f64, f64)> {
        let prof = self
            .profiles
            .iter()
            .find(|pr| pr.piece.block == block && pr.piece.eps == eps && pr.covers(r))
            .ok_or_else(|| {
                Error::OutOfBlockRange(format!(
                    "slice has no point at r = {r} in {block} with eps = {eps}"
                ))
            })?;
        prof.value_at(p, self.spec.h, self.spec.c, r, opts)
    }

    /// `T` where the slice crosses the vertical line `X = x`, located on the
    /// sampled polyline and refined by bisection on the integrated profile.
    /// `None` when the slice does not reach `x`.
    pub fn time_at_exact(
        &self,
        p: &SpacetimeParams,
        x: f64,
        opts: &QuadratureOptions,
    ) -> Result<Option<f64>> {
        let (h, c) = (self.spec.h, self.spec.c);
        for prof in &self.profiles {
            let block = prof.piece.block;
            let n = prof.samples.len();
            let xs: Vec<f64> = prof
                .samples
                .iter()
                .map(|s| chart_uv(p, block, s.u, s.v).space)
                .collect();
            let Some(i) = (0..n - 1).find(|&i| (xs[i] - x) * (xs[i + 1] - x) <= 0.0) else {
                continue;
            };
            if self.spec.is_cylinder() {
                let rs = p.tortoise_unchecked(prof.samples[i].r);
                let at = |t: f64| chart_uv(p, block, t - rs, t + rs);
                let (mut lo, mut hi) = (prof.samples[i].t, prof.samples[i + 1].t);
                let lo_x = at(lo).space;
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo.min(hi) || mid >= lo.max(hi) {
                        break;
                    }
                    if (at(mid).space - x) * (lo_x - x) > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                return Ok(Some(at(0.5 * (lo + hi)).time));
            }
            let forward = prof.samples[0].r == prof.piece.start.r;
            let param = |j: usize| {
                let j = if forward { j } else { n - 1 - j };
                j as f64 / (n - 1) as f64
            };
            let point = |y: f64| -> Result<DiagramPoint> {
                let (_, _, u, v) = prof.value_at_param(p, h, c, y, opts)?;
                Ok(chart_uv(p, block, u, v))
            };
            let (mut lo, mut hi) = (param(i), param(i + 1));
            let lo_x = xs[i];
            if lo_x == x {
                return Ok(Some(
                    chart_uv(p, block, prof.samples[i].u, prof.samples[i].v).time,
                ));
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo.min(hi) || mid >= lo.max(hi) {
                    break;
                }
                if (point(mid)?.space - x) * (lo_x - x) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Ok(Some(point(0.5 * (lo + hi))?.time));
        }
        Ok(None)
    }

    pub fn region_path(&self) -> Vec<BlockAddress> {
        let mut path: Vec<BlockAddress> = Vec::new();
        for b in &self.polyline.block_tags {
            if path.last() != Some(b) {
                path.push(*b);
            }
        }
        path
    }
}

#[derive(Debug, Clone, Copy)]
struct TraceState {
    block: BlockAddress,
    start: Endpoint,
    value: (Coord, f64),
    eps: f64,
    dr: f64,
}

const MAX_PIECES: usize = 24;

fn end_in_block(p: &SpacetimeParams, h: f64, c: f64, st: &TraceState) -> Result<Endpoint> {
    let r = st.start.r;
    let horizon = |rh: f64| {
        if first_integral(h, c, rh).abs() < BIFURCATION_TOLERANCE {
            Endpoint::new(rh, EndKind::Bifurcation)
        } else {
            Endpoint::new(rh, EndKind::Horizon)
        }
    };
    match st.block.region {
        Region::I | Region::IPrime => Ok(if st.dr < 0.0 {
            horizon(p.r_plus)
        } else if st.start.kind == EndKind::Interior
            && r >= p.r_plus + 2.0 * p.mass
            && st.value.0 == Coord::T
        {
            Endpoint::new(f64::INFINITY, EndKind::Infinity)
        } else {
            Endpoint::new(split_radius(p, r), EndKind::Interior)
        }),
        Region::III | Region::IIIPrime => Ok(if st.dr < 0.0 {
            Endpoint::new(0.0, EndKind::Singularity)
        } else {
            horizon(p.r_minus)
        }),
        Region::II | Region::IIPrime => {
            let intervals = slice_domain(p, h, c, st.block.region)?;
            let slack = 1e-12 * p.mass;
            let iv = intervals
                .iter()
                .find(|iv| {
                    let (lo, hi) = (iv.lo.r, iv.hi.r);
                    if st.dr > 0.0 {
                        r >= lo - slack && r < hi
                    } else {
                        r > lo && r <= hi + slack
                    }
                })
                .ok_or_else(|| {
                    Error::SpacelikeViolated(format!(
                        "r = {r} is outside every admissible interval in {}",
                        st.block
                    ))
                })?;
            Ok(if st.dr > 0.0 { iv.hi } else { iv.lo })
        }
    }
}

struct HalfTrace {
    profiles: Vec<Profile>,
    corner: Option<(BlockAddress, f64, f64)>,
}

fn trace_half(
    p: &SpacetimeParams,
    h: f64,
    c: f64,
    mut st: TraceState,
    opts: &EmbedOptions,
) -> Result<HalfTrace> {
    let mut profiles = Vec::new();
    for _ in 0..MAX_PIECES {
        let end = end_in_block(p, h, c, &st)?;
        let piece = ProfilePiece {
            block: st.block,
            eps: st.eps,
            start: st.start,
            end,
        };
        let prof = integrate_piece(
            p,
            h,
            c,
            piece,
            st.value,
            opts.samples_per_piece,
            &opts.quadrature,
        )?;
        let last = *prof.last();
        let coord = prof.coord;
        profiles.push(prof);
        match end.kind {
            EndKind::Throat => {
                st = TraceState {
                    start: end,
                    value: (Coord::T, last.t),
                    eps: -st.eps,
                    dr: -st.dr,
                    ..st
                };
            }
            EndKind::Interior => {
                st = TraceState {
                    start: end,
                    value: (Coord::T, last.t),
                    ..st
                };
            }
            EndKind::Horizon => {
                let outer = end.r == p.r_plus;
                let (which, sign) = match (coord, outer) {
                    (Coord::V, true) => (Null::U, 1.0),
                    (Coord::U, true) => (Null::V, -1.0),
                    (Coord::V, false) => (Null::U, -1.0),
                    (Coord::U, false) => (Null::V, 1.0),
                    (Coord::T, _) => {
                        return Err(Error::GluingMismatch(format!(
                            "no regular null coordinate at r = {} in {}",
                            end.r, st.block
                        )))
                    }
                };
                let next = st.block.neighbor(which, sign).ok_or_else(|| {
                    Error::GluingMismatch(format!(
                        "{} has no neighbour across r = {}",
                        st.block, end.r
                    ))
                })?;
                let j = first_integral(h, c, end.r);
                let eps = j.signum() * if coord == Coord::V { 1.0 } else { -1.0 };
                if let Some(o) = next.region.static_orientation() {
                    if o != eps {
                        return Err(Error::GluingMismatch(format!(
                            "orientation {eps} does not match block {next}"
                        )));
                    }
                }
                let w = coord.pick(last.t, last.u, last.v);
                st = TraceState {
                    block: next,
                    start: end,
                    value: (coord, w),
                    eps,
                    dr: st.dr,
                };
            }
            EndKind::Bifurcation => {
                let next = st.block.across_bifurcation().ok_or_else(|| {
                    Error::GluingMismatch(format!("{} has no bifurcation sphere", st.block))
                })?;
                st = TraceState {
                    block: next,
                    start: end,
                    value: (Coord::T, last.t),
                    eps: -st.eps,
                    dr: -st.dr,
                };
            }
            EndKind::Tangency => {
                let sign = (last.fprime * st.dr).signum();
                let t = sign * f64::INFINITY;
                return Ok(HalfTrace {
                    profiles,
                    corner: Some((st.block, end.r, t)),
                });
            }
            EndKind::Infinity | EndKind::Singularity => {
                return Ok(HalfTrace {
                    profiles,
                    corner: None,
                });
            }
        }
    }
    Err(Error::GluingMismatch(format!(
        "trace exceeded {MAX_PIECES} pieces"
    )))
}

fn reverse_profile(mut prof: Profile) -> Profile {
    prof.samples.reverse();
    prof
}

fn corner_sample(r: f64, t: f64) -> ProfileSample {
    ProfileSample {
        r,
        t,
        u: t,
        v: t,
        fprime: t,
        l_value: None,
    }
}

/// Assemble two half traces sharing their first point into one curve.
fn assemble(p: &SpacetimeParams, spec: SliceSpec, a: HalfTrace, b: HalfTrace) -> EmbeddedSlice {
    let mut profiles: Vec<Profile> = a.profiles.into_iter().rev().map(reverse_profile).collect();
    let mut poly = PenrosePolyline::default();
    let push_corner = |poly: &mut PenrosePolyline, corner: Option<(BlockAddress, f64, f64)>| {
        if let Some((block, r, t)) = corner {
            poly.push(chart_uv(p, block, t, t), block, r);
        }
    };
    push_corner(&mut poly, a.corner);
    profiles.extend(b.profiles);
    for prof in &profiles {
        for s in &prof.samples {
            poly.push(
                chart_uv(p, prof.piece.block, s.u, s.v),
                prof.piece.block,
                s.r,
            );
        }
    }
    push_corner(&mut poly, b.corner);
    if poly.samples.len() > 1 && poly.samples[0].space > poly.samples[poly.len() - 1].space {
        poly.reverse();
    }
    let mut spec = spec;
    let mut out = EmbeddedSlice {
        spec: spec.clone(),
        profiles,
        polyline: poly,
    };
    spec.region_path = out.region_path();
    out.spec = spec;
    out
}

fn offset_of(spec: &SliceSpec) -> f64 {
    match spec.placement {
        Placement::Offset(x) => x,
        Placement::Axisymmetric => 0.0,
    }
}

fn cylinder(p: &SpacetimeParams, spec: SliceSpec, opts: &EmbedOptions) -> Result<EmbeddedSlice> {
    let r0 = spec
        .cylinder
        .ok_or_else(|| Error::InvalidParameter("cylinder radius missing".into()))?;
    let block = BlockAddress::new(spec.copy_index, Region::II);
    let shift = offset_of(&spec);
    let n = opts.cylinder_samples.max(3);
    let span = 200.0f64.asinh();
    let rs = p.tortoise_unchecked(r0);
    let mut samples = Vec::with_capacity(n + 2);
    samples.push(corner_sample(r0, f64::NEG_INFINITY));
    for i in 0..n {
        let s = -span + 2.0 * span * i as f64 / (n - 1) as f64;
        let t = s.sinh() + shift;
        samples.push(ProfileSample {
            r: r0,
            t,
            u: t - rs,
            v: t + rs,
            fprime: f64::INFINITY,
            l_value: None,
        });
    }
    samples.push(corner_sample(r0, f64::INFINITY));
    let mut poly = PenrosePolyline::default();
    for s in &samples {
        poly.push(chart_uv(p, block, s.u, s.v), block, r0);
    }
    let piece = ProfilePiece {
        block,
        eps: 1.0,
        start: Endpoint::new(r0, EndKind::Tangency),
        end: Endpoint::new(r0, EndKind::Tangency),
    };
    let mut spec = spec;
    spec.region_path = vec![block];
    Ok(EmbeddedSlice {
        spec,
        profiles: vec![Profile {
            piece,
            coord: Coord::T,
            samples,
        }],
        polyline: poly,
    })
}

fn embed_unprimed(
    p: &SpacetimeParams,
    spec: SliceSpec,
    opts: &EmbedOptions,
) -> Result<EmbeddedSlice> {
    let (h, c) = (spec.h, spec.c);
    let k = spec.copy_index;
    let ii = BlockAddress::new(k, Region::II);
    let t0 = offset_of(&spec);
    let state = |block: BlockAddress, start: Endpoint, eps: f64, dr: f64| TraceState {
        block,
        start,
        value: (Coord::T, t0),
        eps,
        dr,
    };
    let cp = critical_points(p, h)?;
    let (sa, sb) = match spec.case_tag {
        CaseTag::D => return cylinder(p, spec, opts),
        CaseTag::A => {
            let roots = throat_radius(p, h, c)?;
            let r0 = match spec.side {
                Side::Inner => roots.iter().copied().find(|&r| r < cp.r_big),
                Side::Outer => roots.iter().copied().find(|&r| r > cp.r_big),
            }
            .ok_or_else(|| Error::EmptyDomain(format!("no {:?} throat for c = {c}", spec.side)))?;
            if spec.side == Side::Outer
                && first_integral(h, c, p.r_plus).abs() < BIFURCATION_TOLERANCE
            {
                let e = Endpoint::new(p.r_plus, EndKind::Bifurcation);
                (
                    state(BlockAddress::new(k, Region::IPrime), e, -1.0, 1.0),
                    state(BlockAddress::new(k, Region::I), e, 1.0, 1.0),
                )
            } else if spec.side == Side::Inner
                && !p.is_uncharged()
                && first_integral(h, c, p.r_minus).abs() < BIFURCATION_TOLERANCE
            {
                let e = Endpoint::new(p.r_minus, EndKind::Bifurcation);
                (
                    state(BlockAddress::new(k, Region::III), e, 1.0, -1.0),
                    state(BlockAddress::new(k, Region::IIIPrime), e, -1.0, -1.0),
                )
            } else {
                let e = Endpoint::new(r0, EndKind::Throat);
                let dr = if r0 > cp.r_big { 1.0 } else { -1.0 };
                (state(ii, e, -1.0, dr), state(ii, e, 1.0, dr))
            }
        }
        CaseTag::B => {
            let (lo, hi) = match spec.side {
                Side::Inner => (p.r_minus, cp.r_big),
                Side::Outer => (cp.r_big, p.r_plus),
            };
            let e = Endpoint::new(0.5 * (lo + hi), EndKind::Interior);
            let eps = spec.branch.sign();
            (state(ii, e, eps, -1.0), state(ii, e, eps, 1.0))
        }
        CaseTag::C => {
            let e = Endpoint::new(cp.r_big, EndKind::Interior);
            let eps = spec.branch.sign();
            (state(ii, e, eps, -1.0), state(ii, e, eps, 1.0))
        }
    };
    let a = trace_half(p, h, c, sa, opts)?;
    let b = trace_half(p, h, c, sb, opts)?;
    Ok(assemble(p, spec, a, b))
}

/// Mirror image under `T → -T`: primed and unprimed sheets are exchanged.
pub fn reflect_time(slice: &EmbeddedSlice) -> EmbeddedSlice {
    let mut out = slice.clone();
    let spec = &mut out.spec;
    spec.h = -spec.h;
    spec.c = -spec.c;
    spec.primed = !spec.primed;
    spec.copy_index = -spec.copy_index;
    spec.branch = match spec.branch {
        Branch::PositiveSlope => Branch::NegativeSlope,
        Branch::NegativeSlope => Branch::PositiveSlope,
    };
    if let Placement::Offset(x) = spec.placement {
        spec.placement = Placement::Offset(-x);
    }
    for prof in &mut out.profiles {
        prof.piece.block = prof.piece.block.mirror_t();
        prof.coord = match prof.coord {
            Coord::T => Coord::T,
            Coord::U => Coord::V,
            Coord::V => Coord::U,
        };
        for s in &mut prof.samples {
            let (t, u, v) = (s.t, s.u, s.v);
            s.t = -t;
            s.u = -v;
            s.v = -u;
            s.fprime = -s.fprime;
        }
    }
    out.polyline.reflect_time();
    out.spec.region_path = out.spec.region_path.iter().map(|b| b.mirror_t()).collect();
    out
}

/// Integrate, glue and chart a slice.
pub fn embed_slice(
    p: &SpacetimeParams,
    spec: &SliceSpec,
    opts: &EmbedOptions,
) -> Result<EmbeddedSlice> {
    if !spec.primed {
        return embed_unprimed(p, spec.clone(), opts);
    }
    let mut mirror = spec.clone();
    mirror.h = -spec.h;
    mirror.c = -spec.c;
    mirror.primed = false;
    mirror.copy_index = -spec.copy_index;
    mirror.branch = match spec.branch {
        Branch::PositiveSlope => Branch::NegativeSlope,
        Branch::NegativeSlope => Branch::PositiveSlope,
    };
    if let Placement::Offset(x) = spec.placement {
        mirror.placement = Placement::Offset(-x);
    }
    Ok(reflect_time(&embed_unprimed(p, mirror, opts)?))
}

/// Axisymmetrically placed slice with constants `(H, c)` on the requested sheet and side.
pub fn place_axisymmetric(p: &SpacetimeParams, h: f64, c: f64) -> Result<SliceSpec> {
    let spec = SliceSpec::new(p, h, c)?.with_placement(Placement::Axisymmetric);
    let emb = embed_slice(p, &spec, &EmbedOptions::default())?;
    Ok(emb.spec)
}

/// Slice whose throat (or cylinder) sits at radius `r0` of `II` (or `II'` when primed),
/// placed axisymmetrically in copy `k`.
pub fn throat_spec(
    p: &SpacetimeParams,
    h: f64,
    r0: f64,
    primed: bool,
    k: i64,
) -> Result<SliceSpec> {
    if !(r0 >= p.r_minus && r0 <= p.r_plus) {
        return Err(Error::OutOfDomain {
            r: r0,
            lo: p.r_minus,
            hi: p.r_plus,
        });
    }
    let cp = critical_points(p, h)?;
    let rad = p.radicand(r0).max(0.0).sqrt();
    let c = if primed {
        h * r0.powi(3) - r0 * rad
    } else {
        h * r0.powi(3) + r0 * rad
    };
    let critical = if primed { cp.r_small } else { cp.r_big };
    let side = if r0 < critical {
        Side::Inner
    } else {
        Side::Outer
    };
    Ok(SliceSpec::new(p, h, c)?
        .with_primed(p, primed)?
        .with_copy(k)
        .with_side(side))
}
