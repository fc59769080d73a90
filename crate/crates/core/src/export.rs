//! JSON, CSV and SVG output of slices and foliations.

use std::fmt::Write as _;
use std::io;

use serde::{Deserialize, Serialize};

use crate::atlas::{chart_uv, BlockAddress, EmbeddedSlice, Region};
use crate::error::{Error, Result};
use crate::foliation::{FoliationCurve, Leaf};
use crate::spacetime::SpacetimeParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsRecord {
    #[serde(rename = "M")]
    pub mass: f64,
    pub e: f64,
    pub r_minus: f64,
    pub r_plus: f64,
}

impl From<&SpacetimeParams> for ParamsRecord {
    fn from(p: &SpacetimeParams) -> Self {
        Self {
            mass: p.mass,
            e: p.charge,
            r_minus: p.r_minus,
            r_plus: p.r_plus,
        }
    }
}

/// One sample `[T, X, r, block]`; `r` is null at the conformal boundary.
pub type SampleRecord = (f64, f64, Option<f64>, String);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceRecord {
    #[serde(rename = "H")]
    pub h: f64,
    pub c: f64,
    pub case: String,
    pub primed: bool,
    pub copy_index: i64,
    pub region_path: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parameter: Option<f64>,
    pub samples: Vec<SampleRecord>,
}

impl SliceRecord {
    pub fn new(slice: &EmbeddedSlice) -> Self {
        let pl = &slice.polyline;
        let samples = (0..pl.len())
            .map(|i| {
                let r = pl.r_values[i];
                (
                    pl.samples[i].time,
                    pl.samples[i].space,
                    r.is_finite().then_some(r),
                    pl.block_tags[i].to_string(),
                )
            })
            .collect();
        Self {
            h: slice.spec.h,
            c: slice.spec.c,
            case: format!("{:?}", slice.spec.case_tag),
            primed: slice.spec.primed,
            copy_index: slice.spec.copy_index,
            region_path: slice
                .spec
                .region_path
                .iter()
                .map(ToString::to_string)
                .collect(),
            parameter: None,
            samples,
        }
    }

    pub fn from_leaf(leaf: &Leaf) -> Self {
        Self {
            parameter: Some(leaf.parameter),
            ..Self::new(&leaf.slice)
        }
    }
}

/// Everything one invocation writes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportDocument {
    pub params: ParamsRecord,
    pub slices: Vec<SliceRecord>,
    pub curves: Vec<FoliationCurve>,
    #[serde(default, skip_serializing_if = "serde_json::Map::is_empty")]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

impl ExportDocument {
    pub fn new(p: &SpacetimeParams) -> Self {
        Self {
            params: p.into(),
            slices: Vec::new(),
            curves: Vec::new(),
            extra: serde_json::Map::new(),
        }
    }

    pub fn with_slice(mut self, slice: &EmbeddedSlice) -> Self {
        self.slices.push(SliceRecord::new(slice));
        self
    }

    pub fn with_leaves(mut self, leaves: &[Leaf]) -> Self {
        self.slices
            .extend(leaves.iter().map(SliceRecord::from_leaf));
        self
    }

    pub fn with_curve(mut self, curve: FoliationCurve) -> Self {
        self.curves.push(curve);
        self
    }

    pub fn with_extra(mut self, key: &str, value: serde_json::Value) -> Self {
        self.extra.insert(key.to_owned(), value);
        self
    }

    pub fn to_json(&self) -> Result<String> {
        to_json(self)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("T,X,r,block,slice_id\n");
        for (id, s) in self.slices.iter().enumerate() {
            for (t, x, r, block) in &s.samples {
                let r = r.map_or_else(|| "inf".to_owned(), fmt17);
                let _ = writeln!(out, "{},{},{},{},{}", fmt17(*t), fmt17(*x), r, block, id);
            }
        }
        out
    }

    pub fn to_svg(&self, p: &SpacetimeParams) -> String {
        svg(p, self)
    }
}

/// Float with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

struct Digits17;

impl serde_json::ser::Formatter for Digits17 {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(fmt17(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }
}

/// Serialize any value as JSON with every float written to 17 significant digits.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Digits17);
    value
        .serialize(&mut ser)
        .map_err(|e| Error::InvalidParameter(format!("serialization failed: {e}")))?;
    String::from_utf8(buf).map_err(|e| Error::InvalidParameter(e.to_string()))
}

pub fn from_json(s: &str) -> Result<ExportDocument> {
    serde_json::from_str(s).map_err(|e| Error::InvalidParameter(format!("malformed document: {e}")))
}

const PANEL: f64 = 360.0;
const MARGIN: f64 = 20.0;

fn svg(p: &SpacetimeParams, doc: &ExportDocument) -> String {
    let times = doc
        .slices
        .iter()
        .flat_map(|s| s.samples.iter().map(|x| x.0));
    let (lo, hi) = times.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), t| {
        (a.min(t), b.max(t))
    });
    let (lo, hi) = if lo.is_finite() {
        (lo, hi)
    } else {
        (-1.0, 1.0)
    };
    let k_lo = ((lo - 1.0) / 2.0).floor() as i64;
    let k_hi = ((hi + 1.0) / 2.0).ceil() as i64;
    let t_lo = 2.0 * k_lo as f64 - 1.0;
    let t_hi = 2.0 * k_hi as f64 + 1.0;
    let scale = PANEL / 2.0;
    let height = (t_hi - t_lo) * scale + 2.0 * MARGIN;
    let side = !doc.curves.is_empty();
    let width = if side {
        2.0 * PANEL + 3.0 * MARGIN
    } else {
        PANEL + 2.0 * MARGIN
    };
    let px = |t: f64, x: f64| (MARGIN + (x + 1.0) * scale, MARGIN + (t_hi - t) * scale);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {width:.1} {height:.1}" width="{width:.0}" height="{height:.0}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);

    // Block edges: horizons and the conformal boundary are null lines of the cell grid.
    out.push_str(r##"<g stroke="#999" stroke-width="0.8" fill="none">"##);
    out.push('\n');
    for i in (2 * k_lo - 2)..=(2 * k_hi + 2) {
        let i = i as f64;
        for (a, b) in [
            ((i, i), (i + 1.0, i)),
            ((i, i), (i, i + 1.0)),
            ((i, i + 1.0), (i + 1.0, i + 1.0)),
            ((i + 1.0, i), (i + 1.0, i + 1.0)),
        ] {
            let seg = [a, b].map(|(pp, qq)| (0.5 * (pp + qq), 0.5 * (qq - pp)));
            if seg.iter().any(|&(t, _)| t < t_lo - 1e-9 || t > t_hi + 1e-9) {
                continue;
            }
            let (x1, y1) = px(seg[0].0, seg[0].1);
            let (x2, y2) = px(seg[1].0, seg[1].1);
            let _ = writeln!(
                out,
                r#"<line x1="{x1:.3}" y1="{y1:.3}" x2="{x2:.3}" y2="{y2:.3}"/>"#
            );
        }
    }
    out.push_str("</g>\n");

    // r = 0 as a double line.
    if !p.is_uncharged() {
        let rs0 = p.tortoise_unchecked(0.0);
        out.push_str(r##"<g stroke="#000" fill="none" stroke-width="0.7">"##);
        out.push('\n');
        for k in k_lo - 1..=k_hi + 1 {
            for region in [Region::III, Region::IIIPrime] {
                let block = BlockAddress::new(k, region);
                let pts: Vec<(f64, f64)> = (-200..=200)
                    .map(|i| {
                        let t = i as f64 * 0.25;
                        let d = chart_uv(p, block, t - rs0, t + rs0);
                        (d.time, d.space)
                    })
                    .filter(|&(t, _)| t >= t_lo && t <= t_hi)
                    .collect();
                for off in [-1.2, 1.2] {
                    out.push_str(&polyline(pts.iter().map(|&(t, x)| {
                        let (a, b) = px(t, x);
                        (a + off, b)
                    })));
                }
            }
        }
        out.push_str("</g>\n");
    }

    out.push_str(r##"<g stroke="#c0392b" stroke-width="1.2" fill="none">"##);
    out.push('\n');
    for s in &doc.slices {
        out.push_str(&polyline(s.samples.iter().map(|x| px(x.0, x.1))));
    }
    out.push_str("</g>\n");

    if side {
        let (r_lo, r_hi) = (p.r_minus, p.r_plus);
        let cs = doc
            .curves
            .iter()
            .flat_map(|c| c.samples.iter().map(|s| s.1));
        let (c_lo, c_hi) = cs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), c| {
            (a.min(c), b.max(c))
        });
        let span = (c_hi - c_lo).max(1e-12);
        let x0 = PANEL + 2.0 * MARGIN;
        let map = |r: f64, c: f64| {
            (
                x0 + (r - r_lo) / (r_hi - r_lo) * PANEL,
                MARGIN + (c_hi - c) / span * PANEL,
            )
        };
        let _ = writeln!(
            out,
            r##"<rect x="{x0:.3}" y="{MARGIN:.3}" width="{PANEL:.3}" height="{PANEL:.3}" fill="none" stroke="#999"/>"##
        );
        out.push_str(r##"<g stroke="#2c3e50" stroke-width="1.2" fill="none">"##);
        out.push('\n');
        for c in &doc.curves {
            out.push_str(&polyline(c.samples.iter().map(|&(r, c)| map(r, c))));
        }
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    out
}

fn polyline(points: impl Iterator<Item = (f64, f64)>) -> String {
    let mut s = String::from(r#"<polyline points=""#);
    let mut any = false;
    for (x, y) in points {
        if !x.is_finite() || !y.is_finite() {
            continue;
        }
        if any {
            s.push(' ');
        }
        let _ = write!(s, "{x:.3},{y:.3}");
        any = true;
    }
    s.push_str(r#""/>"#);
    s.push('\n');
    if any {
        s
    } else {
        String::new()
    }
}
