//! Global compactified chart `(T, X)` of the maximal extension.
//!
//! Each null coordinate is squashed by a logistic map with rate `κ+`, then
//! blocks are placed in unit squares of the null diagram coordinates `p = T - X`, `q = T + X`.
//! Copy `k` is shifted by `2k` in both `p` and `q`.

use serde::{Deserialize, Serialize};

use super::block::{BlockAddress, Region};
use crate::error::{Error, Result};
use crate::spacetime::SpacetimeParams;

/// Logistic compactification `y ↦ 1 / (1 + exp(-κ y))` of a null coordinate,
/// with `κ` the outer surface gravity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Squash {
    rate: f64,
}

impl Squash {
    pub fn new(p: &SpacetimeParams) -> Self {
        Self { rate: p.kappa_plus }
    }

    pub fn forward(&self, y: f64) -> f64 {
        if y == f64::INFINITY {
            return 1.0;
        }
        if y == f64::NEG_INFINITY {
            return 0.0;
        }
        1.0 / (1.0 + (-self.rate * y).exp())
    }

    /// Derivative of [`Squash::forward`].
    pub fn derivative(&self, y: f64) -> f64 {
        let s = self.forward(y);
        self.rate * s * (1.0 - s)
    }

    pub fn inverse(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return f64::NEG_INFINITY;
        }
        if s >= 1.0 {
            return f64::INFINITY;
        }
        (s / (1.0 - s)).ln() / self.rate
    }
}

/// A point of the compactified diagram.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagramPoint {
    #[serde(rename = "T")]
    pub time: f64,
    #[serde(rename = "X")]
    pub space: f64,
}

impl DiagramPoint {
    pub fn from_null(p: f64, q: f64) -> Self {
        Self {
            time: 0.5 * (p + q),
            space: 0.5 * (q - p),
        }
    }

    pub fn null(&self) -> (f64, f64) {
        (self.time - self.space, self.time + self.space)
    }
}

/// Signs `(σp, σq)` and offsets `(p0, q0)` with `p = σp P(u) + p0`, `q = σq Q(v) + q0`
/// before the copy shift.
fn block_layout(region: Region) -> (f64, f64, f64, f64) {
    match region {
        Region::I => (-1.0, 1.0, 0.0, 0.0),
        Region::IPrime => (1.0, -1.0, 0.0, 0.0),
        Region::II => (1.0, 1.0, 0.0, 0.0),
        Region::IIPrime => (-1.0, -1.0, 0.0, 0.0),
        Region::III => (-1.0, 1.0, 2.0, 0.0),
        Region::IIIPrime => (1.0, -1.0, 0.0, 2.0),
    }
}

/// Chart from block null coordinates `(u, v)`; infinite values land on block edges.
pub fn chart_uv(p: &SpacetimeParams, block: BlockAddress, u: f64, v: f64) -> DiagramPoint {
    let sq = Squash::new(p);
    let (sp, sq_sign, p0, q0) = block_layout(block.region);
    let shift = 2.0 * block.copy_index as f64;
    let pp = sp * sq.forward(-u) + p0 + shift;
    let qq = sq_sign * sq.forward(v) + q0 + shift;
    DiagramPoint::from_null(pp, qq)
}

/// `dp/du` and `dq/dv` of the chart at `(u, v)` in `block`.
pub fn chart_derivatives(p: &SpacetimeParams, block: BlockAddress, u: f64, v: f64) -> (f64, f64) {
    let sq = Squash::new(p);
    let (sp, sq_sign, _, _) = block_layout(block.region);
    let d = |y: f64| sq.derivative(y);
    (-sp * d(-u), sq_sign * d(v))
}

pub fn block_to_penrose(
    p: &SpacetimeParams,
    block: BlockAddress,
    t: f64,
    r: f64,
) -> Result<DiagramPoint> {
    if !t.is_finite() || !block.contains_r(p, r) {
        return Err(Error::OutOfBlockRange(format!(
            "(t = {t}, r = {r}) in {block}"
        )));
    }
    let rs = p.tortoise_unchecked(r);
    Ok(chart_uv(p, block, t - rs, t + rs))
}

/// Block containing a diagram point together with its `(t, r)` coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockPoint {
    pub block: BlockAddress,
    pub t: f64,
    pub r: f64,
}

/// Block of the open unit cell `(i, j) = (⌊p⌋, ⌊q⌋)`.
fn block_of_cell(i: i64, j: i64) -> Option<BlockAddress> {
    let even = |n: i64| n.rem_euclid(2) == 0;
    if i == j {
        Some(if even(i) {
            BlockAddress::new(i / 2, Region::II)
        } else {
            BlockAddress::new((i + 1) / 2, Region::IIPrime)
        })
    } else if j == i + 1 {
        Some(if even(i) {
            BlockAddress::new(i / 2, Region::IIIPrime)
        } else {
            BlockAddress::new((i + 1) / 2, Region::I)
        })
    } else if i == j + 1 {
        Some(if even(j) {
            BlockAddress::new(j / 2, Region::III)
        } else {
            BlockAddress::new((j + 1) / 2, Region::IPrime)
        })
    } else {
        None
    }
}

/// Inverse chart. Fails on block edges and outside the physical region.
pub fn penrose_to_block(p: &SpacetimeParams, point: DiagramPoint) -> Result<BlockPoint> {
    let out = || Error::OutOfBlockRange(format!("(T = {}, X = {})", point.time, point.space));
    let (pp, qq) = point.null();
    if !pp.is_finite() || !qq.is_finite() {
        return Err(out());
    }
    let (i, j) = (pp.floor() as i64, qq.floor() as i64);
    if pp == pp.floor() || qq == qq.floor() {
        return Err(Error::OnHorizonDatum(format!(
            "(T = {}, X = {}) lies on a block edge",
            point.time, point.space
        )));
    }
    let block = block_of_cell(i, j).ok_or_else(out)?;
    let (sp, sq_sign, p0, q0) = block_layout(block.region);
    let shift = 2.0 * block.copy_index as f64;
    let big_p = (pp - p0 - shift) * sp;
    let big_q = (qq - q0 - shift) * sq_sign;
    let sq = Squash::new(p);
    let u = -sq.inverse(big_p);
    let v = sq.inverse(big_q);
    if !u.is_finite() || !v.is_finite() {
        return Err(out());
    }
    let t = 0.5 * (u + v);
    let rs = 0.5 * (v - u);
    let r = match block.region {
        Region::I | Region::IPrime => {
            let hi = p.r_plus + 2.0 * rs.abs() + 100.0 * p.mass;
            p.inverse_tortoise(rs, p.r_plus, hi)
        }
        Region::II | Region::IIPrime => {
            if p.is_uncharged() && rs > p.tortoise_unchecked(0.0) {
                return Err(out());
            }
            p.inverse_tortoise(rs, p.r_minus, p.r_plus)
        }
        Region::III | Region::IIIPrime => {
            if rs < p.tortoise_unchecked(0.0) {
                return Err(out());
            }
            p.inverse_tortoise(rs, 0.0, p.r_minus)
        }
    };
    Ok(BlockPoint { block, t, r })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rn() -> SpacetimeParams {
        SpacetimeParams::new(1.0, 0.6).unwrap()
    }

    fn sample_r(p: &SpacetimeParams, region: Region, x: f64) -> f64 {
        match region {
            Region::I | Region::IPrime => p.r_plus + 0.05 + 20.0 * x,
            Region::II | Region::IIPrime => p.r_minus + (p.r_plus - p.r_minus) * (0.02 + 0.96 * x),
            Region::III | Region::IIIPrime => p.r_minus * (0.02 + 0.96 * x),
        }
    }

    #[test]
    fn squash_inverse() {
        let sq = Squash::new(&rn());
        for y in [-60.0, -3.0, 0.0, 0.5, 7.0, 60.0] {
            assert!((sq.inverse(sq.forward(y)) - y).abs() < 1e-8 * (1.0 + y.abs()));
        }
        assert_eq!(sq.forward(f64::INFINITY), 1.0);
        assert_eq!(sq.forward(f64::NEG_INFINITY), 0.0);
    }

    #[test]
    fn static_slice_on_axis() {
        let p = rn();
        for r in [1.9, 3.0, 40.0] {
            let pt = block_to_penrose(&p, BlockAddress::new(0, Region::I), 0.0, r).unwrap();
            assert!(pt.time.abs() < 1e-15 && pt.space > 0.0);
            let pt = block_to_penrose(&p, BlockAddress::new(0, Region::IPrime), 0.0, r).unwrap();
            assert!(pt.time.abs() < 1e-15 && pt.space < 0.0);
        }
        let pt = block_to_penrose(&p, BlockAddress::new(0, Region::II), 0.0, 1.2).unwrap();
        assert!(pt.space.abs() < 1e-15 && pt.time > 0.0 && pt.time < 1.0);
        let pt = block_to_penrose(&p, BlockAddress::new(0, Region::III), 0.0, 0.1).unwrap();
        assert!((pt.time - 1.0).abs() < 1e-15 && pt.space < 0.0);
    }

    #[test]
    fn time_increases_in_future_oriented_blocks() {
        let p = rn();
        for region in [Region::I, Region::III] {
            let b = BlockAddress::new(0, region);
            let r = sample_r(&p, region, 0.5);
            let mut prev = f64::NEG_INFINITY;
            for i in -20..=20 {
                let t = i as f64 * 0.5;
                let pt = block_to_penrose(&p, b, t, r).unwrap();
                assert!(pt.time > prev);
                prev = pt.time;
            }
        }
    }

    #[test]
    fn shared_edges_agree() {
        let p = rn();
        // Along each horizon the regular null coordinate parameterises the common edge.
        for k in -1..=1 {
            for &w in &[-2.0, 0.0, 3.0] {
                let i = BlockAddress::new(k, Region::I);
                let ii = BlockAddress::new(k, Region::II);
                let close = |a: DiagramPoint, b: DiagramPoint| {
                    assert!(
                        (a.time - b.time).abs() < 1e-15 && (a.space - b.space).abs() < 1e-15,
                        "{a:?} {b:?}"
                    );
                };
                close(
                    chart_uv(&p, i, f64::INFINITY, w),
                    chart_uv(&p, ii, f64::INFINITY, w),
                );
                let iii = BlockAddress::new(k, Region::III);
                close(
                    chart_uv(&p, iii, f64::NEG_INFINITY, w),
                    chart_uv(&p, ii, f64::NEG_INFINITY, w),
                );
                let iip = BlockAddress::new(k + 1, Region::IIPrime);
                close(
                    chart_uv(&p, iii, w, f64::INFINITY),
                    chart_uv(&p, iip, w, f64::INFINITY),
                );
            }
        }
    }

    #[test]
    fn every_neighbour_shares_its_edge() {
        use super::super::block::Null;
        let p = rn();
        for region in Region::ALL {
            let b = BlockAddress::new(1, region);
            for which in [Null::U, Null::V] {
                for sign in [1.0, -1.0] {
                    let Some(n) = b.neighbor(which, sign) else {
                        continue;
                    };
                    for &w in &[-1.5, 0.25, 4.0] {
                        let inf = sign * f64::INFINITY;
                        let (u, v) = match which {
                            Null::U => (inf, w),
                            Null::V => (w, inf),
                        };
                        let a = chart_uv(&p, b, u, v);
                        let c = chart_uv(&p, n, u, v);
                        assert!(
                            (a.time - c.time).abs() < 1e-15 && (a.space - c.space).abs() < 1e-15,
                            "{b} {n}"
                        );
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn inverse_chart_round_trip(ri in 0usize..6, k in -2i64..3, x in 0.0f64..1.0, t in -6.0f64..6.0) {
            let p = rn();
            let region = Region::ALL[ri];
            let b = BlockAddress::new(k, region);
            let r = sample_r(&p, region, x);
            let pt = block_to_penrose(&p, b, t, r).unwrap();
            let back = penrose_to_block(&p, pt).unwrap();
            prop_assert_eq!(back.block, b);
            prop_assert!((back.r - r).abs() < 1e-7 * (1.0 + r), "{} vs {}", back.r, r);
            prop_assert!((back.t - t).abs() < 1e-6, "{} vs {}", back.t, t);
        }

        #[test]
        fn reflections_act_on_blocks(ri in 0usize..6, k in -2i64..3, x in 0.0f64..1.0, t in -6.0f64..6.0) {
            let p = rn();
            let region = Region::ALL[ri];
            let b = BlockAddress::new(k, region);
            let r = sample_r(&p, region, x);
            let pt = block_to_penrose(&p, b, t, r).unwrap();
            let mx = block_to_penrose(&p, b.mirror_x(), -t, r).unwrap();
            prop_assert!((mx.time - pt.time).abs() < 1e-12 && (mx.space + pt.space).abs() < 1e-12);
            let mt = block_to_penrose(&p, b.mirror_t(), -t, r).unwrap();
            prop_assert!((mt.time + pt.time).abs() < 1e-12 && (mt.space - pt.space).abs() < 1e-12);
        }
    }
}
