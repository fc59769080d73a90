//! CMC foliations: the fixed-`H` loop construction and the varied-`H` chain.

mod fixed;
mod varied;

pub use fixed::{loop_gamma, FixedHLoop, LoopMarkers, LoopPoint};
pub use varied::{
    foliate_varied, h_at_boundary, prop1_curve, prop2_curve, q_of, q_tilde, ChainSegment, Horizon,
    Prop1Graph, Prop2Graph, VariedFoliation, DEFAULT_ALPHA, FORCING_CAP,
};
pub(crate) use varied::{prop1_with, prop2_with, TABLE_NODES};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::atlas::{EmbedOptions, EmbeddedSlice};
use crate::error::{Error, Result};
use crate::spacetime::SpacetimeParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveKind {
    Loop,
    Prop1Graph,
    Prop2Graph,
}

/// Sampled curve in the `(r, c)` plane whose points index leaves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoliationCurve {
    pub kind: CurveKind,
    pub samples: Vec<(f64, f64)>,
    pub s_period: Option<f64>,
    pub markers: Option<LoopMarkers>,
}

/// One leaf of a foliation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leaf {
    /// Loop parameter (fixed `H`) or chain position (varied `H`).
    pub parameter: f64,
    pub curve_point: (f64, f64),
    #[serde(rename = "H")]
    pub h: f64,
    pub copy_index: i64,
    pub slice: EmbeddedSlice,
}

impl Leaf {
    pub fn new(parameter: f64, curve_point: (f64, f64), slice: EmbeddedSlice) -> Self {
        Self {
            parameter,
            curve_point,
            h: slice.spec.h,
            copy_index: slice.spec.copy_index,
            slice,
        }
    }
}

/// Leaves of the fixed-`H` foliation for loop periods `copies.0 ..= copies.1`,
/// `n` per period, in order of the loop parameter.
pub fn foliate_fixed(
    p: &SpacetimeParams,
    h: f64,
    copies: (i64, i64),
    n: usize,
    opts: &EmbedOptions,
) -> Result<Vec<Leaf>> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!(
            "need at least 3 leaves per period, got {n}"
        )));
    }
    if copies.1 < copies.0 {
        return Err(Error::InvalidParameter(format!(
            "empty copy range {copies:?}"
        )));
    }
    let lp = FixedHLoop::new(p, h)?;
    let grid = lp.grid(n);
    let params: Vec<f64> = (copies.0..=copies.1)
        .flat_map(|k| grid.iter().map(move |s| k as f64 + s))
        .collect();
    params.par_iter().map(|&s| lp.leaf(s, opts)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_leaves_are_ordered_on_the_axis() {
        let p = SpacetimeParams::new(1.0, 0.6).unwrap();
        let leaves = foliate_fixed(&p, 0.2, (0, 0), 12, &EmbedOptions::default()).unwrap();
        assert_eq!(leaves.len(), 12);
        let t: Vec<f64> = leaves
            .iter()
            .map(|l| l.slice.polyline.intercept().unwrap())
            .collect();
        assert!(t.windows(2).all(|w| w[0] < w[1]), "{t:?}");
        assert!((t[0] + 1.0).abs() < 1e-9);
    }

    #[test]
    fn outer_horizon_leaf_passes_the_origin() {
        let p = SpacetimeParams::new(1.0, 0.6).unwrap();
        let lp = FixedHLoop::new(&p, 0.2).unwrap();
        let leaf = lp.leaf(lp.markers().s2, &EmbedOptions::default()).unwrap();
        assert!(leaf.slice.polyline.intercept().unwrap().abs() < 1e-12);
    }
}
