use std::fmt;

use serde::{Deserialize, Serialize};

use crate::spacetime::SpacetimeParams;

/// The six coordinate blocks of one copy pair in the maximal extension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Region {
    I,
    II,
    III,
    #[serde(rename = "I'")]
    IPrime,
    #[serde(rename = "II'")]
    IIPrime,
    #[serde(rename = "III'")]
    IIIPrime,
}

impl Region {
    pub const ALL: [Region; 6] = [
        Region::I,
        Region::II,
        Region::III,
        Region::IPrime,
        Region::IIPrime,
        Region::IIIPrime,
    ];

    pub fn is_primed(self) -> bool {
        matches!(self, Region::IPrime | Region::IIPrime | Region::IIIPrime)
    }

    pub fn is_interior(self) -> bool {
        matches!(self, Region::II | Region::IIPrime)
    }

    /// Orientation of the static time coordinate: +1 where ∂_t is future
    /// directed, −1 in the time-reversed copies. `None` for interior blocks.
    pub fn static_orientation(self) -> Option<f64> {
        match self {
            Region::I | Region::III => Some(1.0),
            Region::IPrime | Region::IIIPrime => Some(-1.0),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Region::I => "I",
            Region::II => "II",
            Region::III => "III",
            Region::IPrime => "I'",
            Region::IIPrime => "II'",
            Region::IIIPrime => "III'",
        }
    }

    pub fn from_label(s: &str) -> Option<Region> {
        Region::ALL.iter().copied().find(|r| r.label() == s)
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Which null coordinate diverges when a curve leaves a block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Null {
    U,
    V,
}

/// A block of the extended spacetime: region label plus copy index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BlockAddress {
    pub copy_index: i64,
    pub region: Region,
}

impl BlockAddress {
    pub fn new(copy_index: i64, region: Region) -> Self {
        Self { copy_index, region }
    }

    /// Open r-interval covered by the block.
    pub fn r_range(&self, p: &SpacetimeParams) -> (f64, f64) {
        match self.region {
            Region::I | Region::IPrime => (p.r_plus, f64::INFINITY),
            Region::II | Region::IIPrime => (p.r_minus, p.r_plus),
            Region::III | Region::IIIPrime => (0.0, p.r_minus),
        }
    }

    pub fn contains_r(&self, p: &SpacetimeParams, r: f64) -> bool {
        let (lo, hi) = self.r_range(p);
        r > lo && r < hi
    }

    pub fn shifted(self, dk: i64) -> Self {
        Self::new(self.copy_index + dk, self.region)
    }

    /// Neighbour reached when `which` diverges to `sign`·∞ while the other
    /// null coordinate stays finite. `None` where the edge is not a horizon.
    pub fn neighbor(&self, which: Null, sign: f64) -> Option<BlockAddress> {
        use Null::*;
        use Region::*;
        let k = self.copy_index;
        let up = sign > 0.0;
        let (region, dk) = match (self.region, which, up) {
            (I, U, true) => (II, 0),
            (I, V, false) => (IIPrime, 0),
            (IPrime, U, true) => (IIPrime, 0),
            (IPrime, V, false) => (II, 0),
            (II, U, true) => (I, 0),
            (II, U, false) => (III, 0),
            (II, V, false) => (IPrime, 0),
            (II, V, true) => (IIIPrime, 0),
            (IIPrime, U, true) => (IPrime, 0),
            (IIPrime, U, false) => (IIIPrime, -1),
            (IIPrime, V, false) => (I, 0),
            (IIPrime, V, true) => (III, -1),
            (III, U, false) => (II, 0),
            (III, V, true) => (IIPrime, 1),
            (IIIPrime, V, true) => (II, 0),
            (IIIPrime, U, false) => (IIPrime, 1),
            _ => return None,
        };
        Some(BlockAddress::new(k + dk, region))
    }

    /// Block across a bifurcation sphere (the spacelike-opposite block).
    pub fn across_bifurcation(&self) -> Option<BlockAddress> {
        let k = self.copy_index;
        match self.region {
            Region::I => Some(BlockAddress::new(k, Region::IPrime)),
            Region::IPrime => Some(BlockAddress::new(k, Region::I)),
            Region::III => Some(BlockAddress::new(k, Region::IIIPrime)),
            Region::IIIPrime => Some(BlockAddress::new(k, Region::III)),
            _ => None,
        }
    }

    /// Image under X → −X (the time coordinate flips sign in the chart).
    pub fn mirror_x(&self) -> BlockAddress {
        let region = match self.region {
            Region::I => Region::IPrime,
            Region::IPrime => Region::I,
            Region::III => Region::IIIPrime,
            Region::IIIPrime => Region::III,
            r => r,
        };
        BlockAddress::new(self.copy_index, region)
    }

    /// Image under T → −T (the time coordinate flips sign in the chart).
    pub fn mirror_t(&self) -> BlockAddress {
        let k = self.copy_index;
        match self.region {
            Region::I => BlockAddress::new(-k, Region::I),
            Region::IPrime => BlockAddress::new(-k, Region::IPrime),
            Region::II => BlockAddress::new(-k, Region::IIPrime),
            Region::IIPrime => BlockAddress::new(-k, Region::II),
            Region::III => BlockAddress::new(-k - 1, Region::III),
            Region::IIIPrime => BlockAddress::new(-k - 1, Region::IIIPrime),
        }
    }
}

impl fmt::Display for BlockAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.region, self.copy_index)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neighbours_are_mutual() {
        for region in Region::ALL {
            let b = BlockAddress::new(0, region);
            for which in [Null::U, Null::V] {
                for sign in [1.0, -1.0] {
                    if let Some(n) = b.neighbor(which, sign) {
                        assert_eq!(n.neighbor(which, sign), Some(b), "{b} -> {n}");
                    }
                }
            }
        }
    }

    #[test]
    fn interior_blocks_touch_four_neighbours() {
        let ii = BlockAddress::new(0, Region::II);
        let mut n: Vec<_> = [
            (Null::U, 1.0),
            (Null::U, -1.0),
            (Null::V, 1.0),
            (Null::V, -1.0),
        ]
        .iter()
        .filter_map(|&(w, s)| ii.neighbor(w, s))
        .map(|b| b.region)
        .collect();
        n.sort();
        assert_eq!(
            n,
            vec![Region::I, Region::III, Region::IPrime, Region::IIIPrime]
        );
    }

    #[test]
    fn reflections_are_involutions() {
        for region in Region::ALL {
            for k in -2..3 {
                let b = BlockAddress::new(k, region);
                assert_eq!(b.mirror_x().mirror_x(), b);
                assert_eq!(b.mirror_t().mirror_t(), b);
            }
        }
    }

    #[test]
    fn labels_round_trip() {
        for region in Region::ALL {
            assert_eq!(Region::from_label(region.label()), Some(region));
        }
    }
}
