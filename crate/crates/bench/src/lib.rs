//! Shared fixtures for the criterion benchmarks.

use rncmc::slice::critical_points;
use rncmc::{SliceSpec, SpacetimeParams};

/// The reference background `M = 1`, `e = 0.6`.
pub fn reference_params() -> SpacetimeParams {
    SpacetimeParams::new(1.0, 0.6).expect("valid parameters")
}

/// One slice of each non-cylindrical case at `H = 0.2`.
pub fn case_specs(p: &SpacetimeParams) -> Vec<(&'static str, SliceSpec)> {
    let cp = critical_points(p, 0.2).expect("finite H");
    vec![
        ("A", SliceSpec::new(p, 0.2, cp.c_big - 0.1).expect("spec")),
        ("B", SliceSpec::new(p, 0.2, cp.c_big).expect("spec")),
        ("C", SliceSpec::new(p, 0.2, cp.c_big + 0.1).expect("spec")),
    ]
}
