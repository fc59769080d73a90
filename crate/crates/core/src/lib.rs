//! Spherically symmetric constant-mean-curvature slices and foliations of the
//! maximally extended Reissner–Nordström spacetime.

// `!(x > 0.0)` is used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod atlas;
pub mod checks;
pub mod error;
pub mod export;
pub mod foliation;
pub mod quadrature;
pub mod slice;
pub mod solvers;
pub mod spacetime;

pub use atlas::{BlockAddress, DiagramPoint, EmbedOptions, EmbeddedSlice, PenrosePolyline, Region};
pub use error::{Error, Result};
pub use foliation::{foliate_fixed, foliate_varied, FixedHLoop, Leaf};
pub use slice::{CaseTag, SliceSpec};
pub use solvers::{solve_dirichlet, solve_ivp, DirichletOptions, IvpData};
pub use spacetime::{make_params, SpacetimeParams};
