//! The maximally extended spacetime as an atlas of blocks, the global
//! compactified diagram, and the embedding of slices into it.

mod block;
mod chart;
mod embed;

pub use block::{BlockAddress, Null, Region};
pub use chart::{
    block_to_penrose, chart_derivatives, chart_uv, penrose_to_block, BlockPoint, DiagramPoint,
    Squash,
};
pub use embed::{
    embed_slice, place_axisymmetric, reflect_time, throat_spec, EmbedOptions, EmbeddedSlice,
    PenrosePolyline,
};
