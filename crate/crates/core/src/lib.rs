//! Numerical solvers and certificates for minimal surfaces with thin obstacles.
//!
//! The crate is `no_std` and only needs `alloc`. Everything here is a pure
//! function of its inputs: grids, fields and geometric objects are values,
//! and no operation touches the filesystem or a clock. File formats and the
//! command-line front end live in the `wedgeflow` crate.
//!
//! Coordinates follow one convention throughout. Points of the ambient space
//! are `x = (x'', x_{n-1}, x_n)`; graphs live over `x' = (x'', x_{n-1})`; the
//! thin obstacle sits on the slice `{x_{n-1} = 0}` and points in the `-e_n`
//! direction. The subgraph of `f` is `E = {x_n <= f(x')}`, so `H f < 0` means
//! the graph bends downward.
#![no_std]
#![deny(missing_debug_implementations)]
// `!(x > 0.0)` is the NaN-rejecting form used for parameter checks.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod barriers;
pub mod error;
pub mod families;
pub mod flatland;
pub mod geometry;
pub mod grid;
pub mod minimal_graph;
pub mod signorini;

mod linalg;
mod math;

pub use error::{Error, Result};
pub use geometry::{ClosenessReport, PointCloud, Wedge};
pub use grid::{Domain, Field, GridSpec, NodeSet};
