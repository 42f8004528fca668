//! Numerical toolkit for two-sided (left/right) product singular integrals on
//! the first Heisenberg group `H^1`.
//!
//! The crate is `no_std` with `alloc`. Everything that touches files, the
//! terminal or JSON lives in the `carnot-kernels` companion crate.
//!
//! Modules, bottom up:
//!
//! * [`group`]: the group law, dilations, invariant vector fields and flows.
//! * [`metric`]: surrogate distances, the control-metric oracle, ball volumes.
//! * [`calculus`]: grids, quadrature, convolution, profiles and bumps.
//! * [`kernels`]: bound functions, intersection and elementary kernels,
//!   dyadic sums and the membership test.
//! * [`analysis`]: dyadic bound sums, pseudolocality series, maximal and
//!   square functions.
//! * [`verify`]: the named numerical checks behind the CLI and the
//!   acceptance suite.
#![cfg_attr(not(feature = "std"), no_std)]
#![deny(unsafe_code)]
#![warn(missing_debug_implementations)]
// `!(x > 0.0)` is the NaN-rejecting form used throughout
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod analysis;
pub mod calculus;
pub mod fmath;
pub mod gauss;
pub mod group;
pub mod kernels;
pub mod metric;
pub mod poly;
pub mod report;
pub mod stats;
pub mod verify;

pub use group::{FieldId, GroupPoint, Q_DIM};
pub use metric::{MetricParams, Side};
pub use report::VerificationReport;
