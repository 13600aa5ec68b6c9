//! Energy-constrained diamond norm: certified SDP values, channel models and
//! the continuity and speed-limit bounds built on them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod matrix;
pub mod quantum;
pub mod sdp;

pub use error::{EcdError, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/channels.md")]
    struct Channels;
    #[doc = include_str!("../../../book/src/norm.md")]
    struct Norm;
    #[doc = include_str!("../../../book/src/speed-limits.md")]
    struct SpeedLimits;
    #[doc = include_str!("../../../book/src/continuity.md")]
    struct Continuity;
}
