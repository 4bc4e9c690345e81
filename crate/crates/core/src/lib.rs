//! Closed-loop downlink CSI acquisition for multiuser multicarrier massive MIMO.
//!
//! The crate simulates the whole loop: multipath channel statistics and
//! comb-type pilot probing ([`model`]), the feedback/estimation pipelines
//! ([`schemes`]: the distortion-rate bound, entropy-coded scalar quantization,
//! linear JSCC with a random spreading matrix, and truncated Karhunen-Loève
//! JSCC), downlink ergodic-rate evaluation under MRT and ZF precoding
//! ([`rates`]), and the experiment harness behind the `csifb` CLI ([`bench`]).
//!
//! Every covariance in this problem has rank at most the number of paths, so
//! the scheme pipelines work in the eigen-frame of the channel covariance
//! ([`model::Frame`]) and only expand to the full `MN`-dimensional space on
//! request.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod error;
pub mod model;
pub mod numerics;
pub mod rates;
pub mod schemes;

pub use error::{Error, Result};
pub use numerics::{CMat, CVec, C64};
