//! Models for OAM-embedded massive-MIMO links: UCA geometry, element
//! design, mode channels, transceiver chain, water-filling power allocation
//! and ergodic spectrum efficiency.

// Negated comparisons deliberately reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod antenna;
pub mod bessel;
pub mod capacity;
pub mod channel;
pub mod config;
pub mod error;
pub mod geometry;
pub mod power;
pub mod rng;
pub mod transceiver;

pub use channel::{ChannelModelKind, CMatrix, ModeChannel};
pub use config::OemConfig;
pub use error::{Error, Result};
pub use power::SnrGrid;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/geometry.md")]
    mod geometry {}
    #[doc = include_str!("../../../book/src/antenna.md")]
    mod antenna {}
    #[doc = include_str!("../../../book/src/channel.md")]
    mod channel {}
    #[doc = include_str!("../../../book/src/transceiver.md")]
    mod transceiver {}
    #[doc = include_str!("../../../book/src/waterfilling.md")]
    mod waterfilling {}
    #[doc = include_str!("../../../book/src/capacity.md")]
    mod capacity {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
