//! Physical-layer plumbing: constellations, channels, coding and framing.

pub mod channel;
pub mod coding;
pub mod constellation;
pub mod frame;

pub use channel::{rayleigh_channel, transmit_downlink, transmit_uplink, ChannelRealization};
pub use coding::{conv_encode, encode, viterbi_decode_soft, CodingError};
pub use constellation::{Constellation, Modulation};
pub use frame::{FrameError, FrameLayout, Interleaver};
