//! Lattice-based channel codes for over-the-air computation of gradient
//! sums in federated edge learning.
//!
//! Devices quantize their gradients, encode them with either a
//! balanced-numeral cubic-lattice code or a Construction-A nested lattice
//! code, and transmit simultaneously over an AWGN multiple-access channel;
//! the receiver decodes the integer sum directly from the superposition.
//! The crate bundles the two codecs, exact and bounded error-probability
//! evaluators, a Monte-Carlo sweep harness with CSV output, and a toy
//! federated training loop driven through the simulated channel.

pub mod balanced;
pub mod bounds;
pub mod channel;
pub mod error;
pub mod feel;
pub mod lattice;
pub mod nested;
pub mod quantizer;
pub mod selftest;
pub mod stream;
pub mod sweep;

pub use crate::balanced::BalancedConfig;
pub use crate::channel::ChannelConfig;
pub use crate::error::{Error, Result};
pub use crate::lattice::{hexagonal_for_power, Lattice, LatticeStats};
pub use crate::nested::{NestedCode, ReceiverConfig, ScaleMode};
pub use crate::quantizer::QuantizerConfig;
