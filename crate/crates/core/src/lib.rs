//! Secrecy-constrained quantizer design for distributed detection.
//!
//! Each sensor compresses its observation to one bit with a likelihood-ratio
//! threshold. Bits reach a fusion center (FC) and an eavesdropper (Eve)
//! through independent binary symmetric channels. Designs maximize the FC's
//! KL divergence while keeping Eve's below a budget; all divergences are in
//! nats.

// `!(x > 0.0)` style guards reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boundary;
pub mod error;
pub mod export;
pub mod gaussian;
pub mod greedy;
pub mod roc;
pub mod search;
pub mod serde_ext;
pub mod sim;
pub mod solver;

pub use error::{Error, Result};
pub use gaussian::{GaussianSensorModel, ObservationModel};
pub use greedy::{allocate, AllocationResult, NetworkConfig, SensorAllocation};
pub use roc::{kl_divergence, BscChannel, OperatingPoint, SensorSite};
pub use solver::{design_quantizer, QuantizerDesign, TradeoffPoint};
