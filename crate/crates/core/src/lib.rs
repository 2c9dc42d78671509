//! Zero-mode truncation (ZMT) of bond dimensions in loopy tensor networks.
//!
//! The crate is layered bottom-up:
//!
//! - [`tensor`], [`linalg`], [`snapshot`]: dense labeled tensors and the
//!   decompositions everything else is built on.
//! - [`network`]: closed networks described by shared axis labels.
//! - [`zmt`]: the bond metric, its lowest modes, the subspace optimization of
//!   the zero-mode candidate and the bond truncation it defines.
//! - [`toy`]: small loop plaquettes with known redundancy.
//! - [`z2`]: imaginary-time evolution of the Z2 lattice gauge theory
//!   purification on a 2x2 iPEPS unit cell, truncated with ZMT or SVD.

pub mod error;
pub mod linalg;
pub mod network;
pub mod snapshot;
pub mod tensor;
pub mod toy;
pub mod z2;
pub mod zmt;

pub use error::{TensorError, ZmtError};
pub use network::Network;
pub use tensor::{AxisGroup, Tensor};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
