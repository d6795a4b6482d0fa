//! Differentiable operators. Each file adds `Graph` methods plus a plain
//! forward function usable without a tape.

mod conv;
mod elementwise;
mod norm;
mod pool;

pub use conv::{conv2d_forward, conv_transpose2d_k2s2_forward, ConvGeometry};
pub use elementwise::Activation;
pub use norm::{batchnorm2d_forward, BatchStats, BnMode};
pub use pool::maxpool2x2_forward;
