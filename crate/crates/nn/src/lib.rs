//! Minimal CPU deep-learning toolkit: NCHW tensors, a reverse-mode tape,
//! the convolutional layer set and the generator/denoiser model zoo.

pub mod error;
pub mod float;
pub mod gradcheck;
pub mod graph;
pub mod layers;
pub mod ops;
pub mod optim;
pub mod tensor;
pub mod zoo;

pub use error::{NnError, Result};
pub use float::Float;
pub use graph::{BackwardCtx, Function, Gradients, Graph, Var};
pub use layers::{Layer, LayerKind, Mode};
pub use optim::Adam;
pub use tensor::Tensor;
pub use zoo::{build, Arch, Model, ModelSpec, Step, Z_CHANNELS};
