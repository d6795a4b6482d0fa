//! Deep image fingerprints: denoiser residuals, fingerprint extraction with a
//! correlation-based contrastive loss, nearest-mean detection, lineage
//! analysis, the monochrome artifact lab and the synthetic data harness.

pub mod checkpoint;
pub mod data;
pub mod denoiser;
pub mod detector;
pub mod error;
pub mod fingerprint;
pub mod image;
pub mod lab;
pub mod spectral;
mod train;

pub use checkpoint::Checkpoint;
pub use denoiser::{DenoiserBundle, DenoiserConfig, HighPass, ResidualFilter};
pub use detector::{Label, Metrics};
pub use error::{DifError, Result};
pub use fingerprint::{CorrelationScope, ExtractionConfig, FingerprintRecord, LossForm};
pub use image::Image;
