//! `dif`: train denoisers, extract fingerprints, detect and compare generators.

mod commands;
mod config;
mod provenance;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dif_nn::Arch;

use config::{DenoiserFlags, ExtractionFlags};

#[derive(Parser, Debug)]
#[command(name = "dif", version, about = "Deep image fingerprint toolkit")]
struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every random choice of the command.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Where to write the provenance record (default: next to the main output).
    #[arg(long, global = true)]
    provenance: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a DnCNN denoiser on the real training images of a manifest.
    TrainDenoiser {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        flags: DenoiserFlags,
    },
    /// Extract a fingerprint from the training split of a manifest.
    Extract {
        #[arg(long)]
        manifest: PathBuf,
        /// Denoiser checkpoint, or `highpass[:sigma]`.
        #[arg(long)]
        denoiser: String,
        #[arg(long)]
        out: PathBuf,
        /// `extraction` (optimized) or `averaging` (mean residual baseline).
        #[arg(long, default_value = "extraction")]
        method: String,
        /// Use at most this many training images in total, half per class.
        #[arg(long)]
        train_samples: Option<usize>,
        #[command(flatten)]
        flags: ExtractionFlags,
    },
    /// Classify a single image or evaluate a manifest split.
    Detect {
        #[arg(long)]
        fingerprint: PathBuf,
        #[arg(long)]
        denoiser: String,
        #[arg(long, conflicts_with = "image", required_unless_present = "image")]
        manifest: Option<PathBuf>,
        #[arg(long)]
        image: Option<PathBuf>,
        /// `test`, `train` or `all`.
        #[arg(long, default_value = "test")]
        split: String,
        /// Metrics JSON.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-image decisions.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Accuracy of every fingerprint on every dataset.
    CrossDetect {
        #[arg(long, num_args = 1.., required = true)]
        fingerprints: Vec<PathBuf>,
        #[arg(long, num_args = 1.., required = true)]
        manifests: Vec<PathBuf>,
        #[arg(long)]
        denoiser: String,
        /// Row and column names; defaults to the manifests' generator ids.
        #[arg(long, value_delimiter = ',')]
        ids: Option<Vec<String>>,
        #[arg(long, default_value = "test")]
        split: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        heatmap: Option<PathBuf>,
    },
    /// Group generators whose cross-detection is high in both directions.
    Lineage {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        t_high: Option<f64>,
        #[arg(long)]
        t_sym: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit a generator to a flat gray image and score its artifacts.
    MonochromeLab {
        #[arg(long)]
        arch: Arch,
        #[arg(long, default_value_t = 128)]
        size: usize,
        #[arg(long, default_value_t = 2000)]
        steps: usize,
        #[arg(long, default_value_t = 0.5)]
        gray: f64,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Write a perturbed copy of every image under a directory.
    Perturb {
        #[arg(long)]
        in_dir: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// `none`, `jpeg`, `resize-half`, `blur` or `mixed`.
        #[arg(long)]
        kind: String,
        #[arg(long)]
        quality: Option<u8>,
        #[arg(long)]
        sigma: Option<f64>,
    },
    /// Accuracy as a function of the number of training images.
    SweepTrainSize {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        denoiser: String,
        #[arg(long, value_delimiter = ',', default_value = "128,256,512,1024")]
        sizes: Vec<usize>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        flags: ExtractionFlags,
    },
    /// Write a synthetic corpus with a known injected fingerprint.
    Oracle {
        /// `checkerboard:P`, `grid:P`, `random:SEED[:TILE]`, or pattern JSON.
        #[arg(long)]
        pattern: String,
        /// Pattern peak in 1/255 units.
        #[arg(long)]
        amplitude: f64,
        /// Images per class.
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 128)]
        size: usize,
        /// Noise added to both classes, in 1/255 units.
        #[arg(long, default_value_t = dif_core::data::oracle::DEFAULT_NOISE_SIGMA)]
        noise: f64,
        #[arg(long, default_value = "oracle")]
        model_id: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimated JPEG quality statistics of a directory.
    JpegQuality {
        #[arg(long)]
        dir: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}
