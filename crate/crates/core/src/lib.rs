//! Trainable edge-adaptive image filtering.
//!
//! Every pixel selects one linear filter from a trained bank, indexed by the
//! quantized orientation, strength and coherence of the local structure
//! tensor. Banks are trained in closed form from observed/target image pairs
//! by per-bucket regularized least squares.

pub mod bank;
pub mod bayer;
pub mod error;
pub mod inference;
pub mod io;
pub mod metrics;
pub mod multiscale;
pub mod noise;
pub mod pipeline;
pub mod quantizer;
pub mod raster;
pub mod reference;
pub mod resample;
pub mod structure_tensor;
pub mod synth;
pub mod training;

pub use bank::{FilterBank, MontageMode};
pub use error::{Error, Result};
pub use inference::{apply, apply_color, apply_per_channel, apply_two_stream};
pub use io::Raster;
pub use multiscale::MultiscaleBank;
pub use pipeline::{PipelineConfig, Task};
pub use quantizer::{selection_map, QuantizerSpec, SelectionMap};
pub use raster::{Footprint, ImageGray, ImageRgb};
pub use reference::FlowParams;
pub use training::{train, TrainConfig, TrainingPair};
