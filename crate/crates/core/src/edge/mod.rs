//! Edge detection through the XOR circuit and rate-coded gradient sensing.

mod gradient;
mod image;
mod pipeline;

pub use gradient::{
    fit_linear, gradient_csv, gradient_rate, gradient_sweep, GradientConfig, GradientSample,
    LinearFit,
};
pub use image::{
    binarize, encode_pgm, encode_ppm, load_image, or_images, otsu_threshold, parse_pnm,
    reference_edges, save_pgm, shift, to_gray, xor_images, BinaryImage, ColorImage, Direction,
    GrayImage, LoadedImage,
};
pub use pipeline::{
    compare_edges, detect_edges, xor_stream_circuit, xor_stream_detailed, MismatchReport,
    PulseTrain, StreamEncoding, StreamResult,
};

use thiserror::Error;

use crate::gates::GateError;
use crate::sim::SimError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EdgeError {
    #[error("malformed image header: {0}")]
    Header(String),
    #[error("truncated image payload: expected {expected} bytes, got {got}")]
    Truncated { expected: usize, got: usize },
    #[error("unsupported maxval {0} (only 255 is accepted)")]
    Maxval(usize),
    #[error("{0}")]
    Io(String),
    #[error("image too small: {0}")]
    Degenerate(String),
    #[error("size mismatch: {0}")]
    SizeMismatch(String),
    #[error("invalid stream encoding: {0}")]
    Encoding(String),
    #[error("linear fit: {0}")]
    Fit(String),
    #[error(transparent)]
    Gate(#[from] GateError),
    #[error(transparent)]
    Sim(#[from] SimError),
}
