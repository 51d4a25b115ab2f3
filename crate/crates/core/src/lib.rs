//! Semi-global stereo matching built the way a streaming FPGA pipeline computes it.
//!
//! The crate contains four layers:
//!
//! * [`pixelio`]: grayscale images, disparity maps, PGM files and the flat
//!   `key=value` configuration format.
//! * [`cost`], [`aggregate`], [`refine`]: the matching pipeline itself. Every
//!   stage has a plain reference implementation and a streaming executor
//!   (line buffers, window buffers, register cascades) that processes pixels in
//!   raster order. The two are bit-identical.
//! * [`hwmodel`]: cycle, data-width and on-chip memory estimates for a pipeline
//!   configuration.
//! * [`explorer`] and [`cli`]: configuration sweeps, D1 scoring, CSV output and
//!   Pareto fronts.

pub mod aggregate;
pub mod cli;
pub mod cost;
pub mod error;
pub mod explorer;
pub mod hwmodel;
pub mod pipeline;
pub mod pixelio;
pub mod refine;
pub mod window;

pub use error::{Error, Result};
pub use pixelio::{DisparityMap, GrayImage, StereoPair, INVALID};
