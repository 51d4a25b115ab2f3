//! Rasters, stereo pairs, PGM files and configuration files.

mod config;
mod pgm;

pub use config::{load_config, parse_config, save_config, to_config_string};
pub use pgm::{
    decode_pgm, encode_pgm, encode_pgm16, load_disparity, load_mask, load_pgm, save_disparity,
    save_pgm, PgmRaster,
};

use crate::error::{Error, Result};

/// Sentinel stored in a [`DisparityMap`] for pixels without a valid disparity.
pub const INVALID: u16 = u16::MAX;

/// 8-bit row-major grayscale raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Dimension(format!(
                "image must be non-empty, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::Dimension(format!(
                "{width}x{height} image needs {} pixels, got {}",
                width * height,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        assert!(width > 0 && height > 0, "image must be non-empty");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn row(&self, y: usize) -> &[u8] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    /// Reads with edge replication: out-of-range coordinates are clamped.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> u8 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.data[y * self.width + x]
    }
}

/// Per-pixel integer disparity, [`INVALID`] where no disparity is assigned.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DisparityMap {
    width: usize,
    height: usize,
    data: Vec<u16>,
}

impl DisparityMap {
    pub fn new(width: usize, height: usize, data: Vec<u16>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::Dimension(format!(
                "{width}x{height} disparity map needs {} values, got {}",
                width * height,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: u16) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u16] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u16] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u16 {
        self.data[y * self.width + x]
    }

    /// `None` for [`INVALID`] pixels.
    #[inline]
    pub fn disparity(&self, x: usize, y: usize) -> Option<u16> {
        let v = self.get(x, y);
        (v != INVALID).then_some(v)
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: u16) {
        self.data[y * self.width + x] = value;
    }

    pub fn valid_count(&self) -> usize {
        self.data.iter().filter(|&&v| v != INVALID).count()
    }

    /// Checks that every valid value is below `d_max`.
    pub fn check_range(&self, d_max: usize) -> Result<()> {
        match self
            .data
            .iter()
            .position(|&v| v != INVALID && v as usize >= d_max)
        {
            Some(i) => Err(Error::Range(format!(
                "disparity {} at ({}, {}) is not below d_max={d_max}",
                self.data[i],
                i % self.width,
                i / self.width
            ))),
            None => Ok(()),
        }
    }
}

/// A rectified base (left) and match (right) image, optionally with ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct StereoPair {
    pub base: GrayImage,
    pub matching: GrayImage,
    pub ground_truth: Option<DisparityMap>,
}

impl StereoPair {
    pub fn new(
        base: GrayImage,
        matching: GrayImage,
        ground_truth: Option<DisparityMap>,
    ) -> Result<Self> {
        if base.width() != matching.width() || base.height() != matching.height() {
            return Err(Error::Dimension(format!(
                "base image is {}x{} but match image is {}x{}",
                base.width(),
                base.height(),
                matching.width(),
                matching.height()
            )));
        }
        if let Some(gt) = &ground_truth {
            if gt.width() != base.width() || gt.height() != base.height() {
                return Err(Error::Dimension(format!(
                    "ground truth is {}x{} but images are {}x{}",
                    gt.width(),
                    gt.height(),
                    base.width(),
                    base.height()
                )));
            }
        }
        Ok(Self {
            base,
            matching,
            ground_truth,
        })
    }

    pub fn width(&self) -> usize {
        self.base.width()
    }

    pub fn height(&self) -> usize {
        self.base.height()
    }
}
