//! Integer-factor downscaling of stereo pairs.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::pixelio::{DisparityMap, GrayImage, StereoPair, INVALID};

/// Resolution axis value: the input size or a downscale target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Resolution {
    Native,
    Target { width: usize, height: usize },
}

impl fmt::Display for Resolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Resolution::Native => f.write_str("native"),
            Resolution::Target { width, height } => write!(f, "{width}x{height}"),
        }
    }
}

impl FromStr for Resolution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("native") {
            return Ok(Resolution::Native);
        }
        let bad = || Error::invalid(format!("resolution '{s}' is not 'native' or WIDTHxHEIGHT"));
        let (w, h) = s.split_once(['x', 'X']).ok_or_else(bad)?;
        let (width, height) = (w.parse().map_err(|_| bad())?, h.parse().map_err(|_| bad())?);
        if width == 0 || height == 0 {
            return Err(bad());
        }
        Ok(Resolution::Target { width, height })
    }
}

impl Resolution {
    /// Horizontal and vertical block sizes for an input of `width × height`.
    pub fn factors(self, width: usize, height: usize) -> (usize, usize) {
        match self {
            Resolution::Native => (1, 1),
            Resolution::Target {
                width: tw,
                height: th,
            } => {
                let f =
                    |src: usize, dst: usize| ((src as f64 / dst as f64).round() as usize).max(1);
                (f(width, tw), f(height, th))
            }
        }
    }
}

fn round_div(sum: u64, n: u64) -> u64 {
    (2 * sum + n) / (2 * n)
}

/// Box-filter average over `fx × fy` blocks; partial blocks at the edges are dropped.
pub fn downscale_image(img: &GrayImage, fx: usize, fy: usize) -> GrayImage {
    let (w, h) = ((img.width() / fx).max(1), (img.height() / fy).max(1));
    let (fx, fy) = (fx.min(img.width()), fy.min(img.height()));
    GrayImage::from_fn(w, h, |x, y| {
        let mut sum = 0u64;
        for yy in y * fy..(y + 1) * fy {
            for xx in x * fx..(x + 1) * fx {
                sum += img.get(xx, yy) as u64;
            }
        }
        round_div(sum, (fx * fy) as u64) as u8
    })
}

/// Mean of the valid disparities of each block, divided by `fx` and rounded;
/// blocks without valid pixels are invalid.
pub fn downscale_disparity(map: &DisparityMap, fx: usize, fy: usize) -> DisparityMap {
    let (w, h) = ((map.width() / fx).max(1), (map.height() / fy).max(1));
    let (fx, fy) = (fx.min(map.width()), fy.min(map.height()));
    let mut out = DisparityMap::filled(w, h, INVALID);
    for y in 0..h {
        for x in 0..w {
            let (mut sum, mut n) = (0u64, 0u64);
            for yy in y * fy..(y + 1) * fy {
                for xx in x * fx..(x + 1) * fx {
                    if let Some(d) = map.disparity(xx, yy) {
                        sum += d as u64;
                        n += 1;
                    }
                }
            }
            if n > 0 {
                out.set(x, y, round_div(sum, n * fx as u64) as u16);
            }
        }
    }
    out
}

pub fn downscale_pair(pair: &StereoPair, resolution: Resolution) -> StereoPair {
    let (fx, fy) = resolution.factors(pair.width(), pair.height());
    if (fx, fy) == (1, 1) {
        return pair.clone();
    }
    StereoPair {
        base: downscale_image(&pair.base, fx, fy),
        matching: downscale_image(&pair.matching, fx, fy),
        ground_truth: pair
            .ground_truth
            .as_ref()
            .map(|g| downscale_disparity(g, fx, fy)),
    }
}
