//! Matching cost computation: SAD, ZSAD, census and rank.
//!
//! Conventions shared by every executor:
//! * window reads are edge-replicated (coordinates clamped into the image),
//! * the match window for disparity `d` is centred on column `max(x - d, 0)`,
//! * census strings skip the centre pixel and list neighbours in raster order,
//!   the first neighbour in the most significant bit,
//! * ZSAD window means are floor-divided by the window area.

mod stream;

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rayon::prelude::*;

pub use stream::{
    compute_cost_volume_pair_streaming, compute_cost_volume_streaming, stream_costs, CostSide,
};

use crate::error::{Error, Result};
use crate::hwmodel;
use crate::pixelio::{GrayImage, StereoPair};

/// Largest census window whose bit string fits in a `u128`.
pub const MAX_CENSUS_WINDOW: usize = 11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CostKind {
    Sad,
    Zsad,
    Census,
    Rank,
}

impl CostKind {
    pub const ALL: [CostKind; 4] = [
        CostKind::Sad,
        CostKind::Zsad,
        CostKind::Census,
        CostKind::Rank,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CostKind::Sad => "sad",
            CostKind::Zsad => "zsad",
            CostKind::Census => "census",
            CostKind::Rank => "rank",
        }
    }
}

impl fmt::Display for CostKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CostKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sad" => Ok(CostKind::Sad),
            "zsad" => Ok(CostKind::Zsad),
            "census" => Ok(CostKind::Census),
            "rank" => Ok(CostKind::Rank),
            other => Err(Error::invalid(format!(
                "unknown cost function '{other}' (expected sad, zsad, census or rank)"
            ))),
        }
    }
}

/// A cost function with its square window side length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CostFunction {
    pub kind: CostKind,
    pub window: usize,
}

impl CostFunction {
    pub fn new(kind: CostKind, window: usize) -> Result<Self> {
        let f = Self { kind, window };
        match f.violation() {
            Some(v) => Err(Error::invalid(v)),
            None => Ok(f),
        }
    }

    pub(crate) fn violation(&self) -> Option<String> {
        if self.window < 3 || self.window.is_multiple_of(2) {
            Some(format!(
                "window must be odd and at least 3, got {}",
                self.window
            ))
        } else if self.kind == CostKind::Census && self.window > MAX_CENSUS_WINDOW {
            Some(format!(
                "census window must be at most {MAX_CENSUS_WINDOW}, got {}",
                self.window
            ))
        } else if hwmodel::cost_max(self.kind, self.window) > u16::MAX as u32 {
            Some(format!(
                "{} window {} exceeds the 16-bit cost range",
                self.kind, self.window
            ))
        } else {
            None
        }
    }

    pub fn radius(&self) -> usize {
        self.window / 2
    }

    pub fn cost_max(&self) -> u32 {
        hwmodel::cost_max(self.kind, self.window)
    }

    pub fn cost_width(&self) -> u32 {
        hwmodel::cost_bit_width(self)
    }
}

/// `C(p, d)` for every pixel and disparity, stored `[(y * width + x) * d_max + d]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostVolume {
    width: usize,
    height: usize,
    d_max: usize,
    cost_max: u32,
    cost_width: u32,
    costs: Vec<u16>,
}

impl CostVolume {
    /// Wraps raw costs. Every cost must be at most `cost_max`.
    pub fn from_costs(
        width: usize,
        height: usize,
        d_max: usize,
        cost_max: u32,
        costs: Vec<u16>,
    ) -> Result<Self> {
        if costs.len() != width * height * d_max {
            return Err(Error::Dimension(format!(
                "{width}x{height}x{d_max} volume needs {} costs, got {}",
                width * height * d_max,
                costs.len()
            )));
        }
        if cost_max > u16::MAX as u32 {
            return Err(Error::Range(format!(
                "cost bound {cost_max} exceeds 16 bits"
            )));
        }
        if let Some(c) = costs.iter().find(|&&c| c as u32 > cost_max) {
            return Err(Error::Range(format!("cost {c} exceeds bound {cost_max}")));
        }
        Ok(Self {
            width,
            height,
            d_max,
            cost_max,
            cost_width: hwmodel::bits_for(cost_max as u64),
            costs,
        })
    }

    pub(crate) fn zeroed(
        width: usize,
        height: usize,
        d_max: usize,
        cost_fn: &CostFunction,
    ) -> Self {
        Self {
            width,
            height,
            d_max,
            cost_max: cost_fn.cost_max(),
            cost_width: cost_fn.cost_width(),
            costs: vec![0; width * height * d_max],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn d_max(&self) -> usize {
        self.d_max
    }

    pub fn cost_max(&self) -> u32 {
        self.cost_max
    }

    pub fn cost_width(&self) -> u32 {
        self.cost_width
    }

    pub fn costs(&self) -> &[u16] {
        &self.costs
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, d: usize) -> u16 {
        self.costs[(y * self.width + x) * self.d_max + d]
    }

    /// Cost vector of one pixel.
    #[inline]
    pub fn at(&self, x: usize, y: usize) -> &[u16] {
        let i = (y * self.width + x) * self.d_max;
        &self.costs[i..i + self.d_max]
    }

    #[inline]
    pub(crate) fn at_mut(&mut self, x: usize, y: usize) -> &mut [u16] {
        let i = (y * self.width + x) * self.d_max;
        &mut self.costs[i..i + self.d_max]
    }

    /// Row `y` of the volume, `width × d_max` costs.
    pub fn row(&self, y: usize) -> &[u16] {
        let n = self.width * self.d_max;
        &self.costs[y * n..(y + 1) * n]
    }

    /// Binary dump: width, height, d_max and cost width as little-endian `u32`,
    /// then every cost as a little-endian `u32` in storage order.
    pub fn write_dump<W: Write>(&self, out: W) -> Result<()> {
        write_dump(
            out,
            [
                self.width,
                self.height,
                self.d_max,
                self.cost_width as usize,
            ],
            self.costs.iter().map(|&c| c as u32),
        )
    }

    pub fn read_dump<R: Read>(input: R) -> Result<Self> {
        let (header, values) = read_dump(input)?;
        let [width, height, d_max, cost_width] = header;
        if cost_width == 0 || cost_width > 16 {
            return Err(Error::parse(
                12,
                format!("cost width {cost_width} out of range"),
            ));
        }
        let costs = values
            .into_iter()
            .map(|v| {
                u16::try_from(v).map_err(|_| Error::Range(format!("cost {v} exceeds 16 bits")))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut vol = Self::from_costs(width, height, d_max, (1u32 << cost_width) - 1, costs)?;
        vol.cost_width = cost_width as u32;
        Ok(vol)
    }
}

pub(crate) fn write_dump<W: Write>(
    mut out: W,
    header: [usize; 4],
    values: impl Iterator<Item = u32>,
) -> Result<()> {
    for h in header {
        out.write_all(&(h as u32).to_le_bytes())?;
    }
    for v in values {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub(crate) fn read_dump<R: Read>(mut input: R) -> Result<([usize; 4], Vec<u32>)> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.len() < 16 {
        return Err(Error::parse(bytes.len(), "dump header truncated"));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i * 4..i * 4 + 4].try_into().unwrap()) as usize;
    let header = [word(0), word(1), word(2), word(3)];
    let count = header[0] * header[1] * header[2];
    if bytes.len() != 16 + count * 4 {
        return Err(Error::parse(
            bytes.len().min(16 + count * 4),
            format!("dump payload should hold {count} values"),
        ));
    }
    let values = bytes[16..]
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((header, values))
}

/// Census bit string from a raster-order window (centre included in the
/// iterator; it is skipped).
#[inline]
pub(crate) fn census_bits(
    center: u8,
    window: impl Iterator<Item = u8>,
    center_index: usize,
) -> u128 {
    let mut bits = 0u128;
    for (i, v) in window.enumerate() {
        if i != center_index {
            bits = (bits << 1) | (center > v) as u128;
        }
    }
    bits
}

/// Per-pixel census bit strings, `window² - 1` bits each.
pub fn census_transform(image: &GrayImage, window: usize) -> Vec<u128> {
    assert!(
        window % 2 == 1 && window <= MAX_CENSUS_WINDOW,
        "bad census window {window}"
    );
    let r = (window / 2) as isize;
    let mut out = Vec::with_capacity(image.width() * image.height());
    for y in 0..image.height() as isize {
        for x in 0..image.width() as isize {
            let center = image.get_clamped(x, y);
            let neighbours = (-r..=r).flat_map(|dy| (-r..=r).map(move |dx| (dx, dy)));
            out.push(census_bits(
                center,
                neighbours.map(|(dx, dy)| image.get_clamped(x + dx, y + dy)),
                window * window / 2,
            ));
        }
    }
    out
}

/// Per-pixel count of window pixels strictly darker than the centre.
pub fn rank_transform(image: &GrayImage, window: usize) -> Vec<u16> {
    assert!(window % 2 == 1, "window must be odd");
    let r = (window / 2) as isize;
    let mut out = Vec::with_capacity(image.width() * image.height());
    for y in 0..image.height() as isize {
        for x in 0..image.width() as isize {
            let center = image.get_clamped(x, y);
            let mut n = 0u16;
            for dy in -r..=r {
                for dx in -r..=r {
                    n += (image.get_clamped(x + dx, y + dy) < center) as u16;
                }
            }
            out.push(n);
        }
    }
    out
}

fn check_inputs(pair: &StereoPair, cost_fn: &CostFunction, d_max: usize) -> Result<()> {
    let mut v = Vec::new();
    if let Some(msg) = cost_fn.violation() {
        v.push(msg);
    }
    if d_max == 0 {
        v.push("dmax must be at least 1".into());
    } else if d_max >= pair.width() {
        v.push(format!(
            "dmax={d_max} must be smaller than the image width {}",
            pair.width()
        ));
    }
    if v.is_empty() {
        Ok(())
    } else {
        Err(Error::Validation(v))
    }
}

/// Sum of absolute differences between the window at `(bx, y)` in `a` and the
/// window at `(mx, y)` in `b`, optionally after subtracting each window's mean.
fn window_abs_diff(
    a: &GrayImage,
    bx: isize,
    b: &GrayImage,
    mx: isize,
    y: isize,
    r: isize,
    zero_mean: bool,
) -> u32 {
    let area = ((2 * r + 1) * (2 * r + 1)) as i32;
    let (mean_a, mean_b) = if zero_mean {
        let mut sa = 0i32;
        let mut sb = 0i32;
        for dy in -r..=r {
            for dx in -r..=r {
                sa += a.get_clamped(bx + dx, y + dy) as i32;
                sb += b.get_clamped(mx + dx, y + dy) as i32;
            }
        }
        (sa / area, sb / area)
    } else {
        (0, 0)
    };
    let mut sum = 0u32;
    for dy in -r..=r {
        for dx in -r..=r {
            let va = a.get_clamped(bx + dx, y + dy) as i32 - mean_a;
            let vb = b.get_clamped(mx + dx, y + dy) as i32 - mean_b;
            sum += (va - vb).unsigned_abs();
        }
    }
    sum
}

/// Cost volume of `from` against `to`. `corresponding(x, d)` is the column of
/// `to` compared with column `x` of `from` at disparity `d`.
fn reference_volume(
    from: &GrayImage,
    to: &GrayImage,
    cost_fn: &CostFunction,
    d_max: usize,
    corresponding: impl Fn(isize, usize) -> isize + Sync,
) -> CostVolume {
    let (w, h) = (from.width(), from.height());
    let r = cost_fn.radius() as isize;
    let mut vol = CostVolume::zeroed(w, h, d_max, cost_fn);
    let cap = (1u32 << vol.cost_width) - 1;
    let (ct_from, ct_to) = match cost_fn.kind {
        CostKind::Census => (
            census_transform(from, cost_fn.window),
            census_transform(to, cost_fn.window),
        ),
        _ => (Vec::new(), Vec::new()),
    };
    let (rt_from, rt_to) = match cost_fn.kind {
        CostKind::Rank => (
            rank_transform(from, cost_fn.window),
            rank_transform(to, cost_fn.window),
        ),
        _ => (Vec::new(), Vec::new()),
    };
    vol.costs
        .par_chunks_mut(w * d_max)
        .enumerate()
        .for_each(|(y, row)| {
            for x in 0..w {
                for d in 0..d_max {
                    let tx = corresponding(x as isize, d);
                    let c = match cost_fn.kind {
                        CostKind::Sad | CostKind::Zsad => window_abs_diff(
                            from,
                            x as isize,
                            to,
                            tx,
                            y as isize,
                            r,
                            cost_fn.kind == CostKind::Zsad,
                        ),
                        CostKind::Census => {
                            (ct_from[y * w + x] ^ ct_to[y * w + tx as usize]).count_ones()
                        }
                        CostKind::Rank => (rt_from[y * w + x] as i32
                            - rt_to[y * w + tx as usize] as i32)
                            .unsigned_abs(),
                    };
                    row[x * d_max + d] = c.min(cap) as u16;
                }
            }
        });
    vol
}

/// Reference cost volume of the base image: the base window at `p` against the
/// match window at `p - d`.
pub fn compute_cost_volume(
    pair: &StereoPair,
    cost_fn: &CostFunction,
    d_max: usize,
) -> Result<CostVolume> {
    check_inputs(pair, cost_fn, d_max)?;
    Ok(reference_volume(
        &pair.base,
        &pair.matching,
        cost_fn,
        d_max,
        |x, d| (x - d as isize).max(0),
    ))
}

/// Reference base and match cost volumes. The match volume compares the match
/// window at `p'` against the base window at `p' + d`, clamped to the last column.
pub fn compute_cost_volume_pair(
    pair: &StereoPair,
    cost_fn: &CostFunction,
    d_max: usize,
) -> Result<(CostVolume, CostVolume)> {
    check_inputs(pair, cost_fn, d_max)?;
    let last = pair.width() as isize - 1;
    let base = reference_volume(&pair.base, &pair.matching, cost_fn, d_max, |x, d| {
        (x - d as isize).max(0)
    });
    let matching = reference_volume(&pair.matching, &pair.base, cost_fn, d_max, move |x, d| {
        (x + d as isize).min(last)
    });
    Ok((base, matching))
}
