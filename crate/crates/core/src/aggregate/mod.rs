//! Four-direction path aggregation.
//!
//! Path costs follow the usual semi-global recursion along the four directions
//! that are causal in raster order: left (0°), up-left (45°), up (90°) and
//! up-right (135°). A path restarts with `L = C` wherever its previous pixel
//! lies outside the image. Disparity neighbours `d ± 1` outside `0..d_max` are
//! not candidates.
//!
//! [`PathState`] is the raster-order executor: one line buffer of previous-row
//! path costs per diagonal/vertical direction and a register for the 0° path.
//! [`interleave`] reschedules the same computation so that pixels that depend
//! on each other along 0° are two slots apart.

pub mod interleave;

use std::io::Write;

pub use interleave::{
    aggregate_interleaved, dependency_distance, interleaved_schedule, raster_schedule,
    InterleavedAggregator,
};

use crate::cost::{write_dump, CostFunction, CostVolume};
use crate::error::{Error, Result};
use crate::hwmodel::bits_for;

/// Smoothness penalties: `p1` for a one-level disparity change, `p2` for larger jumps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AggregationParams {
    pub p1: u32,
    pub p2: u32,
}

impl AggregationParams {
    /// Requires `0 < p1 < p2`.
    pub fn new(p1: u32, p2: u32) -> Result<Self> {
        if p1 == 0 || p2 <= p1 {
            return Err(Error::invalid(format!(
                "penalties must satisfy 0 < p1 < p2, got p1={p1} p2={p2}"
            )));
        }
        Ok(Self { p1, p2 })
    }

    /// Skips the ordering check; only meant for degenerate-penalty experiments.
    pub fn unchecked(p1: u32, p2: u32) -> Self {
        Self { p1, p2 }
    }

    /// Default penalties: 7 and 86 for a cost range of 24 (census 5×5), scaled
    /// linearly with the cost range of other functions.
    pub fn default_for(cost_fn: &CostFunction) -> Self {
        let cmax = cost_fn.cost_max() as u64;
        let scaled = |base: u64| ((base * cmax * 2 + 24) / 48).max(1) as u32;
        let p1 = scaled(7);
        let p2 = scaled(86).max(p1 + 1);
        Self { p1, p2 }
    }
}

/// The four aggregation directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    D0,
    D45,
    D90,
    D135,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::D0,
        Direction::D45,
        Direction::D90,
        Direction::D135,
    ];

    /// Offset from a pixel to its predecessor on the path.
    pub fn predecessor(self) -> (isize, isize) {
        match self {
            Direction::D0 => (-1, 0),
            Direction::D45 => (-1, -1),
            Direction::D90 => (0, -1),
            Direction::D135 => (1, -1),
        }
    }
}

/// One step of the path recursion. `prev = None` restarts the path.
#[inline]
pub(crate) fn path_step(
    prev: Option<&[u32]>,
    cur: &[u16],
    params: AggregationParams,
    out: &mut [u32],
) {
    let Some(prev) = prev else {
        for (o, &c) in out.iter_mut().zip(cur) {
            *o = c as u32;
        }
        return;
    };
    let n = cur.len();
    let min_prev = prev.iter().copied().min().unwrap_or(0);
    let jump = min_prev + params.p2;
    for d in 0..n {
        let mut best = prev[d].min(jump);
        if d > 0 {
            best = best.min(prev[d - 1] + params.p1);
        }
        if d + 1 < n {
            best = best.min(prev[d + 1] + params.p1);
        }
        out[d] = cur[d] as u32 + best - min_prev;
    }
}

/// Path cost of a pixel from its predecessor's path costs `prev` and its own
/// matching costs `cur`.
pub fn path_recurrence(prev: &[u32], cur: &[u16], params: AggregationParams) -> Vec<u32> {
    assert_eq!(prev.len(), cur.len(), "cost vectors differ in length");
    let mut out = vec![0; cur.len()];
    path_step(Some(prev), cur, params, &mut out);
    out
}

/// `S(p, d)`, the sum of the four path costs, stored like [`CostVolume`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AggregatedVolume {
    width: usize,
    height: usize,
    d_max: usize,
    sum_width: u32,
    sums: Vec<u32>,
}

impl AggregatedVolume {
    pub fn from_sums(width: usize, height: usize, d_max: usize, sums: Vec<u32>) -> Result<Self> {
        if sums.len() != width * height * d_max {
            return Err(Error::Dimension(format!(
                "{width}x{height}x{d_max} volume needs {} sums, got {}",
                width * height * d_max,
                sums.len()
            )));
        }
        let max = sums.iter().copied().max().unwrap_or(0);
        Ok(Self {
            width,
            height,
            d_max,
            sum_width: bits_for(max as u64),
            sums,
        })
    }

    fn for_volume(volume: &CostVolume, params: AggregationParams) -> Self {
        let path_max = volume.cost_max() as u64 + params.p2 as u64;
        Self {
            width: volume.width(),
            height: volume.height(),
            d_max: volume.d_max(),
            sum_width: bits_for(4 * path_max),
            sums: vec![0; volume.costs().len()],
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

    pub fn sum_width(&self) -> u32 {
        self.sum_width
    }

    pub fn sums(&self) -> &[u32] {
        &self.sums
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, d: usize) -> u32 {
        self.sums[(y * self.width + x) * self.d_max + d]
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> &[u32] {
        let i = (y * self.width + x) * self.d_max;
        &self.sums[i..i + self.d_max]
    }

    pub(crate) fn row_mut(&mut self, y: usize) -> &mut [u32] {
        let n = self.width * self.d_max;
        &mut self.sums[y * n..(y + 1) * n]
    }

    /// Same layout as [`CostVolume::write_dump`], with the sum width in the header.
    pub fn write_dump<W: Write>(&self, out: W) -> Result<()> {
        write_dump(
            out,
            [self.width, self.height, self.d_max, self.sum_width as usize],
            self.sums.iter().copied(),
        )
    }
}

/// Previous-row path costs of the three directions that look one row up.
#[derive(Debug, Clone)]
pub(crate) struct RowBuffers {
    d_max: usize,
    l45: Vec<u32>,
    l90: Vec<u32>,
    l135: Vec<u32>,
}

impl RowBuffers {
    pub(crate) fn new(width: usize, d_max: usize) -> Self {
        Self {
            d_max,
            l45: vec![0; width * d_max],
            l90: vec![0; width * d_max],
            l135: vec![0; width * d_max],
        }
    }

    #[inline]
    fn col(buf: &[u32], d: usize, x: usize) -> &[u32] {
        &buf[x * d..(x + 1) * d]
    }
}

/// Working registers of one raster-order lane.
#[derive(Debug, Clone)]
pub(crate) struct Lane {
    /// 0° path cost of the previous pixel in the row.
    reg0: Vec<u32>,
    /// 45° path cost of the up-left pixel, saved before its column was overwritten.
    diag45: Vec<u32>,
    paths: [Vec<u32>; 4],
}

impl Lane {
    pub(crate) fn new(d_max: usize) -> Self {
        Self {
            reg0: vec![0; d_max],
            diag45: vec![0; d_max],
            paths: std::array::from_fn(|_| vec![0; d_max]),
        }
    }
}

/// Predecessor path costs for one pixel; `None` restarts that path.
pub(crate) struct Predecessors<'a> {
    pub d0: Option<&'a [u32]>,
    pub d45: Option<&'a [u32]>,
    pub d90: Option<&'a [u32]>,
    pub d135: Option<&'a [u32]>,
}

/// Computes the four path costs of one pixel into `lane.paths` and their sum
/// into `sums`.
pub(crate) fn aggregate_pixel(
    costs: &[u16],
    params: AggregationParams,
    prev: Predecessors<'_>,
    paths: &mut [Vec<u32>; 4],
    sums: &mut [u32],
) {
    let [l0, l45, l90, l135] = paths;
    path_step(prev.d0, costs, params, l0);
    path_step(prev.d45, costs, params, l45);
    path_step(prev.d90, costs, params, l90);
    path_step(prev.d135, costs, params, l135);
    for d in 0..costs.len() {
        sums[d] = l0[d] + l45[d] + l90[d] + l135[d];
    }
}

/// Raster-order aggregation state: three path-cost line buffers and the 0° register.
#[derive(Debug, Clone)]
pub struct PathState {
    width: usize,
    params: AggregationParams,
    rows: RowBuffers,
    lane: Lane,
}

impl PathState {
    pub fn new(width: usize, d_max: usize, params: AggregationParams) -> Self {
        Self {
            width,
            params,
            rows: RowBuffers::new(width, d_max),
            lane: Lane::new(d_max),
        }
    }

    /// Aggregates pixel `(x, y)`. Pixels must arrive in raster order.
    pub fn push(&mut self, x: usize, y: usize, costs: &[u16], sums: &mut [u32]) {
        let d = self.rows.d_max;
        let rows = &mut self.rows;
        let lane = &mut self.lane;
        let prev = Predecessors {
            d0: (x > 0).then_some(&lane.reg0[..]),
            d45: (x > 0 && y > 0).then_some(&lane.diag45[..]),
            d90: (y > 0).then(|| RowBuffers::col(&rows.l90, d, x)),
            d135: (y > 0 && x + 1 < self.width).then(|| RowBuffers::col(&rows.l135, d, x + 1)),
        };
        aggregate_pixel(costs, self.params, prev, &mut lane.paths, sums);
        let span = x * d..(x + 1) * d;
        lane.diag45.copy_from_slice(&rows.l45[span.clone()]);
        rows.l45[span.clone()].copy_from_slice(&lane.paths[1]);
        rows.l90[span.clone()].copy_from_slice(&lane.paths[2]);
        rows.l135[span].copy_from_slice(&lane.paths[3]);
        lane.reg0.copy_from_slice(&lane.paths[0]);
    }

    /// Path costs of the last pushed pixel, in [`Direction::ALL`] order.
    pub fn last_paths(&self) -> [&[u32]; 4] {
        let p = &self.lane.paths;
        [&p[0], &p[1], &p[2], &p[3]]
    }

    /// Previous-row line buffer of a direction (`D0` has none and returns the register).
    pub fn line_buffer(&self, dir: Direction) -> &[u32] {
        match dir {
            Direction::D0 => &self.lane.reg0,
            Direction::D45 => &self.rows.l45,
            Direction::D90 => &self.rows.l90,
            Direction::D135 => &self.rows.l135,
        }
    }
}

/// Raster-order aggregation of a whole volume.
pub fn aggregate(volume: &CostVolume, params: AggregationParams) -> AggregatedVolume {
    let mut out = AggregatedVolume::for_volume(volume, params);
    let d = volume.d_max();
    let mut state = PathState::new(volume.width(), d, params);
    for y in 0..volume.height() {
        let row = out.row_mut(y);
        for x in 0..volume.width() {
            state.push(x, y, volume.at(x, y), &mut row[x * d..(x + 1) * d]);
        }
    }
    out
}
