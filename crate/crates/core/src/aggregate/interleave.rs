//! Interleaved aggregation schedule.
//!
//! The row is split into a left half `0..h` and a right half `h..2h`, processed
//! by two lanes whose slots alternate: `0, h, 1, h+1, ...`. The left lane works
//! on row `k` while the right lane works on row `k - 1`, so at every step all
//! previous-row path costs a lane reads have already been written. Two edge
//! registers carry the 0° and 45° path costs of column `h - 1` across the lane
//! boundary. Columns past the image width are bubbles. Finished rows are
//! reassembled from a double-buffered left half and the right half and leave
//! one step after their left half was computed.

use super::{aggregate_pixel, AggregatedVolume, AggregationParams, Lane, Predecessors, RowBuffers};
use crate::cost::CostVolume;
use crate::error::{Error, Result};

/// Column order of the interleaved schedule for an image `width` wide.
pub fn interleaved_schedule(width: usize) -> Vec<usize> {
    let h = width.div_ceil(2);
    (0..h)
        .flat_map(|j| [j, h + j])
        .filter(|&x| x < width)
        .collect()
}

pub fn raster_schedule(width: usize) -> Vec<usize> {
    (0..width).collect()
}

/// Smallest number of slots between a pixel and its left neighbour, counting
/// forward through the row and into the next repetition of the schedule.
/// `None` for rows narrower than two pixels.
pub fn dependency_distance(schedule: &[usize], width: usize) -> Result<Option<usize>> {
    if schedule.len() != width {
        return Err(Error::invalid(format!(
            "schedule has {} slots for a row of {width}",
            schedule.len()
        )));
    }
    let mut pos = vec![usize::MAX; width];
    for (slot, &x) in schedule.iter().enumerate() {
        if x >= width || pos[x] != usize::MAX {
            return Err(Error::invalid(format!(
                "schedule is not a permutation of 0..{width}"
            )));
        }
        pos[x] = slot;
    }
    let period = schedule.len();
    Ok((1..width)
        .map(|x| {
            if pos[x] > pos[x - 1] {
                pos[x] - pos[x - 1]
            } else {
                pos[x] + period - pos[x - 1]
            }
        })
        .min())
}

/// Row-at-a-time interleaved aggregator.
#[derive(Debug, Clone)]
pub struct InterleavedAggregator {
    width: usize,
    height: usize,
    d_max: usize,
    half: usize,
    params: AggregationParams,
    rows: RowBuffers,
    left: Lane,
    right: Lane,
    edge0: Vec<u32>,
    edge45: Vec<u32>,
    prev_row: Vec<u16>,
    pending_left: [Vec<u32>; 2],
    pending_right: Vec<u32>,
    out_row: Vec<u32>,
    step: usize,
}

impl InterleavedAggregator {
    pub fn new(width: usize, height: usize, d_max: usize, params: AggregationParams) -> Self {
        let half = width.div_ceil(2).max(2);
        Self {
            width,
            height,
            d_max,
            half,
            params,
            rows: RowBuffers::new(width, d_max),
            left: Lane::new(d_max),
            right: Lane::new(d_max),
            edge0: vec![0; d_max],
            edge45: vec![0; d_max],
            prev_row: Vec::new(),
            pending_left: [vec![0; half * d_max], vec![0; half * d_max]],
            pending_right: vec![0; half * d_max],
            out_row: vec![0; width * d_max],
            step: 0,
        }
    }

    /// Feeds the costs of the next row. `emit(y, sums)` receives each finished
    /// row, which lags the input by one row.
    pub fn push_row(&mut self, costs: &[u16], emit: impl FnMut(usize, &[u32])) {
        assert_eq!(costs.len(), self.width * self.d_max, "row length");
        assert!(self.step < self.height, "more rows than the frame height");
        let prev = std::mem::take(&mut self.prev_row);
        let right = (self.step > 0).then_some(&prev[..]);
        self.run_step(Some(costs), right, emit);
        self.prev_row = prev;
        self.prev_row.clear();
        self.prev_row.extend_from_slice(costs);
    }

    /// Drains the last row after all rows were pushed.
    pub fn finish(&mut self, emit: impl FnMut(usize, &[u32])) {
        assert_eq!(self.step, self.height, "frame incomplete");
        let prev = std::mem::take(&mut self.prev_row);
        if self.height > 0 {
            self.run_step(None, Some(&prev), emit);
        }
    }

    fn run_step(
        &mut self,
        left_in: Option<&[u16]>,
        right_in: Option<&[u16]>,
        mut emit: impl FnMut(usize, &[u32]),
    ) {
        let k = self.step;
        let (w, d, half, params) = (self.width, self.d_max, self.half, self.params);
        let parity = k % 2;
        for j in 0..half {
            // left lane, row k, column j
            if let (Some(costs), true) = (left_in, j < w) {
                let x = j;
                let rows = &mut self.rows;
                let lane = &mut self.left;
                let prev = Predecessors {
                    d0: (x > 0).then_some(&lane.reg0[..]),
                    d45: (x > 0 && k > 0).then_some(&lane.diag45[..]),
                    d90: (k > 0).then(|| RowBuffers::col(&rows.l90, d, x)),
                    d135: (k > 0 && x + 1 < w).then(|| RowBuffers::col(&rows.l135, d, x + 1)),
                };
                let sums = &mut self.pending_left[parity][x * d..(x + 1) * d];
                aggregate_pixel(
                    &costs[x * d..(x + 1) * d],
                    params,
                    prev,
                    &mut lane.paths,
                    sums,
                );
                let span = x * d..(x + 1) * d;
                lane.diag45.copy_from_slice(&rows.l45[span.clone()]);
                if x == half - 1 {
                    self.edge45.copy_from_slice(&rows.l45[span.clone()]);
                    self.edge0.copy_from_slice(&lane.paths[0]);
                }
                rows.l45[span.clone()].copy_from_slice(&lane.paths[1]);
                rows.l90[span.clone()].copy_from_slice(&lane.paths[2]);
                rows.l135[span].copy_from_slice(&lane.paths[3]);
                lane.reg0.copy_from_slice(&lane.paths[0]);
            }
            // right lane, row k - 1, column half + j
            let x = half + j;
            if let (Some(costs), true) = (right_in, x < w) {
                let y = k - 1;
                let rows = &mut self.rows;
                let lane = &mut self.right;
                let (reg0, diag45) = if j == 0 {
                    (&self.edge0[..], &self.edge45[..])
                } else {
                    (&lane.reg0[..], &lane.diag45[..])
                };
                let prev = Predecessors {
                    d0: Some(reg0),
                    d45: (y > 0).then_some(diag45),
                    d90: (y > 0).then(|| RowBuffers::col(&rows.l90, d, x)),
                    d135: (y > 0 && x + 1 < w).then(|| RowBuffers::col(&rows.l135, d, x + 1)),
                };
                let sums = &mut self.pending_right[j * d..(j + 1) * d];
                aggregate_pixel(
                    &costs[x * d..(x + 1) * d],
                    params,
                    prev,
                    &mut lane.paths,
                    sums,
                );
                let span = x * d..(x + 1) * d;
                lane.diag45.copy_from_slice(&rows.l45[span.clone()]);
                rows.l45[span.clone()].copy_from_slice(&lane.paths[1]);
                rows.l90[span.clone()].copy_from_slice(&lane.paths[2]);
                rows.l135[span].copy_from_slice(&lane.paths[3]);
                lane.reg0.copy_from_slice(&lane.paths[0]);
            }
        }
        if k > 0 {
            let split = half.min(w) * d;
            self.out_row[..split].copy_from_slice(&self.pending_left[1 - parity][..split]);
            self.out_row[split..].copy_from_slice(&self.pending_right[..w * d - split]);
            emit(k - 1, &self.out_row);
        }
        self.step += 1;
    }
}

/// Interleaved aggregation of a whole volume; identical to [`super::aggregate`].
pub fn aggregate_interleaved(volume: &CostVolume, params: AggregationParams) -> AggregatedVolume {
    let mut out = AggregatedVolume::for_volume(volume, params);
    let mut agg =
        InterleavedAggregator::new(volume.width(), volume.height(), volume.d_max(), params);
    let mut store = |y: usize, sums: &[u32]| out.row_mut(y).copy_from_slice(sums);
    for y in 0..volume.height() {
        agg.push_row(volume.row(y), &mut store);
    }
    agg.finish(&mut store);
    out
}
