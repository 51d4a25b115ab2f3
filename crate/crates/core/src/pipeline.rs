//! End-to-end disparity computation.
//!
//! [`run_pipeline`] runs the stages one after another on whole volumes.
//! [`run_pipeline_streamed`] runs them as threads joined by bounded row
//! channels: cost rows flow into the interleaved aggregator, aggregated rows
//! into disparity selection. Both return identical maps.

use std::sync::mpsc::{sync_channel, Receiver, SyncSender};
use std::thread;

use crate::aggregate::{aggregate_interleaved, AggregationParams, InterleavedAggregator};
use crate::cost::{
    compute_cost_volume_pair_streaming, compute_cost_volume_streaming, stream_costs, CostSide,
};
use crate::error::{Error, Result};
use crate::hwmodel::PipelineConfig;
use crate::pixelio::{DisparityMap, StereoPair, INVALID};
use crate::refine::{lr_check, match_disparity_reuse, median_filter, wta, LrMode, ReuseCascade};

/// Rows in flight between two stages.
const CHANNEL_ROWS: usize = 4;

/// Checks `config` against the pair it will run on. The configured frame size
/// only feeds the hardware model and is replaced by the pair's.
fn check(pair: &StereoPair, config: &PipelineConfig) -> Result<()> {
    if config.d_max >= pair.width() {
        return Err(Error::invalid(format!(
            "dmax={} must be smaller than the image width {}",
            config.d_max,
            pair.width()
        )));
    }
    PipelineConfig {
        width: pair.width(),
        height: pair.height(),
        ..*config
    }
    .validate()
}

fn finish(
    base: DisparityMap,
    matching: Option<DisparityMap>,
    config: &PipelineConfig,
) -> Result<DisparityMap> {
    let checked = match matching {
        Some(m) => lr_check(&base, &m, config.refine.lr_threshold)?,
        None => base,
    };
    if config.refine.median {
        median_filter(&checked, config.refine.median_window)
    } else {
        Ok(checked)
    }
}

/// Cost computation, aggregation, disparity selection, the configured L-R
/// check and finally the median filter.
pub fn run_pipeline(pair: &StereoPair, config: &PipelineConfig) -> Result<DisparityMap> {
    check(pair, config)?;
    let (cost_fn, d_max, params) = (&config.cost_fn, config.d_max, config.params);
    let (base, matching) = match config.refine.lr_mode {
        LrMode::Nlr => {
            let vol = compute_cost_volume_streaming(pair, cost_fn, d_max)?;
            (wta(&aggregate_interleaved(&vol, params)), None)
        }
        LrMode::Lr1 => {
            let vol = compute_cost_volume_streaming(pair, cost_fn, d_max)?;
            let agg = aggregate_interleaved(&vol, params);
            (wta(&agg), Some(match_disparity_reuse(&agg)))
        }
        LrMode::Lr2 => {
            let (vb, vm) = compute_cost_volume_pair_streaming(pair, cost_fn, d_max)?;
            let (ab, am) = rayon::join(
                || aggregate_interleaved(&vb, params),
                || aggregate_interleaved(&vm, params),
            );
            (wta(&ab), Some(wta(&am)))
        }
    };
    finish(base, matching, config)
}

type Row<T> = (usize, Vec<T>);

fn aggregation_stage(
    rx: Receiver<Row<u16>>,
    tx: SyncSender<Row<u32>>,
    (w, h, d_max): (usize, usize, usize),
    params: AggregationParams,
) {
    let mut agg = InterleavedAggregator::new(w, h, d_max, params);
    let mut send = |y: usize, sums: &[u32]| {
        let _ = tx.send((y, sums.to_vec()));
    };
    let mut rows = 0;
    for (_, costs) in rx {
        agg.push_row(&costs, &mut send);
        rows += 1;
    }
    // a short frame means the cost stage failed and reports the error itself
    if rows == h {
        agg.finish(&mut send);
    }
}

/// Winner-takes-all per pixel and, when `reuse` is set, the match-disparity
/// cascade on the same stream.
fn disparity_stage(
    rx: Receiver<Row<u32>>,
    (w, h, d_max): (usize, usize, usize),
    reuse: bool,
) -> (DisparityMap, Option<DisparityMap>) {
    let mut base = DisparityMap::filled(w, h, INVALID);
    let mut matching = reuse.then(|| DisparityMap::filled(w, h, INVALID));
    let mut cascade = ReuseCascade::new(d_max);
    for (y, sums) in rx {
        for (x, s) in sums.chunks_exact(d_max).enumerate() {
            let mut best = 0;
            for d in 1..d_max {
                if s[d] < s[best] {
                    best = d;
                }
            }
            base.set(x, y, best as u16);
            if let Some(m) = matching.as_mut() {
                if let Some((px, d)) = cascade.push(s) {
                    m.set(px, y, d);
                }
            }
        }
        if let Some(m) = matching.as_mut() {
            cascade.finish_row(|px, d| m.set(px, y, d));
        }
    }
    (base, matching)
}

/// [`run_pipeline`] as a thread-per-stage dataflow over bounded row channels.
pub fn run_pipeline_streamed(pair: &StereoPair, config: &PipelineConfig) -> Result<DisparityMap> {
    check(pair, config)?;
    let dims = (pair.width(), pair.height(), config.d_max);
    let mode = config.refine.lr_mode;
    let two_volumes = mode == LrMode::Lr2;

    let (base, matching) = thread::scope(|s| -> Result<_> {
        let (cost_b_tx, cost_b_rx) = sync_channel::<Row<u16>>(CHANNEL_ROWS);
        let (sum_b_tx, sum_b_rx) = sync_channel::<Row<u32>>(CHANNEL_ROWS);
        s.spawn(move || aggregation_stage(cost_b_rx, sum_b_tx, dims, config.params));
        let base_sel = s.spawn(move || disparity_stage(sum_b_rx, dims, mode == LrMode::Lr1));

        let mut match_side = None;
        let mut cost_m_tx = None;
        if two_volumes {
            let (tx, cost_m_rx) = sync_channel::<Row<u16>>(CHANNEL_ROWS);
            let (sum_m_tx, sum_m_rx) = sync_channel::<Row<u32>>(CHANNEL_ROWS);
            s.spawn(move || aggregation_stage(cost_m_rx, sum_m_tx, dims, config.params));
            match_side = Some(s.spawn(move || disparity_stage(sum_m_rx, dims, false)));
            cost_m_tx = Some(tx);
        }

        let (w, d_max) = (dims.0, dims.2);
        let mut row_b = Vec::with_capacity(w * d_max);
        let mut row_m = Vec::with_capacity(w * d_max);
        let streamed = stream_costs(
            pair,
            &config.cost_fn,
            d_max,
            two_volumes,
            |side, x, y, costs| {
                let (row, tx) = match side {
                    CostSide::Base => (&mut row_b, Some(&cost_b_tx)),
                    CostSide::Match => (&mut row_m, cost_m_tx.as_ref()),
                };
                row.extend_from_slice(costs);
                if x == w - 1 {
                    if let Some(tx) = tx {
                        let _ = tx.send((y, std::mem::replace(row, Vec::with_capacity(w * d_max))));
                    }
                }
            },
        );
        drop(cost_b_tx);
        drop(cost_m_tx);
        streamed?;

        let (base, reused) = base_sel.join().expect("disparity stage panicked");
        let matching = match match_side {
            Some(handle) => Some(handle.join().expect("disparity stage panicked").0),
            None => reused,
        };
        Ok((base, matching))
    })?;
    finish(base, matching, config)
}
