//! Streaming cost executor.
//!
//! Both images enter one pixel per tick through [`RasterWindow`]s. For SAD and
//! ZSAD the match window buffer is `w × (d_max + w - 1)` wide so every
//! candidate window of the disparity range is resident. For census and rank
//! each image goes through a `w × w` window, the transform is computed once per
//! pixel and the last `d_max` transformed values are kept in a shift register.
//!
//! Match-image costs (for the two-volume L-R check) need base pixels up to
//! `p' + d_max - 1`, so they trail the base costs by `d_max - 1` pixels and the
//! tail of each row is flushed when the last base pixel of the row completes.

use super::{census_bits, check_inputs, CostFunction, CostKind, CostVolume};
use crate::error::Result;
use crate::pixelio::StereoPair;
use crate::window::RasterWindow;

/// Which volume a streamed cost vector belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostSide {
    Base,
    Match,
}

fn census_of(win: &RasterWindow<u8>, n: usize) -> u128 {
    let r = n / 2;
    let center = win.centred(0, r, r);
    census_bits(
        center,
        (0..n).flat_map(|dy| (0..n).map(move |dx| win.centred(0, dx, dy))),
        n * n / 2,
    )
}

fn rank_of(win: &RasterWindow<u8>, n: usize) -> u128 {
    let r = n / 2;
    let center = win.centred(0, r, r);
    let mut count = 0u128;
    for dy in 0..n {
        for dx in 0..n {
            count += (win.centred(0, dx, dy) < center) as u128;
        }
    }
    count
}

fn window_mean(win: &RasterWindow<u8>, off: usize, n: usize) -> i32 {
    let mut s = 0i32;
    for dy in 0..n {
        for dx in 0..n {
            s += win.centred(off, dx, dy) as i32;
        }
    }
    s / (n * n) as i32
}

fn window_cost(
    a: &RasterWindow<u8>,
    off_a: usize,
    b: &RasterWindow<u8>,
    off_b: usize,
    n: usize,
    zero_mean: bool,
) -> u32 {
    let (ma, mb) = if zero_mean {
        (window_mean(a, off_a, n), window_mean(b, off_b, n))
    } else {
        (0, 0)
    };
    let mut sum = 0u32;
    for dy in 0..n {
        for dx in 0..n {
            let va = a.centred(off_a, dx, dy) as i32 - ma;
            let vb = b.centred(off_b, dx, dy) as i32 - mb;
            sum += (va - vb).unsigned_abs();
        }
    }
    sum
}

fn transform_cost(kind: CostKind, a: u128, b: u128) -> u32 {
    match kind {
        CostKind::Census => (a ^ b).count_ones(),
        _ => (a as i64 - b as i64).unsigned_abs() as u32,
    }
}

/// `history[j]` holds the value of the pixel `j` columns left of the current
/// one; a new row starts with the register filled by its first value.
fn shift_history(history: &mut [u128], value: u128, row_start: bool) {
    if row_start {
        history.fill(value);
    } else {
        history.rotate_right(1);
        history[0] = value;
    }
}

/// Runs the streaming cost stage and hands each finished cost vector to `sink`
/// as `(side, x, y, costs)`. Base vectors arrive in raster order; match vectors
/// (only when `with_match`) arrive in raster order too, `d_max - 1` pixels late.
pub fn stream_costs(
    pair: &StereoPair,
    cost_fn: &CostFunction,
    d_max: usize,
    with_match: bool,
    mut sink: impl FnMut(CostSide, usize, usize, &[u16]),
) -> Result<()> {
    check_inputs(pair, cost_fn, d_max)?;
    let (w, h) = (pair.width(), pair.height());
    let n = cost_fn.window;
    let kind = cost_fn.kind;
    let windowed = matches!(kind, CostKind::Sad | CostKind::Zsad);
    let zero_mean = kind == CostKind::Zsad;
    let wide = d_max + n - 1;
    let mut win_b = RasterWindow::new(w, h, n, if windowed && with_match { wide } else { n });
    let mut win_m = RasterWindow::new(w, h, n, if windowed { wide } else { n });
    let mut in_b = pair.base.data().iter().copied();
    let mut in_m = pair.matching.data().iter().copied();
    let mut hist_b = vec![0u128; d_max];
    let mut hist_m = vec![0u128; d_max];
    let cap = (1u32 << cost_fn.cost_width()) - 1;
    let mut costs = vec![0u16; d_max];

    while !win_b.done() {
        let pos = win_b.step(&mut in_b);
        let pos_m = win_m.step(&mut in_m);
        debug_assert_eq!(pos, pos_m);
        let Some((cx, cy)) = pos else { continue };

        if !windowed {
            let (tb, tm) = match kind {
                CostKind::Census => (census_of(&win_b, n), census_of(&win_m, n)),
                _ => (rank_of(&win_b, n), rank_of(&win_m, n)),
            };
            shift_history(&mut hist_b, tb, cx == 0);
            shift_history(&mut hist_m, tm, cx == 0);
        }

        for (d, c) in costs.iter_mut().enumerate() {
            let v = if windowed {
                window_cost(&win_b, 0, &win_m, d.min(cx), n, zero_mean)
            } else {
                transform_cost(kind, hist_b[0], hist_m[d])
            };
            *c = v.min(cap) as u16;
        }
        sink(CostSide::Base, cx, cy, &costs);

        if with_match && cx + 1 >= d_max {
            let first = cx + 1 - d_max;
            let last = if cx == w - 1 { w - 1 } else { first };
            for px in first..=last {
                let lag = cx - px;
                for (d, c) in costs.iter_mut().enumerate() {
                    let base_off = lag.saturating_sub(d);
                    let v = if windowed {
                        window_cost(&win_m, lag, &win_b, base_off, n, zero_mean)
                    } else {
                        transform_cost(kind, hist_m[lag], hist_b[base_off])
                    };
                    *c = v.min(cap) as u16;
                }
                sink(CostSide::Match, px, cy, &costs);
            }
        }
    }
    Ok(())
}

/// Streaming equivalent of [`super::compute_cost_volume`].
pub fn compute_cost_volume_streaming(
    pair: &StereoPair,
    cost_fn: &CostFunction,
    d_max: usize,
) -> Result<CostVolume> {
    let mut vol = CostVolume::zeroed(pair.width(), pair.height(), d_max, cost_fn);
    stream_costs(pair, cost_fn, d_max, false, |_, x, y, c| {
        vol.at_mut(x, y).copy_from_slice(c)
    })?;
    Ok(vol)
}

/// Streaming equivalent of [`super::compute_cost_volume_pair`].
pub fn compute_cost_volume_pair_streaming(
    pair: &StereoPair,
    cost_fn: &CostFunction,
    d_max: usize,
) -> Result<(CostVolume, CostVolume)> {
    let mut base = CostVolume::zeroed(pair.width(), pair.height(), d_max, cost_fn);
    let mut matching = base.clone();
    stream_costs(pair, cost_fn, d_max, true, |side, x, y, c| match side {
        CostSide::Base => base.at_mut(x, y).copy_from_slice(c),
        CostSide::Match => matching.at_mut(x, y).copy_from_slice(c),
    })?;
    Ok((base, matching))
}
