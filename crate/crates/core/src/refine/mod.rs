//! Disparity selection, left-right consistency, median filtering and the D1 metric.

use std::fmt;
use std::str::FromStr;

use crate::aggregate::AggregatedVolume;
use crate::error::{Error, Result};
use crate::pixelio::{DisparityMap, INVALID};
use crate::window::RasterWindow;

/// Left-right consistency variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LrMode {
    /// No check.
    Nlr,
    /// Match disparities derived from the base aggregated volume.
    Lr1,
    /// Match disparities from a second aggregation over the match cost volume.
    Lr2,
}

impl LrMode {
    pub const ALL: [LrMode; 3] = [LrMode::Nlr, LrMode::Lr1, LrMode::Lr2];

    pub fn name(self) -> &'static str {
        match self {
            LrMode::Nlr => "nlr",
            LrMode::Lr1 => "lr1",
            LrMode::Lr2 => "lr2",
        }
    }
}

impl fmt::Display for LrMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LrMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LrMode::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                Error::invalid(format!("unknown lr mode '{s}' (expected nlr, lr1 or lr2)"))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RefinementConfig {
    pub lr_mode: LrMode,
    pub lr_threshold: u32,
    pub median: bool,
    pub median_window: usize,
}

impl Default for RefinementConfig {
    fn default() -> Self {
        Self {
            lr_mode: LrMode::Nlr,
            lr_threshold: 1,
            median: true,
            median_window: 3,
        }
    }
}

impl RefinementConfig {
    pub(crate) fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.median_window < 3 || self.median_window.is_multiple_of(2) {
            v.push(format!(
                "median_win must be odd and at least 3, got {}",
                self.median_window
            ));
        }
        v
    }
}

fn argmin(values: impl Iterator<Item = u32>) -> u16 {
    let mut best = (u32::MAX, 0u16);
    for (d, v) in values.enumerate() {
        if v < best.0 {
            best = (v, d as u16);
        }
    }
    best.1
}

/// Winner-takes-all: smallest `d` among the minima of `S(p, ·)`.
pub fn wta(agg: &AggregatedVolume) -> DisparityMap {
    let (w, h) = (agg.width(), agg.height());
    let data = (0..w * h)
        .map(|i| argmin(agg.at(i % w, i / w).iter().copied()))
        .collect();
    DisparityMap::new(w, h, data).expect("dimensions match")
}

/// Match-image disparities by direct search of `S(p' + d, d)`.
pub fn match_disparity_reuse_naive(agg: &AggregatedVolume) -> DisparityMap {
    let (w, h, dm) = (agg.width(), agg.height(), agg.d_max());
    let mut map = DisparityMap::filled(w, h, INVALID);
    for y in 0..h {
        for x in 0..w {
            let reach = dm.min(w - x);
            map.set(x, y, argmin((0..reach).map(|d| agg.get(x + d, y, d))));
        }
    }
    map
}

/// Running minima for the match pixels still receiving candidates.
/// Slot `d` belongs to match pixel `x - d` while base pixel `x` is processed.
#[derive(Debug, Clone)]
pub struct ReuseCascade {
    best: Vec<(u32, u16)>,
    x: usize,
}

impl ReuseCascade {
    pub fn new(d_max: usize) -> Self {
        Self {
            best: vec![(u32::MAX, 0); d_max],
            x: 0,
        }
    }

    /// Takes `S(x, ·)` of the next base pixel of the row and returns the match
    /// pixel that just received its last candidate.
    pub fn push(&mut self, sums: &[u32]) -> Option<(usize, u16)> {
        for (d, (slot, &s)) in self.best.iter_mut().zip(sums).enumerate() {
            if s < slot.0 {
                *slot = (s, d as u16);
            }
        }
        let dm = self.best.len();
        let done = (self.x + 1 >= dm).then(|| (self.x + 1 - dm, self.best[dm - 1].1));
        self.best.rotate_right(1);
        self.best[0] = (u32::MAX, 0);
        self.x += 1;
        done
    }

    /// Ends the row: emits the remaining match pixels right to left and resets.
    pub fn finish_row(&mut self, mut emit: impl FnMut(usize, u16)) {
        let x = self.x;
        for (d, slot) in self.best.iter().enumerate().skip(1) {
            if d <= x {
                emit(x - d, slot.1);
            }
        }
        self.best.fill((u32::MAX, 0));
        self.x = 0;
    }
}

/// Match-image disparities from the base aggregated volume, computed with the
/// register cascade in one raster pass.
pub fn match_disparity_reuse(agg: &AggregatedVolume) -> DisparityMap {
    let (w, h) = (agg.width(), agg.height());
    let mut map = DisparityMap::filled(w, h, INVALID);
    let mut cascade = ReuseCascade::new(agg.d_max());
    for y in 0..h {
        for x in 0..w {
            if let Some((px, d)) = cascade.push(agg.at(x, y)) {
                map.set(px, y, d);
            }
        }
        cascade.finish_row(|px, d| map.set(px, y, d));
    }
    map
}

fn same_size(a: &DisparityMap, b: &DisparityMap, what: &str) -> Result<()> {
    if (a.width(), a.height()) != (b.width(), b.height()) {
        return Err(Error::Dimension(format!(
            "{what}: {}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    Ok(())
}

/// Keeps `d_base(p)` where the match pixel `p - d_base(p)` agrees within
/// `threshold`; everything else becomes [`INVALID`].
pub fn lr_check(
    d_base: &DisparityMap,
    d_match: &DisparityMap,
    threshold: u32,
) -> Result<DisparityMap> {
    same_size(d_base, d_match, "lr check")?;
    let mut out = DisparityMap::filled(d_base.width(), d_base.height(), INVALID);
    for y in 0..d_base.height() {
        for x in 0..d_base.width() {
            let Some(db) = d_base.disparity(x, y) else {
                continue;
            };
            let Some(mx) = x.checked_sub(db as usize) else {
                continue;
            };
            if let Some(dm) = d_match.disparity(mx, y) {
                if db.abs_diff(dm) as u32 <= threshold {
                    out.set(x, y, db);
                }
            }
        }
    }
    Ok(out)
}

/// Median of the valid values in each clamped `window × window` neighbourhood.
/// Fewer than half valid gives [`INVALID`]; even counts take the lower middle.
pub fn median_filter(map: &DisparityMap, window: usize) -> Result<DisparityMap> {
    if window < 3 || window.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "median window must be odd and at least 3, got {window}"
        )));
    }
    let (w, h) = (map.width(), map.height());
    let need = (window * window).div_ceil(2);
    let mut out = DisparityMap::filled(w, h, INVALID);
    let mut win = RasterWindow::<u16>::new(w, h, window, window);
    let mut input = map.data().iter().copied();
    let mut vals = Vec::with_capacity(window * window);
    while !win.done() {
        let Some((x, y)) = win.step(&mut input) else {
            continue;
        };
        vals.clear();
        for dy in 0..window {
            for dx in 0..window {
                let v = win.at(dx, dy);
                if v != INVALID {
                    vals.push(v);
                }
            }
        }
        if vals.len() >= need {
            let mid = (vals.len() - 1) / 2;
            out.set(x, y, *vals.select_nth_unstable(mid).1);
        }
    }
    Ok(out)
}

/// Outcome of a D1 evaluation; reports over several images pool their counts.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct D1Report {
    pub d1_all: f64,
    pub evaluated_pixels: u64,
    pub erroneous_pixels: u64,
}

impl D1Report {
    pub fn from_counts(erroneous_pixels: u64, evaluated_pixels: u64) -> Self {
        let d1_all = if evaluated_pixels == 0 {
            0.0
        } else {
            erroneous_pixels as f64 / evaluated_pixels as f64
        };
        Self {
            d1_all,
            evaluated_pixels,
            erroneous_pixels,
        }
    }

    pub fn merge(self, other: D1Report) -> Self {
        Self::from_counts(
            self.erroneous_pixels + other.erroneous_pixels,
            self.evaluated_pixels + other.evaluated_pixels,
        )
    }
}

pub const D1_ABS_THRESHOLD: f64 = 3.0;
pub const D1_REL_THRESHOLD: f64 = 0.05;

/// True when an estimate counts as wrong under the 3 px / 5 % rule.
pub fn is_d1_error(estimate: u16, truth: u16) -> bool {
    if estimate == INVALID {
        return true;
    }
    let err = (estimate as f64 - truth as f64).abs();
    err > D1_ABS_THRESHOLD && err > D1_REL_THRESHOLD * truth as f64
}

/// D1 over pixels with valid ground truth, restricted to `mask` when given.
pub fn d1_error(
    estimate: &DisparityMap,
    truth: &DisparityMap,
    mask: Option<&[bool]>,
) -> Result<D1Report> {
    same_size(estimate, truth, "d1 evaluation")?;
    if let Some(m) = mask {
        if m.len() != truth.data().len() {
            return Err(Error::Dimension(format!(
                "mask has {} pixels, maps have {}",
                m.len(),
                truth.data().len()
            )));
        }
    }
    let (mut bad, mut total) = (0u64, 0u64);
    for (i, (&e, &g)) in estimate.data().iter().zip(truth.data()).enumerate() {
        if g == INVALID || mask.is_some_and(|m| !m[i]) {
            continue;
        }
        total += 1;
        bad += is_d1_error(e, g) as u64;
    }
    Ok(D1Report::from_counts(bad, total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn agg(w: usize, h: usize, d: usize, sums: Vec<u32>) -> AggregatedVolume {
        AggregatedVolume::from_sums(w, h, d, sums).unwrap()
    }

    fn map(w: usize, h: usize, data: &[u16]) -> DisparityMap {
        DisparityMap::new(w, h, data.to_vec()).unwrap()
    }

    #[test]
    fn wta_picks_smallest_minimum() {
        assert_eq!(wta(&agg(1, 1, 3, vec![5, 2, 7])).data(), &[1]);
        assert_eq!(wta(&agg(1, 1, 3, vec![3, 3, 9])).data(), &[0]);
    }

    #[test]
    fn reuse_hand_example() {
        let a = agg(3, 1, 2, vec![4, 9, 6, 1, 8, 7]);
        let naive = match_disparity_reuse_naive(&a);
        assert_eq!(naive.data(), &[1, 0, 0]);
        assert_eq!(match_disparity_reuse(&a), naive);
    }

    #[test]
    fn lr_check_cases() {
        // x = 12 carries d_base = 10, compared with d_match at x = 2
        let mut base = DisparityMap::filled(16, 1, 0);
        let mut matching = DisparityMap::filled(16, 1, 0);
        base.set(12, 0, 10);
        matching.set(2, 0, 10);
        assert_eq!(lr_check(&base, &matching, 1).unwrap().get(12, 0), 10);
        matching.set(2, 0, 12);
        assert_eq!(lr_check(&base, &matching, 1).unwrap().get(12, 0), INVALID);
        matching.set(2, 0, 11);
        assert_eq!(lr_check(&base, &matching, 1).unwrap().get(12, 0), 10);
        base.set(3, 0, 5);
        assert_eq!(lr_check(&base, &matching, 1).unwrap().get(3, 0), INVALID);
        assert!(lr_check(&base, &DisparityMap::filled(15, 1, 0), 1).is_err());
    }

    #[test]
    fn median_cases() {
        let constant = DisparityMap::filled(5, 4, 7);
        assert_eq!(median_filter(&constant, 3).unwrap(), constant);
        let mut outlier = DisparityMap::filled(3, 3, 4);
        outlier.set(1, 1, 60);
        assert_eq!(median_filter(&outlier, 3).unwrap().get(1, 1), 4);
        let sparse = map(3, 1, &[INVALID, 2, INVALID]);
        // every clamped window holds 3 copies of the centre row: 6 invalid, 3 valid
        assert!(median_filter(&sparse, 3)
            .unwrap()
            .data()
            .iter()
            .all(|&v| v == INVALID));
        assert!(median_filter(&constant, 4).is_err());
        assert!(median_filter(&constant, 1).is_err());
    }

    #[test]
    fn d1_rule() {
        assert!(is_d1_error(10, 14));
        assert!(!is_d1_error(100, 103));
        // 4 px off at 100 is below 5 %
        assert!(!is_d1_error(96, 100));
        assert!(is_d1_error(INVALID, 3));
        let gt = map(2, 2, &[14, 103, INVALID, 20]);
        let est = map(2, 2, &[10, 100, 0, INVALID]);
        let r = d1_error(&est, &gt, None).unwrap();
        assert_eq!((r.erroneous_pixels, r.evaluated_pixels), (2, 3));
        let masked = d1_error(&est, &gt, Some(&[true, true, true, false])).unwrap();
        assert_eq!((masked.erroneous_pixels, masked.evaluated_pixels), (1, 2));
        assert_eq!(d1_error(&gt, &gt, None).unwrap().d1_all, 0.0);
        assert_eq!(r.merge(masked), D1Report::from_counts(3, 5));
    }

    fn sort_median(m: &DisparityMap, win: usize) -> DisparityMap {
        let (w, h) = (m.width() as isize, m.height() as isize);
        let r = (win / 2) as isize;
        let mut out = DisparityMap::filled(m.width(), m.height(), INVALID);
        for y in 0..h {
            for x in 0..w {
                let mut v: Vec<u16> = (-r..=r)
                    .flat_map(|dy| (-r..=r).map(move |dx| (dx, dy)))
                    .map(|(dx, dy)| {
                        m.get(
                            (x + dx).clamp(0, w - 1) as usize,
                            (y + dy).clamp(0, h - 1) as usize,
                        )
                    })
                    .filter(|&v| v != INVALID)
                    .collect();
                v.sort();
                if 2 * v.len() >= win * win {
                    out.set(x as usize, y as usize, v[(v.len() - 1) / 2]);
                }
            }
        }
        out
    }

    proptest! {
        #[test]
        fn median_matches_sort_oracle(
            w in 1usize..10,
            h in 1usize..10,
            win in prop::sample::select(vec![3usize, 5, 7]),
            seed in proptest::collection::vec(prop::option::weighted(0.8, 0u16..20), 100),
        ) {
            let data: Vec<u16> = (0..w * h).map(|i| seed[i].unwrap_or(INVALID)).collect();
            let m = map(w, h, &data);
            prop_assert_eq!(median_filter(&m, win).unwrap(), sort_median(&m, win));
        }

        #[test]
        fn reuse_cascade_matches_naive(
            w in 2usize..20,
            h in 1usize..4,
            d in 1usize..8,
            seed in proptest::collection::vec(0u32..12, 1..200),
        ) {
            let d = d.min(w - 1);
            let sums = (0..w * h * d).map(|i| seed[i % seed.len()] ^ (i as u32 % 5)).collect();
            let a = agg(w, h, d, sums);
            prop_assert_eq!(match_disparity_reuse(&a), match_disparity_reuse_naive(&a));
        }

        #[test]
        fn wta_shift_invariant(
            d in 1usize..10,
            sums in proptest::collection::vec(0u32..1000, 10),
            offset in 0u32..10_000,
        ) {
            let a = agg(1, 1, d, sums[..d].to_vec());
            let b = agg(1, 1, d, sums[..d].iter().map(|s| s + offset).collect());
            prop_assert_eq!(wta(&a), wta(&b));
        }

        #[test]
        fn lr_check_idempotent(
            base in proptest::collection::vec(0u16..6, 12),
            matching in proptest::collection::vec(0u16..6, 12),
            threshold in 0u32..3,
        ) {
            let b = map(12, 1, &base);
            let m = map(12, 1, &matching);
            let once = lr_check(&b, &m, threshold).unwrap();
            prop_assert_eq!(lr_check(&once, &m, threshold).unwrap(), once);
        }
    }
}
