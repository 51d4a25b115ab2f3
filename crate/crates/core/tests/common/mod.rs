//! Test-side oracles, written from the definitions without the crate's helpers.
#![allow(dead_code)]

use rand::Rng;
use sgmflow::cost::CostKind;
use sgmflow::{GrayImage, StereoPair};

pub fn clamped(img: &GrayImage, x: isize, y: isize) -> i32 {
    let cx = x.clamp(0, img.width() as isize - 1) as usize;
    let cy = y.clamp(0, img.height() as isize - 1) as usize;
    img.data()[cy * img.width() + cx] as i32
}

fn window(img: &GrayImage, x: isize, y: isize, r: isize) -> Vec<i32> {
    let mut v = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            v.push(clamped(img, x + dx, y + dy));
        }
    }
    v
}

/// Cost between the window of `a` at `(ax, y)` and the window of `b` at `(bx, y)`.
pub fn oracle_cost(
    kind: CostKind,
    win: usize,
    a: &GrayImage,
    ax: isize,
    b: &GrayImage,
    bx: isize,
    y: isize,
) -> u32 {
    let r = (win / 2) as isize;
    let wa = window(a, ax, y, r);
    let wb = window(b, bx, y, r);
    let n = wa.len() as i32;
    let centre = wa.len() / 2;
    match kind {
        CostKind::Sad => wa
            .iter()
            .zip(&wb)
            .map(|(p, q)| (p - q).unsigned_abs())
            .sum(),
        CostKind::Zsad => {
            let ma = wa.iter().sum::<i32>().div_euclid(n);
            let mb = wb.iter().sum::<i32>().div_euclid(n);
            wa.iter()
                .zip(&wb)
                .map(|(p, q)| ((p - ma) - (q - mb)).unsigned_abs())
                .sum()
        }
        CostKind::Census => (0..wa.len())
            .filter(|&i| i != centre)
            .filter(|&i| (wa[i] < wa[centre]) != (wb[i] < wb[centre]))
            .count() as u32,
        CostKind::Rank => {
            let ra = wa.iter().filter(|&&p| p < wa[centre]).count() as i32;
            let rb = wb.iter().filter(|&&p| p < wb[centre]).count() as i32;
            (ra - rb).unsigned_abs()
        }
    }
}

/// Base cost volume: base window at `x` against match window at `max(x - d, 0)`.
pub fn oracle_volume(pair: &StereoPair, kind: CostKind, win: usize, d_max: usize) -> Vec<u16> {
    let (w, h) = (pair.width() as isize, pair.height() as isize);
    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w {
            for d in 0..d_max as isize {
                out.push(
                    oracle_cost(kind, win, &pair.base, x, &pair.matching, (x - d).max(0), y) as u16,
                );
            }
        }
    }
    out
}

/// Match cost volume: match window at `x` against base window at `min(x + d, w - 1)`.
pub fn oracle_match_volume(
    pair: &StereoPair,
    kind: CostKind,
    win: usize,
    d_max: usize,
) -> Vec<u16> {
    let (w, h) = (pair.width() as isize, pair.height() as isize);
    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w {
            for d in 0..d_max as isize {
                out.push(oracle_cost(
                    kind,
                    win,
                    &pair.matching,
                    x,
                    &pair.base,
                    (x + d).min(w - 1),
                    y,
                ) as u16);
            }
        }
    }
    out
}

/// Sum of four independent dynamic programs, one per direction.
pub fn four_pass(costs: &[u16], w: usize, h: usize, d_max: usize, p1: u32, p2: u32) -> Vec<u32> {
    let (wi, hi) = (w as isize, h as isize);
    let idx = |x: isize, y: isize| (y * wi + x) as usize * d_max;
    let mut total = vec![0u32; costs.len()];
    for (dx, dy) in [(-1isize, 0isize), (-1, -1), (0, -1), (1, -1)] {
        let mut l = vec![0u32; costs.len()];
        for y in 0..hi {
            let cols: Vec<isize> = if dx > 0 {
                (0..wi).rev().collect()
            } else {
                (0..wi).collect()
            };
            for x in cols {
                let (px, py) = (x + dx, y + dy);
                let here = idx(x, y);
                if px < 0 || px >= wi || py < 0 {
                    for d in 0..d_max {
                        l[here + d] = costs[here + d] as u32;
                    }
                    continue;
                }
                let prev: Vec<u32> = l[idx(px, py)..idx(px, py) + d_max].to_vec();
                let m = *prev.iter().min().unwrap();
                for d in 0..d_max {
                    let mut cands = vec![prev[d], m + p2];
                    if d > 0 {
                        cands.push(prev[d - 1] + p1);
                    }
                    if d + 1 < d_max {
                        cands.push(prev[d + 1] + p1);
                    }
                    l[here + d] = costs[here + d] as u32 + cands.into_iter().min().unwrap() - m;
                }
            }
        }
        for (t, v) in total.iter_mut().zip(&l) {
            *t += v;
        }
    }
    total
}

/// First index of the smallest value.
pub fn first_argmin(values: impl IntoIterator<Item = u32>) -> u16 {
    let v: Vec<u32> = values.into_iter().collect();
    let m = *v.iter().min().unwrap();
    v.iter().position(|&x| x == m).unwrap() as u16
}

/// Image with a random number of grey levels, so ties and flat areas occur.
pub fn random_image<R: Rng>(rng: &mut R, w: usize, h: usize) -> GrayImage {
    let levels: u16 = [2u16, 4, 16, 256][rng.gen_range(0..4)];
    let data = (0..w * h)
        .map(|_| (rng.gen_range(0..levels) * (256 / levels)).min(255) as u8)
        .collect();
    GrayImage::new(w, h, data).unwrap()
}

pub fn random_pair<R: Rng>(rng: &mut R, w: usize, h: usize) -> StereoPair {
    let base = random_image(rng, w, h);
    let matching = if rng.gen_bool(0.5) {
        // a shifted copy with noise, closer to a real pair
        let s = rng.gen_range(0..w);
        GrayImage::from_fn(w, h, |x, y| {
            base.get((x + s).min(w - 1), y)
                .saturating_add(rng.gen_range(0..3))
        })
    } else {
        random_image(rng, w, h)
    };
    StereoPair::new(base, matching, None).unwrap()
}

/// Random-texture image and a copy whose content sits `shift` pixels further left.
pub fn shifted_pair<R: Rng>(rng: &mut R, w: usize, h: usize, shift: usize) -> StereoPair {
    let base = GrayImage::new(w, h, (0..w * h).map(|_| rng.gen()).collect()).unwrap();
    let matching = GrayImage::from_fn(w, h, |x, y| base.get((x + shift).min(w - 1), y));
    StereoPair::new(base, matching, None).unwrap()
}
