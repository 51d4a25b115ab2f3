//! Raster-order window and line buffers with edge replication.
//!
//! [`RasterWindow`] consumes an image one pixel per tick in raster order and
//! keeps `size - 1` previous rows in a line buffer plus a `size × cols` window
//! buffer of the most recent columns. With `cols == size` the buffer is the
//! square window around the current output pixel. With `cols > size` it also
//! holds the windows of the `cols - size` pixels to the left, which is how the
//! match image keeps every candidate window of a disparity range on chip.
//!
//! Borders are replicated without padding the stream:
//! * top: row 0 pre-fills every line-buffer row of its column,
//! * left: column 0 pre-fills every window-buffer column,
//! * right: `size / 2` extra ticks per row re-shift the last column,
//! * bottom: `size / 2` extra rows re-feed the most recent line-buffer row.

/// Sliding window over a raster-order pixel stream.
#[derive(Debug, Clone)]
pub struct RasterWindow<T> {
    width: usize,
    height: usize,
    size: usize,
    radius: usize,
    cols: usize,
    /// `(size - 1) × width`, row 0 is the oldest.
    line: Vec<T>,
    /// `cols × size`, column-major, column 0 is the oldest.
    win: Vec<T>,
    column: Vec<T>,
    tick: usize,
    row: usize,
}

impl<T: Copy + Default> RasterWindow<T> {
    pub fn new(width: usize, height: usize, size: usize, cols: usize) -> Self {
        assert!(size % 2 == 1, "window size must be odd");
        assert!(cols >= size, "window buffer narrower than the window");
        assert!(width > 0 && height > 0);
        Self {
            width,
            height,
            size,
            radius: size / 2,
            cols,
            line: vec![T::default(); (size - 1) * width],
            win: vec![T::default(); cols * size],
            column: vec![T::default(); size],
            tick: 0,
            row: 0,
        }
    }

    /// True once every output window has been produced.
    pub fn done(&self) -> bool {
        self.row >= self.height + self.radius
    }

    /// Total ticks needed to drain a frame.
    pub fn ticks_per_frame(&self) -> usize {
        (self.width + self.radius) * (self.height + self.radius)
    }

    /// Advances one tick. Pulls the next pixel from `input` when the tick
    /// corresponds to a real image pixel. Returns the centre `(x, y)` of the
    /// window that is complete after this tick, if any.
    pub fn step<I: Iterator<Item = T>>(&mut self, input: &mut I) -> Option<(usize, usize)> {
        assert!(!self.done(), "stream already drained");
        let (t, y) = (self.tick, self.row);
        let n = self.size;
        if t < self.width {
            let pixel = if y < self.height {
                input.next().expect("input stream ended early")
            } else {
                // below the image: repeat the most recent row
                if n > 1 {
                    self.line[(n - 2) * self.width + t]
                } else {
                    self.win[(self.cols - 1) * n]
                }
            };
            if y == 0 {
                for k in 0..n - 1 {
                    self.line[k * self.width + t] = pixel;
                }
            }
            for k in 0..n - 1 {
                self.column[k] = self.line[k * self.width + t];
            }
            self.column[n - 1] = pixel;
            for k in 0..n.saturating_sub(2) {
                self.line[k * self.width + t] = self.line[(k + 1) * self.width + t];
            }
            if n > 1 {
                self.line[(n - 2) * self.width + t] = pixel;
            }
            if t == 0 {
                for c in 0..self.cols {
                    self.win[c * n..(c + 1) * n].copy_from_slice(&self.column);
                }
            } else {
                self.shift_in_column();
            }
        } else {
            // right of the image: repeat the last column
            let last = (self.cols - 1) * n;
            self.column.copy_from_slice(&self.win[last..last + n]);
            self.shift_in_column();
        }

        let out =
            (t >= self.radius && y >= self.radius).then(|| (t - self.radius, y - self.radius));
        self.tick += 1;
        if self.tick == self.width + self.radius {
            self.tick = 0;
            self.row += 1;
        }
        out
    }

    fn shift_in_column(&mut self) {
        let n = self.size;
        self.win.copy_within(n.., 0);
        let last = (self.cols - 1) * n;
        self.win[last..last + n].copy_from_slice(&self.column);
    }

    /// Window buffer element: `col` counts from the oldest column, `row` from the top.
    #[inline]
    pub fn at(&self, col: usize, row: usize) -> T {
        self.win[col * self.size + row]
    }

    /// Element `(dx, dy)` of the window centred `offset` pixels left of the
    /// current output pixel, with `dx, dy` in `0..size`.
    #[inline]
    pub fn centred(&self, offset: usize, dx: usize, dy: usize) -> T {
        self.at(self.cols - self.size - offset + dx, dy)
    }

    /// Line-buffer row `k`, oldest first.
    pub fn line_row(&self, k: usize) -> &[T] {
        &self.line[k * self.width..(k + 1) * self.width]
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn cols(&self) -> usize {
        self.cols
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn image(w: usize, h: usize, seed: u64) -> Vec<u8> {
        let mut s = seed | 1;
        (0..w * h)
            .map(|_| {
                s ^= s << 13;
                s ^= s >> 7;
                s ^= s << 17;
                s as u8
            })
            .collect()
    }

    fn clamped(img: &[u8], w: usize, h: usize, x: isize, y: isize) -> u8 {
        let x = x.clamp(0, w as isize - 1) as usize;
        let y = y.clamp(0, h as isize - 1) as usize;
        img[y * w + x]
    }

    proptest! {
        #[test]
        fn windows_match_clamped_reads(w in 1usize..12, h in 1usize..12, size in prop_oneof![Just(1usize), Just(3), Just(5), Just(7)], extra in 0usize..5, seed in any::<u64>()) {
            let img = image(w, h, seed);
            let mut rw = RasterWindow::new(w, h, size, size + extra);
            let mut input = img.iter().copied();
            let mut seen = Vec::new();
            let r = size as isize / 2;
            while !rw.done() {
                if let Some((cx, cy)) = rw.step(&mut input) {
                    seen.push((cx, cy));
                    for off in 0..=extra {
                        let c = cx as isize - off as isize;
                        for dy in 0..size {
                            for dx in 0..size {
                                // windows left of column 0 read the replicated border
                                let expect = clamped(&img, w, h, c + dx as isize - r, cy as isize + dy as isize - r);
                                prop_assert_eq!(rw.centred(off, dx, dy), expect);
                            }
                        }
                    }
                }
            }
            let raster: Vec<_> = (0..h).flat_map(|y| (0..w).map(move |x| (x, y))).collect();
            prop_assert_eq!(seen, raster);
            prop_assert!(input.next().is_none());
        }

        #[test]
        fn line_buffer_holds_recent_rows(w in 1usize..10, h in 1usize..10, size in prop_oneof![Just(3usize), Just(5), Just(7)], seed in any::<u64>()) {
            let img = image(w, h, seed);
            let mut rw = RasterWindow::new(w, h, size, size);
            let mut input = img.iter().copied();
            let rows = size - 1;
            for y in 0..h {
                for x in 0..w {
                    // drain virtual ticks so exactly pixel (x, y) has been consumed
                    loop {
                        let before = input.len();
                        rw.step(&mut input);
                        if input.len() < before { break; }
                    }
                    for k in 0..rows {
                        for col in 0..w {
                            let src = if col <= x {
                                y as isize - (rows - 1 - k) as isize
                            } else {
                                y as isize - (rows - k) as isize
                            };
                            if col > x && y == 0 { continue; }
                            prop_assert_eq!(rw.line_row(k)[col], img[src.max(0) as usize * w + col]);
                        }
                    }
                }
            }
        }
    }
}
