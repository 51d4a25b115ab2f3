//! Netpbm graymap (PGM) reading and writing, 8-bit and 16-bit.

use std::fs;
use std::path::Path;

use super::{DisparityMap, GrayImage, INVALID};
use crate::error::{Error, Result};

/// A decoded PGM file before it is interpreted as an image or a disparity map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PgmRaster {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub samples: Vec<u16>,
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_whitespace_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b if b.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u32> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(if start >= self.bytes.len() {
                Error::parse(start, format!("unexpected end of file, expected {what}"))
            } else {
                Error::parse(start, format!("expected {what}"))
            });
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse::<u32>().ok())
            .ok_or_else(|| Error::parse(start, format!("{what} does not fit in 32 bits")))
    }
}

/// Parses a P2 or P5 graymap with any maxval in `1..=65535`.
pub fn decode_pgm(bytes: &[u8]) -> Result<PgmRaster> {
    let binary = match bytes.get(..2) {
        Some(b"P5") => true,
        Some(b"P2") => false,
        _ => return Err(Error::parse(0, "missing P2/P5 magic number")),
    };
    let mut cur = Cursor { bytes, pos: 2 };
    let width = cur.number("width")? as usize;
    let height = cur.number("height")? as usize;
    if width == 0 || height == 0 {
        return Err(Error::parse(cur.pos, "image dimensions must be positive"));
    }
    let maxval_at = cur.pos;
    let maxval = cur.number("maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(Error::parse(
            maxval_at,
            format!("maxval {maxval} out of range"),
        ));
    }
    let maxval = maxval as u16;
    let count = width
        .checked_mul(height)
        .ok_or_else(|| Error::parse(maxval_at, "image dimensions overflow"))?;

    let samples = if binary {
        if cur.pos >= bytes.len() || !bytes[cur.pos].is_ascii_whitespace() {
            return Err(Error::parse(cur.pos, "expected whitespace after maxval"));
        }
        let start = cur.pos + 1;
        let wide = maxval > 255;
        let needed = count * if wide { 2 } else { 1 };
        let available = bytes.len() - start;
        if available < needed {
            return Err(Error::parse(
                bytes.len(),
                format!("truncated payload: expected {needed} bytes, found {available}"),
            ));
        }
        let payload = &bytes[start..start + needed];
        let samples: Vec<u16> = if wide {
            payload
                .chunks_exact(2)
                .map(|c| u16::from_be_bytes([c[0], c[1]]))
                .collect()
        } else {
            payload.iter().map(|&b| b as u16).collect()
        };
        if let Some(i) = samples.iter().position(|&s| s > maxval) {
            let offset = start + i * if wide { 2 } else { 1 };
            return Err(Error::parse(
                offset,
                format!("sample exceeds maxval {maxval}"),
            ));
        }
        samples
    } else {
        let mut samples = Vec::with_capacity(count);
        for _ in 0..count {
            let at = cur.pos;
            let v = cur.number("sample")?;
            if v > maxval as u32 {
                return Err(Error::parse(
                    at,
                    format!("sample {v} exceeds maxval {maxval}"),
                ));
            }
            samples.push(v as u16);
        }
        samples
    };

    Ok(PgmRaster {
        width,
        height,
        maxval,
        samples,
    })
}

/// Loads an 8-bit (maxval 255) P2 or P5 file.
pub fn load_pgm(path: impl AsRef<Path>) -> Result<GrayImage> {
    let bytes = fs::read(path)?;
    let raster = decode_pgm(&bytes)?;
    if raster.maxval != 255 {
        return Err(Error::parse(
            maxval_offset(&bytes),
            format!("maxval must be 255, got {}", raster.maxval),
        ));
    }
    let data = raster.samples.into_iter().map(|s| s as u8).collect();
    GrayImage::new(raster.width, raster.height, data)
}

fn maxval_offset(bytes: &[u8]) -> usize {
    let mut cur = Cursor { bytes, pos: 2 };
    let _ = cur.number("width");
    let _ = cur.number("height");
    cur.skip_whitespace_and_comments();
    cur.pos
}

/// Canonical binary encoding: `P5\n<w> <h>\n255\n` followed by the pixels.
pub fn encode_pgm(image: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    out.extend_from_slice(image.data());
    out
}

/// 16-bit binary encoding with a big-endian payload.
pub fn encode_pgm16(width: usize, height: usize, samples: &[u16]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n65535\n").into_bytes();
    out.reserve(samples.len() * 2);
    for s in samples {
        out.extend_from_slice(&s.to_be_bytes());
    }
    out
}

pub fn save_pgm(image: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_pgm(image))?;
    Ok(())
}

/// Writes a disparity map in the KITTI 16-bit convention: each pixel stores
/// `disparity * scale`, invalid pixels store 0.
pub fn save_disparity(map: &DisparityMap, path: impl AsRef<Path>, scale: u32) -> Result<()> {
    if scale == 0 {
        return Err(Error::Range("disparity scale must be positive".into()));
    }
    let max = map
        .data()
        .iter()
        .filter(|&&v| v != INVALID)
        .copied()
        .max()
        .unwrap_or(0);
    if max as u64 * scale as u64 > u16::MAX as u64 {
        return Err(Error::Range(format!(
            "disparity {max} times scale {scale} exceeds 65535"
        )));
    }
    let samples: Vec<u16> = map
        .data()
        .iter()
        .map(|&v| if v == INVALID { 0 } else { v * scale as u16 })
        .collect();
    fs::write(path, encode_pgm16(map.width(), map.height(), &samples))?;
    Ok(())
}

/// Reads a disparity map stored as `disparity * scale` with 0 meaning invalid.
///
/// Any maxval is accepted so 8-bit disparity images load too. Fractional
/// disparities (e.g. KITTI ground truth) are rounded to the nearest integer.
pub fn load_disparity(path: impl AsRef<Path>, scale: u32) -> Result<DisparityMap> {
    if scale == 0 {
        return Err(Error::Range("disparity scale must be positive".into()));
    }
    let raster = decode_pgm(&fs::read(path)?)?;
    let data = raster
        .samples
        .iter()
        .map(|&s| {
            if s == 0 {
                INVALID
            } else {
                ((s as u32 + scale / 2) / scale) as u16
            }
        })
        .collect();
    DisparityMap::new(raster.width, raster.height, data)
}

/// Reads an evaluation mask: non-zero pixels are evaluated.
pub fn load_mask(path: impl AsRef<Path>) -> Result<(usize, usize, Vec<bool>)> {
    let raster = decode_pgm(&fs::read(path)?)?;
    let mask = raster.samples.iter().map(|&s| s != 0).collect();
    Ok((raster.width, raster.height, mask))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn decodes_p5() {
        let mut bytes = b"P5 4 2 255\n".to_vec();
        bytes.extend_from_slice(&[1, 2, 3, 4, 5, 6, 7, 8]);
        let r = decode_pgm(&bytes).unwrap();
        assert_eq!((r.width, r.height, r.maxval), (4, 2, 255));
        assert_eq!(r.samples, vec![1, 2, 3, 4, 5, 6, 7, 8]);
    }

    #[test]
    fn truncated_payload_reports_offset() {
        let mut bytes = b"P5 4 2 255\n".to_vec();
        bytes.extend_from_slice(&[0; 7]);
        match decode_pgm(&bytes) {
            Err(Error::Parse { offset, message }) => {
                assert_eq!(offset, bytes.len());
                assert!(message.contains("truncated"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn skips_comments_in_header() {
        let mut bytes = b"P5\n# made by hand\n2 1\n# max\n255\n".to_vec();
        bytes.extend_from_slice(&[9, 10]);
        let r = decode_pgm(&bytes).unwrap();
        assert_eq!(r.samples, vec![9, 10]);
    }

    #[test]
    fn decodes_ascii() {
        let r = decode_pgm(b"P2\n# c\n3 1\n255\n0 128\n255\n").unwrap();
        assert_eq!(r.samples, vec![0, 128, 255]);
    }

    #[test]
    fn rejects_bad_headers() {
        assert!(matches!(
            decode_pgm(b"P6 1 1 255\n\0"),
            Err(Error::Parse { offset: 0, .. })
        ));
        assert!(matches!(
            decode_pgm(b"P5 x 1 255\n\0"),
            Err(Error::Parse { offset: 3, .. })
        ));
        assert!(decode_pgm(b"P2 2 1 255\n1 300").is_err());
        assert!(decode_pgm(b"P5 2 1 255").is_err());
    }

    #[test]
    fn load_pgm_requires_maxval_255() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.pgm");
        fs::write(&path, b"P2 1 1 15\n3\n").unwrap();
        match load_pgm(&path) {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 7),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn disparity_convention() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.pgm");
        let map = DisparityMap::new(2, 1, vec![5, INVALID]).unwrap();
        save_disparity(&map, &path, 256).unwrap();
        let r = decode_pgm(&fs::read(&path).unwrap()).unwrap();
        assert_eq!(r.maxval, 65535);
        assert_eq!(r.samples, vec![1280, 0]);
        assert_eq!(load_disparity(&path, 256).unwrap(), map);
    }

    #[test]
    fn disparity_scale_overflow() {
        let dir = tempfile::tempdir().unwrap();
        let map = DisparityMap::new(1, 1, vec![256]).unwrap();
        assert!(matches!(
            save_disparity(&map, dir.path().join("d.pgm"), 256),
            Err(Error::Range(_))
        ));
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let map = DisparityMap::filled(1, 1, 1);
        let err = save_disparity(&map, "/nonexistent-dir/x/d.pgm", 256).unwrap_err();
        assert!(matches!(err, Error::Io(_)));
    }

    proptest! {
        #[test]
        fn save_load_save_is_stable(w in 1usize..20, h in 1usize..20, seed in any::<u64>()) {
            let mut s = seed;
            let img = GrayImage::from_fn(w, h, |_, _| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (s >> 56) as u8
            });
            let first = encode_pgm(&img);
            let back = decode_pgm(&first).unwrap();
            let img2 = GrayImage::new(back.width, back.height, back.samples.iter().map(|&v| v as u8).collect()).unwrap();
            prop_assert_eq!(&img2, &img);
            prop_assert_eq!(encode_pgm(&img2), first);
        }

        #[test]
        fn disparity_round_trip(w in 1usize..12, h in 1usize..12, vals in proptest::collection::vec(prop_oneof![Just(INVALID), 1u16..256], 144)) {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("d.pgm");
            let map = DisparityMap::new(w, h, vals[..w * h].to_vec()).unwrap();
            save_disparity(&map, &path, 256).unwrap();
            prop_assert_eq!(load_disparity(&path, 256).unwrap(), map);
        }
    }
}
