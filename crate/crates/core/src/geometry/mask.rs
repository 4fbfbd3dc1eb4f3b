//! Binary foreground masks and their two on-disk encodings.
//!
//! Run-length text:
//!
//! ```text
//! W H
//! 0 29
//! 1 3
//! 0 32
//! ```
//!
//! The header holds width and height. Each following `value count` pair is a
//! run in row-major order; values alternate between 0 and 1 and the counts
//! sum to `W * H`. Tokens may be separated by any whitespace.
//!
//! Raw bitmap: binary PGM (`P5`) with maxval 255; any nonzero byte is
//! foreground.

use super::BBox;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::parse("mask", None, format!("mask dimensions must be positive, got {width}x{height}")));
        }
        if bits.len() != width * height {
            return Err(Error::parse(
                "mask",
                None,
                format!("mask has {} pixels, expected {}x{}={}", bits.len(), width, height, width * height),
            ));
        }
        Ok(BinaryMask { width, height, bits })
    }

    pub fn empty(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![false; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, col: usize, row: usize) -> bool {
        self.bits[row * self.width + col]
    }

    pub fn set(&mut self, col: usize, row: usize, value: bool) {
        self.bits[row * self.width + col] = value;
    }

    /// Decodes either encoding, picking the PGM reader when the data starts with `P5`.
    pub fn decode(data: &[u8]) -> Result<Self> {
        if data.starts_with(b"P5") {
            Self::from_pgm(data)
        } else {
            let text = std::str::from_utf8(data).map_err(|_| Error::parse("mask", None, "run-length mask is not UTF-8"))?;
            Self::from_rle(text)
        }
    }

    pub fn from_rle(text: &str) -> Result<Self> {
        // (line number, token)
        let mut tokens = text
            .lines()
            .enumerate()
            .flat_map(|(i, line)| line.split_whitespace().map(move |tok| (i + 1, tok)));
        let mut next_usize = |what: &str| -> Result<(usize, usize)> {
            let (line, tok) = tokens
                .next()
                .ok_or_else(|| Error::parse("mask", None, format!("unexpected end of input, expected {what}")))?;
            let v = tok
                .parse::<usize>()
                .map_err(|_| Error::parse("mask", Some(line), format!("invalid {what} {tok:?}")))?;
            Ok((line, v))
        };
        let (_, width) = next_usize("width")?;
        let (_, height) = next_usize("height")?;
        let total = width
            .checked_mul(height)
            .ok_or_else(|| Error::parse("mask", Some(1), "mask dimensions overflow"))?;
        let mut bits = Vec::with_capacity(total);
        let mut prev: Option<usize> = None;
        loop {
            let (line, value) = match next_usize("run value") {
                Ok(v) => v,
                Err(Error::Parse { line: None, .. }) => break,
                Err(e) => return Err(e),
            };
            if value > 1 {
                return Err(Error::parse("mask", Some(line), format!("run value must be 0 or 1, got {value}")));
            }
            if prev == Some(value) {
                return Err(Error::parse("mask", Some(line), "runs must alternate between 0 and 1"));
            }
            let (line, count) = next_usize("run count")?;
            if count == 0 {
                return Err(Error::parse("mask", Some(line), "run count must be positive"));
            }
            if bits.len() + count > total {
                return Err(Error::parse("mask", Some(line), format!("runs exceed {total} pixels")));
            }
            bits.resize(bits.len() + count, value == 1);
            prev = Some(value);
        }
        if bits.len() != total {
            return Err(Error::parse("mask", None, format!("runs cover {} pixels, expected {total}", bits.len())));
        }
        Self::new(width, height, bits)
    }

    /// Canonical run-length text: header line, then one `value count` line per run.
    pub fn to_rle(&self) -> String {
        let mut out = format!("{} {}\n", self.width, self.height);
        let mut iter = self.bits.iter().peekable();
        while let Some(&v) = iter.next() {
            let mut count = 1usize;
            while iter.peek() == Some(&&v) {
                iter.next();
                count += 1;
            }
            out.push_str(&format!("{} {}\n", v as u8, count));
        }
        out
    }

    pub fn from_pgm(data: &[u8]) -> Result<Self> {
        let mut pos = 0usize;
        let magic = pgm_token(data, &mut pos)?;
        if magic != b"P5" {
            return Err(Error::parse("mask", None, "PGM magic must be P5"));
        }
        let width = pgm_number(data, &mut pos, "width")?;
        let height = pgm_number(data, &mut pos, "height")?;
        let maxval = pgm_number(data, &mut pos, "maxval")?;
        if maxval != 255 {
            return Err(Error::parse("mask", None, format!("PGM maxval must be 255, got {maxval}")));
        }
        // exactly one whitespace byte separates the header from the raster
        match data.get(pos) {
            Some(c) if c.is_ascii_whitespace() => pos += 1,
            _ => return Err(Error::parse("mask", None, "missing whitespace after PGM header")),
        }
        let raster = &data[pos..];
        let total = width
            .checked_mul(height)
            .ok_or_else(|| Error::parse("mask", None, "mask dimensions overflow"))?;
        if raster.len() != total {
            return Err(Error::parse(
                "mask",
                None,
                format!("PGM raster has {} bytes, expected {total}", raster.len()),
            ));
        }
        Self::new(width, height, raster.iter().map(|&b| b != 0).collect())
    }

    /// Canonical PGM encoding: foreground 255, background 0.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.bits.iter().map(|&b| if b { 255u8 } else { 0 }));
        out
    }
}

fn pgm_token<'a>(data: &'a [u8], pos: &mut usize) -> Result<&'a [u8]> {
    loop {
        while *pos < data.len() && data[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < data.len() && data[*pos] == b'#' {
            while *pos < data.len() && data[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < data.len() && !data[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::parse("mask", None, "truncated PGM header"));
    }
    Ok(&data[start..*pos])
}

fn pgm_number(data: &[u8], pos: &mut usize, what: &str) -> Result<usize> {
    let tok = pgm_token(data, pos)?;
    std::str::from_utf8(tok)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::parse("mask", None, format!("invalid PGM {what}")))
}

/// Tightest box around the foreground, using inclusive pixel extremes.
pub fn mask_to_bbox(mask: &BinaryMask) -> Option<BBox> {
    let (mut min_c, mut min_r) = (usize::MAX, usize::MAX);
    let (mut max_c, mut max_r) = (0usize, 0usize);
    let mut any = false;
    for (row, line) in mask.bits.chunks_exact(mask.width).enumerate() {
        let Some(first) = line.iter().position(|&b| b) else {
            continue;
        };
        let last = line.iter().rposition(|&b| b).unwrap_or(first);
        any = true;
        min_r = min_r.min(row);
        max_r = row;
        min_c = min_c.min(first);
        max_c = max_c.max(last);
    }
    any.then(|| {
        BBox::new(
            min_c as f64,
            min_r as f64,
            (max_c - min_c + 1) as f64,
            (max_r - min_r + 1) as f64,
        )
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mask_with(width: usize, height: usize, pixels: &[(usize, usize)]) -> BinaryMask {
        let mut m = BinaryMask::empty(width, height).unwrap();
        for &(c, r) in pixels {
            m.set(c, r, true);
        }
        m
    }

    #[test]
    fn empty_mask_has_no_box() {
        assert_eq!(mask_to_bbox(&BinaryMask::empty(8, 8).unwrap()), None);
    }

    #[test]
    fn single_pixel() {
        let m = mask_with(8, 8, &[(3, 5)]);
        assert_eq!(mask_to_bbox(&m), Some(BBox::new(3.0, 5.0, 1.0, 1.0)));
    }

    #[test]
    fn two_pixel_extremes() {
        let m = mask_with(8, 8, &[(2, 2), (5, 7)]);
        assert_eq!(mask_to_bbox(&m), Some(BBox::new(2.0, 2.0, 4.0, 6.0)));
    }

    #[test]
    fn malformed_mask_rejected() {
        assert!(matches!(BinaryMask::new(3, 3, vec![false; 8]), Err(Error::Parse { .. })));
        assert!(BinaryMask::new(0, 3, vec![]).is_err());
    }

    #[test]
    fn rle_parse_exact() {
        let m = BinaryMask::from_rle("4 2\n0 5\n1 2\n0 1\n").unwrap();
        assert_eq!(m.bits(), &[false, false, false, false, false, true, true, false]);
        assert_eq!(mask_to_bbox(&m), Some(BBox::new(1.0, 1.0, 2.0, 1.0)));
        // leading foreground run, CRLF endings, extra spaces
        let m = BinaryMask::from_rle("2 1\r\n1  1\r\n0 1\r\n").unwrap();
        assert_eq!(m.bits(), &[true, false]);
    }

    #[test]
    fn rle_errors() {
        assert!(BinaryMask::from_rle("2 2\n0 3\n").is_err());
        assert!(BinaryMask::from_rle("2 2\n0 2\n0 2\n").is_err());
        assert!(BinaryMask::from_rle("2 2\n0 2\n2 2\n").is_err());
        assert!(BinaryMask::from_rle("2 2\n0 5\n").is_err());
        assert!(BinaryMask::from_rle("2 2\n0 0\n1 4\n").is_err());
        assert!(BinaryMask::from_rle("2 2\n0\n").is_err());
        assert!(BinaryMask::from_rle("x 2\n").is_err());
        match BinaryMask::from_rle("2 2\n0 2\n1 z\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, Some(3)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn pgm_parse_exact() {
        let mut data = b"P5\n# comment\n3 2\n255\n".to_vec();
        data.extend([0, 7, 0, 0, 0, 255]);
        let m = BinaryMask::decode(&data).unwrap();
        assert_eq!(m.bits(), &[false, true, false, false, false, true]);
        assert_eq!(mask_to_bbox(&m), Some(BBox::new(1.0, 0.0, 2.0, 2.0)));
    }

    #[test]
    fn pgm_errors() {
        assert!(BinaryMask::from_pgm(b"P5\n2 2\n15\n\0\0\0\0").is_err());
        assert!(BinaryMask::from_pgm(b"P5\n2 2\n255\n\0\0\0").is_err());
        assert!(BinaryMask::from_pgm(b"P2\n2 2\n255\n\0\0\0\0").is_err());
        assert!(BinaryMask::from_pgm(b"P5\n2 2\n255").is_err());
    }

    fn arb_mask() -> impl Strategy<Value = BinaryMask> {
        (1..12usize, 1..12usize)
            .prop_flat_map(|(w, h)| (Just(w), Just(h), proptest::collection::vec(proptest::bool::weighted(0.2), w * h)))
            .prop_map(|(w, h, bits)| BinaryMask::new(w, h, bits).unwrap())
    }

    proptest! {
        #[test]
        fn bbox_is_tight(m in arb_mask()) {
            let fg: Vec<(usize, usize)> = (0..m.height())
                .flat_map(|r| (0..m.width()).map(move |c| (c, r)))
                .filter(|&(c, r)| m.get(c, r))
                .collect();
            match mask_to_bbox(&m) {
                None => prop_assert!(fg.is_empty()),
                Some(b) => {
                    let (x0, y0) = (b.x as usize, b.y as usize);
                    let (x1, y1) = (x0 + b.w as usize - 1, y0 + b.h as usize - 1);
                    prop_assert!(fg.iter().all(|&(c, r)| c >= x0 && c <= x1 && r >= y0 && r <= y1));
                    prop_assert!(fg.iter().any(|&(c, _)| c == x0));
                    prop_assert!(fg.iter().any(|&(c, _)| c == x1));
                    prop_assert!(fg.iter().any(|&(_, r)| r == y0));
                    prop_assert!(fg.iter().any(|&(_, r)| r == y1));
                }
            }
        }

        #[test]
        fn encodings_round_trip(m in arb_mask()) {
            prop_assert_eq!(BinaryMask::decode(m.to_rle().as_bytes()).unwrap(), m.clone());
            prop_assert_eq!(BinaryMask::decode(&m.to_pgm()).unwrap(), m);
        }
    }
}
