//! Micro-polarizer mosaic handling.
//!
//! The sensor tiles a 2×2 calculation unit of polarizers. Each orientation
//! is either decimated to its own quarter-resolution sub-grid or brought
//! back to full resolution by bilinear interpolation of that sub-grid.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::crf::Crf;
use crate::error::{Error, Result};
use crate::imgcore::{LdrImage, PolarQuad};
use crate::util::quantize;

/// Angles of the 2×2 calculation unit, row-major: `[[top-left, top-right],
/// [bottom-left, bottom-right]]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MosaicPattern {
    cells: [[u16; 2]; 2],
}

impl Default for MosaicPattern {
    fn default() -> Self {
        Self {
            cells: [[90, 45], [135, 0]],
        }
    }
}

impl MosaicPattern {
    pub fn new(cells: [[u16; 2]; 2]) -> Result<Self> {
        let mut seen = [cells[0][0], cells[0][1], cells[1][0], cells[1][1]];
        seen.sort_unstable();
        if seen != [0, 45, 90, 135] {
            return Err(Error::InvalidInput(format!(
                "mosaic pattern {cells:?} is not a permutation of 0/45/90/135"
            )));
        }
        Ok(Self { cells })
    }

    pub fn cells(&self) -> [[u16; 2]; 2] {
        self.cells
    }

    /// Row/column offset of `angle` inside the calculation unit.
    fn offset_of(&self, angle: u16) -> (usize, usize) {
        for (dy, row) in self.cells.iter().enumerate() {
            for (dx, a) in row.iter().enumerate() {
                if *a == angle {
                    return (dy, dx);
                }
            }
        }
        unreachable!("pattern validated as a permutation")
    }
}

impl FromStr for MosaicPattern {
    type Err = Error;

    /// Parses `"90,45,135,0"` (row-major).
    fn from_str(s: &str) -> Result<Self> {
        let vals: Vec<u16> = s
            .split(',')
            .map(|t| t.trim().parse::<u16>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::InvalidInput(format!("bad mosaic pattern {s:?}")))?;
        if vals.len() != 4 {
            return Err(Error::InvalidInput(format!(
                "mosaic pattern {s:?} needs 4 angles"
            )));
        }
        Self::new([[vals[0], vals[1]], [vals[2], vals[3]]])
    }
}

impl fmt::Display for MosaicPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = self.cells;
        write!(f, "{},{},{},{}", c[0][0], c[0][1], c[1][0], c[1][1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DemosaicMode {
    /// Quarter-resolution sub-images, one sample per calculation unit.
    #[default]
    Split,
    /// Full resolution, each orientation bilinearly interpolated.
    Bilinear,
}

impl FromStr for DemosaicMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "split" => Ok(Self::Split),
            "bilinear" => Ok(Self::Bilinear),
            _ => Err(Error::InvalidInput(format!("unknown demosaic mode {s:?}"))),
        }
    }
}

pub fn demosaic_quad(
    mosaic: &LdrImage,
    pattern: MosaicPattern,
    mode: DemosaicMode,
    t0_ms: f64,
    crf: Option<Arc<Crf>>,
) -> Result<PolarQuad> {
    let (w, h) = (mosaic.width(), mosaic.height());
    if w % 2 != 0 || h % 2 != 0 {
        return Err(Error::InvalidInput(format!(
            "mosaic {w}x{h} must have even dimensions"
        )));
    }
    let mut images = Vec::with_capacity(4);
    for angle in [0u16, 45, 90, 135] {
        let offset = pattern.offset_of(angle);
        images.push(match mode {
            DemosaicMode::Split => split_plane(mosaic, offset)?,
            DemosaicMode::Bilinear => bilinear_plane(mosaic, offset)?,
        });
    }
    PolarQuad::new(images.try_into().expect("four planes"), t0_ms, crf)
}

/// Interleave the four orientation images into one sensor mosaic of twice
/// the width and height.
pub fn mosaic_from_quad(quad: &PolarQuad, pattern: MosaicPattern) -> Result<LdrImage> {
    let (sw, sh, c) = (quad.width(), quad.height(), quad.channels());
    let (w, h) = (2 * sw, 2 * sh);
    let mut data = vec![0u16; w * h * c];
    for (img, angle) in quad.images().iter().zip([0u16, 45, 90, 135]) {
        let (dy, dx) = pattern.offset_of(angle);
        for y in 0..sh {
            for x in 0..sw {
                for ch in 0..c {
                    data[((2 * y + dy) * w + 2 * x + dx) * c + ch] = img.get(x, y, ch);
                }
            }
        }
    }
    LdrImage::new(w, h, c, quad.bit_depth(), data)
}

fn split_plane(m: &LdrImage, (dy, dx): (usize, usize)) -> Result<LdrImage> {
    let (sw, sh, c) = (m.width() / 2, m.height() / 2, m.channels());
    let mut data = Vec::with_capacity(sw * sh * c);
    for y in 0..sh {
        for x in 0..sw {
            for ch in 0..c {
                data.push(m.get(2 * x + dx, 2 * y + dy, ch));
            }
        }
    }
    LdrImage::new(sw, sh, c, m.bit_depth(), data)
}

/// Sub-grid sample `(i, j)` sits at full-resolution `(2i + dy, 2j + dx)`.
/// Positions outside the sub-grid clamp to its border.
fn bilinear_plane(m: &LdrImage, (dy, dx): (usize, usize)) -> Result<LdrImage> {
    let (w, h, c) = (m.width(), m.height(), m.channels());
    let (sw, sh) = (w / 2, h / 2);
    let sample = |i: usize, j: usize, ch: usize| f64::from(m.get(2 * j + dx, 2 * i + dy, ch));
    // returns (lower index, upper index, upper weight)
    let axis = |pos: usize, off: usize, n: usize| -> (usize, usize, f64) {
        let u = (pos as f64 - off as f64) / 2.0;
        let u = u.clamp(0.0, (n - 1) as f64);
        let lo = u.floor() as usize;
        let hi = (lo + 1).min(n - 1);
        (lo, hi, u - lo as f64)
    };
    let max = m.max_level();
    let mut data = Vec::with_capacity(w * h * c);
    for y in 0..h {
        let (i0, i1, fy) = axis(y, dy, sh);
        for x in 0..w {
            let (j0, j1, fx) = axis(x, dx, sw);
            for ch in 0..c {
                let top = sample(i0, j0, ch) * (1.0 - fx) + sample(i0, j1, ch) * fx;
                let bot = sample(i1, j0, ch) * (1.0 - fx) + sample(i1, j1, ch) * fx;
                data.push(quantize(top * (1.0 - fy) + bot * fy, max));
            }
        }
    }
    LdrImage::new(w, h, c, m.bit_depth(), data)
}
