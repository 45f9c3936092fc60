//! Portable float map I/O.
//!
//! Files are written little-endian with scale `-1.0` and rows stored
//! bottom-to-top. Either endianness is accepted on read.

use std::fs;
use std::path::Path;

use super::RadianceMap;
use crate::error::{Error, Result};

pub fn read_pfm(path: impl AsRef<Path>) -> Result<RadianceMap> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pfm(&bytes)
}

pub fn write_pfm(map: &RadianceMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_pfm(map)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Write signed samples (Stokes components and the like) that do not form
/// a radiance map.
pub fn write_pfm_samples(
    width: usize,
    height: usize,
    channels: usize,
    data: &[f64],
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    if !matches!(channels, 1 | 3) || data.len() != width * height * channels || data.is_empty() {
        return Err(Error::DimensionMismatch(format!(
            "{} samples for {width}x{height}x{channels}",
            data.len()
        )));
    }
    let bytes = encode_samples(width, height, channels, data)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn encode_pfm(map: &RadianceMap) -> Result<Vec<u8>> {
    let (w, h, c) = map.dims();
    encode_samples(w, h, c, map.data())
}

fn encode_samples(w: usize, h: usize, c: usize, data: &[f64]) -> Result<Vec<u8>> {
    let magic = if c == 3 { "PF" } else { "Pf" };
    let mut out = format!("{magic}\n{w} {h}\n-1.0\n").into_bytes();
    out.reserve(w * h * c * 4);
    let row_len = w * c;
    for row in data.chunks_exact(row_len).rev() {
        for &v in row {
            let f = v as f32;
            if !f.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "sample {v} does not fit in a 32-bit float"
                )));
            }
            out.extend_from_slice(&f.to_le_bytes());
        }
    }
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::Pfm {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn skip_whitespace(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn token(&mut self) -> Result<&'a str> {
        self.skip_whitespace();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("unexpected end of header"));
        }
        std::str::from_utf8(&self.bytes[start..self.pos]).map_err(|_| Error::Pfm {
            offset: start,
            message: "non-ascii header token".into(),
        })
    }
}

pub fn decode_pfm(bytes: &[u8]) -> Result<RadianceMap> {
    let mut cur = Cursor { bytes, pos: 0 };
    let channels = match cur.token()? {
        "PF" => 3,
        "Pf" => 1,
        other => {
            return Err(Error::Pfm {
                offset: 0,
                message: format!("bad magic {other:?}"),
            })
        }
    };
    let mut dim = |name: &str| -> Result<usize> {
        let start = cur.pos;
        let tok = cur.token()?;
        match tok.parse::<usize>() {
            Ok(v) if v > 0 => Ok(v),
            _ => Err(Error::Pfm {
                offset: start,
                message: format!("bad {name} {tok:?}"),
            }),
        }
    };
    let width = dim("width")?;
    let height = dim("height")?;
    let scale_start = cur.pos;
    let scale_tok = cur.token()?;
    let scale: f64 = scale_tok.parse().map_err(|_| Error::Pfm {
        offset: scale_start,
        message: format!("bad scale {scale_tok:?}"),
    })?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::Pfm {
            offset: scale_start,
            message: format!("scale {scale} must be finite and non-zero"),
        });
    }
    let little_endian = scale < 0.0;
    // exactly one whitespace byte separates the header from the payload
    if cur.pos >= bytes.len() || !bytes[cur.pos].is_ascii_whitespace() {
        return Err(cur.err("missing newline after scale"));
    }
    let payload_start = cur.pos + 1;

    let count = width * height * channels;
    let needed = count * 4;
    let available = bytes.len() - payload_start;
    if available < needed {
        return Err(Error::Pfm {
            offset: bytes.len(),
            message: format!("truncated payload: need {needed} bytes, have {available}"),
        });
    }

    let row_len = width * channels;
    let mut data = vec![0.0f64; count];
    for (i, chunk) in bytes[payload_start..payload_start + needed]
        .chunks_exact(4)
        .enumerate()
    {
        let raw = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if little_endian {
            f32::from_le_bytes(raw)
        } else {
            f32::from_be_bytes(raw)
        };
        if !v.is_finite() || v < 0.0 {
            return Err(Error::Pfm {
                offset: payload_start + 4 * i,
                message: format!("sample {v} is not a finite non-negative value"),
            });
        }
        // file rows run bottom-to-top
        let file_row = i / row_len;
        let col = i % row_len;
        data[(height - 1 - file_row) * row_len + col] = f64::from(v);
    }
    RadianceMap::new(width, height, channels, data)
}
