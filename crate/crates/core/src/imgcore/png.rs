//! Lossless 8/16-bit grayscale and RGB PNG I/O.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use super::LdrImage;
use crate::error::{Error, Result};

pub fn read_png(path: impl AsRef<Path>) -> Result<LdrImage> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut decoder = png::Decoder::new(BufReader::new(file));
    decoder.set_transformations(png::Transformations::IDENTITY);
    let mut reader = decoder
        .read_info()
        .map_err(|e| Error::Png(format!("{}: {e}", path.display())))?;

    let info = reader.info();
    let channels = match info.color_type {
        png::ColorType::Grayscale => 1,
        png::ColorType::Rgb => 3,
        other => {
            return Err(Error::UnsupportedColorType(format!(
                "{other:?} in {}",
                path.display()
            )))
        }
    };
    let bit_depth = match info.bit_depth {
        png::BitDepth::Eight => 8u8,
        png::BitDepth::Sixteen => 16,
        other => {
            return Err(Error::Png(format!(
                "unsupported bit depth {other:?} in {}",
                path.display()
            )))
        }
    };
    let (width, height) = (info.width as usize, info.height as usize);

    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::Png("image too large".into()))?;
    let mut buf = vec![0u8; size];
    let frame = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::Png(format!("{}: {e}", path.display())))?;
    buf.truncate(frame.buffer_size());

    let data: Vec<u16> = if bit_depth == 8 {
        buf.iter().map(|&b| u16::from(b)).collect()
    } else {
        buf.chunks_exact(2)
            .map(|b| u16::from_be_bytes([b[0], b[1]]))
            .collect()
    };
    LdrImage::new(width, height, channels, bit_depth, data)
}

pub fn write_png(image: &LdrImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut encoder = png::Encoder::new(
        BufWriter::new(file),
        image.width() as u32,
        image.height() as u32,
    );
    encoder.set_color(if image.channels() == 3 {
        png::ColorType::Rgb
    } else {
        png::ColorType::Grayscale
    });
    let bytes: Vec<u8> = if image.bit_depth() == 8 {
        encoder.set_depth(png::BitDepth::Eight);
        image.data().iter().map(|&v| v as u8).collect()
    } else {
        encoder.set_depth(png::BitDepth::Sixteen);
        image.data().iter().flat_map(|v| v.to_be_bytes()).collect()
    };
    let png_err = |e: png::EncodingError| Error::Png(format!("{}: {e}", path.display()));
    let mut writer = encoder.write_header().map_err(png_err)?;
    writer.write_image_data(&bytes).map_err(png_err)?;
    writer.finish().map_err(png_err)
}
