use crate::error::{Error, Result};

/// Linear floating-point radiance, row-major, interleaved channels.
///
/// Every sample is finite and non-negative. Tone-domain maps in `[0, 1]`
/// use the same container.
#[derive(Debug, Clone, PartialEq)]
pub struct RadianceMap {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl RadianceMap {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        check_shape(width, height, channels, data.len())?;
        if let Some((i, v)) = data
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::InvalidInput(format!(
                "radiance sample {i} is {v}; samples must be finite and >= 0"
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Result<Self> {
        Self::new(width, height, channels, vec![value; width * height * channels])
    }

    /// Build from already-validated data. Internal callers only.
    pub(crate) fn from_raw(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height * channels);
        debug_assert!(data.iter().all(|v| v.is_finite() && *v >= 0.0));
        Self {
            width,
            height,
            channels,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.width, self.height, self.channels)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    /// Extract one channel as a single-channel map.
    pub fn channel(&self, c: usize) -> RadianceMap {
        let data = self
            .data
            .chunks_exact(self.channels)
            .map(|px| px[c])
            .collect();
        RadianceMap::from_raw(self.width, self.height, 1, data)
    }

    /// Largest and smallest non-zero sample, if any sample is non-zero.
    pub fn positive_range(&self) -> Option<(f64, f64)> {
        self.data
            .iter()
            .filter(|v| **v > 0.0)
            .fold(None, |acc, &v| match acc {
                None => Some((v, v)),
                Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
            })
    }
}

/// Integer digital levels as read out of the sensor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LdrImage {
    width: usize,
    height: usize,
    channels: usize,
    bit_depth: u8,
    data: Vec<u16>,
}

impl LdrImage {
    pub fn new(
        width: usize,
        height: usize,
        channels: usize,
        bit_depth: u8,
        data: Vec<u16>,
    ) -> Result<Self> {
        check_shape(width, height, channels, data.len())?;
        if bit_depth != 8 && bit_depth != 16 {
            return Err(Error::InvalidInput(format!(
                "bit depth {bit_depth} is not 8 or 16"
            )));
        }
        let max = max_level(bit_depth);
        if let Some(v) = data.iter().find(|v| u32::from(**v) > max) {
            return Err(Error::InvalidInput(format!(
                "level {v} exceeds {max} for {bit_depth}-bit image"
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            bit_depth,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn bit_depth(&self) -> u8 {
        self.bit_depth
    }

    pub fn max_level(&self) -> u32 {
        max_level(self.bit_depth)
    }

    pub fn data(&self) -> &[u16] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize, c: usize) -> u16 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    pub fn same_shape(&self, other: &LdrImage) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.channels == other.channels
            && self.bit_depth == other.bit_depth
    }

    /// Levels scaled to `[0, 1]` by the maximum code value.
    pub fn to_unit_float(&self) -> RadianceMap {
        let max = f64::from(self.max_level());
        let data = self.data.iter().map(|&v| f64::from(v) / max).collect();
        RadianceMap::from_raw(self.width, self.height, self.channels, data)
    }
}

pub fn max_level(bit_depth: u8) -> u32 {
    (1u32 << bit_depth) - 1
}

fn check_shape(width: usize, height: usize, channels: usize, len: usize) -> Result<()> {
    if channels != 1 && channels != 3 {
        return Err(Error::InvalidInput(format!(
            "{channels} channels; expected 1 or 3"
        )));
    }
    if width == 0 || height == 0 {
        return Err(Error::InvalidInput(format!(
            "empty image {width}x{height}"
        )));
    }
    if width * height * channels != len {
        return Err(Error::DimensionMismatch(format!(
            "{width}x{height}x{channels} needs {} samples, got {len}",
            width * height * channels
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radiance_rejects_negative_and_nan() {
        assert!(RadianceMap::new(1, 1, 1, vec![-0.5]).is_err());
        assert!(RadianceMap::new(1, 1, 1, vec![f64::NAN]).is_err());
        assert!(RadianceMap::new(1, 1, 1, vec![f64::INFINITY]).is_err());
        assert!(RadianceMap::new(2, 1, 1, vec![0.5]).is_err());
        assert!(RadianceMap::new(1, 1, 2, vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn ldr_rejects_out_of_range_levels() {
        assert!(LdrImage::new(1, 1, 1, 8, vec![256]).is_err());
        assert!(LdrImage::new(1, 1, 1, 16, vec![65535]).is_ok());
        assert!(LdrImage::new(1, 1, 1, 12, vec![0]).is_err());
    }

    #[test]
    fn positive_range_skips_zeros() {
        let m = RadianceMap::new(3, 1, 1, vec![0.0, 0.25, 4.0]).unwrap();
        assert_eq!(m.positive_range(), Some((0.25, 4.0)));
        let z = RadianceMap::filled(2, 2, 1, 0.0).unwrap();
        assert_eq!(z.positive_range(), None);
    }
}
