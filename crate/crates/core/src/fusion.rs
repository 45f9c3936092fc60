//! Gaussian-weighted fusion of the four orientation captures into one
//! irradiance estimate.
//!
//! Orthogonal polarizer pairs (0°, 90°) and (45°, 135°) each collect the
//! full incident irradiance, so `g(L_a) + g(L_b)` estimates `I₀·t0` once
//! per pair. The two estimates are averaged with a Gaussian weight on the
//! normalized level sum of the pair, favouring well-exposed pairs:
//!
//! ```text
//! I = Σ_k W(L_a + L_b)·(g(L_a) + g(L_b)) / Σ_k W(L_a + L_b)·t0
//! ```

use rayon::prelude::*;

use crate::crf::Crf;
use crate::error::{Error, Result};
use crate::imgcore::{LdrImage, PolarQuad, RadianceMap};

/// Orthogonal index pairs: (0°, 90°) and (45°, 135°).
pub const PAIRS: [(usize, usize); 2] = [(0, 2), (1, 3)];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionConfig {
    /// Width of the Gaussian weight on the normalized pair sum.
    pub sigma: f64,
    /// Levels at or above this count as saturated. `None` means
    /// `2^bit_depth − 2`.
    pub saturation_level: Option<u32>,
    pub epsilon_denominator: f64,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            sigma: 0.2,
            saturation_level: None,
            epsilon_denominator: 1e-12,
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidInput(format!("sigma {} must be > 0", self.sigma)));
        }
        if !(self.epsilon_denominator > 0.0) {
            return Err(Error::InvalidInput(
                "epsilon_denominator must be > 0".into(),
            ));
        }
        Ok(())
    }

    pub fn saturation_for(&self, bit_depth: u8) -> u32 {
        self.saturation_level
            .unwrap_or(((1u32 << bit_depth) - 1).saturating_sub(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FusionFlag {
    Ok,
    /// All four orientations saturated; value is the lower bound
    /// `2·g(max)/t0`.
    AllSaturated,
    /// Both pair weights vanished without saturation.
    Degenerate,
}

impl FusionFlag {
    /// Mask encoding used for the flag PNG.
    pub fn mask_level(self) -> u8 {
        match self {
            FusionFlag::Ok => 255,
            FusionFlag::Degenerate => 128,
            FusionFlag::AllSaturated => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusedHdr {
    pub ideb: RadianceMap,
    /// Per-sample denominator `Σ W·t0`.
    pub weight_total: Vec<f64>,
    pub flags: Vec<FusionFlag>,
}

impl FusedHdr {
    /// Single-channel 8-bit mask; a pixel is 255 only when every channel
    /// fused cleanly.
    pub fn flag_mask(&self) -> LdrImage {
        let c = self.ideb.channels();
        let data = self
            .flags
            .chunks_exact(c)
            .map(|px| {
                let worst = if px.contains(&FusionFlag::AllSaturated) {
                    FusionFlag::AllSaturated
                } else if px.contains(&FusionFlag::Degenerate) {
                    FusionFlag::Degenerate
                } else {
                    FusionFlag::Ok
                };
                u16::from(worst.mask_level())
            })
            .collect();
        LdrImage::new(self.ideb.width(), self.ideb.height(), 1, 8, data).expect("mask shape")
    }

    pub fn ok_count(&self) -> usize {
        self.flags.iter().filter(|f| **f == FusionFlag::Ok).count()
    }
}

/// `exp(−(x − 0.5)² / (2σ²))` on a pair sum normalized to `[0, 1]`.
pub fn gaussian_weight(x: f64, sigma: f64) -> f64 {
    let d = x - 0.5;
    (-(d * d) / (2.0 * sigma * sigma)).exp()
}

struct PixelFusion {
    value: f64,
    denominator: f64,
    flag: FusionFlag,
}

fn fuse_pixel(
    levels: [f64; 4],
    max: f64,
    saturation: f64,
    g: impl Fn(f64) -> f64,
    t0: f64,
    cfg: &FusionConfig,
) -> PixelFusion {
    if levels.iter().all(|&l| l >= saturation) {
        return PixelFusion {
            value: 2.0 * g(max) / t0,
            denominator: 0.0,
            flag: FusionFlag::AllSaturated,
        };
    }
    let mut num = 0.0;
    let mut weight_sum = 0.0;
    let mut plain = 0.0;
    for (a, b) in PAIRS {
        let w = gaussian_weight((levels[a] + levels[b]) / (2.0 * max), cfg.sigma);
        let pair = g(levels[a]) + g(levels[b]);
        num += w * pair;
        weight_sum += w;
        plain += pair;
    }
    if weight_sum < cfg.epsilon_denominator {
        return PixelFusion {
            value: plain / (PAIRS.len() as f64 * t0),
            denominator: weight_sum * t0,
            flag: FusionFlag::Degenerate,
        };
    }
    let denominator = weight_sum * t0;
    PixelFusion {
        value: num / denominator,
        denominator,
        flag: FusionFlag::Ok,
    }
}

fn assemble(width: usize, height: usize, channels: usize, px: Vec<PixelFusion>) -> FusedHdr {
    let ideb = px.iter().map(|p| p.value.max(0.0)).collect();
    FusedHdr {
        ideb: RadianceMap::from_raw(width, height, channels, ideb),
        weight_total: px.iter().map(|p| p.denominator).collect(),
        flags: px.iter().map(|p| p.flag).collect(),
    }
}

pub fn fuse_ideb(quad: &PolarQuad, crf: &Crf, cfg: &FusionConfig) -> Result<FusedHdr> {
    cfg.validate()?;
    if quad.bit_depth() != crf.bit_depth() {
        return Err(Error::DimensionMismatch(format!(
            "{}-bit quad with {}-bit crf",
            quad.bit_depth(),
            crf.bit_depth()
        )));
    }
    let table = crf.inverse_table();
    let max = f64::from(crf.max_level());
    let saturation = f64::from(cfg.saturation_for(crf.bit_depth()));
    let t0 = quad.t0_ms();
    let imgs = quad.images();
    let n = imgs[0].data().len();
    let g = |l: f64| table[l as usize];
    let px: Vec<PixelFusion> = (0..n)
        .into_par_iter()
        .map(|i| {
            let levels = std::array::from_fn(|k| f64::from(imgs[k].data()[i]));
            fuse_pixel(levels, max, saturation, g, t0, cfg)
        })
        .collect();
    Ok(assemble(quad.width(), quad.height(), quad.channels(), px))
}

/// Fusion on real-valued (unquantized) levels through the continuous
/// inverse response. With no clipping this reproduces `I₀` up to rounding.
pub fn fuse_ideb_levels(
    levels: &[Vec<f64>; 4],
    width: usize,
    height: usize,
    crf: &Crf,
    t0_ms: f64,
    cfg: &FusionConfig,
) -> Result<FusedHdr> {
    cfg.validate()?;
    let n = levels[0].len();
    if levels.iter().any(|l| l.len() != n) || n == 0 || !n.is_multiple_of(width * height) {
        return Err(Error::DimensionMismatch(
            "level planes do not match the image size".into(),
        ));
    }
    let channels = n / (width * height);
    let max = f64::from(crf.max_level());
    let saturation = f64::from(cfg.saturation_for(crf.bit_depth()));
    let g = |l: f64| crf.invert_continuous(l);
    let px: Vec<PixelFusion> = (0..n)
        .into_par_iter()
        .map(|i| {
            let lv = std::array::from_fn(|k| levels[k][i]);
            fuse_pixel(lv, max, saturation, g, t0_ms, cfg)
        })
        .collect();
    Ok(assemble(width, height, channels, px))
}

/// `true` where at least one orientation is below the saturation level.
pub fn saturation_mask(quad: &PolarQuad, cfg: &FusionConfig) -> Vec<bool> {
    let sat = cfg.saturation_for(quad.bit_depth());
    let imgs = quad.images();
    (0..imgs[0].data().len())
        .map(|i| imgs.iter().any(|im| u32::from(im.data()[i]) < sat))
        .collect()
}
