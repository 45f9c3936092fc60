//! Exposure fusion of display-referred images.
//!
//! Each input receives a per-pixel weight from local contrast (absolute
//! 3×3 Laplacian of its gray image), saturation (standard deviation across
//! color channels) and well-exposedness (Gaussian around mid-gray, per
//! channel, multiplied). Normalized weights blend the inputs' Laplacian
//! pyramids level by level through Gaussian pyramids of the weights.

use rayon::prelude::*;

use super::pyramid::{collapse, gaussian_pyramid, laplacian_pyramid, Plane};
use crate::error::{Error, Result};
use crate::imgcore::RadianceMap;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MertensConfig {
    pub w_contrast: f64,
    pub w_saturation: f64,
    pub w_wellexposed: f64,
    /// `None` picks `floor(log2(min dimension)) − 1`, at least 1.
    pub pyramid_levels: Option<usize>,
    pub wellexposed_sigma: f64,
}

impl Default for MertensConfig {
    fn default() -> Self {
        Self {
            w_contrast: 1.0,
            w_saturation: 1.0,
            w_wellexposed: 1.0,
            pyramid_levels: None,
            wellexposed_sigma: 0.2,
        }
    }
}

impl MertensConfig {
    fn validate(&self) -> Result<()> {
        let exps = [self.w_contrast, self.w_saturation, self.w_wellexposed];
        if exps.iter().any(|e| !(*e >= 0.0)) || exps.iter().all(|e| *e == 0.0) {
            return Err(Error::InvalidInput(
                "weight exponents must be >= 0 with at least one > 0".into(),
            ));
        }
        if self.pyramid_levels == Some(0) {
            return Err(Error::InvalidInput("pyramid_levels must be >= 1".into()));
        }
        if !(self.wellexposed_sigma > 0.0) {
            return Err(Error::InvalidInput("wellexposed_sigma must be > 0".into()));
        }
        Ok(())
    }

    pub fn levels_for(&self, width: usize, height: usize) -> usize {
        self.pyramid_levels.unwrap_or_else(|| {
            let min_dim = width.min(height).max(1);
            (min_dim.ilog2() as usize).saturating_sub(1).max(1)
        })
    }
}

const TOTAL_FLOOR: f64 = 1e-12;

fn check_inputs(images: &[RadianceMap]) -> Result<(usize, usize, usize)> {
    let first = images
        .first()
        .ok_or_else(|| Error::Empty("exposure fusion needs at least one image".into()))?;
    let dims = first.dims();
    if images.iter().any(|im| im.dims() != dims) {
        return Err(Error::DimensionMismatch(
            "exposure fusion inputs differ in shape".into(),
        ));
    }
    Ok(dims)
}

fn gray(im: &RadianceMap) -> Plane {
    let c = im.channels();
    let data = im
        .data()
        .chunks_exact(c)
        .map(|px| {
            if c == 3 {
                0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2]
            } else {
                px[0]
            }
        })
        .collect();
    Plane::new(im.width(), im.height(), data)
}

fn raw_weights(im: &RadianceMap, cfg: &MertensConfig) -> Vec<f64> {
    let (w, h, c) = im.dims();
    let g = gray(im);
    let two_s2 = 2.0 * cfg.wellexposed_sigma * cfg.wellexposed_sigma;
    (0..w * h)
        .into_par_iter()
        .map(|i| {
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            let at = |dx: isize, dy: isize| {
                let xx = (x + dx).clamp(0, w as isize - 1) as usize;
                let yy = (y + dy).clamp(0, h as isize - 1) as usize;
                g.at(xx, yy)
            };
            let contrast =
                (at(-1, 0) + at(1, 0) + at(0, -1) + at(0, 1) - 4.0 * at(0, 0)).abs();
            let px = &im.data()[i * c..(i + 1) * c];
            let saturation = if c == 1 {
                1.0
            } else {
                let mean = px.iter().sum::<f64>() / c as f64;
                (px.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / c as f64).sqrt()
            };
            let wellexposed: f64 = px
                .iter()
                .map(|v| (-(v - 0.5).powi(2) / two_s2).exp())
                .product();
            contrast.powf(cfg.w_contrast)
                * saturation.powf(cfg.w_saturation)
                * wellexposed.powf(cfg.w_wellexposed)
        })
        .collect()
}

/// Normalized per-image weight maps; they sum to 1 at every pixel, falling
/// back to uniform weights where every raw weight vanishes.
pub fn mertens_weights(images: &[RadianceMap], cfg: &MertensConfig) -> Result<Vec<Vec<f64>>> {
    cfg.validate()?;
    let (w, h, _) = check_inputs(images)?;
    let raw: Vec<Vec<f64>> = images.iter().map(|im| raw_weights(im, cfg)).collect();
    let n = images.len() as f64;
    let mut out = vec![vec![0.0; w * h]; images.len()];
    for i in 0..w * h {
        let total: f64 = raw.iter().map(|r| r[i]).sum();
        for (k, r) in raw.iter().enumerate() {
            out[k][i] = if total < TOTAL_FLOOR { 1.0 / n } else { r[i] / total };
        }
    }
    Ok(out)
}

pub fn mertens_fuse(images: &[RadianceMap], cfg: &MertensConfig) -> Result<RadianceMap> {
    let (w, h, c) = check_inputs(images)?;
    let weights = mertens_weights(images, cfg)?;
    let levels = cfg.levels_for(w, h);

    let weight_pyrs: Vec<Vec<Plane>> = weights
        .into_iter()
        .map(|wm| gaussian_pyramid(&Plane::new(w, h, wm), levels))
        .collect();

    let mut out = vec![0.0; w * h * c];
    for ch in 0..c {
        let mut blended: Option<Vec<Plane>> = None;
        for (im, wp) in images.iter().zip(&weight_pyrs) {
            let plane = Plane::new(w, h, im.channel(ch).into_data());
            let lap = laplacian_pyramid(&plane, levels);
            let acc = blended.get_or_insert_with(|| {
                lap.iter()
                    .map(|l| Plane::filled(l.width, l.height, 0.0))
                    .collect()
            });
            for ((a, l), g) in acc.iter_mut().zip(&lap).zip(wp) {
                for ((dst, lv), gv) in a.data.iter_mut().zip(&l.data).zip(&g.data) {
                    *dst += lv * gv;
                }
            }
        }
        let fused = collapse(&blended.expect("at least one image"));
        for (i, v) in fused.data.into_iter().enumerate() {
            out[i * c + ch] = v.clamp(0.0, 1.0);
        }
    }
    RadianceMap::new(w, h, c, out)
}
