//! Fidelity metrics for radiance and display-referred images.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hdrops::{reinhard_stats, reinhard_with_stats, ReinhardConfig};
use crate::imgcore::RadianceMap;
use crate::util::compensated_sum;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsimConfig {
    /// Side of the square Gaussian window.
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    /// Value range of the compared images.
    pub dynamic_range: f64,
}

impl Default for SsimConfig {
    fn default() -> Self {
        Self {
            window: 11,
            sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
            dynamic_range: 1.0,
        }
    }
}

impl SsimConfig {
    pub fn with_dynamic_range(dynamic_range: f64) -> Self {
        Self {
            dynamic_range,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window == 0 || self.window.is_multiple_of(2) {
            return Err(Error::InvalidInput(format!(
                "ssim window must be odd, got {}",
                self.window
            )));
        }
        let positive = [self.sigma, self.k1, self.k2, self.dynamic_range];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidInput(
                "ssim sigma, k1, k2 and dynamic range must be > 0".into(),
            ));
        }
        Ok(())
    }

    /// Normalized 1-D taps; the 2-D window is their outer product.
    pub fn kernel(&self) -> Vec<f64> {
        let r = (self.window / 2) as f64;
        let taps: Vec<f64> = (0..self.window)
            .map(|i| {
                let d = i as f64 - r;
                (-d * d / (2.0 * self.sigma * self.sigma)).exp()
            })
            .collect();
        let total: f64 = taps.iter().sum();
        taps.into_iter().map(|t| t / total).collect()
    }
}

/// PSNR and SSIM restricted to a pixel mask.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskedMetrics {
    pub psnr_db: f64,
    /// `None` when no window lies entirely inside the mask.
    pub ssim: Option<f64>,
    pub pixels: usize,
}

fn same_dims(a: &RadianceMap, b: &RadianceMap) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::DimensionMismatch(format!(
            "{:?} vs {:?}",
            a.dims(),
            b.dims()
        )));
    }
    Ok(())
}

fn psnr_from_mse(mse: f64, peak: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (peak * peak / mse).log10()
    }
}

fn check_peak(peak: f64) -> Result<()> {
    if peak.is_finite() && peak > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("peak {peak} must be > 0")))
    }
}

/// Peak signal-to-noise ratio in dB; identical inputs give `f64::INFINITY`.
pub fn psnr(a: &RadianceMap, b: &RadianceMap, peak: f64) -> Result<f64> {
    same_dims(a, b)?;
    check_peak(peak)?;
    let sse = compensated_sum(a.data().iter().zip(b.data()).map(|(x, y)| (x - y) * (x - y)));
    Ok(psnr_from_mse(sse / a.data().len() as f64, peak))
}

/// Local SSIM value for every window position fully inside the image,
/// row-major over the `(w - n + 1) × (h - n + 1)` valid grid.
fn ssim_field(a: &[f64], b: &[f64], w: usize, h: usize, cfg: &SsimConfig) -> Vec<f64> {
    let k = cfg.kernel();
    let n = k.len();
    let (ow, oh) = (w - n + 1, h - n + 1);
    let filter = |src: &(dyn Fn(usize) -> f64 + Sync)| -> Vec<f64> {
        let mut rows = vec![0.0; ow * h];
        rows.par_chunks_mut(ow).enumerate().for_each(|(y, row)| {
            for (x, out) in row.iter_mut().enumerate() {
                *out = k.iter().enumerate().map(|(i, t)| t * src(y * w + x + i)).sum();
            }
        });
        let mut out = vec![0.0; ow * oh];
        out.par_chunks_mut(ow).enumerate().for_each(|(y, row)| {
            for (x, o) in row.iter_mut().enumerate() {
                *o = k.iter().enumerate().map(|(i, t)| t * rows[(y + i) * ow + x]).sum();
            }
        });
        out
    };
    let mu_a = filter(&|i| a[i]);
    let mu_b = filter(&|i| b[i]);
    let aa = filter(&|i| a[i] * a[i]);
    let bb = filter(&|i| b[i] * b[i]);
    let ab = filter(&|i| a[i] * b[i]);
    let c1 = (cfg.k1 * cfg.dynamic_range).powi(2);
    let c2 = (cfg.k2 * cfg.dynamic_range).powi(2);
    (0..ow * oh)
        .into_par_iter()
        .map(|i| {
            let (ma, mb) = (mu_a[i], mu_b[i]);
            let va = aa[i] - ma * ma;
            let vb = bb[i] - mb * mb;
            let cov = ab[i] - ma * mb;
            (2.0 * ma * mb + c1) * (2.0 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2))
        })
        .collect()
}

fn check_ssim_inputs(a: &RadianceMap, b: &RadianceMap, cfg: &SsimConfig) -> Result<()> {
    same_dims(a, b)?;
    cfg.validate()?;
    if a.width() < cfg.window || a.height() < cfg.window {
        return Err(Error::InvalidInput(format!(
            "image {}x{} is smaller than the {}x{} ssim window",
            a.width(),
            a.height(),
            cfg.window,
            cfg.window
        )));
    }
    Ok(())
}

/// Mean structural similarity, averaged over channels.
pub fn ssim(a: &RadianceMap, b: &RadianceMap, cfg: &SsimConfig) -> Result<f64> {
    check_ssim_inputs(a, b, cfg)?;
    let (w, h, c) = a.dims();
    let mut per_channel = Vec::with_capacity(c);
    for ch in 0..c {
        let field = ssim_field(a.channel(ch).data(), b.channel(ch).data(), w, h, cfg);
        per_channel.push(compensated_sum(field.iter().copied()) / field.len() as f64);
    }
    Ok(per_channel.iter().sum::<f64>() / c as f64)
}

/// PSNR over masked pixels and SSIM over windows lying wholly in the mask.
pub fn masked_metrics(
    a: &RadianceMap,
    b: &RadianceMap,
    mask: &[bool],
    peak: f64,
    cfg: &SsimConfig,
) -> Result<MaskedMetrics> {
    same_dims(a, b)?;
    check_peak(peak)?;
    let (w, h, c) = a.dims();
    if mask.len() != w * h {
        return Err(Error::DimensionMismatch(format!(
            "mask has {} entries for a {w}x{h} image",
            mask.len()
        )));
    }
    let pixels = mask.iter().filter(|&&m| m).count();
    if pixels == 0 {
        return Err(Error::Empty("mask selects no pixels".into()));
    }
    let sse = compensated_sum(
        a.data()
            .chunks_exact(c)
            .zip(b.data().chunks_exact(c))
            .zip(mask)
            .filter(|(_, &m)| m)
            .flat_map(|((pa, pb), _)| pa.iter().zip(pb).map(|(x, y)| (x - y) * (x - y))),
    );
    let psnr_db = psnr_from_mse(sse / (pixels * c) as f64, peak);

    let ssim = if w >= cfg.window && h >= cfg.window {
        check_ssim_inputs(a, b, cfg)?;
        let inside = windows_inside(mask, w, h, cfg.window);
        if inside.iter().any(|&v| v) {
            let mut total = 0.0;
            for ch in 0..c {
                let field = ssim_field(a.channel(ch).data(), b.channel(ch).data(), w, h, cfg);
                let kept: Vec<f64> = field
                    .iter()
                    .zip(&inside)
                    .filter(|(_, &k)| k)
                    .map(|(v, _)| *v)
                    .collect();
                total += compensated_sum(kept.iter().copied()) / kept.len() as f64;
            }
            Some(total / c as f64)
        } else {
            None
        }
    } else {
        None
    };
    Ok(MaskedMetrics {
        psnr_db,
        ssim,
        pixels,
    })
}

/// Whether each valid `n × n` window contains only masked pixels.
fn windows_inside(mask: &[bool], w: usize, h: usize, n: usize) -> Vec<bool> {
    // summed-area table of excluded pixels
    let mut sat = vec![0usize; (w + 1) * (h + 1)];
    for y in 0..h {
        for x in 0..w {
            sat[(y + 1) * (w + 1) + x + 1] = usize::from(!mask[y * w + x])
                + sat[y * (w + 1) + x + 1]
                + sat[(y + 1) * (w + 1) + x]
                - sat[y * (w + 1) + x];
        }
    }
    let (ow, oh) = (w - n + 1, h - n + 1);
    let mut out = Vec::with_capacity(ow * oh);
    for y in 0..oh {
        for x in 0..ow {
            let s = sat[(y + n) * (w + 1) + x + n] + sat[y * (w + 1) + x]
                - sat[y * (w + 1) + x + n]
                - sat[(y + n) * (w + 1) + x];
            out.push(s == 0);
        }
    }
    out
}

/// Both maps divided by the reference maximum, floored at the smallest
/// positive normalized reference value, in log2 units. Returns the pair
/// and the log2 span of the reference.
pub fn log2_normalized(
    reference: &RadianceMap,
    test: &RadianceMap,
) -> Result<(RadianceMap, RadianceMap, f64)> {
    same_dims(reference, test)?;
    let (lo, hi) = reference
        .positive_range()
        .ok_or_else(|| Error::InvalidInput("reference has no positive samples".into()))?;
    let floor = lo / hi;
    let to_log = |v: f64| (v / hi).max(floor).log2() - floor.log2();
    let (w, h, c) = reference.dims();
    let r = reference.data().iter().map(|&v| to_log(v)).collect();
    let t = test.data().iter().map(|&v| to_log(v)).collect();
    Ok((
        RadianceMap::from_raw(w, h, c, r),
        RadianceMap::from_raw(w, h, c, t),
        -floor.log2(),
    ))
}

/// Log-domain PSNR of a radiance estimate against a reference, with the
/// reference's log2 dynamic range as the peak.
pub fn hdr_log_psnr(reference: &RadianceMap, test: &RadianceMap, mask: Option<&[bool]>) -> Result<f64> {
    let (r, t, span) = log2_normalized(reference, test)?;
    if !(span > 0.0) {
        return Err(Error::InvalidInput("reference has no dynamic range".into()));
    }
    match mask {
        None => psnr(&r, &t, span),
        Some(m) => Ok(masked_metrics(&r, &t, m, span, &SsimConfig::default())?.psnr_db),
    }
}

/// SSIM of both maps after tone mapping with the reference's statistics.
pub fn hdr_tonemapped_ssim(
    reference: &RadianceMap,
    test: &RadianceMap,
    reinhard: &ReinhardConfig,
    cfg: &SsimConfig,
) -> Result<f64> {
    same_dims(reference, test)?;
    let stats = reinhard_stats(reference, reinhard)?;
    let r = reinhard_with_stats(reference, &stats);
    let t = reinhard_with_stats(test, &stats);
    ssim(&r, &t, &SsimConfig { dynamic_range: 1.0, ..*cfg })
}
