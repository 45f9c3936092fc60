use super::mertens::{mertens_fuse, MertensConfig};
use crate::crf::Crf;
use crate::error::{Error, Result};
use crate::fusion::{fuse_ideb, FusionConfig, FusionFlag};
use crate::imgcore::{CaptureStack, RadianceMap};

pub const DISPLAY_GAMMA: f64 = 2.2;

/// Radiance merged across a bracket, with a per-sample flag that is set
/// when at least one exposure fused cleanly.
#[derive(Debug, Clone, PartialEq)]
pub struct MergedHdr {
    pub radiance: RadianceMap,
    pub ok: Vec<bool>,
    /// Exposure used for the common display transform, ms.
    pub t_ref_ms: f64,
}

/// Lower median, so the reference is always one of the captured exposures.
fn median(sorted: &[f64]) -> f64 {
    sorted[(sorted.len() - 1) / 2]
}

/// Fuse every quad, re-expose the irradiance maps at the median exposure
/// into a display-referred domain, blend them by exposure fusion and map
/// the result back to radiance.
pub fn build_reference_hdr(
    stack: &CaptureStack,
    crf: &Crf,
    fusion_cfg: &FusionConfig,
    mertens_cfg: &MertensConfig,
) -> Result<MergedHdr> {
    if stack.is_empty() {
        return Err(Error::Empty("capture stack".into()));
    }
    let t_ref = median(&stack.exposures());
    let white = crf.white_level();
    let to_display = |irr: f64| (irr * t_ref / white).clamp(0.0, 1.0).powf(1.0 / DISPLAY_GAMMA);
    let from_display = |x: f64| white * x.powf(DISPLAY_GAMMA) / t_ref;

    let mut tone = Vec::with_capacity(stack.len());
    let mut ok: Option<Vec<bool>> = None;
    for quad in stack.quads() {
        let fused = fuse_ideb(quad, crf, fusion_cfg)?;
        let flags_ok = ok.get_or_insert_with(|| vec![false; fused.flags.len()]);
        for (dst, f) in flags_ok.iter_mut().zip(&fused.flags) {
            *dst |= *f == FusionFlag::Ok;
        }
        let (w, h, c) = fused.ideb.dims();
        let data = fused.ideb.data().iter().map(|&v| to_display(v)).collect();
        tone.push(RadianceMap::new(w, h, c, data)?);
    }

    let merged = mertens_fuse(&tone, mertens_cfg)?;
    let (w, h, c) = merged.dims();
    let data = merged.data().iter().map(|&x| from_display(x)).collect();
    Ok(MergedHdr {
        radiance: RadianceMap::new(w, h, c, data)?,
        ok: ok.expect("non-empty stack"),
        t_ref_ms: t_ref,
    })
}
