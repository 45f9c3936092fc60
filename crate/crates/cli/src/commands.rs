use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde_json::{json, Value};

use polhdr_core::crf::{linearize, solve_crf_stack, Crf, SolveConfig};
use polhdr_core::fusion::{fuse_ideb, FusionConfig, FusionFlag};
use polhdr_core::hdrops::{
    build_reference_hdr, reinhard_stats, reinhard_tonemap, reinhard_with_stats, MertensConfig,
    ReinhardConfig,
};
use polhdr_core::imgcore::{
    load_stack, read_pfm, read_png, save_stack, write_pfm, write_pfm_samples, write_png, CaptureStack,
    LdrImage,
};
use polhdr_core::metrics::{hdr_log_psnr, masked_metrics, SsimConfig};
use polhdr_core::polar::{demosaic_quad, mosaic_from_quad, stokes_map, PolPixelFlag};
use polhdr_core::synth::{generate_scene, simulate_stack, SceneSpec};
use polhdr_core::{quantize, Error, Result};

use crate::{
    path_json, sibling, CrfSolveArgs, DemosaicArgs, EvaluateArgs, FuseArgs, FusionArgs, MergeArgs,
    SimulateArgs, StokesArgs, TonemapArgs,
};

fn read_crf(path: &Path) -> Result<Crf> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Crf::from_json(&text)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// The `--crf` file if given, else the manifest's curve.
fn resolve_crf(flag: Option<&Path>, stack: &CaptureStack) -> Result<Crf> {
    match (flag, stack.crf()) {
        (Some(p), _) => read_crf(p),
        (None, Some(c)) => Ok(c.clone()),
        (None, None) => Err(Error::InvalidInput(
            "no camera response: pass --crf or store one in the manifest".into(),
        )),
    }
}

fn fusion_config(a: &FusionArgs) -> Result<FusionConfig> {
    let cfg = FusionConfig {
        sigma: a.sigma,
        saturation_level: a.sat_level,
        ..FusionConfig::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

fn pick_quad(stack: &CaptureStack, index: usize) -> Result<&polhdr_core::imgcore::PolarQuad> {
    stack.quads().get(index).ok_or_else(|| {
        Error::InvalidInput(format!("quad {index} out of range, stack has {}", stack.len()))
    })
}

fn mask_image(width: usize, height: usize, keep: impl Iterator<Item = bool>) -> Result<LdrImage> {
    let data = keep.map(|k| if k { 255 } else { 0 }).collect();
    LdrImage::new(width, height, 1, 8, data)
}

fn span_stops(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (lo, hi) = values
        .filter(|v| *v > 0.0)
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    (hi > 0.0).then(|| (hi / lo).log2())
}

pub fn simulate(a: &SimulateArgs, seed: u64) -> Result<Value> {
    let spec = SceneSpec {
        width: a.width,
        height: a.height,
        dynamic_range_stops: a.stops,
        rho_range: (a.rho.0, a.rho.1),
        theta_field: a.theta,
        radiance_pattern: a.scene,
        peak_radiance: a.peak,
        seed,
    };
    let crf = match &a.crf {
        Some(p) => read_crf(p)?,
        None => Crf::gamma(a.gamma, 1.0, a.bit_depth)?,
    };
    let mut exposures = a.exposures.0.clone();
    exposures.sort_by(f64::total_cmp);

    let gt = generate_scene(&spec)?;
    let stack = simulate_stack(&gt, &exposures, &crf, a.noise, seed)?;
    create_dir(&a.out)?;
    write_pfm(&gt.radiance, a.out.join("gt_radiance.pfm"))?;
    write_pfm(&gt.rho, a.out.join("gt_rho.pfm"))?;
    write_pfm(&gt.theta_deg, a.out.join("gt_theta.pfm"))?;
    write_text(&a.out.join("crf.json"), &crf.to_json())?;
    let manifest = save_stack(&stack, &a.out)?;

    let mut mosaics = Vec::new();
    if let Some(pattern) = a.pattern {
        let dir = a.out.join("mosaic");
        create_dir(&dir)?;
        for (i, quad) in stack.quads().iter().enumerate() {
            let path = dir.join(format!("mosaic_{i:02}.png"));
            write_png(&mosaic_from_quad(quad, pattern)?, &path)?;
            mosaics.push(json!({ "t0_ms": quad.t0_ms(), "path": path_json(&path) }));
        }
    }
    log::info!("simulated {} exposures into {}", stack.len(), a.out.display());
    Ok(json!({
        "manifest": path_json(&manifest),
        "quads": stack.len(),
        "width": gt.width(),
        "height": gt.height(),
        "scene_stops": span_stops(gt.radiance.data().iter().copied()),
        "mosaics": mosaics,
    }))
}

pub fn demosaic(a: &DemosaicArgs) -> Result<Value> {
    let mosaic = read_png(&a.input)?;
    let crf = a.crf.as_deref().map(read_crf).transpose()?.map(Arc::new);
    let quad = demosaic_quad(&mosaic, a.pattern, a.mode, a.t0, crf.clone())?;
    let (w, h) = (quad.width(), quad.height());
    let manifest = save_stack(&CaptureStack::new(vec![quad], crf)?, &a.out)?;
    Ok(json!({ "manifest": path_json(&manifest), "width": w, "height": h }))
}

pub fn stokes(a: &StokesArgs) -> Result<Value> {
    let stack = load_stack(&a.manifest)?;
    let crf = resolve_crf(a.crf.as_deref(), &stack)?;
    let quad = pick_quad(&stack, a.quad)?;
    let planes = quad
        .images()
        .iter()
        .map(|im| linearize(im, &crf, quad.t0_ms()))
        .collect::<Result<Vec<_>>>()?;
    let smap = stokes_map(&planes.try_into().expect("four planes"))?;
    let pol = smap.pol_map();
    let (w, h, c) = smap.dims();
    create_dir(&a.out)?;
    for (name, data) in [("s0", smap.s0()), ("s1", smap.s1()), ("s2", smap.s2())] {
        write_pfm_samples(w, h, c, data, a.out.join(format!("{name}.pfm")))?;
    }
    write_pfm(&pol.rho, a.out.join("rho.pfm"))?;
    write_pfm(&pol.theta_deg, a.out.join("theta.pfm"))?;
    let count = |f: PolPixelFlag| pol.flags.iter().filter(|x| **x == f).count();
    Ok(json!({
        "t0_ms": quad.t0_ms(),
        "clamped": pol.clamp_count,
        "angle_undefined": count(PolPixelFlag::AngleUndefined),
        "degenerate": count(PolPixelFlag::Degenerate),
    }))
}

pub fn fuse(a: &FuseArgs) -> Result<Value> {
    let stack = load_stack(&a.manifest)?;
    let crf = resolve_crf(a.fusion.crf.as_deref(), &stack)?;
    let cfg = fusion_config(&a.fusion)?;
    let quad = pick_quad(&stack, a.quad)?;
    let fused = fuse_ideb(quad, &crf, &cfg)?;
    write_pfm(&fused.ideb, &a.out)?;
    let mask_path = a.mask.clone().unwrap_or_else(|| sibling(&a.out, "mask"));
    let mask = fused.flag_mask();
    write_png(&mask, &mask_path)?;

    let count = |f: FusionFlag| fused.flags.iter().filter(|x| **x == f).count();
    let recoverable = mask.data().iter().filter(|&&v| v != 0).count();
    Ok(json!({
        "t0_ms": quad.t0_ms(),
        "out": path_json(&a.out),
        "mask": path_json(&mask_path),
        "ok": count(FusionFlag::Ok),
        "all_saturated": count(FusionFlag::AllSaturated),
        "degenerate": count(FusionFlag::Degenerate),
        "recoverable_fraction": recoverable as f64 / mask.data().len() as f64,
    }))
}

pub fn merge(a: &MergeArgs) -> Result<Value> {
    let stack = load_stack(&a.manifest)?;
    let crf = resolve_crf(a.fusion.crf.as_deref(), &stack)?;
    let cfg = fusion_config(&a.fusion)?;
    let merged = build_reference_hdr(&stack, &crf, &cfg, &MertensConfig::default())?;
    write_pfm(&merged.radiance, &a.out)?;

    let (w, h, c) = merged.radiance.dims();
    let mask_path = a.mask.clone().unwrap_or_else(|| sibling(&a.out, "mask"));
    let mask = mask_image(w, h, merged.ok.chunks_exact(c).map(|px| px.iter().all(|&k| k)))?;
    write_png(&mask, &mask_path)?;

    let ok_values = merged
        .radiance
        .data()
        .iter()
        .zip(&merged.ok)
        .filter(|(_, &k)| k)
        .map(|(v, _)| *v);
    Ok(json!({
        "out": path_json(&a.out),
        "mask": path_json(&mask_path),
        "t_ref_ms": merged.t_ref_ms,
        "ok_fraction": merged.ok.iter().filter(|&&k| k).count() as f64 / merged.ok.len() as f64,
        "ok_stops": span_stops(ok_values),
    }))
}

pub fn tonemap(a: &TonemapArgs) -> Result<Value> {
    let map = read_pfm(&a.input)?;
    let cfg = ReinhardConfig {
        key: a.key,
        white: a.white,
        ..ReinhardConfig::default()
    };
    let out = reinhard_tonemap(&map, &cfg)?;
    let (w, h, c) = out.dims();
    let data = out.data().iter().map(|&v| quantize(v * 255.0, 255)).collect();
    write_png(&LdrImage::new(w, h, c, 8, data)?, &a.out)?;
    Ok(json!({ "out": path_json(&a.out), "width": w, "height": h }))
}

pub fn crf_solve(a: &CrfSolveArgs, seed: u64) -> Result<Value> {
    let stack = load_stack(&a.manifest)?;
    let cfg = SolveConfig {
        lambda: a.lambda,
        samples: a.samples,
        seed,
    };
    let crf = solve_crf_stack(&stack, &cfg)?;
    write_text(&a.out, &crf.to_json())?;
    Ok(json!({
        "out": path_json(&a.out),
        "exposures": stack.len(),
        "levels": crf.max_level() + 1,
    }))
}

pub fn evaluate(a: &EvaluateArgs) -> Result<Value> {
    let reference = read_pfm(&a.reference)?;
    let test = read_pfm(&a.test)?;
    let (w, h, _) = reference.dims();
    let mask = match &a.mask {
        None => None,
        Some(p) => {
            let img = read_png(p)?;
            if (img.width(), img.height()) != (w, h) {
                return Err(Error::DimensionMismatch(format!(
                    "mask is {}x{}, reference is {w}x{h}",
                    img.width(),
                    img.height()
                )));
            }
            let c = img.channels();
            Some(img.data().chunks_exact(c).map(|px| px.iter().any(|&v| v != 0)).collect::<Vec<_>>())
        }
    };
    let psnr = hdr_log_psnr(&reference, &test, mask.as_deref())?;

    // tone-map both with the reference's statistics
    let stats = reinhard_stats(&reference, &ReinhardConfig::default())?;
    let r = reinhard_with_stats(&reference, &stats);
    let t = reinhard_with_stats(&test, &stats);
    let full = vec![true; w * h];
    let keep = mask.as_deref().unwrap_or(&full);
    let ssim = masked_metrics(&r, &t, keep, 1.0, &SsimConfig::default())?.ssim;
    let recoverable = keep.iter().filter(|&&k| k).count() as f64 / keep.len() as f64;

    Ok(json!({
        "psnr_db": if psnr.is_infinite() { json!("inf") } else { json!(psnr) },
        "ssim": ssim,
        "recoverable_fraction": recoverable,
    }))
}
