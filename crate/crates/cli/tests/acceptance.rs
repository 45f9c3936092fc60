//! Acceptance gate. Every check runs at its stated tolerance and prints one
//! PASS/FAIL line; the process exits non-zero if any check fails.

use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use polhdr_core::crf::{linearize, solve_crf_stack, Crf, SolveConfig};
use polhdr_core::fusion::{fuse_ideb, fuse_ideb_levels, saturation_mask, FusionConfig};
use polhdr_core::hdrops::{
    mertens_fuse, mertens_weights, reinhard_curve, reinhard_stats, reinhard_with_stats,
    MertensConfig, ReinhardConfig,
};
use polhdr_core::imgcore::{read_pfm, read_png, RadianceMap};
use polhdr_core::metrics::{hdr_log_psnr, hdr_tonemapped_ssim, SsimConfig};
use polhdr_core::polar::{
    effective_exposures, forward_quad, pol_state_from_stokes, stokes_from_quad, PolState,
};
use polhdr_core::synth::{
    generate_scene, simulate_capture, simulate_levels, simulate_stack, GroundTruth, SceneSpec,
    DEFAULT_EXPOSURES_MS,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn ulps(a: f64, b: f64) -> u64 {
    (a.to_bits() as i64 - b.to_bits() as i64).unsigned_abs()
}

fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(180.0);
    d.min(180.0 - d)
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool")
        .install(f)
}

fn bits(values: &[f64]) -> Vec<u64> {
    values.iter().map(|v| v.to_bits()).collect()
}

// ---------------------------------------------------------------------------
// formation model

fn formation_samples() -> Vec<(f64, f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    (0..100_000)
        .map(|_| {
            let i0 = 10f64.powf(rng.random_range(-3.0..3.0));
            let rho = rng.random_range(1e-6..=1.0);
            let theta = rng.random_range(0.0..180.0);
            (i0, rho, theta)
        })
        .collect()
}

fn formation_roundtrip() -> Outcome {
    let samples = formation_samples();
    let start = Instant::now();
    let (mut rho_err, mut theta_err) = (0.0f64, 0.0f64);
    let mut theta_fail = Vec::new();
    for &(i0, rho, theta) in &samples {
        let state = PolState::new(rho, theta).unwrap();
        let fit = pol_state_from_stokes(stokes_from_quad(forward_quad(i0, state))).unwrap();
        rho_err = rho_err.max((fit.state.rho() - rho).abs());
        let gap = angle_gap(fit.state.theta_deg(), state.theta_deg());
        theta_err = theta_err.max(gap);
        if gap > 1e-9 {
            theta_fail.push((rho, gap));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let mut detail = format!(
        "1e5 samples, max |drho| {rho_err:.2e} (<= 1e-9), max dtheta {theta_err:.2e} deg (<= 1e-9), {secs:.3} s (< 5 s)"
    );
    if let Some((rho, gap)) = theta_fail.first() {
        detail += &format!(
            "; {} angle misses, e.g. rho {rho:.3e} off by {gap:.2e} deg",
            theta_fail.len()
        );
    }
    outcome(rho_err <= 1e-9 && theta_err <= 1e-9 && secs < 5.0, detail)
}

fn exposure_identities() -> Outcome {
    let (mut worst_i, mut worst_t) = (0u64, 0u64);
    let t0 = 1.153;
    for &(i0, rho, theta) in &formation_samples() {
        let state = PolState::new(rho, theta).unwrap();
        let q = forward_quad(i0, state);
        worst_i = worst_i.max(ulps(q[0] + q[2], i0)).max(ulps(q[1] + q[3], i0));
        let t = effective_exposures(t0, state);
        worst_t = worst_t
            .max(ulps(t.t1() + t.t3(), t0))
            .max(ulps(t.t2() + t.t4(), t0));
    }
    outcome(
        worst_i <= 4 && worst_t <= 4,
        format!("pair sums off by at most {worst_i} ulp (irradiance), {worst_t} ulp (exposure); bound 4"),
    )
}

// ---------------------------------------------------------------------------
// fusion exactness and the single-orientation comparison

fn default_scene() -> GroundTruth {
    generate_scene(&SceneSpec::default()).unwrap()
}

fn gamma_crf() -> Crf {
    Crf::gamma(2.2, 1.0, 8).unwrap()
}

/// Fused outputs of the float and quantized paths, for the determinism check.
fn exactness_outputs(gt: &GroundTruth) -> (Vec<u64>, Vec<u64>, f64, f64) {
    let crf = gamma_crf();
    let max = gt.radiance.data().iter().copied().fold(0.0, f64::max);
    let t0 = 0.9 * crf.white_level() / max;
    let cfg = FusionConfig::default();

    let levels = simulate_levels(gt, t0, &crf, 0.0, 0);
    let float = fuse_ideb_levels(&levels, gt.width(), gt.height(), &crf, t0, &cfg).unwrap();
    let rel = float
        .ideb
        .data()
        .iter()
        .zip(gt.radiance.data())
        .map(|(e, t)| (e - t).abs() / t)
        .fold(0.0, f64::max);

    let quad = simulate_capture(gt, t0, &crf, 0.0, 0).unwrap();
    let fused = fuse_ideb(&quad, &crf, &cfg).unwrap();
    let unsaturated = saturation_mask(&quad, &cfg);
    let mut steps = 0.0f64;
    for (i, keep) in unsaturated.iter().enumerate() {
        if !keep {
            continue;
        }
        let step = quad
            .images()
            .iter()
            .map(|im| crf.quantization_step(im.data()[i]))
            .fold(0.0, f64::max);
        let err = (fused.ideb.data()[i] - gt.radiance.data()[i]).abs() * t0;
        steps = steps.max(err / step);
    }
    (bits(float.ideb.data()), bits(fused.ideb.data()), rel, steps)
}

fn ideb_exactness(gt: &GroundTruth) -> Outcome {
    let (_, _, rel, steps) = exactness_outputs(gt);
    outcome(
        rel <= 1e-6 && steps <= 2.0,
        format!("float path max rel err {rel:.2e} (<= 1e-6); 8-bit path {steps:.3} steps (<= 2)"),
    )
}

struct Comparison {
    t0: f64,
    saturated: f64,
    deb_psnr: f64,
    deb_ssim: f64,
    single_psnr: [f64; 4],
    single_ssim: [f64; 4],
    doubled_psnr: f64,
}

fn single_orientation_comparison(gt: &GroundTruth) -> Comparison {
    let crf = gamma_crf();
    let top = crf.max_level() as u16;
    let (t0, quad, saturated) = DEFAULT_EXPOSURES_MS
        .iter()
        .find_map(|&t| {
            let q = simulate_capture(gt, t, &crf, 0.0, 0).unwrap();
            let total: usize = q.images().iter().map(|im| im.data().len()).sum();
            let hit: usize = q
                .images()
                .iter()
                .map(|im| im.data().iter().filter(|&&l| l == top).count())
                .sum();
            let frac = hit as f64 / total as f64;
            (frac >= 0.2).then_some((t, q, frac))
        })
        .expect("some exposure saturates a fifth of the samples");

    let fused = fuse_ideb(&quad, &crf, &FusionConfig::default()).unwrap();
    let ssim = |m: &RadianceMap| {
        hdr_tonemapped_ssim(&gt.radiance, m, &ReinhardConfig::default(), &SsimConfig::default())
            .unwrap()
    };
    let mut single_psnr = [0.0; 4];
    let mut single_ssim = [0.0; 4];
    let mut doubled_psnr = f64::NEG_INFINITY;
    for (k, im) in quad.images().iter().enumerate() {
        let lin = linearize(im, &crf, t0).unwrap();
        single_psnr[k] = hdr_log_psnr(&gt.radiance, &lin, None).unwrap();
        single_ssim[k] = ssim(&lin);
        let (w, h, c) = lin.dims();
        let doubled = RadianceMap::new(w, h, c, lin.data().iter().map(|v| 2.0 * v).collect()).unwrap();
        doubled_psnr = doubled_psnr.max(hdr_log_psnr(&gt.radiance, &doubled, None).unwrap());
    }
    Comparison {
        t0,
        saturated,
        deb_psnr: hdr_log_psnr(&gt.radiance, &fused.ideb, None).unwrap(),
        deb_ssim: ssim(&fused.ideb),
        single_psnr,
        single_ssim,
        doubled_psnr,
    }
}

fn fused_beats_single_orientation(gt: &GroundTruth) -> Outcome {
    let c = single_orientation_comparison(gt);
    let best_psnr = c.single_psnr.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let best_ssim = c.single_ssim.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let gain = c.deb_psnr - best_psnr;
    outcome(
        gain >= 3.0 && c.deb_ssim > best_ssim,
        format!(
            "t0 {} ms, {:.1}% samples at 255; fused {:.2} dB / SSIM {:.4}, best single {:.2} dB / SSIM {:.4}, gain {:.2} dB (>= 3); [info: 2x-scaled single {:.2} dB]",
            c.t0,
            100.0 * c.saturated,
            c.deb_psnr,
            c.deb_ssim,
            best_psnr,
            best_ssim,
            gain,
            c.doubled_psnr
        ),
    )
}

// ---------------------------------------------------------------------------
// camera response recovery

fn crf_recovery() -> Outcome {
    let gt = generate_scene(&SceneSpec {
        width: 96,
        height: 96,
        dynamic_range_stops: 8.0,
        ..SceneSpec::default()
    })
    .unwrap();
    let exposures: Vec<f64> = (0..5).map(|k| 0.25 * 2f64.powi(k)).collect();
    let mut pass = true;
    let mut parts = Vec::new();
    for gamma in [1.8, 2.2, 2.4] {
        let truth = Crf::gamma(gamma, 1.0, 8).unwrap();
        let stack = simulate_stack(&gt, &exposures, &truth, 0.0, 0).unwrap();
        let cfg = SolveConfig {
            lambda: 50.0,
            samples: 500,
            seed: 0,
        };
        let start = Instant::now();
        let rec = solve_crf_stack(&stack, &cfg).unwrap();
        let secs = start.elapsed().as_secs_f64();
        // both curves normalized at mid-scale; the recovery fixes no absolute scale
        let mut errs: Vec<f64> = (20u16..=235)
            .map(|l| {
                let r = rec.invert(l) / rec.invert(128);
                let t = truth.invert(l) / truth.invert(128);
                (r - t).abs() / t
            })
            .collect();
        errs.sort_by(f64::total_cmp);
        let median = errs[errs.len() / 2];
        let monotone = rec.inverse_table().windows(2).all(|p| p[1] >= p[0]);
        pass &= median <= 0.02 && monotone && secs < 10.0;
        parts.push(format!(
            "gamma {gamma}: median {:.3}% monotone {monotone} {secs:.2} s",
            100.0 * median
        ));
    }
    outcome(pass, format!("{} (<= 2%, < 10 s)", parts.join("; ")))
}

// ---------------------------------------------------------------------------
// exposure fusion

fn random_rgb(rng: &mut ChaCha8Rng, w: usize, h: usize, gain: f64) -> RadianceMap {
    // smooth base plus per-pixel texture, clipped to the display range
    let data = (0..w * h * 3)
        .map(|i| {
            let px = i / 3;
            let (x, y) = ((px % w) as f64, (px / w) as f64);
            let base = 0.5 + 0.3 * (x / 7.0).sin() * (y / 5.0).cos();
            (gain * (base + 0.15 * rng.random_range(-1.0..1.0))).clamp(0.0, 1.0)
        })
        .collect();
    RadianceMap::new(w, h, 3, data).unwrap()
}

mod oracle {
    //! Direct two-dimensional formulation of the blending pyramid.

    pub type Grid = Vec<Vec<f64>>;

    const K: [f64; 5] = [1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0];

    fn dims(g: &Grid) -> (usize, usize) {
        (g[0].len(), g.len())
    }

    fn clamped(g: &Grid, x: isize, y: isize) -> f64 {
        let (w, h) = dims(g);
        g[y.clamp(0, h as isize - 1) as usize][x.clamp(0, w as isize - 1) as usize]
    }

    pub fn reduce(g: &Grid) -> Grid {
        let (w, h) = dims(g);
        (0..h.div_ceil(2))
            .map(|j| {
                (0..w.div_ceil(2))
                    .map(|i| {
                        let (cx, cy) = (2 * i as isize, 2 * j as isize);
                        let mut acc = 0.0;
                        for (b, kb) in K.iter().enumerate() {
                            for (a, ka) in K.iter().enumerate() {
                                acc += ka * kb * clamped(g, cx + a as isize - 2, cy + b as isize - 2);
                            }
                        }
                        acc
                    })
                    .collect()
            })
            .collect()
    }

    /// Zero-stuffed expansion of the edge-extended coarse grid.
    pub fn expand(g: &Grid, w: usize, h: usize) -> Grid {
        (0..h as isize)
            .map(|y| {
                (0..w as isize)
                    .map(|x| {
                        let mut acc = 0.0;
                        for (b, kb) in K.iter().enumerate() {
                            for (a, ka) in K.iter().enumerate() {
                                let (sx, sy) = (x + a as isize - 2, y + b as isize - 2);
                                if sx.rem_euclid(2) == 0 && sy.rem_euclid(2) == 0 {
                                    acc += 4.0 * ka * kb * clamped(g, sx.div_euclid(2), sy.div_euclid(2));
                                }
                            }
                        }
                        acc
                    })
                    .collect()
            })
            .collect()
    }

    fn zip(a: &Grid, b: &Grid, f: impl Fn(f64, f64) -> f64) -> Grid {
        a.iter()
            .zip(b)
            .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| f(*x, *y)).collect())
            .collect()
    }

    pub fn gaussian(g: &Grid, levels: usize) -> Vec<Grid> {
        let mut out = vec![g.clone()];
        while out.len() < levels {
            out.push(reduce(out.last().unwrap()));
        }
        out
    }

    pub fn laplacian(g: &Grid, levels: usize) -> Vec<Grid> {
        let gp = gaussian(g, levels);
        let mut out: Vec<Grid> = (0..levels - 1)
            .map(|k| {
                let (w, h) = dims(&gp[k]);
                zip(&gp[k], &expand(&gp[k + 1], w, h), |a, b| a - b)
            })
            .collect();
        out.push(gp[levels - 1].clone());
        out
    }

    pub fn blend(images: &[Grid], weights: &[Grid], levels: usize) -> Grid {
        let laps: Vec<Vec<Grid>> = images.iter().map(|g| laplacian(g, levels)).collect();
        let gws: Vec<Vec<Grid>> = weights.iter().map(|g| gaussian(g, levels)).collect();
        let mut acc: Vec<Grid> = laps[0].iter().map(|l| zip(l, l, |_, _| 0.0)).collect();
        for (lap, gw) in laps.iter().zip(&gws) {
            for k in 0..levels {
                acc[k] = zip(&acc[k], &zip(&lap[k], &gw[k], |a, b| a * b), |a, b| a + b);
            }
        }
        let mut cur = acc[levels - 1].clone();
        for k in (0..levels - 1).rev() {
            let (w, h) = dims(&acc[k]);
            cur = zip(&acc[k], &expand(&cur, w, h), |a, b| a + b);
        }
        cur
    }

    /// Contrast, saturation and well-exposedness of an RGB image.
    pub fn weight(rgb: &[Grid; 3]) -> Grid {
        let gray = zip(&zip(&rgb[0], &rgb[1], |r, g| 0.299 * r + 0.587 * g), &rgb[2], |a, b| {
            a + 0.114 * b
        });
        let (w, h) = dims(&gray);
        (0..h as isize)
            .map(|y| {
                (0..w as isize)
                    .map(|x| {
                        let lap = clamped(&gray, x - 1, y)
                            + clamped(&gray, x + 1, y)
                            + clamped(&gray, x, y - 1)
                            + clamped(&gray, x, y + 1)
                            - 4.0 * clamped(&gray, x, y);
                        let px: Vec<f64> = rgb.iter().map(|c| c[y as usize][x as usize]).collect();
                        let mean = px.iter().sum::<f64>() / 3.0;
                        let sat = (px.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 3.0).sqrt();
                        let well: f64 =
                            px.iter().map(|v| (-(v - 0.5).powi(2) / (2.0 * 0.04)).exp()).product();
                        lap.abs() * sat * well
                    })
                    .collect()
            })
            .collect()
    }
}

fn to_grids(m: &RadianceMap) -> [oracle::Grid; 3] {
    let (w, h, _) = m.dims();
    std::array::from_fn(|c| (0..h).map(|y| (0..w).map(|x| m.get(x, y, c)).collect()).collect())
}

fn mertens_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let cfg = MertensConfig::default();
    let (w, h) = (61, 45);

    let im = random_rgb(&mut rng, w, h, 1.0);
    let max_diff = |a: &RadianceMap, b: &RadianceMap| {
        a.data().iter().zip(b.data()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    };
    let single = max_diff(&mertens_fuse(std::slice::from_ref(&im), &cfg).unwrap(), &im);
    let copies = vec![im.clone(); 4];
    let repeated = max_diff(&mertens_fuse(&copies, &cfg).unwrap(), &im);

    let bracket: Vec<RadianceMap> =
        [0.3, 0.8, 1.6].iter().map(|&g| random_rgb(&mut rng, w, h, g)).collect();
    let weights = mertens_weights(&bracket, &cfg).unwrap();
    let sum_err = (0..w * h)
        .map(|i| (weights.iter().map(|wm| wm[i]).sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max);

    // two-image pair against the direct formulation
    let pair = &bracket[..2];
    let fused = mertens_fuse(pair, &cfg).unwrap();
    let chans: Vec<[oracle::Grid; 3]> = pair.iter().map(to_grids).collect();
    let raw: Vec<oracle::Grid> = chans.iter().map(oracle::weight).collect();
    let norm: Vec<oracle::Grid> = (0..2)
        .map(|k| {
            (0..h)
                .map(|y| {
                    (0..w)
                        .map(|x| {
                            let total = raw[0][y][x] + raw[1][y][x];
                            if total < 1e-12 { 0.5 } else { raw[k][y][x] / total }
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let levels = ((w.min(h) as f64).log2().floor() as usize - 1).max(1);
    let mut mad = 0.0;
    for c in 0..3 {
        let images = [chans[0][c].clone(), chans[1][c].clone()];
        let out = oracle::blend(&images, &norm, levels);
        for y in 0..h {
            for x in 0..w {
                mad += (out[y][x].clamp(0.0, 1.0) - fused.get(x, y, c)).abs();
            }
        }
    }
    mad /= (w * h * 3) as f64;

    outcome(
        single <= 1e-6 && repeated <= 1e-6 && sum_err <= 1e-9 && mad <= 1e-4,
        format!(
            "identity {single:.1e} / {repeated:.1e} for 1 / 4 copies (<= 1e-6); weight sums off by {sum_err:.1e} (<= 1e-9); pair vs oracle MAD {mad:.1e} (<= 1e-4)"
        ),
    )
}

// ---------------------------------------------------------------------------
// tone mapping

fn reinhard_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let scene: Vec<f64> = (0..64 * 64).map(|_| 10f64.powf(rng.random_range(-3.0..3.0))).collect();
    let scene = RadianceMap::new(64, 64, 1, scene).unwrap();
    let stats = reinhard_stats(&scene, &ReinhardConfig::default()).unwrap();
    let mut violations = 0;
    for _ in 0..1000 {
        let a = 10f64.powf(rng.random_range(-4.0..4.0));
        let b = 10f64.powf(rng.random_range(-4.0..4.0));
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let out = reinhard_with_stats(&RadianceMap::new(2, 1, 1, vec![lo, hi]).unwrap(), &stats);
        if out.data()[0] > out.data()[1] {
            violations += 1;
        }
    }
    let fixed = reinhard_curve(1.0, f64::INFINITY);
    outcome(
        violations == 0 && (fixed - 0.5).abs() <= 1e-12,
        format!("{violations} order violations in 1000 pairs; curve(1, inf) = {fixed}"),
    )
}

// ---------------------------------------------------------------------------
// end-to-end through the binary

fn polhdr(args: &[&str]) -> Value {
    let out = Command::new(env!("CARGO_BIN_EXE_polhdr"))
        .args(args)
        .output()
        .expect("spawn polhdr");
    assert!(
        out.status.success(),
        "polhdr {args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

struct PipelineRun {
    secs: f64,
    evaluation: Value,
    /// Every file the run wrote, by relative path.
    files: Vec<(String, Vec<u8>)>,
    dir: PathBuf,
}

fn run_pipeline(root: &Path, threads: usize) -> PipelineRun {
    let dir = root.join(format!("t{threads}-{}", fs::read_dir(root).unwrap().count()));
    let sim = dir.join("sim");
    let t = threads.to_string();
    let p = |path: &Path| path.to_str().unwrap().to_string();
    let start = Instant::now();
    let v = polhdr(&[
        "--threads", &t, "simulate", "--width", "512", "--height", "512", "--stops", "14",
        "--rho", "0.6:1.0", "--out", &p(&sim),
    ]);
    let manifest = p(Path::new(v["manifest"].as_str().unwrap()));
    for q in 0..DEFAULT_EXPOSURES_MS.len() {
        let out = dir.join(format!("ideb_{q:02}.pfm"));
        polhdr(&["--threads", &t, "fuse", "--manifest", &manifest, "--quad", &q.to_string(), "--out", &p(&out)]);
    }
    let hdr = dir.join("hdr.pfm");
    polhdr(&["--threads", &t, "merge", "--manifest", &manifest, "--out", &p(&hdr)]);
    let evaluation = polhdr(&[
        "--threads", &t, "evaluate", "--ref", &p(&sim.join("gt_radiance.pfm")), "--test", &p(&hdr),
    ]);
    let secs = start.elapsed().as_secs_f64();

    let mut files = Vec::new();
    let mut stack = vec![dir.clone()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(&dir).unwrap().display().to_string();
                files.push((rel, fs::read(&path).unwrap()));
            }
        }
    }
    files.sort();
    PipelineRun { secs, evaluation, files, dir }
}

fn end_to_end(run: &PipelineRun) -> Outcome {
    let gt = read_pfm(run.dir.join("sim/gt_radiance.pfm")).unwrap();
    let hdr = read_pfm(run.dir.join("hdr.pfm")).unwrap();
    let mask = read_png(run.dir.join("hdr_mask.png")).unwrap();
    let span = |m: &RadianceMap| {
        let (lo, hi) = m
            .data()
            .iter()
            .zip(mask.data())
            .filter(|(v, k)| **k != 0 && **v > 0.0)
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), (v, _)| (lo.min(*v), hi.max(*v)));
        (hi / lo).log2()
    };
    let ok = mask.data().iter().filter(|&&k| k != 0).count() as f64 / mask.data().len() as f64;
    let covered = span(&hdr);
    let psnr = run.evaluation["psnr_db"].as_f64().unwrap_or(f64::INFINITY);
    outcome(
        covered >= 13.0 && psnr >= 30.0 && run.secs < 60.0,
        format!(
            "512x512, 17 exposures: ok pixels {:.1}%, output spans {covered:.2} stops (scene {:.2}; >= 13), log PSNR {psnr:.2} dB (>= 30), {:.1} s (< 60 s, 8 threads)",
            100.0 * ok,
            span(&gt),
            run.secs
        ),
    )
}

fn determinism(gt: &GroundTruth, root: &Path, first: &PipelineRun) -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;

    let reference = exactness_outputs(gt);
    for threads in [1, 4, 8, 8] {
        let again = in_pool(threads, || exactness_outputs(gt));
        if again.0 != reference.0 || again.1 != reference.1 {
            pass = false;
            notes.push(format!("fusion outputs differ at {threads} threads"));
        }
    }

    let summary = |c: &Comparison| {
        let mut v = vec![c.deb_psnr.to_bits(), c.deb_ssim.to_bits(), c.doubled_psnr.to_bits()];
        v.extend(c.single_psnr.iter().chain(&c.single_ssim).map(|x| x.to_bits()));
        v
    };
    let base = summary(&single_orientation_comparison(gt));
    for threads in [1, 4, 8, 8] {
        if summary(&in_pool(threads, || single_orientation_comparison(gt))) != base {
            pass = false;
            notes.push(format!("comparison metrics differ at {threads} threads"));
        }
    }

    for threads in [1, 4, 8] {
        let run = run_pipeline(root, threads);
        if run.files != first.files || run.evaluation != first.evaluation {
            pass = false;
            let differing: Vec<&str> = run
                .files
                .iter()
                .zip(&first.files)
                .filter(|(a, b)| a != b)
                .map(|(a, _)| a.0.as_str())
                .take(3)
                .collect();
            notes.push(format!("pipeline at {threads} threads differs: {differing:?}"));
        }
    }
    let detail = if notes.is_empty() {
        format!(
            "fusion, comparison and pipeline outputs ({} files) bit-identical across 1/4/8 threads and reruns",
            first.files.len()
        )
    } else {
        notes.join("; ")
    };
    outcome(pass, detail)
}

// ---------------------------------------------------------------------------

fn check(failures: &mut usize, name: &str, f: impl FnOnce() -> Outcome) {
    let result = panic::catch_unwind(AssertUnwindSafe(f));
    let (pass, detail) = match result {
        Ok(o) => (o.pass, o.detail),
        Err(e) => {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            (false, format!("panicked: {msg}"))
        }
    };
    if !pass {
        *failures += 1;
    }
    println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
}

fn main() {
    // `cargo test -- --list` and filters do not apply to this gate
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    panic::set_hook(Box::new(|_| {}));
    let mut failures = 0;
    let gt = default_scene();
    let root = tempfile::tempdir().expect("scratch dir");

    check(&mut failures, "formation-roundtrip", formation_roundtrip);
    check(&mut failures, "exposure-identities", exposure_identities);
    check(&mut failures, "fusion-exactness", || ideb_exactness(&gt));
    check(&mut failures, "fusion-vs-single-orientation", || fused_beats_single_orientation(&gt));
    check(&mut failures, "crf-recovery", crf_recovery);
    check(&mut failures, "exposure-fusion", mertens_properties);
    check(&mut failures, "tone-mapping", reinhard_properties);

    let first = panic::catch_unwind(AssertUnwindSafe(|| run_pipeline(root.path(), 8)));
    match &first {
        Ok(run) => {
            check(&mut failures, "end-to-end", || end_to_end(run));
            check(&mut failures, "determinism", || determinism(&gt, root.path(), run));
        }
        Err(_) => {
            check(&mut failures, "end-to-end", || panic!("pipeline failed"));
            check(&mut failures, "determinism", || panic!("pipeline failed"));
        }
    }

    println!("{failures} failing");
    if failures > 0 {
        std::process::exit(1);
    }
}
