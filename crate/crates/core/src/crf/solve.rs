//! Least-squares recovery of the log inverse response from an exposure
//! stack of a static scene.
//!
//! Unknowns are `g(z) = ln(exposure at level z)` for every level bin and
//! `ln E_i` for every sampled pixel. Each observation contributes
//! `w(z)·(g(z) − ln E_i − ln t_j) = 0`, a second-difference term
//! `λ·w(z)·(g(z−1) − 2g(z) + g(z+1)) = 0` keeps the curve smooth and
//! `g(mid) = 0` fixes the free offset. The weighted system is solved through
//! its normal equations, then projected onto non-decreasing curves.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Crf;
use crate::error::{Error, Result};
use crate::imgcore::{CaptureStack, LdrImage};

const MAX_BINS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveConfig {
    /// Smoothness weight.
    pub lambda: f64,
    /// Number of sampled pixel positions.
    pub samples: usize,
    /// Seed for pixel sampling.
    pub seed: u64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            lambda: 50.0,
            samples: 500,
            seed: 0,
        }
    }
}

/// Recover the response shared by a polarization bracket. The four
/// orientations of each exposure are placed side by side so every sampled
/// position is observed at all exposures.
pub fn solve_crf_stack(stack: &CaptureStack, cfg: &SolveConfig) -> Result<Crf> {
    let tiled = stack
        .quads()
        .iter()
        .map(|q| {
            let (w, h, c) = (q.width(), q.height(), q.channels());
            let mut data = Vec::with_capacity(4 * w * h * c);
            for y in 0..h {
                for img in q.images() {
                    data.extend_from_slice(&img.data()[y * w * c..(y + 1) * w * c]);
                }
            }
            Ok((LdrImage::new(4 * w, h, c, q.bit_depth(), data)?, q.t0_ms()))
        })
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<(&LdrImage, f64)> = tiled.iter().map(|(img, t)| (img, *t)).collect();
    solve_crf(&refs, cfg)
}

/// Recover a lookup-table CRF from images of the same scene at the given
/// exposure times (ms). The result is anchored so that the middle level maps
/// to exposure 1.
pub fn solve_crf(stack: &[(&LdrImage, f64)], cfg: &SolveConfig) -> Result<Crf> {
    if stack.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "crf recovery needs at least 2 exposures, got {}",
            stack.len()
        )));
    }
    let first = stack[0].0;
    if let Some((img, _)) = stack.iter().find(|(img, _)| !img.same_shape(first)) {
        return Err(Error::DimensionMismatch(format!(
            "stack image {}x{} differs from {}x{}",
            img.width(),
            img.height(),
            first.width(),
            first.height()
        )));
    }
    if let Some((_, t)) = stack.iter().find(|(_, t)| !(*t > 0.0 && t.is_finite())) {
        return Err(Error::InvalidInput(format!("exposure time {t} must be > 0")));
    }
    if !(cfg.lambda >= 0.0) {
        return Err(Error::InvalidInput(format!("lambda {} must be >= 0", cfg.lambda)));
    }

    let bit_depth = first.bit_depth();
    let max_level = first.max_level() as usize;
    let bins = (max_level + 1).min(MAX_BINS);
    let zmax = bins - 1;
    let min_samples = bins.div_ceil(stack.len() - 1);
    if cfg.samples < min_samples {
        return Err(Error::InvalidInput(format!(
            "{} samples is below the {min_samples} needed for {} exposures",
            cfg.samples,
            stack.len()
        )));
    }
    let to_bin = |level: u16| -> usize {
        if bins == max_level + 1 {
            usize::from(level)
        } else {
            ((usize::from(level) * zmax) as f64 / max_level as f64).round() as usize
        }
    };
    let hat = |z: usize| -> f64 { z.min(zmax - z) as f64 };

    let candidates = first.data().len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut picks = if cfg.samples >= candidates {
        (0..candidates).collect()
    } else {
        rand::seq::index::sample(&mut rng, candidates, cfg.samples).into_vec()
    };
    picks.sort_unstable();
    // samples never seen at a weighted level carry no information
    picks.retain(|&p| stack.iter().any(|(img, _)| hat(to_bin(img.data()[p])) > 0.0));
    if picks.is_empty() {
        return Err(Error::CrfRecovery(
            "every sampled pixel is saturated or black in all exposures".into(),
        ));
    }

    let n = bins + picks.len();
    let mut normal = DMatrix::<f64>::zeros(n, n);
    let mut rhs = DVector::<f64>::zeros(n);

    for (si, &p) in picks.iter().enumerate() {
        let e = bins + si;
        for (img, t) in stack {
            let z = to_bin(img.data()[p]);
            let w2 = hat(z).powi(2);
            if w2 == 0.0 {
                continue;
            }
            let lt = t.ln();
            normal[(z, z)] += w2;
            normal[(z, e)] -= w2;
            normal[(e, z)] -= w2;
            normal[(e, e)] += w2;
            rhs[z] += w2 * lt;
            rhs[e] -= w2 * lt;
        }
    }

    let mid = bins / 2;
    let anchor = hat(mid).powi(2);
    normal[(mid, mid)] += anchor;

    for z in 1..zmax {
        let c = cfg.lambda * hat(z);
        let coeffs = [(z - 1, c), (z, -2.0 * c), (z + 1, c)];
        for &(a, ca) in &coeffs {
            for &(b, cb) in &coeffs {
                normal[(a, b)] += ca * cb;
            }
        }
    }

    let chol = normal.cholesky().ok_or_else(|| {
        Error::CrfRecovery("normal equations are singular".into())
    })?;
    let solution = chol.solve(&rhs);
    if solution.iter().any(|v| !v.is_finite()) {
        return Err(Error::CrfRecovery("solution is not finite".into()));
    }

    let mut log_curve: Vec<f64> = solution.iter().take(bins).copied().collect();
    pool_adjacent_violators(&mut log_curve);
    // ties after pooling are split so the interior stays strictly increasing
    for z in 1..bins {
        let floor = log_curve[z - 1] + 1e-9;
        if log_curve[z] < floor {
            log_curve[z] = floor;
        }
    }

    let values: Vec<f64> = if bins == max_level + 1 {
        log_curve.iter().map(|g| g.exp()).collect()
    } else {
        (0..=max_level)
            .map(|l| {
                let pos = l as f64 * zmax as f64 / max_level as f64;
                let lo = (pos.floor() as usize).min(zmax);
                let hi = (lo + 1).min(zmax);
                let f = pos - lo as f64;
                (log_curve[lo] * (1.0 - f) + log_curve[hi] * f).exp()
            })
            .collect()
    };
    Crf::lut(values, bit_depth)
}

/// In-place isotonic (non-decreasing) least-squares projection.
fn pool_adjacent_violators(y: &mut [f64]) {
    // blocks of (mean, count)
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(y.len());
    for &v in y.iter() {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (m2, n2) = blocks[blocks.len() - 1];
            let (m1, n1) = blocks[blocks.len() - 2];
            if m1 <= m2 {
                break;
            }
            blocks.pop();
            let total = n1 + n2;
            *blocks.last_mut().unwrap() = ((m1 * n1 as f64 + m2 * n2 as f64) / total as f64, total);
        }
    }
    let mut i = 0;
    for (m, n) in blocks {
        for v in &mut y[i..i + n] {
            *v = m;
        }
        i += n;
    }
}
