//! Synthetic polarized scenes and a capture simulator.
//!
//! Scenes carry per-pixel radiance `I₀`, degree `ρ` and angle `θ` of
//! polarization. Captures push them through the polarizer model and a CRF,
//! with optional Gaussian read noise. All randomness comes from a
//! ChaCha stream keyed by `(seed, stream, pixel index)`, so results do not
//! depend on evaluation order or thread count.

use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::crf::Crf;
use crate::error::{Error, Result};
use crate::imgcore::{CaptureStack, LdrImage, PolarQuad, RadianceMap};
use crate::polar::{forward_quad, PolState};
use crate::util::quantize;

/// Bracket used for the reference dataset, in ms.
pub const DEFAULT_EXPOSURES_MS: [f64; 17] = [
    0.03, 0.045, 0.068, 0.101, 0.152, 0.228, 0.342, 0.513, 0.769, 1.153, 1.73, 2.595, 3.592,
    5.839, 8.758, 13.137, 19.705,
];

const STREAM_RHO: u64 = 1;
const STREAM_THETA: u64 = 2;
const STREAM_SPOTS: u64 = 3;
const STREAM_NOISE: u64 = 0x4e4f_4953_4500_0000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThetaField {
    Constant(f64),
    /// Angle sweeps 0..180° along the image diagonal.
    SmoothGradient,
    /// Smooth value noise with the given lattice spacing in pixels.
    RandomSmooth { correlation_px: f64 },
}

impl FromStr for ThetaField {
    type Err = Error;

    /// `constant:<deg>`, `gradient`, or `random:<correlation px>`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("bad theta field {s:?}"));
        match s.split_once(':') {
            None if s == "gradient" => Ok(Self::SmoothGradient),
            Some(("constant", v)) => Ok(Self::Constant(v.parse().map_err(|_| bad())?)),
            Some(("random", v)) => {
                let c: f64 = v.parse().map_err(|_| bad())?;
                if !(c > 0.0) {
                    return Err(bad());
                }
                Ok(Self::RandomSmooth { correlation_px: c })
            }
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadiancePattern {
    /// Tiles whose base radiance doubles per tile index, with a mild texture.
    HdrChecker,
    /// Gaussian highlights on a dim textured background.
    RadialSpots,
    /// Log-linear ramp along the diagonal.
    GradientRamp,
}

impl FromStr for RadiancePattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hdr-checker" => Ok(Self::HdrChecker),
            "radial-spots" => Ok(Self::RadialSpots),
            "gradient-ramp" => Ok(Self::GradientRamp),
            _ => Err(Error::InvalidInput(format!("unknown scene pattern {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub dynamic_range_stops: f64,
    pub rho_range: (f64, f64),
    pub theta_field: ThetaField,
    pub radiance_pattern: RadiancePattern,
    /// Radiance of the brightest tile/ramp end before texture.
    pub peak_radiance: f64,
    pub seed: u64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            width: 256,
            height: 256,
            dynamic_range_stops: 14.0,
            rho_range: (0.6, 1.0),
            theta_field: ThetaField::RandomSmooth {
                correlation_px: 32.0,
            },
            radiance_pattern: RadiancePattern::HdrChecker,
            peak_radiance: 1.0,
            seed: 0,
        }
    }
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidInput("scene must be non-empty".into()));
        }
        if !(self.dynamic_range_stops > 0.0 && self.dynamic_range_stops.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "dynamic range {} stops must be > 0",
                self.dynamic_range_stops
            )));
        }
        let (lo, hi) = self.rho_range;
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "rho range [{lo}, {hi}] not within [0, 1]"
            )));
        }
        if !(self.peak_radiance > 0.0 && self.peak_radiance.is_finite()) {
            return Err(Error::InvalidInput("peak radiance must be > 0".into()));
        }
        if let ThetaField::Constant(t) = self.theta_field {
            if !t.is_finite() {
                return Err(Error::InvalidInput("constant theta must be finite".into()));
            }
        }
        Ok(())
    }
}

/// Per-pixel scene truth consumed by the formation model.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub radiance: RadianceMap,
    pub rho: RadianceMap,
    /// Degrees in `[0, 180)`.
    pub theta_deg: RadianceMap,
}

impl GroundTruth {
    pub fn width(&self) -> usize {
        self.radiance.width()
    }

    pub fn height(&self) -> usize {
        self.radiance.height()
    }

    pub fn state(&self, i: usize) -> PolState {
        PolState::new(self.rho.data()[i], self.theta_deg.data()[i]).expect("valid truth")
    }

    /// Irradiance behind each polarizer, before any exposure or response.
    pub fn filtered(&self, i: usize) -> [f64; 4] {
        forward_quad(self.radiance.data()[i], self.state(i))
    }
}

fn keyed_rng(seed: u64, stream: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    // 64 words per index leaves room for a handful of draws each
    rng.set_word_pos(u128::from(index) * 64);
    rng
}

fn lattice_value(seed: u64, stream: u64, gx: i64, gy: i64) -> f64 {
    let key = (gy as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (gx as u64);
    keyed_rng(seed, stream, key).random::<f64>()
}

/// Smooth value noise in `[0, 1)` with lattice spacing `cell` pixels.
fn value_noise(seed: u64, stream: u64, x: f64, y: f64, cell: f64) -> f64 {
    let (u, v) = (x / cell, y / cell);
    let (gx, gy) = (u.floor(), v.floor());
    let smooth = |t: f64| t * t * (3.0 - 2.0 * t);
    let (fx, fy) = (smooth(u - gx), smooth(v - gy));
    let (gx, gy) = (gx as i64, gy as i64);
    let a = lattice_value(seed, stream, gx, gy);
    let b = lattice_value(seed, stream, gx + 1, gy);
    let c = lattice_value(seed, stream, gx, gy + 1);
    let d = lattice_value(seed, stream, gx + 1, gy + 1);
    let top = a + (b - a) * fx;
    let bot = c + (d - c) * fx;
    top + (bot - top) * fy
}

/// Non-negative texture in stops; zero on an 8-pixel grid anchored at
/// `(ox, oy)`.
fn texture(x: usize, y: usize, ox: usize, oy: usize) -> f64 {
    let lx = (x - ox) as f64 * std::f64::consts::PI / 8.0;
    let ly = (y - oy) as f64 * std::f64::consts::PI / 8.0;
    0.5 * lx.sin().powi(2) * ly.sin().powi(2)
}

fn exponent_field(spec: &SceneSpec) -> Vec<f64> {
    let (w, h) = (spec.width, spec.height);
    let stops = spec.dynamic_range_stops;
    match spec.radiance_pattern {
        RadiancePattern::HdrChecker => {
            let tiles = stops.ceil() as usize + 1;
            let cols = (tiles as f64).sqrt().ceil() as usize;
            let rows = tiles.div_ceil(cols);
            let step = stops / (tiles - 1) as f64;
            (0..w * h)
                .map(|i| {
                    let (x, y) = (i % w, i / w);
                    let (c, r) = (x * cols / w, y * rows / h);
                    let k = (r * cols + c).min(tiles - 1);
                    let (ox, oy) = ((c * w).div_ceil(cols), (r * h).div_ceil(rows));
                    k as f64 * step + texture(x, y, ox, oy)
                })
                .collect()
        }
        RadiancePattern::RadialSpots => {
            let spots = 5;
            let sigma = (w.min(h) as f64 / 12.0).max(0.5);
            let centers: Vec<(f64, f64, f64)> = (0..spots)
                .map(|k| {
                    let mut rng = keyed_rng(spec.seed, STREAM_SPOTS, k as u64);
                    let cx = rng.random_range(0..w) as f64;
                    let cy = rng.random_range(0..h) as f64;
                    let amp = if k == 0 { 1.0 } else { rng.random_range(0.3..1.0) };
                    (cx, cy, amp)
                })
                .collect();
            (0..w * h)
                .map(|i| {
                    let (x, y) = ((i % w) as f64, (i / w) as f64);
                    let peak = centers
                        .iter()
                        .map(|(cx, cy, a)| {
                            let r2 = (x - cx).powi(2) + (y - cy).powi(2);
                            a * (-r2 / (2.0 * sigma * sigma)).exp()
                        })
                        .fold(0.0, f64::max);
                    stops * peak + texture(i % w, i / w, 0, 0)
                })
                .collect()
        }
        RadiancePattern::GradientRamp => {
            let span = (w + h).saturating_sub(2).max(1) as f64;
            (0..w * h)
                .map(|i| stops * ((i % w) + (i / w)) as f64 / span)
                .collect()
        }
    }
}

pub fn generate_scene(spec: &SceneSpec) -> Result<GroundTruth> {
    spec.validate()?;
    let (w, h) = (spec.width, spec.height);
    let stops = spec.dynamic_range_stops;

    let mut expo = exponent_field(spec);
    let lo = expo.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = expo.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo < stops && hi > lo {
        // stretch so that log2(max/min) is exactly the requested span
        for e in &mut expo {
            *e = (*e - lo) / (hi - lo) * stops;
        }
    }
    let top = spec.peak_radiance.log2() - stops;
    let radiance: Vec<f64> = expo.iter().map(|e| (top + e).exp2()).collect();

    let (rho_lo, rho_hi) = spec.rho_range;
    let rho_cell = (w.min(h) as f64 / 4.0).max(1.0);
    let rho: Vec<f64> = (0..w * h)
        .into_par_iter()
        .map(|i| {
            let v = value_noise(spec.seed, STREAM_RHO, (i % w) as f64, (i / w) as f64, rho_cell);
            (rho_lo + (rho_hi - rho_lo) * v).clamp(rho_lo, rho_hi)
        })
        .collect();

    let theta: Vec<f64> = (0..w * h)
        .into_par_iter()
        .map(|i| {
            let (x, y) = ((i % w) as f64, (i / w) as f64);
            let deg = match spec.theta_field {
                ThetaField::Constant(t) => t,
                ThetaField::SmoothGradient => 180.0 * (x + y) / (w + h) as f64,
                ThetaField::RandomSmooth { correlation_px } => {
                    180.0 * value_noise(spec.seed, STREAM_THETA, x, y, correlation_px)
                }
            };
            PolState::new(0.0, deg).expect("finite angle").theta_deg()
        })
        .collect();

    Ok(GroundTruth {
        radiance: RadianceMap::new(w, h, 1, radiance)?,
        rho: RadianceMap::new(w, h, 1, rho)?,
        theta_deg: RadianceMap::new(w, h, 1, theta)?,
    })
}

/// Real-valued digital levels of the four orientations, clipped to the
/// CRF's code range but not quantized.
pub fn simulate_levels(
    gt: &GroundTruth,
    t0_ms: f64,
    crf: &Crf,
    noise_sigma: f64,
    seed: u64,
) -> [Vec<f64>; 4] {
    let n = gt.radiance.pixel_count();
    let max = f64::from(crf.max_level());
    let stream = STREAM_NOISE ^ t0_ms.to_bits();
    let per_pixel: Vec<[f64; 4]> = (0..n)
        .into_par_iter()
        .map(|i| {
            let irr = gt.filtered(i);
            let mut rng = (noise_sigma > 0.0).then(|| keyed_rng(seed, stream, i as u64));
            std::array::from_fn(|k| {
                let mut level = crf.apply_continuous(irr[k] * t0_ms);
                if let Some(rng) = rng.as_mut() {
                    let z: f64 = rng.sample(StandardNormal);
                    level += noise_sigma * z;
                }
                level.clamp(0.0, max)
            })
        })
        .collect();
    std::array::from_fn(|k| per_pixel.iter().map(|p| p[k]).collect())
}

pub fn simulate_capture(
    gt: &GroundTruth,
    t0_ms: f64,
    crf: &Crf,
    noise_sigma: f64,
    seed: u64,
) -> Result<PolarQuad> {
    if !(noise_sigma >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "noise sigma {noise_sigma} must be >= 0"
        )));
    }
    let (w, h) = (gt.width(), gt.height());
    let max = crf.max_level();
    let levels = simulate_levels(gt, t0_ms, crf, noise_sigma, seed);
    let mut images = Vec::with_capacity(4);
    for plane in levels {
        let data = plane.iter().map(|&l| quantize(l, max)).collect();
        images.push(LdrImage::new(w, h, 1, crf.bit_depth(), data)?);
    }
    PolarQuad::new(
        images.try_into().expect("four images"),
        t0_ms,
        Some(Arc::new(crf.clone())),
    )
}

pub fn simulate_stack(
    gt: &GroundTruth,
    exposures_ms: &[f64],
    crf: &Crf,
    noise_sigma: f64,
    seed: u64,
) -> Result<CaptureStack> {
    if exposures_ms.is_empty() {
        return Err(Error::Empty("exposure list".into()));
    }
    if exposures_ms.windows(2).any(|p| p[1] <= p[0]) {
        return Err(Error::InvalidInput(
            "exposures must be strictly increasing".into(),
        ));
    }
    let quads = exposures_ms
        .iter()
        .map(|&t| simulate_capture(gt, t, crf, noise_sigma, seed))
        .collect::<Result<Vec<_>>>()?;
    CaptureStack::new(quads, Some(Arc::new(crf.clone())))
}
