//! Global photographic tone mapping.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imgcore::RadianceMap;
use crate::util::compensated_sum;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReinhardConfig {
    /// Mid-gray key the log-average luminance is mapped to.
    pub key: f64,
    /// Scaled luminance mapped to white; `None` uses the maximum.
    pub white: Option<f64>,
    /// Stabilizer inside the log average.
    pub delta: f64,
}

impl Default for ReinhardConfig {
    fn default() -> Self {
        Self {
            key: 0.18,
            white: None,
            delta: 1e-6,
        }
    }
}

/// Image statistics the operator depends on. Sharing them between two
/// images makes their tone-mapped versions comparable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReinhardStats {
    pub log_average: f64,
    pub white: f64,
    pub key: f64,
}

pub fn luminance(px: &[f64]) -> f64 {
    match px {
        [r, g, b] => 0.2126 * r + 0.7152 * g + 0.0722 * b,
        [v] => *v,
        _ => unreachable!("1 or 3 channels"),
    }
}

/// `L_d = L_s·(1 + L_s/L_white²) / (1 + L_s)`.
pub fn reinhard_curve(scaled: f64, white: f64) -> f64 {
    scaled * (1.0 + scaled / (white * white)) / (1.0 + scaled)
}

pub fn reinhard_stats(map: &RadianceMap, cfg: &ReinhardConfig) -> Result<ReinhardStats> {
    if !(cfg.key > 0.0) || !(cfg.delta > 0.0) {
        return Err(Error::InvalidInput("key and delta must be > 0".into()));
    }
    let c = map.channels();
    let lum: Vec<f64> = map.data().chunks_exact(c).map(luminance).collect();
    let log_sum = compensated_sum(lum.iter().map(|l| (cfg.delta + l).ln()));
    let log_average = (log_sum / lum.len() as f64).exp();
    let white = match cfg.white {
        Some(w) if w > 0.0 => w,
        Some(w) => {
            return Err(Error::InvalidInput(format!("white point {w} must be > 0")));
        }
        None => {
            let max_l = lum.iter().copied().fold(0.0, f64::max);
            let w = cfg.key * max_l / log_average;
            if w > 0.0 {
                w
            } else {
                f64::INFINITY
            }
        }
    };
    Ok(ReinhardStats {
        log_average,
        white,
        key: cfg.key,
    })
}

pub fn reinhard_with_stats(map: &RadianceMap, stats: &ReinhardStats) -> RadianceMap {
    let c = map.channels();
    let mut out = vec![0.0; map.data().len()];
    out.par_chunks_mut(c)
        .zip(map.data().par_chunks(c))
        .for_each(|(dst, px)| {
            let l = luminance(px);
            if l <= 0.0 {
                return;
            }
            let ld = reinhard_curve(stats.key * l / stats.log_average, stats.white);
            for (d, v) in dst.iter_mut().zip(px) {
                *d = (v * ld / l).clamp(0.0, 1.0);
            }
        });
    RadianceMap::from_raw(map.width(), map.height(), c, out)
}

pub fn reinhard_tonemap(map: &RadianceMap, cfg: &ReinhardConfig) -> Result<RadianceMap> {
    let stats = reinhard_stats(map, cfg)?;
    Ok(reinhard_with_stats(map, &stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_map_stays_zero() {
        let m = RadianceMap::filled(4, 3, 3, 0.0).unwrap();
        let out = reinhard_tonemap(&m, &ReinhardConfig::default()).unwrap();
        assert!(out.data().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn unit_scaled_luminance_maps_to_half_without_white() {
        assert!((reinhard_curve(1.0, f64::INFINITY) - 0.5).abs() <= 1e-12);
    }

    #[test]
    fn constant_map_default_white_maps_to_one() {
        let m = RadianceMap::filled(5, 5, 1, 1.0).unwrap();
        let stats = reinhard_stats(&m, &ReinhardConfig::default()).unwrap();
        assert!((stats.white - 0.18).abs() < 1e-6);
        let out = reinhard_with_stats(&m, &stats);
        assert!(out.data().iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn color_ratios_preserved() {
        let m = RadianceMap::new(2, 1, 3, vec![0.2, 0.4, 0.1, 2.0, 1.0, 0.5]).unwrap();
        let out = reinhard_tonemap(&m, &ReinhardConfig { white: Some(1e9), ..ReinhardConfig::default() }).unwrap();
        let d = out.data();
        assert!((d[1] / d[0] - 2.0).abs() < 1e-12);
        assert!((d[3] / d[4] - 2.0).abs() < 1e-12);
    }
}
