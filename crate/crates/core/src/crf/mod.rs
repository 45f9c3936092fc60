//! Camera response function `f` (exposure → digital level) and its
//! inverse `g`.
//!
//! Two curve families are supported: a parametric gamma curve and a
//! monotone lookup table holding the exposure of every digital level.
//! Digital levels are produced with round-half-away-from-zero.

mod solve;

pub use solve::{solve_crf, solve_crf_stack, SolveConfig};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgcore::{LdrImage, RadianceMap};
use crate::util::quantize;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CrfRepr", into = "CrfRepr")]
pub enum Crf {
    Gamma {
        gamma: f64,
        white_level: f64,
        bit_depth: u8,
    },
    Lut {
        values: Vec<f64>,
        bit_depth: u8,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum CrfRepr {
    Gamma {
        gamma: f64,
        white_level: f64,
        bit_depth: u8,
    },
    Lut {
        values: Vec<f64>,
        bit_depth: u8,
    },
}

impl TryFrom<CrfRepr> for Crf {
    type Error = Error;

    fn try_from(r: CrfRepr) -> Result<Self> {
        match r {
            CrfRepr::Gamma {
                gamma,
                white_level,
                bit_depth,
            } => Crf::gamma(gamma, white_level, bit_depth),
            CrfRepr::Lut { values, bit_depth } => Crf::lut(values, bit_depth),
        }
    }
}

impl From<Crf> for CrfRepr {
    fn from(c: Crf) -> Self {
        match c {
            Crf::Gamma {
                gamma,
                white_level,
                bit_depth,
            } => CrfRepr::Gamma {
                gamma,
                white_level,
                bit_depth,
            },
            Crf::Lut { values, bit_depth } => CrfRepr::Lut { values, bit_depth },
        }
    }
}

fn check_bit_depth(bit_depth: u8) -> Result<()> {
    if bit_depth == 8 || bit_depth == 16 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "crf bit depth {bit_depth} is not 8 or 16"
        )))
    }
}

impl Crf {
    pub fn gamma(gamma: f64, white_level: f64, bit_depth: u8) -> Result<Self> {
        check_bit_depth(bit_depth)?;
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidInput(format!("gamma {gamma} must be > 0")));
        }
        if !(white_level > 0.0 && white_level.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "white level {white_level} must be > 0"
            )));
        }
        Ok(Crf::Gamma {
            gamma,
            white_level,
            bit_depth,
        })
    }

    /// `values[k]` is the exposure producing level `k`.
    pub fn lut(values: Vec<f64>, bit_depth: u8) -> Result<Self> {
        check_bit_depth(bit_depth)?;
        let n = 1usize << bit_depth;
        if values.len() != n {
            return Err(Error::InvalidInput(format!(
                "lut for {bit_depth}-bit needs {n} entries, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidInput(
                "lut entries must be finite and >= 0".into(),
            ));
        }
        if values.windows(2).any(|p| p[1] < p[0]) {
            return Err(Error::InvalidInput("lut must be non-decreasing".into()));
        }
        if values[1..n - 1].windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::InvalidInput(
                "lut interior entries must be strictly increasing".into(),
            ));
        }
        Ok(Crf::Lut { values, bit_depth })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("crf json: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("crf serializes")
    }

    pub fn bit_depth(&self) -> u8 {
        match self {
            Crf::Gamma { bit_depth, .. } | Crf::Lut { bit_depth, .. } => *bit_depth,
        }
    }

    pub fn max_level(&self) -> u32 {
        (1u32 << self.bit_depth()) - 1
    }

    /// Exposure mapped to the top digital level.
    pub fn white_level(&self) -> f64 {
        match self {
            Crf::Gamma { white_level, .. } => *white_level,
            Crf::Lut { values, .. } => *values.last().expect("non-empty lut"),
        }
    }

    /// `f`: exposure (irradiance × time) to digital level.
    pub fn apply(&self, exposure: f64) -> u16 {
        match self {
            Crf::Gamma { .. } => quantize(self.apply_continuous(exposure), self.max_level()),
            Crf::Lut { values, .. } => {
                let n = values.len();
                // first index with values[k] > exposure
                let upper = values.partition_point(|v| *v <= exposure);
                if upper == 0 {
                    return 0;
                }
                if upper == n {
                    return (n - 1) as u16;
                }
                let lower = upper - 1;
                if exposure - values[lower] < values[upper] - exposure {
                    lower as u16
                } else {
                    upper as u16
                }
            }
        }
    }

    /// `f` without quantization, as a real-valued level in `[0, max]`.
    pub fn apply_continuous(&self, exposure: f64) -> f64 {
        let max = f64::from(self.max_level());
        match self {
            Crf::Gamma {
                gamma, white_level, ..
            } => max * (exposure / white_level).clamp(0.0, 1.0).powf(1.0 / gamma),
            Crf::Lut { values, .. } => {
                let upper = values.partition_point(|v| *v <= exposure);
                if upper == 0 {
                    return 0.0;
                }
                if upper == values.len() {
                    return max;
                }
                let lower = upper - 1;
                let span = values[upper] - values[lower];
                lower as f64 + (exposure - values[lower]) / span
            }
        }
    }

    /// `g`: digital level to exposure.
    pub fn invert(&self, level: u16) -> f64 {
        match self {
            Crf::Gamma { .. } => self.invert_continuous(f64::from(level)),
            Crf::Lut { values, .. } => values[usize::from(level).min(values.len() - 1)],
        }
    }

    /// `g` extended to real-valued levels; the lut kind interpolates
    /// linearly between entries.
    pub fn invert_continuous(&self, level: f64) -> f64 {
        let max = f64::from(self.max_level());
        let level = level.clamp(0.0, max);
        match self {
            Crf::Gamma {
                gamma, white_level, ..
            } => white_level * (level / max).powf(*gamma),
            Crf::Lut { values, .. } => {
                let lo = level.floor() as usize;
                let hi = (lo + 1).min(values.len() - 1);
                let frac = level - lo as f64;
                values[lo] * (1.0 - frac) + values[hi] * frac
            }
        }
    }

    /// Larger of the two exposure gaps adjacent to `level`.
    pub fn quantization_step(&self, level: u16) -> f64 {
        let g = self.invert(level);
        let up = if u32::from(level) < self.max_level() {
            self.invert(level + 1) - g
        } else {
            0.0
        };
        let down = if level > 0 {
            g - self.invert(level - 1)
        } else {
            0.0
        };
        up.max(down)
    }

    /// Exposure curve at every digital level.
    pub fn inverse_table(&self) -> Vec<f64> {
        (0..=self.max_level()).map(|l| self.invert(l as u16)).collect()
    }
}

/// Irradiance estimate `g(L) / t0` per sample.
pub fn linearize(image: &LdrImage, crf: &Crf, t0_ms: f64) -> Result<RadianceMap> {
    if image.bit_depth() != crf.bit_depth() {
        return Err(Error::DimensionMismatch(format!(
            "{}-bit image with {}-bit crf",
            image.bit_depth(),
            crf.bit_depth()
        )));
    }
    let table = crf.inverse_table();
    let data = image
        .data()
        .iter()
        .map(|&l| table[usize::from(l)] / t0_ms)
        .collect();
    RadianceMap::new(image.width(), image.height(), image.channels(), data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn apply_gamma_examples() {
        let lin = Crf::gamma(1.0, 1.0, 8).unwrap();
        assert_eq!(lin.apply(0.5), 128);
        assert_eq!(lin.apply(0.0), 0);
        assert_eq!(lin.apply(1.0), 255);
        assert_eq!(lin.apply(7.0), 255);
        let g22 = Crf::gamma(2.2, 1.0, 8).unwrap();
        assert_eq!(g22.apply(0.5), 186);
    }

    #[test]
    fn invert_gamma_examples() {
        let lin = Crf::gamma(1.0, 1.0, 8).unwrap();
        assert_eq!(lin.invert(0), 0.0);
        assert!((lin.invert(128) - 0.50196).abs() < 1e-5);
        assert_eq!(lin.invert(255), 1.0);
    }

    #[test]
    fn roundtrip_within_quantization_step() {
        let g22 = Crf::gamma(2.2, 1.0, 8).unwrap();
        let x = 0.3;
        let l = g22.apply(x);
        let err = (g22.invert(l) - x).abs();
        assert!(err <= g22.quantization_step(l), "{err}");
    }

    #[test]
    fn lut_apply_picks_nearest_entry() {
        let values: Vec<f64> = (0..256).map(|k| (k as f64 / 255.0).powi(2)).collect();
        let lut = Crf::lut(values.clone(), 8).unwrap();
        assert_eq!(lut.apply(0.0), 0);
        assert_eq!(lut.apply(2.0), 255);
        for k in [1usize, 17, 128, 254] {
            assert_eq!(lut.apply(values[k]), k as u16);
            let below = values[k] - 0.4 * (values[k] - values[k - 1]);
            assert_eq!(lut.apply(below), k as u16);
            let far_below = values[k] - 0.6 * (values[k] - values[k - 1]);
            assert_eq!(lut.apply(far_below), (k - 1) as u16);
        }
        assert_eq!(lut.invert(128), values[128]);
        assert!((lut.apply_continuous(values[100]) - 100.0).abs() < 1e-9);
    }

    #[test]
    fn lut_validation() {
        assert!(Crf::lut(vec![0.0; 255], 8).is_err());
        let mut v: Vec<f64> = (0..256).map(f64::from).collect();
        v[100] = v[99];
        assert!(Crf::lut(v.clone(), 8).is_err());
        v[100] = 99.5;
        assert!(Crf::lut(v, 8).is_ok());
    }

    #[test]
    fn json_forms() {
        let g = Crf::from_json(r#"{ "kind": "gamma", "gamma": 2.2, "white_level": 1.0, "bit_depth": 8 }"#)
            .unwrap();
        assert_eq!(g, Crf::gamma(2.2, 1.0, 8).unwrap());
        assert_eq!(Crf::from_json(&g.to_json()).unwrap(), g);
        let values: Vec<f64> = (0..256).map(|k| k as f64 / 255.0).collect();
        let text = serde_json::json!({ "kind": "lut", "values": values, "bit_depth": 8 }).to_string();
        let l = Crf::from_json(&text).unwrap();
        assert_eq!(l.white_level(), 1.0);
        assert!(Crf::from_json(r#"{ "kind": "gamma", "gamma": -1, "white_level": 1.0, "bit_depth": 8 }"#).is_err());
        assert!(Crf::from_json(r#"{ "kind": "spline" }"#).is_err());
    }
}
