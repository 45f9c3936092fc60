use rayon::prelude::*;

use super::{pol_state_from_stokes, stokes_from_quad, Stokes};
use crate::error::{Error, Result};
use crate::imgcore::RadianceMap;

/// Per-pixel linear Stokes planes, interleaved like the source images.
#[derive(Debug, Clone, PartialEq)]
pub struct StokesMap {
    width: usize,
    height: usize,
    channels: usize,
    s0: Vec<f64>,
    s1: Vec<f64>,
    s2: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolPixelFlag {
    Ok,
    /// S1 = S2 = 0; angle reported as 0°.
    AngleUndefined,
    /// S0 ≤ 0; ρ and θ reported as 0.
    Degenerate,
}

/// Degree/angle of polarization planes recovered from a [`StokesMap`].
#[derive(Debug, Clone, PartialEq)]
pub struct PolMap {
    pub rho: RadianceMap,
    /// Degrees in `[0, 180)`.
    pub theta_deg: RadianceMap,
    pub flags: Vec<PolPixelFlag>,
    /// Samples whose raw ratio exceeded 1.
    pub clamp_count: usize,
}

/// Stokes planes from four irradiance maps in 0/45/90/135 order.
pub fn stokes_map(planes: &[RadianceMap; 4]) -> Result<StokesMap> {
    let (w, h, c) = planes[0].dims();
    if planes.iter().any(|p| p.dims() != (w, h, c)) {
        return Err(Error::DimensionMismatch(
            "orientation planes differ in shape".into(),
        ));
    }
    let stokes: Vec<Stokes> = (0..w * h * c)
        .into_par_iter()
        .map(|i| {
            stokes_from_quad([
                planes[0].data()[i],
                planes[1].data()[i],
                planes[2].data()[i],
                planes[3].data()[i],
            ])
        })
        .collect();
    Ok(StokesMap {
        width: w,
        height: h,
        channels: c,
        s0: stokes.iter().map(|s| s.s0).collect(),
        s1: stokes.iter().map(|s| s.s1).collect(),
        s2: stokes.iter().map(|s| s.s2).collect(),
    })
}

impl StokesMap {
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.width, self.height, self.channels)
    }

    pub fn s0(&self) -> &[f64] {
        &self.s0
    }

    pub fn s1(&self) -> &[f64] {
        &self.s1
    }

    pub fn s2(&self) -> &[f64] {
        &self.s2
    }

    pub fn get(&self, i: usize) -> Stokes {
        Stokes {
            s0: self.s0[i],
            s1: self.s1[i],
            s2: self.s2[i],
        }
    }

    /// Total intensity plane.
    pub fn intensity(&self) -> RadianceMap {
        let data = self.s0.iter().map(|v| v.max(0.0)).collect();
        RadianceMap::from_raw(self.width, self.height, self.channels, data)
    }

    pub fn pol_map(&self) -> PolMap {
        let fits: Vec<(f64, f64, PolPixelFlag, bool)> = (0..self.s0.len())
            .into_par_iter()
            .map(|i| match pol_state_from_stokes(self.get(i)) {
                Ok(fit) => {
                    let flag = if fit.angle_undefined {
                        PolPixelFlag::AngleUndefined
                    } else {
                        PolPixelFlag::Ok
                    };
                    (fit.state.rho(), fit.state.theta_deg(), flag, fit.clamped)
                }
                Err(_) => (0.0, 0.0, PolPixelFlag::Degenerate, false),
            })
            .collect();
        let (w, h, c) = self.dims();
        PolMap {
            rho: RadianceMap::from_raw(w, h, c, fits.iter().map(|f| f.0).collect()),
            theta_deg: RadianceMap::from_raw(w, h, c, fits.iter().map(|f| f.1).collect()),
            flags: fits.iter().map(|f| f.2).collect(),
            clamp_count: fits.iter().filter(|f| f.3).count(),
        }
    }
}
