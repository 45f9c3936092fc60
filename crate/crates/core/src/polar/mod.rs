//! Polarization formation model and its inverse.
//!
//! A linear polarizer at angle `α` passes `0.5·I₀·(1 + ρ·cos(2θ − 2α))` of
//! the incident irradiance, where `ρ` is the degree and `θ` the angle of
//! polarization. With four polarizers at 0°, 45°, 90° and 135° the
//! measurements determine the linear Stokes vector, and in turn `(ρ, θ)`.
//! The same attenuation acts on exposure time, so a single snapshot behaves
//! like four bracketed exposures per pixel.
//!
//! Angles are stored in degrees and converted at the trig call site.

mod mosaic;
mod stokes;

pub use mosaic::{demosaic_quad, mosaic_from_quad, DemosaicMode, MosaicPattern};
pub use stokes::{stokes_map, PolMap, PolPixelFlag, StokesMap};

use crate::error::{Error, Result};

/// Polarizer angles of the four captures, in index order.
pub const POLARIZER_ANGLES: [f64; 4] = [0.0, 45.0, 90.0, 135.0];

/// Degree and angle of linear polarization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolState {
    rho: f64,
    theta_deg: f64,
}

impl PolState {
    /// `theta_deg` is wrapped into `[0°, 180°)`.
    pub fn new(rho: f64, theta_deg: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::InvalidInput(format!(
                "degree of polarization {rho} outside [0, 1]"
            )));
        }
        if !theta_deg.is_finite() {
            return Err(Error::InvalidInput(format!(
                "angle of polarization {theta_deg} is not finite"
            )));
        }
        Ok(Self {
            rho,
            theta_deg: wrap_half_turn(theta_deg),
        })
    }

    pub fn unpolarized() -> Self {
        Self {
            rho: 0.0,
            theta_deg: 0.0,
        }
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn theta_deg(&self) -> f64 {
        self.theta_deg
    }

    /// `(ρ·cos2θ, ρ·sin2θ)`, the normalized linear Stokes components.
    fn components(&self) -> (f64, f64) {
        let (s, c) = (2.0 * self.theta_deg).to_radians().sin_cos();
        (self.rho * c, self.rho * s)
    }
}

/// Linear Stokes parameters `(S0, S1, S2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stokes {
    pub s0: f64,
    pub s1: f64,
    pub s2: f64,
}

/// Result of inverting a Stokes vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StokesFit {
    pub state: PolState,
    /// The raw ratio exceeded 1 and was clamped.
    pub clamped: bool,
    /// `S1 = S2 = 0`: the angle is undefined and reported as 0°.
    pub angle_undefined: bool,
}

/// Effective exposure times behind the four polarizers, in ms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExposureQuad {
    pub t: [f64; 4],
}

impl ExposureQuad {
    pub fn t1(&self) -> f64 {
        self.t[0]
    }
    pub fn t2(&self) -> f64 {
        self.t[1]
    }
    pub fn t3(&self) -> f64 {
        self.t[2]
    }
    pub fn t4(&self) -> f64 {
        self.t[3]
    }
}

pub fn filtered_irradiance(i0: f64, state: PolState, alpha_deg: f64) -> f64 {
    let phase = (2.0 * state.theta_deg - 2.0 * alpha_deg).to_radians();
    0.5 * i0 * (1.0 + state.rho * phase.cos())
}

/// Irradiance behind the 0°, 45°, 90° and 135° polarizers.
///
/// Evaluated through the pairwise form so that `I1 + I3` and `I2 + I4`
/// reproduce `i0` up to rounding.
pub fn forward_quad(i0: f64, state: PolState) -> [f64; 4] {
    split_pairs(i0, state)
}

pub fn stokes_from_quad(irr: [f64; 4]) -> Stokes {
    Stokes {
        s0: (irr[0] + irr[1] + irr[2] + irr[3]) / 2.0,
        s1: irr[0] - irr[2],
        s2: irr[1] - irr[3],
    }
}

pub fn pol_state_from_stokes(s: Stokes) -> Result<StokesFit> {
    if !(s.s0 > 0.0) {
        return Err(Error::DegeneratePixel(s.s0));
    }
    let mag = s.s1.hypot(s.s2);
    let raw = mag / s.s0;
    let clamped = raw > 1.0;
    let rho = raw.min(1.0);
    let angle_undefined = mag == 0.0;
    let theta_deg = if angle_undefined {
        0.0
    } else {
        wrap_half_turn(0.5 * s.s2.atan2(s.s1).to_degrees())
    };
    Ok(StokesFit {
        state: PolState { rho, theta_deg },
        clamped,
        angle_undefined,
    })
}

pub fn effective_exposures(t0_ms: f64, state: PolState) -> ExposureQuad {
    ExposureQuad {
        t: split_pairs(t0_ms, state),
    }
}

fn split_pairs(total: f64, state: PolState) -> [f64; 4] {
    let (c, s) = state.components();
    let half = 0.5 * total;
    [
        half * (1.0 + c),
        half * (1.0 + s),
        half * (1.0 - c),
        half * (1.0 - s),
    ]
}

fn wrap_half_turn(deg: f64) -> f64 {
    let w = deg.rem_euclid(180.0);
    // rem_euclid can round up to exactly 180 for tiny negative inputs
    if w >= 180.0 {
        0.0
    } else {
        w + 0.0
    }
}
