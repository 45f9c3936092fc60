//! Image containers, file I/O and capture-stack manifests.
//!
//! HDR data travels as PFM, LDR captures as PNG, and a bracketed set of
//! polarization captures is described by a JSON manifest.

mod image;
pub mod pfm;
pub mod png;
mod stack;

pub use self::image::{LdrImage, RadianceMap};
pub use self::pfm::{read_pfm, write_pfm, write_pfm_samples};
pub use self::png::{read_png, write_png};
pub use self::stack::{
    load_stack, save_stack, CaptureStack, Manifest, ManifestQuad, PolarQuad, ANGLE_KEYS,
};
