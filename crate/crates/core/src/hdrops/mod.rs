//! Reference-HDR construction: exposure fusion across a bracketed stack,
//! photographic tone mapping, and the pipeline joining them.

mod mertens;
mod pyramid;
mod reference;
mod reinhard;

pub use mertens::{mertens_fuse, mertens_weights, MertensConfig};
pub use pyramid::{collapse, gaussian_pyramid, laplacian_pyramid, Plane};
pub use reference::{build_reference_hdr, MergedHdr, DISPLAY_GAMMA};
pub use reinhard::{
    luminance, reinhard_curve, reinhard_stats, reinhard_tonemap, reinhard_with_stats,
    ReinhardConfig, ReinhardStats,
};
