use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{read_png, write_png, LdrImage};
use crate::crf::Crf;
use crate::error::{Error, Result};

/// Manifest keys for the four polarizer orientations, in 0/45/90/135 order.
pub const ANGLE_KEYS: [&str; 4] = ["a0", "a45", "a90", "a135"];

/// Four aligned captures behind 0°, 45°, 90° and 135° polarizers.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarQuad {
    images: [LdrImage; 4],
    t0_ms: f64,
    crf: Option<Arc<Crf>>,
}

impl PolarQuad {
    pub fn new(images: [LdrImage; 4], t0_ms: f64, crf: Option<Arc<Crf>>) -> Result<Self> {
        if !(t0_ms > 0.0) || !t0_ms.is_finite() {
            return Err(Error::InvalidInput(format!(
                "exposure time {t0_ms} ms must be positive"
            )));
        }
        let first = &images[0];
        if let Some(k) = images.iter().position(|im| !im.same_shape(first)) {
            return Err(Error::DimensionMismatch(format!(
                "{} image is {}x{}x{} @{}-bit, {} image is {}x{}x{} @{}-bit",
                ANGLE_KEYS[k],
                images[k].width(),
                images[k].height(),
                images[k].channels(),
                images[k].bit_depth(),
                ANGLE_KEYS[0],
                first.width(),
                first.height(),
                first.channels(),
                first.bit_depth()
            )));
        }
        Ok(Self {
            images,
            t0_ms,
            crf,
        })
    }

    /// Images in 0°, 45°, 90°, 135° order.
    pub fn images(&self) -> &[LdrImage; 4] {
        &self.images
    }

    pub fn t0_ms(&self) -> f64 {
        self.t0_ms
    }

    pub fn crf(&self) -> Option<&Crf> {
        self.crf.as_deref()
    }

    pub fn width(&self) -> usize {
        self.images[0].width()
    }

    pub fn height(&self) -> usize {
        self.images[0].height()
    }

    pub fn channels(&self) -> usize {
        self.images[0].channels()
    }

    pub fn bit_depth(&self) -> u8 {
        self.images[0].bit_depth()
    }
}

/// Bracketed sequence of quads, ordered by strictly increasing exposure.
#[derive(Debug, Clone, PartialEq)]
pub struct CaptureStack {
    quads: Vec<PolarQuad>,
    crf: Option<Arc<Crf>>,
}

impl CaptureStack {
    /// Sorts quads by exposure. Duplicate exposures and mixed dimensions are
    /// rejected.
    pub fn new(mut quads: Vec<PolarQuad>, crf: Option<Arc<Crf>>) -> Result<Self> {
        quads.sort_by(|a, b| a.t0_ms.total_cmp(&b.t0_ms));
        for pair in quads.windows(2) {
            if pair[0].t0_ms == pair[1].t0_ms {
                return Err(Error::DuplicateExposure(pair[0].t0_ms));
            }
            if !pair[0].images[0].same_shape(&pair[1].images[0]) {
                return Err(Error::DimensionMismatch(format!(
                    "quad at {} ms differs in shape from quad at {} ms",
                    pair[1].t0_ms, pair[0].t0_ms
                )));
            }
        }
        Ok(Self { quads, crf })
    }

    pub fn quads(&self) -> &[PolarQuad] {
        &self.quads
    }

    pub fn exposures(&self) -> Vec<f64> {
        self.quads.iter().map(|q| q.t0_ms).collect()
    }

    pub fn crf(&self) -> Option<&Crf> {
        self.crf.as_deref()
    }

    pub fn len(&self) -> usize {
        self.quads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quads.is_empty()
    }

    /// Stack with the quad at `index` removed.
    pub fn without(&self, index: usize) -> Result<Self> {
        let mut quads = self.quads.clone();
        quads.remove(index);
        Self::new(quads, self.crf.clone())
    }
}

/// On-disk manifest layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crf: Option<Crf>,
    pub quads: Vec<ManifestQuad>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestQuad {
    pub t0_ms: f64,
    pub images: BTreeMap<String, String>,
}

impl Manifest {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Manifest(format!("{}: {e}", path.display())))
    }
}

pub fn load_stack(manifest_path: impl AsRef<Path>) -> Result<CaptureStack> {
    let manifest_path = manifest_path.as_ref();
    let manifest = Manifest::from_path(manifest_path)?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    if manifest.quads.is_empty() {
        return Err(Error::Manifest("manifest lists no quads".into()));
    }
    let crf = manifest.crf.map(Arc::new);

    let mut quads = Vec::with_capacity(manifest.quads.len());
    for (qi, entry) in manifest.quads.iter().enumerate() {
        if let Some(key) = entry.images.keys().find(|k| !ANGLE_KEYS.contains(&k.as_str())) {
            return Err(Error::Manifest(format!(
                "quad {qi}: unknown angle key {key:?}"
            )));
        }
        let mut images = Vec::with_capacity(4);
        for key in ANGLE_KEYS {
            let rel = entry
                .images
                .get(key)
                .ok_or_else(|| Error::Manifest(format!("quad {qi}: missing {key} image")))?;
            images.push(read_png(resolve(base, rel))?);
        }
        let images: [LdrImage; 4] = images.try_into().expect("four images");
        quads.push(PolarQuad::new(images, entry.t0_ms, crf.clone())?);
    }
    CaptureStack::new(quads, crf)
}

/// Write every quad as PNGs under `dir` plus `dir/manifest.json`.
/// Returns the manifest path.
pub fn save_stack(stack: &CaptureStack, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut entries = Vec::with_capacity(stack.len());
    for (qi, quad) in stack.quads().iter().enumerate() {
        let sub = format!("quad_{qi:02}");
        let sub_dir = dir.join(&sub);
        fs::create_dir_all(&sub_dir).map_err(|e| Error::io(&sub_dir, e))?;
        let mut images = BTreeMap::new();
        for (key, img) in ANGLE_KEYS.iter().zip(quad.images()) {
            let name = format!("{key}.png");
            write_png(img, sub_dir.join(&name))?;
            images.insert(key.to_string(), format!("{sub}/{name}"));
        }
        entries.push(ManifestQuad {
            t0_ms: quad.t0_ms(),
            images,
        });
    }
    let manifest = Manifest {
        crf: stack.crf().cloned(),
        quads: entries,
    };
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

fn resolve(base: &Path, rel: &str) -> PathBuf {
    let p = Path::new(rel);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}
