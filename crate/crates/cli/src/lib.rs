//! `polhdr` command-line driver.
//!
//! Every subcommand takes explicit paths, prints one JSON object on stdout
//! and logs to stderr. Usage errors exit with 2, data errors with 1 and a
//! single `error: <kind>: <message>` line.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use polhdr_core::synth::{RadiancePattern, ThetaField};
use polhdr_core::polar::{DemosaicMode, MosaicPattern};
use polhdr_core::Error;

mod commands;

/// The default bracket, in ms, as accepted by `--exposures`.
pub const DEFAULT_EXPOSURES_ARG: &str =
    "0.03,0.045,0.068,0.101,0.152,0.228,0.342,0.513,0.769,1.153,1.73,2.595,3.592,5.839,8.758,13.137,19.705";

#[derive(Debug, Parser)]
#[command(name = "polhdr", version, about = "Snapshot HDR reconstruction from polarization captures")]
pub struct Cli {
    /// Seed for every random choice (scene, noise, CRF sampling)
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; defaults to all cores
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    pub threads: Option<u16>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a synthetic scene and its exposure bracket
    Simulate(SimulateArgs),
    /// Split a raw mosaic PNG into a four-orientation quad
    Demosaic(DemosaicArgs),
    /// Stokes parameters and polarization state of one quad
    Stokes(StokesArgs),
    /// Fuse the four orientations of one quad into irradiance
    Fuse(FuseArgs),
    /// Merge a whole bracket into one radiance map
    Merge(MergeArgs),
    /// Tone-map a radiance map to an 8-bit PNG
    Tonemap(TonemapArgs),
    /// Recover the camera response from a bracket
    CrfSolve(CrfSolveArgs),
    /// Compare a radiance map against a reference
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Clone)]
pub struct Exposures(pub Vec<f64>);

impl FromStr for Exposures {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let vals = s
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| format!("bad exposure {t:?}")))
            .collect::<Result<Vec<_>, _>>()?;
        if vals.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err("exposures must be positive".into());
        }
        Ok(Self(vals))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RhoRange(pub f64, pub f64);

impl FromStr for RhoRange {
    type Err = String;

    /// `lo:hi`
    fn from_str(s: &str) -> Result<Self, String> {
        let bad = || format!("expected lo:hi, got {s:?}");
        let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
        let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
        Ok(Self(lo, hi))
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Radiance pattern: hdr-checker, radial-spots or gradient-ramp
    #[arg(long, default_value = "hdr-checker", value_parser = RadiancePattern::from_str)]
    pub scene: RadiancePattern,
    /// Scene dynamic range in stops
    #[arg(long, default_value_t = 14.0)]
    pub stops: f64,
    /// Degree-of-polarization range, lo:hi
    #[arg(long, default_value = "0.6:1.0")]
    pub rho: RhoRange,
    /// Angle field: constant:<deg>, gradient or random:<px>
    #[arg(long, default_value = "random:32", value_parser = ThetaField::from_str)]
    pub theta: ThetaField,
    #[arg(long, default_value_t = 256)]
    pub width: usize,
    #[arg(long, default_value_t = 256)]
    pub height: usize,
    /// Radiance of the brightest scene region
    #[arg(long, default_value_t = 1.0)]
    pub peak: f64,
    /// Comma-separated exposure times in ms
    #[arg(long, default_value = DEFAULT_EXPOSURES_ARG)]
    pub exposures: Exposures,
    /// Camera response JSON; a gamma curve is used when absent
    #[arg(long)]
    pub crf: Option<PathBuf>,
    /// Gamma of the default camera response
    #[arg(long, default_value_t = 2.2)]
    pub gamma: f64,
    /// Bit depth of the default camera response
    #[arg(long, default_value_t = 8)]
    pub bit_depth: u8,
    /// Gaussian read noise in digital levels
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Also write raw mosaics with this 2x2 layout, e.g. 90,45,135,0
    #[arg(long, value_parser = MosaicPattern::from_str)]
    pub pattern: Option<MosaicPattern>,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DemosaicArgs {
    /// Raw mosaic PNG
    #[arg(long)]
    pub input: PathBuf,
    /// 2x2 layout, row-major
    #[arg(long, default_value = "90,45,135,0", value_parser = MosaicPattern::from_str)]
    pub pattern: MosaicPattern,
    /// split (quarter resolution) or bilinear (full resolution)
    #[arg(long, default_value = "split", value_parser = DemosaicMode::from_str)]
    pub mode: DemosaicMode,
    /// Exposure time of the capture in ms
    #[arg(long)]
    pub t0: f64,
    /// Camera response JSON stored in the written manifest
    #[arg(long)]
    pub crf: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct StokesArgs {
    /// Capture manifest JSON
    #[arg(long)]
    pub manifest: PathBuf,
    /// Index of the quad in exposure order
    #[arg(long, default_value_t = 0)]
    pub quad: usize,
    /// Camera response JSON; overrides the manifest's
    #[arg(long)]
    pub crf: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FusionArgs {
    /// Camera response JSON; overrides the manifest's
    #[arg(long)]
    pub crf: Option<PathBuf>,
    /// Width of the fusion weight
    #[arg(long, default_value_t = 0.2)]
    pub sigma: f64,
    /// Saturation level; defaults to two below the top code
    #[arg(long)]
    pub sat_level: Option<u32>,
}

#[derive(Debug, Args)]
pub struct FuseArgs {
    /// Capture manifest JSON
    #[arg(long)]
    pub manifest: PathBuf,
    /// Index of the quad in exposure order
    #[arg(long, default_value_t = 0)]
    pub quad: usize,
    #[command(flatten)]
    pub fusion: FusionArgs,
    /// Output PFM
    #[arg(long)]
    pub out: PathBuf,
    /// Flag mask PNG; defaults to <out>_mask.png
    #[arg(long)]
    pub mask: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MergeArgs {
    /// Capture manifest JSON
    #[arg(long)]
    pub manifest: PathBuf,
    #[command(flatten)]
    pub fusion: FusionArgs,
    /// Output PFM
    #[arg(long)]
    pub out: PathBuf,
    /// Mask PNG of pixels fused cleanly in some exposure; defaults to <out>_mask.png
    #[arg(long)]
    pub mask: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TonemapArgs {
    /// Input PFM
    #[arg(long)]
    pub input: PathBuf,
    /// Output PNG
    #[arg(long)]
    pub out: PathBuf,
    /// Key value the log-average luminance maps to
    #[arg(long, default_value_t = 0.18)]
    pub key: f64,
    /// Scaled luminance mapped to white; defaults to the maximum
    #[arg(long)]
    pub white: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CrfSolveArgs {
    /// Capture manifest JSON
    #[arg(long)]
    pub manifest: PathBuf,
    /// Smoothness weight
    #[arg(long, default_value_t = 50.0)]
    pub lambda: f64,
    /// Number of sampled pixel locations
    #[arg(long, default_value_t = 500)]
    pub samples: usize,
    /// Output JSON
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Reference PFM
    #[arg(long = "ref")]
    pub reference: PathBuf,
    /// PFM under test
    #[arg(long)]
    pub test: PathBuf,
    /// PNG mask; nonzero pixels are evaluated
    #[arg(long)]
    pub mask: Option<PathBuf>,
}

/// Parse `argv` (program name first), run the command and return the exit
/// code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return 0;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or_default();
            eprintln!("error: usage: {}", first.trim_start_matches("error: "));
            return 2;
        }
    };
    match dispatch(&cli) {
        Ok(value) => {
            println!("{value}");
            0
        }
        Err(e) => {
            eprintln!("error: {}: {}", e.kind(), one_line(&e.to_string()));
            1
        }
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn dispatch(cli: &Cli) -> polhdr_core::Result<Value> {
    match cli.threads {
        None => execute(cli),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(usize::from(n))
            .build()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?
            .install(|| execute(cli)),
    }
}

fn execute(cli: &Cli) -> polhdr_core::Result<Value> {
    log::info!("{:?}", cli.command);
    match &cli.command {
        Command::Simulate(a) => commands::simulate(a, cli.seed),
        Command::Demosaic(a) => commands::demosaic(a),
        Command::Stokes(a) => commands::stokes(a),
        Command::Fuse(a) => commands::fuse(a),
        Command::Merge(a) => commands::merge(a),
        Command::Tonemap(a) => commands::tonemap(a),
        Command::CrfSolve(a) => commands::crf_solve(a, cli.seed),
        Command::Evaluate(a) => commands::evaluate(a),
    }
}

/// `dir/stem_suffix.png` next to `path`.
pub(crate) fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    path.with_file_name(format!("{stem}_{suffix}.png"))
}

pub(crate) fn path_json(p: &Path) -> Value {
    json!(p.display().to_string())
}
