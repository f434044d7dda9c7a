//! The `epgif` command line.
//!
//! Exit status: 0 on success, 1 for invalid arguments or parameters, 2 for
//! I/O and format errors, 3 for image size mismatches.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::epgif::{dump_diagnostics, EpgifParams, RhoMode, WeightSign};
use crate::error::{Error, Result};
use crate::filters::{FilterConfig, FilterKind};
use crate::image::{
    load_image, save_image, to_luminance, write_atomic, BitDepth, ImagePlane, MultiPlaneImage,
};
use crate::metrics::{psnr_image, ssim_image, MetricReport, MetricRow};
use crate::pipelines::{
    decompose_with, default_levels, detail_enhance_with, exposure_fuse, row_profile,
    ExposureSequence,
};
use crate::{baseline, synth};

/// Magic prefix of the raw diagnostic dumps, followed by width and height as
/// little-endian `u32` and the samples as little-endian `f64`, row-major.
pub const RAW_MAGIC: &[u8; 8] = b"EPGIFRAW";

#[derive(Debug, Parser)]
#[command(
    name = "epgif",
    version,
    about = "Edge-perceptual guided image filtering"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Filter an image, optionally under a separate guidance image
    Smooth(SmoothArgs),
    /// Boost the detail layer of an image
    Enhance(EnhanceArgs),
    /// Fuse differently exposed frames of one scene
    Fuse(FuseArgs),
    /// Sweep filters over radii and lambdas and report PSNR/SSIM
    Compare(CompareArgs),
    /// Write the edge-aware weighting and constraint fields as images
    Weights(WeightsArgs),
    /// Print one image row across several filter outputs as CSV
    Profile(ProfileArgs),
    /// Generate a seeded synthetic test scene
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RhoArg {
    Unit,
    LuminanceContrast,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DepthArg {
    #[value(name = "8")]
    Eight,
    #[value(name = "16")]
    Sixteen,
}

impl From<DepthArg> for BitDepth {
    fn from(d: DepthArg) -> Self {
        match d {
            DepthArg::Eight => BitDepth::Eight,
            DepthArg::Sixteen => BitDepth::Sixteen,
        }
    }
}

/// Filter parameters shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct ParamArgs {
    /// Window radius
    #[arg(long, default_value_t = 16)]
    pub zeta: usize,
    /// Regularization weight (pass 0.01 for 0.1^2)
    #[arg(long, default_value_t = 0.01)]
    pub lambda: f64,
    /// Offset of the edge-protect curve, in (0, 0.5)
    #[arg(long, default_value_t = 0.35)]
    pub c: f64,
    /// Brightness factor applied before the edge-protect curve
    #[arg(long, value_enum, default_value_t = RhoArg::Unit)]
    pub rho_mode: RhoArg,
    /// Stabilizer of the edge-aware weightings [default: (0.001 L)^2]
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Aggregate with exp(+M) instead of exp(-M)
    #[arg(long, default_value_t = false)]
    pub paper_literal_weight_sign: bool,
}

impl ParamArgs {
    fn params(&self, beta: f64) -> EpgifParams {
        EpgifParams {
            radius: self.zeta,
            lambda: self.lambda,
            c: self.c,
            beta,
            epsilon: self.epsilon,
            rho_mode: match self.rho_mode {
                RhoArg::Unit => RhoMode::Unit,
                RhoArg::LuminanceContrast => RhoMode::LuminanceContrast,
            },
            weight_sign: if self.paper_literal_weight_sign {
                WeightSign::Growing
            } else {
                WeightSign::Decaying
            },
        }
    }
}

#[derive(Debug, Args)]
pub struct SmoothArgs {
    #[arg(short, long)]
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    /// Guidance image [default: the input itself]
    #[arg(long)]
    pub guide: Option<PathBuf>,
    #[arg(long, default_value = "epgif")]
    pub filter: FilterKind,
    #[command(flatten)]
    pub params: ParamArgs,
    /// Residual weight temperature
    #[arg(long, default_value_t = 1.0 / 500.0)]
    pub beta: f64,
    /// Bits per output sample
    #[arg(long, value_enum, default_value_t = DepthArg::Eight)]
    pub depth: DepthArg,
}

#[derive(Debug, Args)]
pub struct EnhanceArgs {
    #[arg(short, long)]
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    /// Factor applied to the detail layer
    #[arg(long, default_value_t = 5.0)]
    pub amplification: f64,
    #[arg(long, default_value = "epgif")]
    pub filter: FilterKind,
    #[command(flatten)]
    pub params: ParamArgs,
    /// Residual weight temperature
    #[arg(long, default_value_t = 1.0 / 500.0)]
    pub beta: f64,
    /// Also write 0.5 + detail [default path: <output>_detail.<ext>]
    #[arg(long, num_args = 0..=1, value_name = "PATH")]
    pub dump_detail: Option<Option<PathBuf>>,
    /// Bits per output sample
    #[arg(long, value_enum, default_value_t = DepthArg::Eight)]
    pub depth: DepthArg,
}

#[derive(Debug, Args)]
pub struct FuseArgs {
    /// Input frames (repeat the flag or list several paths)
    #[arg(short, long, required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
    #[arg(short, long)]
    pub output: PathBuf,
    /// Pyramid depth [default: as deep as the frame size allows]
    #[arg(long)]
    pub levels: Option<usize>,
    #[command(flatten)]
    pub params: ParamArgs,
    /// Residual weight temperature
    #[arg(long, default_value_t = 1.0 / 50.0)]
    pub beta: f64,
    /// Bits per output sample
    #[arg(long, value_enum, default_value_t = DepthArg::Eight)]
    pub depth: DepthArg,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Degraded image to filter
    #[arg(short, long)]
    pub input: PathBuf,
    /// Clean reference image
    #[arg(short, long)]
    pub reference: PathBuf,
    /// CSV destination [default: standard output]
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Comma-separated lambdas
    #[arg(long, default_value = "0.01,0.04,0.16")]
    pub lambdas: String,
    /// Comma-separated window radii
    #[arg(long, default_value = "2,4,8")]
    pub zetas: String,
    /// Comma-separated filters
    #[arg(long, default_value = "gif,wgif,ggif,epgif")]
    pub filters: String,
    /// Offset of the edge-protect curve, in (0, 0.5)
    #[arg(long, default_value_t = 0.35)]
    pub c: f64,
    /// Residual weight temperature
    #[arg(long, default_value_t = 1.0 / 500.0)]
    pub beta: f64,
    /// Brightness factor applied before the edge-protect curve
    #[arg(long, value_enum, default_value_t = RhoArg::Unit)]
    pub rho_mode: RhoArg,
}

#[derive(Debug, Args)]
pub struct WeightsArgs {
    #[arg(short, long)]
    pub input: PathBuf,
    /// Directory receiving the images and raw dumps
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long, default_value = "epgif")]
    pub filter: FilterKind,
    #[command(flatten)]
    pub params: ParamArgs,
    /// Residual weight temperature
    #[arg(long, default_value_t = 1.0 / 500.0)]
    pub beta: f64,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    #[arg(short, long)]
    pub input: PathBuf,
    /// CSV destination [default: standard output]
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Row index, counted from the top
    #[arg(long)]
    pub row: usize,
    /// Comma-separated filters
    #[arg(long, default_value = "gif,epgif")]
    pub filters: String,
    /// Plane index (0 = red or gray)
    #[arg(long, default_value_t = 0)]
    pub channel: usize,
    #[command(flatten)]
    pub params: ParamArgs,
    /// Residual weight temperature
    #[arg(long, default_value_t = 1.0 / 500.0)]
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SceneArg {
    /// Overlapping flat rectangles and discs
    Piecewise,
    /// A vertical 0.25 | 0.75 step
    Step,
    /// The step with a sinusoidal texture on both sides
    TexturedStep,
    /// Uniform noise
    Noise,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value_t = SceneArg::Piecewise)]
    pub scene: SceneArg,
    #[arg(long, default_value_t = 256)]
    pub width: usize,
    #[arg(long, default_value_t = 256)]
    pub height: usize,
    /// Seed of the scene layout and of the noise
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Standard deviation of added Gaussian noise, relative to L
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Bits per output sample
    #[arg(long, value_enum, default_value_t = DepthArg::Eight)]
    pub depth: DepthArg,
}

/// Exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Param(_) | Error::Range { .. } => 1,
        Error::Io { .. } | Error::Format(_) => 2,
        Error::Shape(_) => 3,
    }
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Smooth(a) => cmd_smooth(a),
        Command::Enhance(a) => cmd_enhance(a),
        Command::Fuse(a) => cmd_fuse(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Weights(a) => cmd_weights(a),
        Command::Profile(a) => cmd_profile(a),
        Command::Synth(a) => cmd_synth(a),
    }
}

fn cmd_smooth(a: SmoothArgs) -> Result<()> {
    let cfg = FilterConfig::new(a.filter, a.params.params(a.beta));
    cfg.validate()?;
    let x = load_image(&a.input)?;
    let guide = a.guide.as_ref().map(load_image).transpose()?;
    let start = Instant::now();
    let out = cfg.apply_image(&x, guide.as_ref())?;
    let ms = start.elapsed().as_secs_f64() * 1e3;
    save_image(&out, &a.output, true, a.depth.into())?;
    println!(
        "filter={} zeta={} lambda={} time_ms={ms:.3}",
        a.filter, a.params.zeta, a.params.lambda
    );
    Ok(())
}

fn detail_path(output: &Path) -> PathBuf {
    let stem = output
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("output");
    let ext = output.extension().and_then(|s| s.to_str()).unwrap_or("png");
    output.with_file_name(format!("{stem}_detail.{ext}"))
}

fn cmd_enhance(a: EnhanceArgs) -> Result<()> {
    let cfg = FilterConfig::new(a.filter, a.params.params(a.beta));
    cfg.validate()?;
    let x = load_image(&a.input)?;
    let out = detail_enhance_with(&x, &cfg, a.amplification)?;
    save_image(&out, &a.output, true, a.depth.into())?;
    if let Some(dump) = a.dump_detail {
        let path = dump.unwrap_or_else(|| detail_path(&a.output));
        let (_, detail) = decompose_with(&x, &cfg)?;
        let shown = detail.try_map_planes(|_, p| Ok(p.map(|d| 0.5 + d)))?;
        save_image(&shown, &path, true, a.depth.into())?;
    }
    Ok(())
}

fn cmd_fuse(a: FuseArgs) -> Result<()> {
    let params = a.params.params(a.beta);
    params.validate()?;
    let frames = a.input.iter().map(load_image).collect::<Result<Vec<_>>>()?;
    let seq = ExposureSequence::new(frames)?;
    let levels = a.levels.unwrap_or_else(|| default_levels(&seq));
    let out = exposure_fuse(&seq, &params, levels)?;
    save_image(&out, &a.output, true, a.depth.into())
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    let items: Vec<&str> = s
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .collect();
    if items.is_empty() {
        return Err(Error::param(format!("{what} list is empty")));
    }
    items
        .iter()
        .map(|t| {
            t.parse::<T>()
                .map_err(|_| Error::param(format!("cannot parse {t:?} in {what} list")))
        })
        .collect()
}

fn parse_filters(s: &str) -> Result<Vec<FilterKind>> {
    let names: Vec<String> = parse_list(s, "filter")?;
    names.iter().map(|n| n.parse()).collect()
}

/// Worker pool capped by `EPGIF_THREADS` when set to a positive integer.
fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("EPGIF_THREADS") {
        let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
            Error::param(format!(
                "EPGIF_THREADS must be a positive integer, got {v:?}"
            ))
        })?;
        b = b.num_threads(n);
    }
    b.build().map_err(|e| Error::param(e.to_string()))
}

fn cmd_compare(a: CompareArgs) -> Result<()> {
    let lambdas: Vec<f64> = parse_list(&a.lambdas, "lambda")?;
    let zetas: Vec<usize> = parse_list(&a.zetas, "zeta")?;
    let filters = parse_filters(&a.filters)?;
    let base = ParamArgs {
        zeta: 1,
        lambda: 1.0,
        c: a.c,
        rho_mode: a.rho_mode,
        epsilon: None,
        paper_literal_weight_sign: false,
    }
    .params(a.beta);
    let mut cells = Vec::new();
    for &f in &filters {
        for &z in &zetas {
            for &l in &lambdas {
                let cfg = FilterConfig::new(
                    f,
                    EpgifParams {
                        radius: z,
                        lambda: l,
                        ..base
                    },
                );
                cfg.validate()?;
                cells.push(cfg);
            }
        }
    }
    let x = load_image(&a.input)?;
    let reference = load_image(&a.reference)?;
    if !x.same_shape(&reference) || x.num_planes() != reference.num_planes() {
        return Err(Error::shape(
            "input and reference differ in size or plane count",
        ));
    }
    let rows = thread_pool()?.install(|| {
        cells
            .par_iter()
            .map(|cfg| {
                let out = cfg
                    .apply_image(&x, None)?
                    .try_map_planes(|_, p| Ok(p.clamped()))?;
                Ok(MetricRow {
                    method: cfg.kind.to_string(),
                    zeta: cfg.params.radius,
                    lambda: cfg.params.lambda,
                    psnr: psnr_image(&out, &reference)?,
                    ssim: ssim_image(&out, &reference)?,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let report = MetricReport { rows };
    match a.output {
        Some(p) => crate::metrics::emit_report(&report, p),
        None => {
            print!("{}", report.to_csv_string());
            Ok(())
        }
    }
}

/// Serializes a plane in the raw dump layout described at [`RAW_MAGIC`].
pub fn raw_bytes(p: &ImagePlane) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 8 * p.len());
    out.extend_from_slice(RAW_MAGIC);
    out.extend_from_slice(&(p.width() as u32).to_le_bytes());
    out.extend_from_slice(&(p.height() as u32).to_le_bytes());
    for v in p.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Inverse of [`raw_bytes`].
pub fn parse_raw(bytes: &[u8]) -> Result<ImagePlane> {
    let bad = || Error::Format("not an EPGIFRAW dump".into());
    if bytes.len() < 16 || &bytes[..8] != RAW_MAGIC {
        return Err(bad());
    }
    let w = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
    let h = u32::from_le_bytes(bytes[12..16].try_into().expect("4 bytes")) as usize;
    let body = &bytes[16..];
    if body.len() != 8 * w * h {
        return Err(bad());
    }
    let data = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    ImagePlane::new(w, h, data, 1.0)
}

fn write_field(dir: &Path, name: &str, p: &ImagePlane) -> Result<()> {
    let shown = MultiPlaneImage::gray(p.min_max_normalized());
    save_image(
        &shown,
        dir.join(format!("{name}.png")),
        true,
        BitDepth::Sixteen,
    )?;
    write_atomic(&dir.join(format!("{name}.raw")), &raw_bytes(p))
}

fn cmd_weights(a: WeightsArgs) -> Result<()> {
    let params = a.params.params(a.beta);
    let cfg = FilterConfig::new(a.filter, params);
    cfg.validate()?;
    let x = load_image(&a.input)?;
    let g = to_luminance(&x)?;
    std::fs::create_dir_all(&a.output).map_err(|e| Error::io(&a.output, e))?;
    let eps = params.epsilon_for(g.range());
    let fields: Vec<(&str, ImagePlane)> = match a.filter {
        FilterKind::Gif => {
            return Err(Error::param("gif has no edge-aware weighting to show"));
        }
        FilterKind::Wgif => vec![("phi", baseline::wgif_weighting(&g, eps))],
        FilterKind::Ggif => {
            let chi = baseline::ggif_chi(&g, params.radius);
            vec![
                ("phi_hat", baseline::ggif_weighting(&g, params.radius, eps)),
                ("gamma", baseline::ggif_gamma(&chi)),
            ]
        }
        FilterKind::Epgif => {
            let d = dump_diagnostics(&g, &g, &params)?;
            vec![("psi", d.psi), ("tau", d.tau), ("eta", d.eta), ("w", d.w)]
        }
    };
    for (name, p) in &fields {
        write_field(&a.output, name, p)?;
    }
    Ok(())
}

fn cmd_profile(a: ProfileArgs) -> Result<()> {
    let filters = parse_filters(&a.filters)?;
    let params = a.params.params(a.beta);
    for &f in &filters {
        FilterConfig::new(f, params).validate()?;
    }
    let x = load_image(&a.input)?;
    if a.channel >= x.num_planes() {
        return Err(Error::param(format!(
            "channel {} does not exist in a {}-plane image",
            a.channel,
            x.num_planes()
        )));
    }
    if a.row >= x.height() {
        return Err(Error::param(format!(
            "row {} is outside an image of height {}",
            a.row,
            x.height()
        )));
    }
    let plane = x.plane(a.channel);
    let outputs = filters
        .iter()
        .map(|&f| {
            Ok((
                f.to_string(),
                FilterConfig::new(f, params).apply(plane, plane)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let csv = row_profile(plane, &outputs, a.row)?;
    match a.output {
        Some(p) => write_atomic(&p, csv.as_bytes()),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn cmd_synth(a: SynthArgs) -> Result<()> {
    let scene = match a.scene {
        SceneArg::Piecewise => synth::Scene::Piecewise,
        SceneArg::Step => synth::Scene::Step,
        SceneArg::TexturedStep => synth::Scene::TexturedStep,
        SceneArg::Noise => synth::Scene::Noise,
    };
    let img = synth::render(scene, a.width, a.height, a.seed, a.noise)?;
    save_image(&MultiPlaneImage::gray(img), &a.output, true, a.depth.into())
}
