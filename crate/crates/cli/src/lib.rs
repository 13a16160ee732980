//! Command-line front end. [`run`] parses arguments, dispatches to the core
//! library and maps failures to exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | usage error |
//! | 2 | data or format error |
//! | 3 | calibration quality error |

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use spikeforge_core::eval::{
    psnr, run_benchmark, ssim, synthetic_scenes, BenchmarkConfig, BenchmarkReport, Illumination,
    MethodSpec,
};
use spikeforge_core::io::{
    import_raw, read_calibration, read_image, read_stream, read_stream_with_header,
    write_calibration, write_image, write_report, write_stream_with_tick, BitDepth, BitOrder,
    DEFAULT_TICK_NS,
};
use spikeforge_core::reconstruction::{
    adaptive_transform, bootstrap_density, restore_recurrent, tfi, tfp, WindowMode,
};
use spikeforge_core::{
    build_calibration, simulate, CalibrationData, ClockParams, Error, IntensityImage, NoiseConfig,
    RestorerParams, SimulationRequest, Source, SpikeStream,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_CALIBRATION: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "spikeforge",
    version,
    about = "Spike-camera simulation, calibration and restoration"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a spike stream from a static image or an image sequence.
    Simulate(SimulateArgs),
    /// Build a calibration file from dark and two uniform-light captures.
    Calibrate(CalibrateArgs),
    /// Reconstruct intensity images from a spike stream.
    Reconstruct(ReconstructArgs),
    /// Compare two images with PSNR and SSIM.
    Eval(EvalArgs),
    /// Run the benchmark over a scene set.
    Bench(BenchArgs),
    /// Print a stream header and spike statistics.
    Inspect(InspectArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Static scene held for the whole stream.
    #[arg(
        long,
        conflicts_with = "sequence",
        required_unless_present = "sequence"
    )]
    input: Option<PathBuf>,
    /// Directory of graymaps, one per tick in file-name order.
    #[arg(long)]
    sequence: Option<PathBuf>,
    /// Light factor applied to the scene.
    #[arg(long, default_value_t = 1.0)]
    theta: f64,
    /// Stream length in ticks; defaults to the frame count of a sequence.
    #[arg(long)]
    length: Option<usize>,
    /// Sensor calibration; an ideal sensor is assumed when absent.
    #[arg(long)]
    calib: Option<PathBuf>,
    /// `none`, `all` or a comma list of shot, dark, rnu, quant.
    #[arg(long, default_value = "all")]
    noise: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

/// `FILE:INTENSITY`.
#[derive(Debug, Clone)]
struct LitCapture {
    path: PathBuf,
    intensity: f64,
}

impl FromStr for LitCapture {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (path, l) = s
            .rsplit_once(':')
            .ok_or_else(|| format!("expected FILE:INTENSITY, got `{s}`"))?;
        let intensity: f64 = l.parse().map_err(|_| format!("bad intensity `{l}`"))?;
        if path.is_empty() || !(intensity > 0.0 && intensity.is_finite()) {
            return Err(format!(
                "expected FILE:INTENSITY with a positive intensity, got `{s}`"
            ));
        }
        Ok(Self {
            path: path.into(),
            intensity,
        })
    }
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    #[arg(long)]
    dark: PathBuf,
    #[arg(long, value_name = "FILE:L1")]
    light1: LitCapture,
    #[arg(long, value_name = "FILE:L2")]
    light2: LitCapture,
    #[arg(long)]
    out: PathBuf,
}

/// `WIDTHxHEIGHT`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Size {
    width: usize,
    height: usize,
}

impl FromStr for Size {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let parsed = s
            .split_once(['x', 'X'])
            .and_then(|(w, h)| Some((w.parse().ok()?, h.parse().ok()?)));
        match parsed {
            Some((width, height)) if width > 0 && height > 0 => Ok(Self { width, height }),
            _ => Err(format!("expected WIDTHxHEIGHT, got `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BitOrderArg {
    Lsb,
    Msb,
}

#[derive(Debug, Args)]
struct StreamInput {
    /// Spike file, or a headerless camera dump with `--raw`.
    stream: PathBuf,
    /// Read a headerless dump of this frame size, e.g. 400x250.
    #[arg(long, value_name = "WxH")]
    raw: Option<Size>,
    /// Pixel order within each byte of a raw dump.
    #[arg(long, value_enum, default_value = "lsb", requires = "raw")]
    bit_order: BitOrderArg,
}

impl StreamInput {
    fn load(&self, crop: bool, err: &mut dyn Write) -> Result<SpikeStream, CliError> {
        let Some(size) = self.raw else {
            return Ok(read_stream(&self.stream)?);
        };
        let order = match self.bit_order {
            BitOrderArg::Lsb => BitOrder::Lsb,
            BitOrderArg::Msb => BitOrder::Msb,
        };
        let s = import_raw(&self.stream, size.width, size.height, order, crop)?;
        if (s.width(), s.height()) != (size.width, size.height) {
            writeln!(
                err,
                "note: raw {}x{} stream center-cropped to {}x{}",
                size.width,
                size.height,
                s.width(),
                s.height()
            )?;
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Tfp,
    Tfi,
    Ast,
    Rsir,
}

#[derive(Debug, Args)]
struct ReconstructArgs {
    #[command(flatten)]
    input: StreamInput,
    /// Windowed count, inter-spike interval, adaptive windows, or the full
    /// recurrent restoration.
    #[arg(long, value_enum, default_value = "rsir")]
    method: Method,
    /// TFP window; for rsir, replaces the adaptive window with a fixed one.
    #[arg(long)]
    window: Option<usize>,
    /// Output ticks; defaults to the middle of the stream.
    #[arg(long, value_delimiter = ',')]
    at: Vec<usize>,
    /// Sensor calibration for rsir; an ideal sensor is assumed when absent.
    #[arg(long)]
    calib: Option<PathBuf>,
    /// Output images are written to `<prefix>_<tick>.pgm`.
    #[arg(long, default_value = "recon")]
    out_prefix: String,
    /// Multiplies the reconstruction before writing, e.g. `1/theta`.
    #[arg(long, default_value_t = 1.0)]
    gain: f64,
    #[arg(long, value_parser = ["8", "16"], default_value = "8")]
    bit_depth: String,
    /// Only use spikes up to the output tick (ast and rsir).
    #[arg(long)]
    causal: bool,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    gt: PathBuf,
    #[arg(long)]
    pred: PathBuf,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Directory of ground-truth graymaps; synthetic scenes when absent.
    #[arg(long)]
    scenes: Option<PathBuf>,
    /// Number of synthetic scenes.
    #[arg(long, default_value_t = 5, conflicts_with = "scenes")]
    synthetic: usize,
    /// Synthetic scene size.
    #[arg(
        long,
        value_name = "WxH",
        default_value = "64x64",
        conflicts_with = "scenes"
    )]
    size: Size,
    #[arg(long)]
    calib: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `.csv` for a table, anything else for JSON.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct InspectArgs {
    #[command(flatten)]
    input: StreamInput,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Core(Error),
    Output(std::io::Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Output(e)
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Core(Error::CalibrationQuality { .. }) => EXIT_CALIBRATION,
            CliError::Core(_) | CliError::Output(_) => EXIT_DATA,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Output(e) => write!(f, "output error: {e}"),
        }
    }
}

/// Runs the command line `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Calibrate(a) => cmd_calibrate(a, out),
        Command::Reconstruct(a) => cmd_reconstruct(a, out, err),
        Command::Eval(a) => cmd_eval(a, out),
        Command::Bench(a) => cmd_bench(a, out),
        Command::Inspect(a) => cmd_inspect(a, out, err),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "spikeforge: {e}");
            e.exit_code()
        }
    }
}

fn load_calibration(
    path: Option<&Path>,
    width: usize,
    height: usize,
) -> Result<CalibrationData, CliError> {
    let calib = match path {
        Some(p) => read_calibration(p)?,
        None => CalibrationData::identity(width, height),
    };
    if calib.dims() != (width, height) {
        return Err(Error::Dimension(format!(
            "calibration is {:?} but the data is {:?}",
            calib.dims(),
            (width, height)
        ))
        .into());
    }
    Ok(calib)
}

fn tick_nanoseconds(clock: &ClockParams) -> u64 {
    (clock.tick_seconds * 1e9).round() as u64
}

/// Graymaps in `dir`, sorted by file name.
fn image_files(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let entries = fs::read_dir(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry
            .map_err(|source| Error::Io {
                path: dir.to_path_buf(),
                source,
            })?
            .path();
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        if matches!(ext.as_deref(), Some("pgm" | "pnm")) {
            files.push(path);
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(Error::Format(format!("{}: no .pgm images found", dir.display())).into());
    }
    Ok(files)
}

fn cmd_simulate(a: SimulateArgs) -> Result<(), CliError> {
    let noise =
        NoiseConfig::parse_sources(&a.noise, a.seed).map_err(|e| CliError::Usage(e.to_string()))?;
    let (frames, length) = match (&a.input, &a.sequence) {
        (Some(path), None) => {
            let length = a
                .length
                .ok_or_else(|| CliError::Usage("--length is required with --input".into()))?;
            (vec![read_image(path)?], length)
        }
        (None, Some(dir)) => {
            let frames = image_files(dir)?
                .iter()
                .map(|p| read_image(p))
                .collect::<spikeforge_core::Result<Vec<_>>>()?;
            let length = a.length.unwrap_or(frames.len());
            (frames, length)
        }
        _ => unreachable!("clap enforces exactly one source"),
    };
    let (w, h) = frames[0].dims();
    let calib = load_calibration(a.calib.as_deref(), w, h)?;
    let source = match &a.input {
        Some(_) => Source::Static(&frames[0]),
        None => Source::Sequence(&frames),
    };
    let stream = simulate(&SimulationRequest {
        source,
        theta: a.theta,
        length,
        calib: &calib,
        noise,
    })?;
    write_stream_with_tick(&stream, tick_nanoseconds(&calib.clock), &a.out)?;
    Ok(())
}

fn cmd_calibrate(a: CalibrateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (header, dark) = read_stream_with_header(&a.dark)?;
    let light1 = read_stream(&a.light1.path)?;
    let light2 = read_stream(&a.light2.path)?;
    let clock = ClockParams::new(header.tick_nanoseconds as f64 * 1e-9)?;
    let calib = build_calibration(
        &dark,
        &light1,
        a.light1.intensity,
        &light2,
        a.light2.intensity,
        clock,
    )?;
    write_calibration(&calib, &a.out)?;
    writeln!(
        out,
        "calibrated {}x{} sensor: reference pixel {:?}, {} masked pixels",
        calib.width(),
        calib.height(),
        calib.reference_pixel,
        calib.masked_pixels
    )?;
    Ok(())
}

fn cmd_reconstruct(
    a: ReconstructArgs,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), CliError> {
    let stream = a.input.load(true, err)?;
    if stream.length() == 0 {
        return Err(Error::Format("stream has no frames".into()).into());
    }
    let mut ticks = if a.at.is_empty() {
        vec![stream.length() / 2]
    } else {
        a.at.clone()
    };
    ticks.sort_unstable();
    ticks.dedup();
    if let Some(&t) = ticks.last().filter(|&&t| t >= stream.length()) {
        return Err(CliError::Usage(format!(
            "tick {t} is beyond the stream length {}",
            stream.length()
        )));
    }
    if !(a.gain > 0.0 && a.gain.is_finite()) {
        return Err(CliError::Usage(format!(
            "--gain must be positive, got {}",
            a.gain
        )));
    }
    let mode = if a.causal {
        WindowMode::Causal
    } else {
        WindowMode::Centered
    };
    let images: Vec<IntensityImage> = match a.method {
        Method::Tfp => {
            let w = a.window.unwrap_or(32);
            ticks
                .iter()
                .map(|&t| tfp(&stream, t, w))
                .collect::<spikeforge_core::Result<_>>()?
        }
        Method::Tfi => ticks
            .iter()
            .map(|&t| tfi(&stream, t))
            .collect::<spikeforge_core::Result<_>>()?,
        Method::Ast => {
            let mut density =
                bootstrap_density(&stream, RestorerParams::default().bootstrap_window)?;
            ticks
                .iter()
                .map(|&t| adaptive_transform(&stream, t, &mut density, mode))
                .collect::<spikeforge_core::Result<_>>()?
        }
        Method::Rsir => {
            let calib = load_calibration(a.calib.as_deref(), stream.width(), stream.height())?;
            let params = RestorerParams {
                fixed_window: a.window,
                window_mode: mode,
                ..Default::default()
            };
            restore_recurrent(&stream, &calib, &params, &ticks)?
        }
    };
    let depth = if a.bit_depth == "16" {
        BitDepth::Sixteen
    } else {
        BitDepth::Eight
    };
    for (t, img) in ticks.iter().zip(images) {
        let img = if a.gain == 1.0 {
            img
        } else {
            img.scaled(a.gain)?
        };
        let path = PathBuf::from(format!("{}_{t}.pgm", a.out_prefix));
        write_image(&img, &path, depth)?;
        writeln!(out, "{}", path.display())?;
    }
    Ok(())
}

fn cmd_eval(a: EvalArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let gt = read_image(&a.gt)?;
    let pred = read_image(&a.pred)?;
    let p = psnr(&gt, &pred)?;
    let s = ssim(&gt, &pred)?;
    writeln!(out, "psnr={p:?} ssim={s:?}")?;
    Ok(())
}

fn bench_methods() -> Vec<MethodSpec> {
    let mut methods = MethodSpec::standard_set();
    methods.push(MethodSpec::Restorer(RestorerParams {
        fixed_window: Some(64),
        ..Default::default()
    }));
    methods
}

fn cmd_bench(a: BenchArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let scenes = match &a.scenes {
        Some(dir) => image_files(dir)?
            .iter()
            .map(|p| {
                let name = p
                    .file_stem()
                    .map_or_else(String::new, |s| s.to_string_lossy().into_owned());
                Ok((name, read_image(p)?))
            })
            .collect::<Result<Vec<_>, CliError>>()?,
        None => synthetic_scenes(a.size.width, a.size.height, a.synthetic, a.seed)?,
    };
    let (w, h) = scenes
        .first()
        .map(|(_, s)| s.dims())
        .ok_or_else(|| CliError::Usage("--synthetic must be at least 1".into()))?;
    let calib = load_calibration(a.calib.as_deref(), w, h)?;
    let report = run_benchmark(
        &scenes,
        &calib,
        &bench_methods(),
        &BenchmarkConfig::default(),
        a.seed,
    )?;
    print_summary(&report, out)?;
    if let Some(path) = &a.report {
        write_report(&report, path)?;
    }
    Ok(())
}

fn print_summary(report: &BenchmarkReport, out: &mut dyn Write) -> Result<(), CliError> {
    writeln!(
        out,
        "{} cells, scored at tick {}; mean PSNR (dB)",
        report.cells.len(),
        report.eval_tick
    )?;
    writeln!(
        out,
        "{:<8} {:<8} {:<8} {:>8} {:>8}",
        "method", "param", "stage", "low", "high"
    )?;
    let mut seen = Vec::new();
    for row in &report.rows {
        let key = (row.method.clone(), row.parameter.clone(), row.stage);
        if seen.contains(&key) {
            continue;
        }
        let cell = |ill| match report.mean_psnr(Some(ill), &key.0, &key.1, key.2) {
            Some(v) => format!("{v:8.2}"),
            None => format!("{:>8}", "-"),
        };
        writeln!(
            out,
            "{:<8} {:<8} {:<8} {} {}",
            key.0,
            key.1,
            key.2.name(),
            cell(Illumination::Low),
            cell(Illumination::High)
        )?;
        seen.push(key);
    }
    let failures = report.rows.iter().filter(|r| r.error.is_some()).count();
    if failures > 0 {
        writeln!(out, "{failures} rows failed; see the report for details")?;
    }
    Ok(())
}

/// Frame-density histogram bins over `[0, 1]`.
const HISTOGRAM_BINS: usize = 10;

fn cmd_inspect(a: InspectArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let tick_ns = if a.input.raw.is_some() {
        DEFAULT_TICK_NS
    } else {
        read_stream_with_header(&a.input.stream)?.0.tick_nanoseconds
    };
    let stream = a.input.load(false, err)?;
    let (w, h, len) = (stream.width(), stream.height(), stream.length());
    writeln!(out, "size {w}x{h}, {len} ticks of {tick_ns} ns")?;
    if len == 0 {
        return Ok(());
    }
    let counts = stream.count_map(0, len);
    let total: u64 = counts.iter().map(|&c| u64::from(c)).sum();
    let min = counts.iter().copied().min().unwrap_or(0);
    let max = counts.iter().copied().max().unwrap_or(0);
    let ratio = |n: u64| n as f64 / len as f64;
    writeln!(
        out,
        "pixel density min={:?} mean={:?} max={:?}",
        ratio(u64::from(min)),
        total as f64 / (stream.pixels() as f64 * len as f64),
        ratio(u64::from(max))
    )?;
    let mut bins = [0usize; HISTOGRAM_BINS];
    for t in 0..len {
        let d = stream.frame_density(t);
        bins[((d * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1)] += 1;
    }
    writeln!(out, "frame density histogram:")?;
    for (i, n) in bins.iter().enumerate() {
        let lo = i as f64 / HISTOGRAM_BINS as f64;
        let hi = (i + 1) as f64 / HISTOGRAM_BINS as f64;
        writeln!(
            out,
            "  [{lo:.1}, {hi:.1}{} {n}",
            if i + 1 == HISTOGRAM_BINS { "]" } else { ")" }
        )?;
    }
    Ok(())
}
