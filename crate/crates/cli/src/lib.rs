//! Shared plumbing for the `vdp` and `vdp-bench` command-line tools.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, ValueEnum};
use vdp::display_model::RangePolicy;
use vdp::{
    list_frames, load_calibration, load_image, run_video_with, write_heatmap, CalibrationSet, DisplayEncodedFrame,
    DisplayParams, Encoding, Evaluator, GlareMode, Primaries, Result, RunConfig, Task, TaskResult, VdpError,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TaskArg {
    Quality,
    SideBySide,
    Flicker,
    Detection,
    Civdm,
}

impl From<TaskArg> for Task {
    fn from(t: TaskArg) -> Task {
        match t {
            TaskArg::Quality => Task::Quality,
            TaskArg::SideBySide => Task::SideBySide,
            TaskArg::Flicker => Task::Flicker,
            TaskArg::Detection => Task::Detection,
            TaskArg::Civdm => Task::Civdm,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DisplayArg {
    /// HDR display with the PQ transfer function.
    Pq,
    /// SDR display with a 2.2 gamma.
    Gamma,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GlareArg {
    Mtf,
    Cie99,
    Off,
}

impl From<GlareArg> for GlareMode {
    fn from(g: GlareArg) -> GlareMode {
        match g {
            GlareArg::Mtf => GlareMode::Mtf,
            GlareArg::Cie99 => GlareMode::Cie99,
            GlareArg::Off => GlareMode::Off,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PrimariesArg {
    Bt2020,
    Srgb,
}

/// Display, observer and calibration options shared by both tools.
#[derive(Debug, Clone, Args)]
pub struct PipelineArgs {
    /// Pixels per visual degree.
    #[arg(long)]
    pub ppd: f64,

    #[arg(long, value_enum, default_value = "pq")]
    pub display: DisplayArg,

    /// Peak luminance in cd/m² (gamma display only).
    #[arg(long)]
    pub peak: Option<f64>,

    /// Ambient illuminance in lux.
    #[arg(long)]
    pub ambient: Option<f64>,

    /// Screen reflectivity.
    #[arg(long)]
    pub refl: Option<f64>,

    /// Colour primaries of the input (default: bt2020 for pq, srgb for gamma).
    #[arg(long, value_enum)]
    pub primaries: Option<PrimariesArg>,

    /// Reject encoded values outside [0, 1] instead of clamping them.
    #[arg(long)]
    pub strict_range: bool,

    /// Observer age in years.
    #[arg(long, default_value_t = vdp::tasks_runtime::DEFAULT_AGE)]
    pub age: f64,

    #[arg(long, value_enum, default_value = "mtf")]
    pub glare: GlareArg,

    /// Evaluate every n-th frame of a video.
    #[arg(long, default_value_t = vdp::tasks_runtime::DEFAULT_FRAME_STEP)]
    pub frame_step: usize,

    /// Calibration file (default: the shipped calibration of the task).
    #[arg(long)]
    pub calib: Option<PathBuf>,

    /// Evaluate video frames one at a time.
    #[arg(long)]
    pub serial: bool,
}

impl PipelineArgs {
    pub fn run_config(&self, task: Task) -> Result<RunConfig> {
        let mut config = RunConfig::new(task, self.ppd);
        let mut display = match self.display {
            DisplayArg::Pq => DisplayParams::pq(),
            DisplayArg::Gamma => DisplayParams::sdr(),
        };
        if let Some(peak) = self.peak {
            if self.display == DisplayArg::Pq {
                log::warn!("--peak has no effect on a PQ display");
            }
            display.peak_luminance = peak;
        }
        if let Some(ambient) = self.ambient {
            display.ambient_lux = ambient;
        }
        if let Some(refl) = self.refl {
            display.reflectivity = refl;
        }
        if let Some(p) = self.primaries {
            display.primaries = match p {
                PrimariesArg::Bt2020 => Primaries::Bt2020,
                PrimariesArg::Srgb => Primaries::Srgb,
            };
        }
        if self.strict_range {
            display.range_policy = RangePolicy::Strict;
        }
        config.display = display;
        config.age = self.age;
        config.glare = self.glare.into();
        config.frame_step = self.frame_step;
        config.parallel = !self.serial;
        config.validate()?;
        Ok(config)
    }

    pub fn calibration(&self, task: Task) -> Result<CalibrationSet> {
        match &self.calib {
            Some(path) => load_calibration(path),
            None => Ok(CalibrationSet::builtin(task)),
        }
    }

    /// Encoding of PNG inputs for the selected display.
    pub fn png_encoding(&self) -> Encoding {
        match self.display {
            DisplayArg::Pq => Encoding::Pq,
            DisplayArg::Gamma => Encoding::Srgb,
        }
    }
}

/// Loads one image, reading OpenEXR files as absolute linear light.
pub fn load_frame(path: &Path, png_encoding: Encoding) -> Result<DisplayEncodedFrame> {
    let is_exr = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("exr"));
    load_image(path, if is_exr { Encoding::Linear } else { png_encoding })
}

/// A single image or the frames of a video directory.
#[derive(Debug, Clone, PartialEq)]
pub enum Input {
    Image(PathBuf),
    Frames(Vec<PathBuf>),
}

impl Input {
    pub fn resolve(path: &Path) -> Result<Input> {
        let meta = std::fs::metadata(path).map_err(|e| VdpError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        if !meta.is_dir() {
            return Ok(Input::Image(path.to_path_buf()));
        }
        let frames = list_frames(path)?;
        if frames.is_empty() {
            return Err(VdpError::Io {
                path: path.to_path_buf(),
                source: std::io::Error::new(std::io::ErrorKind::NotFound, "no frame_%06d.png files"),
            });
        }
        Ok(Input::Frames(frames))
    }
}

/// Evaluates a test/reference pair of images or frame directories.
pub fn evaluate_inputs(
    test: &Path,
    reference: &Path,
    config: &RunConfig,
    calib: &CalibrationSet,
    png_encoding: Encoding,
) -> Result<TaskResult> {
    match (Input::resolve(test)?, Input::resolve(reference)?) {
        (Input::Image(t), Input::Image(r)) => {
            let evaluator = Evaluator::new(config, calib)?;
            evaluator.evaluate(&load_frame(&t, png_encoding)?, &load_frame(&r, png_encoding)?)
        }
        (Input::Frames(t), Input::Frames(r)) => {
            if t.len() != r.len() {
                return Err(VdpError::DimensionMismatch(format!(
                    "{} test frames vs {} reference frames",
                    t.len(),
                    r.len()
                )));
            }
            log::info!("evaluating {} frames every {} frames", t.len(), config.frame_step);
            run_video_with(
                t.len(),
                |i| Ok((load_frame(&t[i], png_encoding)?, load_frame(&r[i], png_encoding)?)),
                config,
                calib,
            )
        }
        _ => Err(VdpError::InvalidParameter(
            "test and reference must both be images or both be frame directories".into(),
        )),
    }
}

/// Writes every map of `result` as `<dir>/<name>.png`.
pub fn dump_maps(result: &TaskResult, dir: &Path) -> Result<BTreeMap<String, String>> {
    std::fs::create_dir_all(dir).map_err(|e| VdpError::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let mut paths = BTreeMap::new();
    for (name, map) in result.maps() {
        let path = dir.join(format!("{name}.png"));
        write_heatmap(map, &path)?;
        paths.insert(name.to_string(), path.display().to_string());
    }
    Ok(paths)
}

/// Writes the threshold-unit bands of both images as heat maps scaled to
/// their largest magnitude.
pub fn dump_bands(
    test: &DisplayEncodedFrame,
    reference: &DisplayEncodedFrame,
    evaluator: &Evaluator,
    dir: &Path,
) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| VdpError::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let (tn, rn) = evaluator.normalized_pyramids(test, reference)?;
    for (label, pyramid) in [("test", &tn), ("ref", &rn)] {
        for index in pyramid.indices() {
            let band = pyramid.get(index)?;
            let peak = band.as_slice().iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let scaled = band.map(|v| if peak > 0.0 { v.abs() / peak } else { 0.0 });
            let name = match index {
                vdp::BandIndex::Oriented { level, orientation } => format!("{label}_l{level}_o{orientation}.png"),
                vdp::BandIndex::Residual => format!("{label}_residual.png"),
            };
            write_heatmap(&scaled, dir.join(name))?;
        }
    }
    Ok(())
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| VdpError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Parses arguments, exiting 0 for help and version and 1 for usage errors.
pub fn parse_or_exit<P: clap::Parser>() -> P {
    match P::try_parse() {
        Ok(p) => p,
        Err(e) => {
            let _ = e.print();
            std::process::exit(if e.use_stderr() { 1 } else { 0 });
        }
    }
}

pub fn init_logging() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
}

/// Reports an error with its causes and maps it to the process exit code.
pub fn fail(err: &VdpError) -> ExitCode {
    eprintln!("error: {err}");
    let mut source = std::error::Error::source(err);
    while let Some(cause) = source {
        eprintln!("  caused by: {cause}");
        source = cause.source();
    }
    ExitCode::from(err.exit_code() as u8)
}
