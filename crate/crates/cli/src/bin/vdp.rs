use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use vdp::{Evaluator, Result, Task};
use vdp_cli::{dump_bands, dump_maps, evaluate_inputs, fail, init_logging, load_frame, parse_or_exit, write_file};
use vdp_cli::{Input, PipelineArgs, TaskArg};

/// Predicts visible differences, quality loss or contrast distortions
/// between a test and a reference image or video.
#[derive(Debug, Parser)]
#[command(name = "vdp", version)]
struct Cli {
    #[arg(long, value_enum)]
    task: TaskArg,

    /// Test image, or directory of frame_%06d.png frames.
    #[arg(long)]
    test: PathBuf,

    /// Reference image, or directory of frame_%06d.png frames.
    #[arg(long = "ref")]
    reference: PathBuf,

    #[command(flatten)]
    pipeline: PipelineArgs,

    /// Result JSON file (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,

    /// Directory for heat-map PNGs of the result maps.
    #[arg(long)]
    dump_maps: Option<PathBuf>,

    /// Directory for PNGs of every threshold-unit band (single images only).
    #[arg(long)]
    dump_bands: Option<PathBuf>,
}

fn run(cli: &Cli) -> Result<()> {
    let task = Task::from(cli.task);
    let config = cli.pipeline.run_config(task)?;
    let calib = cli.pipeline.calibration(task)?;
    let encoding = cli.pipeline.png_encoding();

    let result = evaluate_inputs(&cli.test, &cli.reference, &config, &calib, encoding)?;

    if let Some(dir) = &cli.dump_bands {
        match (Input::resolve(&cli.test)?, Input::resolve(&cli.reference)?) {
            (Input::Image(t), Input::Image(r)) => {
                let evaluator = Evaluator::new(&config, &calib)?;
                dump_bands(&load_frame(&t, encoding)?, &load_frame(&r, encoding)?, &evaluator, dir)?;
            }
            _ => log::warn!("--dump-bands is ignored for video input"),
        }
    }
    let map_paths = match &cli.dump_maps {
        Some(dir) => dump_maps(&result, dir)?,
        None => Default::default(),
    };
    let json = result.document(&config, &calib, map_paths).to_json();
    match &cli.out {
        Some(path) => write_file(path, &(json + "\n")),
        None => {
            println!("{json}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    init_logging();
    let cli: Cli = parse_or_exit();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}
