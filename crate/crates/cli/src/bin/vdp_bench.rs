use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use serde::{Deserialize, Serialize};
use vdp::{plcc, srocc, BenchmarkRow, Result, RunConfig, Task, VdpError};
use vdp_cli::{evaluate_inputs, fail, init_logging, parse_or_exit, write_file, PipelineArgs, TaskArg};

/// Scores every test/reference pair of a manifest and correlates the
/// predictions with the opinion scores.
#[derive(Debug, Parser)]
#[command(name = "vdp-bench", version)]
struct Cli {
    /// CSV with columns content_id,test_dir,ref_dir,mos. Relative paths are
    /// resolved against the manifest's directory.
    #[arg(long)]
    manifest: PathBuf,

    /// Output stem: writes <stem>.csv (per item) and <stem>.json (summary).
    #[arg(long)]
    out: PathBuf,

    #[arg(long, value_enum, default_value = "quality")]
    task: TaskArg,

    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Debug, Deserialize)]
struct ManifestRow {
    content_id: String,
    test_dir: PathBuf,
    ref_dir: PathBuf,
    mos: f64,
}

#[derive(Debug, Serialize)]
struct Summary<'a> {
    task: Task,
    items: usize,
    srocc: f64,
    plcc: f64,
    rows: &'a [BenchmarkRow],
    config: &'a RunConfig,
}

fn csv_error(path: &Path, e: csv::Error) -> VdpError {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => VdpError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => VdpError::InvalidParameter(format!("{}: malformed manifest: {other:?}", path.display())),
    }
}

fn read_manifest(path: &Path) -> Result<Vec<ManifestRow>> {
    let base = path.parent().unwrap_or(Path::new("."));
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    reader
        .deserialize()
        .map(|row| {
            let mut row: ManifestRow = row.map_err(|e| csv_error(path, e))?;
            row.test_dir = base.join(&row.test_dir);
            row.ref_dir = base.join(&row.ref_dir);
            Ok(row)
        })
        .collect()
}

fn run(cli: &Cli) -> Result<()> {
    let task = Task::from(cli.task);
    if !task.is_scored() {
        return Err(VdpError::InvalidParameter(format!(
            "benchmarking needs a scored task (quality or detection), got `{task}`"
        )));
    }
    let config = cli.pipeline.run_config(task)?;
    let calib = cli.pipeline.calibration(task)?;
    let encoding = cli.pipeline.png_encoding();

    let mut rows = Vec::new();
    for item in read_manifest(&cli.manifest)? {
        let result = evaluate_inputs(&item.test_dir, &item.ref_dir, &config, &calib, encoding)?;
        let predicted = result.score().expect("scored task");
        log::info!("{}: {predicted}", item.content_id);
        rows.push(BenchmarkRow {
            content_id: item.content_id,
            predicted,
            mos: item.mos,
        });
    }
    let (s, p) = (srocc(&rows)?, plcc(&rows)?);

    let csv_path = cli.out.with_extension("csv");
    let mut writer = csv::Writer::from_path(&csv_path).map_err(|e| csv_error(&csv_path, e))?;
    for row in &rows {
        writer.serialize(row).map_err(|e| csv_error(&csv_path, e))?;
    }
    writer.flush().map_err(|e| VdpError::Io {
        path: csv_path.clone(),
        source: e,
    })?;

    let summary = Summary {
        task,
        items: rows.len(),
        srocc: s,
        plcc: p,
        rows: &rows,
        config: &config,
    };
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    write_file(&cli.out.with_extension("json"), &(json + "\n"))?;
    println!("items {}  SROCC {s:.4}  PLCC {p:.4}", rows.len());
    Ok(())
}

fn main() -> ExitCode {
    init_logging();
    let cli: Cli = parse_or_exit();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}
