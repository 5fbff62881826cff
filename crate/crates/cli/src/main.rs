use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use rgbd_annotate::bbox::{InterpolationMode, InterpolationOptions};
use rgbd_annotate::metrics::{compare_interpolation, comparison_text, evaluate_dataset, AnnotationSet};
use rgbd_annotate::project::{
    export_annotations, export_boxes, undistort_frames, AnnotationProject, ExportFormat, WriterLock,
};

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] rgbd_annotate::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::Io(_) => "Io",
            CliError::Json { .. } => "InvalidDocument",
            CliError::Usage(_) => "Usage",
        }
    }

    /// 2 for I/O failures, 1 for everything the caller can fix in the input.
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_io() => 2,
            CliError::Io(_) => 2,
            _ => 1,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Parser)]
#[command(name = "rgbd-annotate", version, about = "RGB-D box and mask annotation tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write undistorted frames and pinhole calibration next to the project.
    Undistort {
        #[arg(long)]
        project: PathBuf,
        /// Switch the project over to the undistorted frames and calibration.
        #[arg(long)]
        write_calib: bool,
    },
    /// Interpolate every track and write the per-frame box table.
    Interpolate {
        #[arg(long)]
        project: PathBuf,
        #[arg(long)]
        epsilon: Option<f64>,
        /// Center interpolation: linear, cubic or hybrid.
        #[arg(long, default_value = "hybrid")]
        mode: String,
    },
    /// Score user annotations against ground truth.
    Evaluate {
        /// Project directory or annotation-set JSON.
        #[arg(long)]
        user: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        /// Text report path; the JSON report is written alongside with a `.json` extension.
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare linear, cubic and hybrid interpolation against dense truth boxes.
    CompareInterp {
        #[arg(long)]
        project: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Export annotations: flat_per_frame (CSV) or masks_png.
    Export {
        #[arg(long)]
        project: PathBuf,
        #[arg(long, default_value = "flat_per_frame")]
        format: String,
    },
    /// Serve the HTTP API for one project.
    Serve {
        #[arg(long)]
        project: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        listen: String,
    },
}

fn load_set(path: &Path) -> CliResult<AnnotationSet> {
    if path.is_dir() {
        return Ok(AnnotationProject::load(path)?.annotation_set()?);
    }
    let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => rgbd_annotate::Error::MissingFile(path.to_owned()).into(),
        _ => CliError::Io(e),
    })?;
    serde_json::from_str(&text).map_err(|source| CliError::Json { path: path.to_owned(), source })
}

fn json_path(out: &Path) -> PathBuf {
    if out.extension().is_some_and(|e| e == "json") {
        out.with_extension("report.json")
    } else {
        out.with_extension("json")
    }
}

fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Undistort { project, write_calib } => {
            let lock = WriterLock::acquire(&project)?;
            let mut p = AnnotationProject::load(&project)?;
            let u = undistort_frames(&p)?;
            println!("wrote {} undistorted frames", u.frames.len());
            if write_calib {
                p.adopt_undistorted(u);
                p.save_locked(&lock)?;
                println!("project now uses the undistorted frames");
            }
        }
        Command::Interpolate { project, epsilon, mode } => {
            let _lock = WriterLock::acquire(&project)?;
            let p = AnnotationProject::load(&project)?;
            let mode: InterpolationMode = mode.parse()?;
            let options = InterpolationOptions::with_center_mode(epsilon.unwrap_or(p.config.epsilon), mode);
            println!("{}", export_boxes(&p, &options)?.display());
        }
        Command::Evaluate { user, truth, out } => {
            let report = evaluate_dataset(&load_set(&user)?, &load_set(&truth)?)?;
            let text = report.to_text();
            std::fs::write(&out, &text)?;
            let body = serde_json::to_string_pretty(&report).expect("reports serialize");
            std::fs::write(json_path(&out), body + "\n")?;
            print!("{text}");
        }
        Command::CompareInterp { project, truth, epsilon } => {
            let p = AnnotationProject::load(&project)?;
            let truth = load_set(&truth)?;
            let epsilon = epsilon.unwrap_or(p.config.epsilon);
            let modes = [InterpolationMode::Linear, InterpolationMode::Cubic, InterpolationMode::Hybrid];
            let mut compared = 0;
            for track in p.tracks.values().filter(|t| t.len() >= 2) {
                let rows = compare_interpolation(track, &truth.boxes, &modes, epsilon)?;
                println!("track {} ({})", track.track_id.0, track.class_label);
                print!("{}", comparison_text(&rows));
                compared += 1;
            }
            if compared == 0 {
                return Err(rgbd_annotate::Error::TooFewKeyframes(0).into());
            }
        }
        Command::Export { project, format } => {
            let _lock = WriterLock::acquire(&project)?;
            let p = AnnotationProject::load(&project)?;
            for path in export_annotations(&p, format.parse::<ExportFormat>()?)? {
                println!("{}", path.display());
            }
        }
        Command::Serve { project, listen } => {
            let addr: SocketAddr = listen.parse().map_err(|_| CliError::Usage(format!("bad listen address {listen:?}")))?;
            let rt = tokio::runtime::Runtime::new()?;
            eprintln!("serving {} on http://{addr}", project.display());
            rt.block_on(rgbd_annotate_service::serve(&project, addr))?;
        }
    }
    Ok(())
}

fn fail(err: CliError) -> ExitCode {
    eprintln!("{}", json!({ "error": err.kind(), "message": err.to_string() }));
    ExitCode::from(err.exit_code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.to_string();
            let first = message.lines().next().unwrap_or_default().trim_start_matches("error: ");
            return fail(CliError::Usage(first.to_owned()));
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e),
    }
}
