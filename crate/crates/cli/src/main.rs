//! `roadside-doppler`: synthesize, analyze and evaluate roadside CW Doppler recordings.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use roadside_doppler::dsp;
use roadside_doppler::model::SensorGeometry;
use roadside_doppler::pipeline::{self, AnalysisConfig, PipelineError};
use roadside_doppler::wavio;

#[derive(Parser)]
#[command(name = "roadside-doppler", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a scenario file to WAV and print its ground truth.
    Synth {
        scenario: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Also write the ground truth table here.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Detect vehicles and estimate their speeds in a WAV recording.
    Analyze(AnalyzeArgs),
    /// Score detections against a ground-truth log.
    Eval {
        #[arg(long)]
        detections: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long, default_value_t = pipeline::DEFAULT_MATCH_WINDOW_S)]
        window: f64,
        /// Write the report as JSON here.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Print the default analysis configuration.
    Config,
}

#[derive(Args)]
struct AnalyzeArgs {
    input: PathBuf,
    /// TOML analysis configuration; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    azimuth_deg: Option<f64>,
    #[arg(long)]
    elevation_deg: Option<f64>,
    #[arg(long)]
    doppler_constant: Option<f64>,
    #[arg(long)]
    window_size: Option<usize>,
    #[arg(long)]
    overlap: Option<usize>,
    #[arg(long)]
    threshold_db: Option<f64>,
    #[arg(long)]
    min_frequency_hz: Option<f64>,
    #[arg(long)]
    min_duration_s: Option<f64>,
    #[arg(long)]
    max_gap_s: Option<f64>,
    #[arg(long)]
    persistence_frames: Option<usize>,
    /// Detections CSV destination (default: stdout).
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Structured detections document with the effective configuration.
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long)]
    spectrogram_csv: Option<PathBuf>,
    #[arg(long)]
    spectrogram_pgm: Option<PathBuf>,
    #[arg(long)]
    masked_csv: Option<PathBuf>,
    #[arg(long)]
    masked_pgm: Option<PathBuf>,
}

impl AnalyzeArgs {
    fn effective_config(&self) -> Result<AnalysisConfig, PipelineError> {
        let mut cfg = match &self.config {
            Some(path) => AnalysisConfig::from_file(path)?,
            None => AnalysisConfig::default(),
        };
        let g = cfg.geometry;
        cfg.geometry = SensorGeometry::new(
            self.azimuth_deg.unwrap_or(g.azimuth_deg()),
            self.elevation_deg.unwrap_or(g.elevation_deg()),
            self.doppler_constant.unwrap_or(g.doppler_constant()),
            g.sample_rate(),
        )
        .map_err(|e| PipelineError::Config(e.to_string()))?;
        if let Some(v) = self.window_size {
            cfg.stft.window_size = v;
        }
        if let Some(v) = self.overlap {
            cfg.stft.overlap = v;
        }
        let d = &mut cfg.detection;
        if let Some(v) = self.threshold_db {
            d.power_threshold_db = v;
        }
        if let Some(v) = self.min_frequency_hz {
            d.min_frequency_hz = v;
        }
        if let Some(v) = self.min_duration_s {
            d.min_event_duration_s = v;
        }
        if let Some(v) = self.max_gap_s {
            d.max_gap_s = v;
        }
        if let Some(v) = self.persistence_frames {
            d.min_peak_persistence_frames = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn read_input(path: &Path) -> Result<String, PipelineError> {
    fs::read_to_string(path).map_err(|e| PipelineError::Input(format!("{}: {e}", path.display())))
}

fn write_output(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    fs::write(path, bytes).map_err(|e| PipelineError::Output(format!("{}: {e}", path.display())))
}

fn export(
    path: &Path,
    spec: &roadside_doppler::Spectrogram,
    pgm: bool,
) -> Result<(), PipelineError> {
    let file = fs::File::create(path)
        .map_err(|e| PipelineError::Output(format!("{}: {e}", path.display())))?;
    let mut out = BufWriter::new(file);
    let result = if pgm {
        dsp::write_pgm(spec, &mut out)
    } else {
        dsp::write_csv(spec, &mut out)
    };
    result
        .and_then(|_| out.flush())
        .map_err(|e| PipelineError::Output(format!("{}: {e}", path.display())))
}

fn run_synth(scenario: &Path, output: &Path, truth: Option<&Path>) -> Result<(), PipelineError> {
    let text = read_input(scenario)?;
    let out = pipeline::synth_from_toml(&text)
        .map_err(|e| PipelineError::Input(format!("{}: {e}", scenario.display())))?;
    write_output(output, &out.wav)?;
    if let Some(path) = truth {
        write_output(path, out.truth_csv.as_bytes())?;
    }
    print!("{}", out.truth_csv);
    Ok(())
}

fn run_analyze(args: &AnalyzeArgs) -> Result<(), PipelineError> {
    let cfg = args.effective_config()?;
    let rec = wavio::read_wav_file(&args.input).map_err(|e| PipelineError::Input(e.to_string()))?;
    let analysis = pipeline::analyze(&rec, &cfg)?;
    let csv = pipeline::detections_csv(&analysis.records());
    match &args.output {
        Some(path) => write_output(path, csv.as_bytes())?,
        None => print!("{csv}"),
    }
    if let Some(path) = &args.json {
        let doc = pipeline::detections_json(&analysis, &args.input.display().to_string());
        write_output(path, doc.as_bytes())?;
    }
    let exports = [
        (&args.spectrogram_csv, &analysis.spectrogram, false),
        (&args.spectrogram_pgm, &analysis.spectrogram, true),
        (&args.masked_csv, &analysis.masked.spectrogram, false),
        (&args.masked_pgm, &analysis.masked.spectrogram, true),
    ];
    for (path, spec, pgm) in exports {
        if let Some(path) = path {
            export(path, spec, pgm)?;
        }
    }
    Ok(())
}

fn run_eval(
    detections: &Path,
    truth: &Path,
    window: f64,
    json: Option<&Path>,
) -> Result<(), PipelineError> {
    if !(window.is_finite() && window > 0.0) {
        return Err(PipelineError::Config(format!(
            "--window must be positive, got {window}"
        )));
    }
    let dets = pipeline::parse_detections_csv(&read_input(detections)?)?;
    let log = pipeline::parse_ground_truth(&read_input(truth)?)?;
    let report = pipeline::evaluate(&dets, &log, window);
    print!("{report}");
    if let Some(path) = json {
        write_output(path, report.to_json().as_bytes())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Synth {
            scenario,
            output,
            truth,
        } => run_synth(scenario, output, truth.as_deref()),
        Command::Analyze(args) => run_analyze(args),
        Command::Eval {
            detections,
            truth,
            window,
            json,
        } => run_eval(detections, truth, *window, json.as_deref()),
        Command::Config => {
            let _ = io::stdout().write_all(AnalysisConfig::default().to_toml_string().as_bytes());
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
