use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fmv_sense::cataloging::{plan_pyramid, TilePlan};
use fmv_sense::context::{select_config, ContextLabel};
use fmv_sense::error::{Error, Result};
use fmv_sense::eval::{evaluate, export_truth, parse_truth};
use fmv_sense::export::{export_cop, export_events, parse_events, write_atomic};
use fmv_sense::simulator::{add_noise, simulate, NoiseParams, Scenario};
use fmv_sense::stream::{stream_to_string, StreamReader};
use fmv_sense::{run_pipeline, EngineConfig};

#[derive(Parser)]
#[command(name = "fmv-sense", version, about = "Context-gated event detection for aerial video detection streams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the engine over a detection stream and write the event log and COP.
    Run {
        #[arg(long)]
        stream: PathBuf,
        /// Engine configuration (TOML); built-in defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        events_out: PathBuf,
        #[arg(long)]
        cop_out: PathBuf,
        /// Print the effective configuration to stderr before running.
        #[arg(long)]
        print_config: bool,
    },
    /// Render a scenario into a detection stream plus ground truth.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Defaults to the output path with a `.truth.jsonl` suffix.
        #[arg(long)]
        truth_out: Option<PathBuf>,
        /// Detector noise parameters (TOML).
        #[arg(long)]
        noise: Option<PathBuf>,
        /// Overrides the seed in the noise file.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Score an event log against ground truth; prints a JSON report.
    Evaluate {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long, default_value_t = 7)]
        tol: u64,
    },
    /// Print the tile pyramid for a frame size as JSON.
    Plan {
        #[arg(long)]
        width: u32,
        #[arg(long)]
        height: u32,
        #[arg(long)]
        config: Option<PathBuf>,
        /// One context label; every actionable label when omitted.
        #[arg(long, value_parser = parse_label)]
        label: Option<ContextLabel>,
    },
}

fn parse_label(s: &str) -> std::result::Result<ContextLabel, String> {
    ContextLabel::ALL
        .into_iter()
        .find(|l| l.as_str() == s)
        .ok_or_else(|| {
            let names: Vec<_> = ContextLabel::ALL.iter().map(|l| l.as_str()).collect();
            format!("expected one of {}", names.join(", "))
        })
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn load_config(path: Option<&Path>) -> Result<EngineConfig> {
    match path {
        Some(p) => EngineConfig::load(p),
        None => Ok(EngineConfig::default()),
    }
}

fn default_truth_path(out: &Path) -> PathBuf {
    let stem = match out.extension().and_then(|e| e.to_str()) {
        Some("jsonl") => out.with_extension(""),
        _ => out.to_path_buf(),
    };
    let mut name = stem.into_os_string();
    name.push(".truth.jsonl");
    PathBuf::from(name)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            stream,
            config,
            events_out,
            cop_out,
            print_config,
        } => {
            let cfg = load_config(config.as_deref())?;
            if print_config {
                eprint!("{}", cfg.to_toml());
            }
            let file = File::open(&stream).map_err(|e| Error::Io {
                path: stream.clone(),
                source: e,
            })?;
            let (events, stats) = run_pipeline(StreamReader::new(BufReader::new(file)), &cfg)?;
            write_atomic(&events_out, export_events(&events).as_bytes())?;
            write_atomic(&cop_out, export_cop(&events, cfg.output.pretty_cop).as_bytes())?;
            eprintln!(
                "{}",
                serde_json::to_string(&stats).expect("stats serialize")
            );
        }
        Command::Simulate {
            scenario,
            out,
            truth_out,
            noise,
            seed,
        } => {
            let sc = Scenario::from_toml(&read(&scenario)?)?;
            let (mut frames, truth) = simulate(&sc)?;
            if noise.is_some() || seed.is_some() {
                let mut params = match &noise {
                    Some(p) => toml::from_str::<NoiseParams>(&read(p)?)
                        .map_err(|e| Error::Config(e.to_string()))?,
                    None => NoiseParams::default(),
                };
                if let Some(s) = seed {
                    params.seed = s;
                }
                frames = add_noise(&frames, &params)?;
            }
            let truth_out = truth_out.unwrap_or_else(|| default_truth_path(&out));
            write_atomic(&out, stream_to_string(&frames).as_bytes())?;
            write_atomic(&truth_out, export_truth(&truth).as_bytes())?;
        }
        Command::Evaluate { pred, truth, tol } => {
            let events = parse_events(&read(&pred)?)?;
            let truth = parse_truth(&read(&truth)?)?;
            let report = evaluate(&events, &truth, tol);
            println!(
                "{}",
                serde_json::to_string_pretty(&report).expect("report serializes")
            );
        }
        Command::Plan {
            width,
            height,
            config,
            label,
        } => {
            if width == 0 || height == 0 {
                return Err(Error::Invalid {
                    field: "width/height".into(),
                    message: "frame dimensions must be positive".into(),
                });
            }
            let cfg = load_config(config.as_deref())?;
            let labels: Vec<ContextLabel> = match label {
                Some(l) => vec![l],
                None => ContextLabel::ALL
                    .into_iter()
                    .filter(|&l| l != ContextLabel::Uneventful)
                    .collect(),
            };
            let mut plans: BTreeMap<ContextLabel, TilePlan> = BTreeMap::new();
            for l in labels {
                let det = select_config(l, &cfg.detector.configs)?.resolved_for_frame(width, height);
                plans.insert(l, plan_pyramid(width, height, &det));
            }
            println!(
                "{}",
                serde_json::to_string_pretty(&plans).expect("plans serialize")
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
