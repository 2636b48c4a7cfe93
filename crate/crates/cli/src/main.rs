use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use parkloc::eval::{
    load_map, load_world, localize_log, trace_from_reports, ConfigError, ErrorTrace, RunConfig,
};
use parkloc::landmark_map::LandmarkMap;
use parkloc::lshape::{fit_clusters, ExtractionStats};
use parkloc::segmentation::segment;
use parkloc::simulator::{simulate, SensorLog};

#[derive(Parser)]
#[command(name = "parkloc", version, about = "Parking-robot localization against square landmarks")]
struct Cli {
    /// Overrides the `seed` key of the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Suppress progress and warnings on stderr.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Drive the simulated lot and write a sensor log (and optionally the corner map).
    Simulate {
        /// `key = value` config file; defaults apply to missing keys.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Sensor log to write.
        #[arg(long)]
        out_log: PathBuf,
        /// Corner map to write.
        #[arg(long)]
        out_map: Option<PathBuf>,
    },
    /// Replay a sensor log through the localizer and write the error trace.
    Localize {
        /// Sensor log written by `simulate`.
        #[arg(long)]
        log: PathBuf,
        /// Corner map file.
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Per-scan error trace (CSV) to write.
        #[arg(long)]
        out_trace: PathBuf,
    },
    /// Print per-step error columns and the summary table of a trace.
    Eval {
        /// Trace written by `localize`.
        #[arg(long)]
        trace: PathBuf,
        /// Only print the summary table.
        #[arg(long)]
        summary: bool,
        /// Average only over records after convergence.
        #[arg(long)]
        post_convergence: bool,
    },
    /// Segment and rectangle-fit a point file (`x,y` per line) and print the rectangles.
    Fit {
        /// Points in the sensor frame, `#` starts a comment.
        #[arg(long)]
        points: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

/// Failure class, mapped to the process exit code.
enum Failure {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<RunConfig, Failure> {
    let mut cfg = match path {
        Some(p) => RunConfig::load(p).map_err(|e: ConfigError| {
            Failure::Config(anyhow::Error::new(e).context(format!("reading config {}", p.display())))
        })?,
        None => RunConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn warn_if_ambiguous(map: &LandmarkMap, cfg: &RunConfig, quiet: bool) {
    if !quiet && !map.is_distinct(cfg.filter.gate_distance) {
        eprintln!(
            "warning: two map corners are {:.3} m apart, within the {:.3} m association gate",
            map.min_separation(),
            cfg.filter.gate_distance
        );
    }
}

fn parse_points(text: &str) -> Result<Vec<parkloc::Point2>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (x, y) = line
            .split_once(',')
            .with_context(|| format!("line {}: expected `x,y`", i + 1))?;
        let x: f64 = x.trim().parse().with_context(|| format!("line {}: bad x", i + 1))?;
        let y: f64 = y.trim().parse().with_context(|| format!("line {}: bad y", i + 1))?;
        out.push(parkloc::Point2::new(x, y));
    }
    Ok(out)
}

/// Prints to stdout; a closed pipe (e.g. `| head`) is not an error.
fn write_stdout(text: &str) -> Result<()> {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => other.context("writing to stdout"),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let quiet = cli.quiet;
    match cli.command {
        Command::Simulate {
            config,
            out_log,
            out_map,
        } => {
            let cfg = load_config(config.as_deref(), cli.seed)?;
            let world = load_world(&cfg).map_err(|e| Failure::Config(e.into()))?;
            let spec = cfg.simulation_spec().map_err(|e| Failure::Config(e.into()))?;
            let log = simulate(&world, &spec).context("simulation failed")?;
            log.save(&out_log)
                .with_context(|| format!("writing {}", out_log.display()))?;
            if let Some(path) = out_map {
                let map = load_map(&cfg, &world).map_err(|e| Failure::Config(e.into()))?;
                warn_if_ambiguous(&map, &cfg, quiet);
                map.save(&path).with_context(|| format!("writing {}", path.display()))?;
            }
            if !quiet {
                eprintln!("wrote {} records to {}", log.records.len(), out_log.display());
            }
        }
        Command::Localize {
            log,
            map,
            config,
            out_trace,
        } => {
            let cfg = load_config(config.as_deref(), cli.seed)?;
            let sensor_log = SensorLog::load(&log).with_context(|| format!("reading {}", log.display()))?;
            let lot_map = LandmarkMap::load(&map).with_context(|| format!("reading {}", map.display()))?;
            warn_if_ambiguous(&lot_map, &cfg, quiet);
            let reports = localize_log(&sensor_log, &lot_map, &cfg).context("localization failed")?;
            let trace = trace_from_reports(&sensor_log, &reports).context("scoring against truth failed")?;
            trace
                .save(&out_trace)
                .with_context(|| format!("writing {}", out_trace.display()))?;
            if !quiet {
                eprintln!("wrote {} estimates to {}", trace.records.len(), out_trace.display());
            }
        }
        Command::Eval {
            trace,
            summary,
            post_convergence,
        } => {
            let t = ErrorTrace::load(&trace).with_context(|| format!("reading {}", trace.display()))?;
            let mut text = String::new();
            if !summary {
                text.push_str(&t.columns());
                text.push('\n');
            }
            text.push_str(&t.summary(post_convergence).table());
            write_stdout(&text)?;
        }
        Command::Fit { points, config } => {
            let cfg = load_config(config.as_deref(), cli.seed)?;
            let text = std::fs::read_to_string(&points).with_context(|| format!("reading {}", points.display()))?;
            let pts = parse_points(&text).map_err(|e| Failure::Config(e.context(format!("parsing {}", points.display()))))?;
            let ranges: Vec<f64> = pts.iter().map(|p| p.norm()).collect();
            let seg = segment(&pts, &ranges, &cfg.segmentation_params());
            let mut stats = ExtractionStats::default();
            let rects = fit_clusters(&seg.clusters, &cfg.lshape, &mut stats);
            println!(
                "{} points, {} clusters, {} outliers, {} rectangles",
                pts.len(),
                seg.clusters.len(),
                seg.outliers.len(),
                rects.len()
            );
            for (i, r) in rects.iter().enumerate() {
                let (w, h) = r.extents();
                let corners: Vec<String> = r.corners.iter().map(|c| format!("({:.3}, {:.3})", c.x, c.y)).collect();
                println!(
                    "rectangle {i}: theta {:.2} deg, {w:.3} x {h:.3} m, corners {}",
                    r.theta_star.to_degrees(),
                    corners.join(" ")
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
