//! Line-oriented sensor log and the simulation run that produces it.
//!
//! Records: `INIT,t,e,n,psi` once, then per odometry tick `TRUTH,t,e,n,psi`,
//! `ODO,t,v,yaw_rate` and, on LiDAR ticks, `SCAN,t,start_bearing,step,r1,...`.
//! Floats are written in shortest round-trip form, so parsing a written log
//! reproduces every value bit for bit. Missing returns are written as `inf`.

use std::fmt::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::{LaserScan, OdometrySample, Pose};

use super::lidar::{raycast_scan, LidarSpec};
use super::sensors::{noisy_initial_fix, sample_odometry, InitNoise};
use super::trajectory::{Trajectory, TrajectoryError, TrajectorySpec};
use super::world::WorldModel;

/// RNG stream ids; each consumer draws from its own stream of the run seed.
pub mod streams {
    pub const INIT_FIX: u64 = 1;
    pub const ODOMETRY: u64 = 2;
    pub const LIDAR: u64 = 3;
    pub const FILTER: u64 = 4;
}

/// Independent generator for one consumer of a run seed.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Clone, Debug, PartialEq)]
pub enum LogRecord {
    Init { t: f64, pose: Pose },
    Truth { t: f64, pose: Pose },
    Odo(OdometrySample),
    Scan(LaserScan),
}

impl LogRecord {
    pub fn timestamp(&self) -> f64 {
        match self {
            LogRecord::Init { t, .. } | LogRecord::Truth { t, .. } => *t,
            LogRecord::Odo(o) => o.timestamp,
            LogRecord::Scan(s) => s.timestamp,
        }
    }
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error("log line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error("invalid simulation setting: {0}")]
    Setting(String),
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SensorLog {
    pub records: Vec<LogRecord>,
}

fn write_pose(out: &mut String, tag: &str, t: f64, p: &Pose) {
    let _ = writeln!(out, "{tag},{t},{},{},{}", p.e, p.n, p.psi);
}

impl SensorLog {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            match r {
                LogRecord::Init { t, pose } => write_pose(&mut out, "INIT", *t, pose),
                LogRecord::Truth { t, pose } => write_pose(&mut out, "TRUTH", *t, pose),
                LogRecord::Odo(o) => {
                    let _ = writeln!(out, "ODO,{},{},{}", o.timestamp, o.v, o.yaw_rate);
                }
                LogRecord::Scan(s) => {
                    let _ = write!(out, "SCAN,{},{},{}", s.timestamp, s.start_bearing, s.angular_step);
                    for r in &s.ranges {
                        let _ = write!(out, ",{r}");
                    }
                    out.push('\n');
                }
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, LogError> {
        let mut records = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            records.push(parse_record(line).map_err(|message| LogError::Parse { line: i + 1, message })?);
        }
        Ok(Self { records })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), LogError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LogError> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    pub fn truths(&self) -> impl Iterator<Item = (f64, Pose)> + '_ {
        self.records.iter().filter_map(|r| match r {
            LogRecord::Truth { t, pose } => Some((*t, *pose)),
            _ => None,
        })
    }

    pub fn initial_fix(&self) -> Option<(f64, Pose)> {
        self.records.iter().find_map(|r| match r {
            LogRecord::Init { t, pose } => Some((*t, *pose)),
            _ => None,
        })
    }
}

fn parse_record(line: &str) -> Result<LogRecord, String> {
    let mut fields = line.split(',');
    let tag = fields.next().unwrap_or_default().trim();
    let values: Vec<f64> = fields
        .map(|f| {
            let f = f.trim();
            f.parse::<f64>().map_err(|e| format!("bad number `{f}`: {e}"))
        })
        .collect::<Result<_, _>>()?;
    let need = |n: usize| -> Result<(), String> {
        if values.len() == n {
            Ok(())
        } else {
            Err(format!("{tag} expects {n} values, got {}", values.len()))
        }
    };
    match tag {
        "INIT" | "TRUTH" => {
            need(4)?;
            // stored psi is already normalized; keep its exact bits
            let pose = Pose {
                e: values[1],
                n: values[2],
                psi: values[3],
            };
            Ok(if tag == "INIT" {
                LogRecord::Init { t: values[0], pose }
            } else {
                LogRecord::Truth { t: values[0], pose }
            })
        }
        "ODO" => {
            need(3)?;
            Ok(LogRecord::Odo(OdometrySample {
                timestamp: values[0],
                v: values[1],
                yaw_rate: values[2],
            }))
        }
        "SCAN" => {
            if values.len() < 3 {
                return Err("SCAN needs t, start_bearing and step".into());
            }
            Ok(LogRecord::Scan(LaserScan {
                timestamp: values[0],
                start_bearing: values[1],
                angular_step: values[2],
                ranges: values[3..].to_vec(),
            }))
        }
        other => Err(format!("unknown record tag `{other}`")),
    }
}

/// Everything needed to synthesize a sensor log.
#[derive(Clone, Debug, PartialEq)]
pub struct SimulationSpec {
    pub trajectory: TrajectorySpec,
    pub lidar: LidarSpec,
    pub init_noise: InitNoise,
    pub seed: u64,
}

impl Default for SimulationSpec {
    fn default() -> Self {
        Self {
            trajectory: TrajectorySpec::default(),
            lidar: LidarSpec::default(),
            init_noise: InitNoise::default(),
            seed: 0,
        }
    }
}

/// Drives the route at the odometry rate and records truth, odometry and scans.
pub fn simulate(world: &WorldModel, spec: &SimulationSpec) -> Result<SensorLog, SimulationError> {
    spec.lidar
        .validate()
        .map_err(|e| SimulationError::Setting(e.to_string()))?;
    let odom_rate = spec.trajectory.odom_rate;
    if !(odom_rate > 0.0) {
        return Err(SimulationError::Setting("odometry rate must be positive".into()));
    }
    let scan_every = (odom_rate / spec.lidar.rate).round();
    if scan_every < 1.0 {
        return Err(SimulationError::Setting(
            "LiDAR rate must not exceed the odometry rate".into(),
        ));
    }
    let scan_every = scan_every as u64;

    let route = Trajectory::new(&spec.trajectory)?;
    let ticks = (route.duration() * odom_rate + 1e-9).floor() as u64;

    let mut init_rng = stream_rng(spec.seed, streams::INIT_FIX);
    let mut odo_rng = stream_rng(spec.seed, streams::ODOMETRY);
    let mut lidar_rng = stream_rng(spec.seed, streams::LIDAR);

    let mut records = Vec::with_capacity(ticks as usize * 2 + ticks as usize / scan_every as usize + 2);
    let (start, _) = route.state_at(0.0)?;
    records.push(LogRecord::Init {
        t: 0.0,
        pose: noisy_initial_fix(&start, &spec.init_noise, &mut init_rng),
    });

    for k in 0..=ticks {
        let t = k as f64 / odom_rate;
        let (pose, twist) = route.state_at(t)?;
        records.push(LogRecord::Truth { t, pose });
        records.push(LogRecord::Odo(sample_odometry(
            &twist,
            &spec.trajectory.odom_noise,
            t,
            &mut odo_rng,
        )));
        if k % scan_every == 0 {
            records.push(LogRecord::Scan(raycast_scan(world, &pose, &spec.lidar, t, &mut lidar_rng)));
        }
    }
    Ok(SensorLog { records })
}
