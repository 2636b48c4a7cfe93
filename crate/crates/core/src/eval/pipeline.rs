//! Scan to pose pipeline: frame merging, segmentation, rectangle fitting and
//! the particle filter, driven by a sensor log.

use std::collections::VecDeque;

use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::filter::{
    dead_reckon, initialize, measurement_update, merge_frames, motion_update, resample_n, should_resample,
    FilterError, FilterParams, Particle, ScanFrame, UpdateStats,
};
use crate::geometry::{scan_to_points, LaserScan, OdometrySample, Pose};
use crate::landmark_map::{LandmarkMap, MapError};
use crate::lshape::{extract_corner_observations, ExtractionStats, LShapeParams};
use crate::segmentation::{segment, SegmentationParams};
use crate::simulator::{
    default_lot, simulate, stream_rng, streams, LogRecord, SensorLog, SimulationError, WorldError, WorldModel,
};

use super::config::{ConfigError, MapSource, RunConfig, WorldSource};
use super::metrics::{compute_errors, ErrorTrace, EvalError};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("world: {0}")]
    World(#[from] WorldError),
    #[error("map: {0}")]
    Map(#[from] MapError),
    #[error("simulation: {0}")]
    Simulation(#[from] SimulationError),
    #[error("scan at t = {t} s: {source}")]
    Filter {
        t: f64,
        #[source]
        source: FilterError,
    },
    #[error("sensor log has no INIT record")]
    MissingInit,
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// What happened on one scan.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepReport {
    pub t: f64,
    pub estimate: Pose,
    pub update: UpdateStats,
    pub extraction: ExtractionStats,
    pub resampled: bool,
}

/// Streaming localizer fed with odometry samples and scans in time order.
pub struct Localizer<'a> {
    map: &'a LandmarkMap,
    params: FilterParams,
    segmentation: SegmentationParams,
    lshape: LShapeParams,
    particles: Vec<Particle>,
    rng: ChaCha8Rng,
    last_odometry: Option<OdometrySample>,
    clock: f64,
    /// Noise-free dead reckoning from the initial fix; frames are merged in this frame.
    odometry_pose: Pose,
    estimate: Pose,
    frames: VecDeque<ScanFrame>,
}

impl<'a> Localizer<'a> {
    pub fn new(
        map: &'a LandmarkMap,
        initial_fix: Pose,
        t0: f64,
        params: FilterParams,
        segmentation: SegmentationParams,
        lshape: LShapeParams,
        seed: u64,
    ) -> Self {
        let mut rng = stream_rng(seed, streams::FILTER);
        let particles = initialize(&initial_fix, &params, &mut rng);
        Self {
            map,
            particles,
            rng,
            last_odometry: None,
            clock: t0,
            odometry_pose: Pose::default(),
            estimate: initial_fix,
            frames: VecDeque::with_capacity(params.merge_frames),
            params,
            segmentation,
            lshape,
        }
    }

    pub fn from_config(map: &'a LandmarkMap, initial_fix: Pose, t0: f64, cfg: &RunConfig) -> Self {
        Self::new(
            map,
            initial_fix,
            t0,
            cfg.filter_params(),
            cfg.segmentation_params(),
            cfg.lshape.clone(),
            cfg.seed,
        )
    }

    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    pub fn estimate(&self) -> Pose {
        self.estimate
    }

    /// Holds the last odometry sample over `[clock, t]`.
    fn advance_to(&mut self, t: f64) {
        let dt = t - self.clock;
        if dt <= 0.0 {
            return;
        }
        if let Some(s) = self.last_odometry {
            let eps = self.params.yaw_rate_epsilon;
            motion_update(&mut self.particles, &s, dt, &self.params, &mut self.rng);
            self.odometry_pose = dead_reckon(&self.odometry_pose, s.v, s.yaw_rate, dt, eps);
            self.estimate = dead_reckon(&self.estimate, s.v, s.yaw_rate, dt, eps);
        }
        self.clock = t;
    }

    pub fn on_odometry(&mut self, sample: &OdometrySample) {
        self.advance_to(sample.timestamp);
        self.last_odometry = Some(*sample);
    }

    /// Runs one measurement step. The reported estimate is the best particle
    /// of the weighted set, taken before resampling. Scans that match no
    /// landmark for any particle leave the belief untouched.
    pub fn on_scan(&mut self, scan: &LaserScan) -> Result<StepReport, FilterError> {
        self.advance_to(scan.timestamp);

        if self.frames.len() == self.params.merge_frames {
            self.frames.pop_front();
        }
        self.frames.push_back(ScanFrame {
            points: scan_to_points(scan),
            pose: self.odometry_pose,
        });
        let merged = merge_frames(self.frames.make_contiguous());
        let ranges: Vec<f64> = merged.iter().map(|p| p.norm()).collect();
        let seg = segment(&merged, &ranges, &self.segmentation);
        let (corners, extraction) = extract_corner_observations(&seg.clusters, &self.lshape);

        let update = measurement_update(&mut self.particles, &corners, self.map, &self.params)?;
        let mut resampled = false;
        if update.informative() {
            self.estimate = crate::filter::estimate(&self.particles)?;
            if should_resample(&self.particles, &self.params) {
                self.particles = resample_n(&self.particles, self.params.n_particles, &mut self.rng)?;
                resampled = true;
            }
        }
        Ok(StepReport {
            t: scan.timestamp,
            estimate: self.estimate,
            update,
            extraction,
            resampled,
        })
    }
}

/// Replays a sensor log through the localizer; returns one report per scan.
pub fn localize_log(log: &SensorLog, map: &LandmarkMap, cfg: &RunConfig) -> Result<Vec<StepReport>, RunError> {
    let (t0, fix) = log.initial_fix().ok_or(RunError::MissingInit)?;
    let mut loc = Localizer::from_config(map, fix, t0, cfg);
    let mut reports = Vec::new();
    for record in &log.records {
        match record {
            LogRecord::Odo(s) => loc.on_odometry(s),
            LogRecord::Scan(scan) => reports.push(
                loc.on_scan(scan)
                    .map_err(|source| RunError::Filter { t: scan.timestamp, source })?,
            ),
            LogRecord::Init { .. } | LogRecord::Truth { .. } => {}
        }
    }
    Ok(reports)
}

/// Error trace of localizer reports against the truth records of `log`.
pub fn trace_from_reports(log: &SensorLog, reports: &[StepReport]) -> Result<ErrorTrace, EvalError> {
    let truths: Vec<(f64, Pose)> = log.truths().collect();
    let estimates: Vec<(f64, Pose)> = reports.iter().map(|r| (r.t, r.estimate)).collect();
    compute_errors(&estimates, &truths)
}

pub fn load_world(cfg: &RunConfig) -> Result<WorldModel, RunError> {
    Ok(match &cfg.world {
        WorldSource::Default => default_lot(),
        WorldSource::File(p) => WorldModel::load(p)?,
    })
}

pub fn load_map(cfg: &RunConfig, world: &WorldModel) -> Result<LandmarkMap, RunError> {
    Ok(match &cfg.map {
        MapSource::FromWorld => LandmarkMap::from_world(world),
        MapSource::File(p) => LandmarkMap::load(p)?,
    })
}

/// Products of one simulated drive.
pub struct Experiment {
    pub log: SensorLog,
    pub map: LandmarkMap,
    pub reports: Vec<StepReport>,
    pub trace: ErrorTrace,
}

/// Simulates a drive from `cfg`, localizes on it and scores the estimates.
pub fn run_experiment(cfg: &RunConfig) -> Result<Experiment, RunError> {
    let world = load_world(cfg)?;
    let map = load_map(cfg, &world)?;
    let log = simulate(&world, &cfg.simulation_spec()?)?;
    let reports = localize_log(&log, &map, cfg)?;
    let trace = trace_from_reports(&log, &reports)?;
    Ok(Experiment {
        log,
        map,
        reports,
        trace,
    })
}
