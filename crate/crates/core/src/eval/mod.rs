//! Run configuration, the replay pipeline and error metrics.

pub mod config;
pub mod metrics;
pub mod pipeline;

pub use config::{ConfigError, MapSource, RouteSource, RunConfig, WorldSource};
pub use metrics::{compute_errors, pose_error, ErrorRecord, ErrorTrace, EvalError, Summary};
pub use pipeline::{
    load_map, load_world, localize_log, run_experiment, trace_from_reports, Experiment, Localizer, RunError,
    StepReport,
};
