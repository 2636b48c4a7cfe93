//! Pose error traces against ground truth and their summaries.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::geometry::{normalize_angle, Pose};

/// Largest allowed gap between an estimate and its matched truth sample.
pub const ALIGNMENT_TOLERANCE: f64 = 0.010;
/// Position error below which the filter counts as converged.
pub const CONVERGENCE_THRESHOLD: f64 = 0.2;

const TRACE_HEADER: &str = "t,e_lon,e_lat,e_psi_deg";

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no ground truth within 10 ms of the estimate at t = {t} s")]
    AlignmentGap { t: f64 },
    #[error("trace line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorRecord {
    pub t: f64,
    /// Along the true heading (m).
    pub e_lon: f64,
    /// Across the true heading, positive to the left (m).
    pub e_lat: f64,
    pub e_psi_deg: f64,
}

impl ErrorRecord {
    pub fn position_error(&self) -> f64 {
        self.e_lon.hypot(self.e_lat)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ErrorTrace {
    pub records: Vec<ErrorRecord>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub count: usize,
    pub mean_abs_lon: f64,
    pub mean_abs_lat: f64,
    pub mean_abs_psi_deg: f64,
    pub max_abs_lon: f64,
    pub max_abs_lat: f64,
    pub max_abs_psi_deg: f64,
    pub mean_position: f64,
    pub max_position: f64,
    /// First instant after which the position error stays below 0.2 m.
    pub convergence_time: Option<f64>,
}

/// Error of `estimate` in the frame of `truth`'s heading.
pub fn pose_error(t: f64, estimate: &Pose, truth: &Pose) -> ErrorRecord {
    let (dx, dy) = (estimate.e - truth.e, estimate.n - truth.n);
    let (s, c) = truth.psi.sin_cos();
    ErrorRecord {
        t,
        e_lon: c * dx + s * dy,
        e_lat: -s * dx + c * dy,
        e_psi_deg: normalize_angle(estimate.psi - truth.psi).to_degrees(),
    }
}

/// Aligns each estimate with the nearest truth sample (within 10 ms) and
/// records the error. `truths` must be sorted by time.
pub fn compute_errors(estimates: &[(f64, Pose)], truths: &[(f64, Pose)]) -> Result<ErrorTrace, EvalError> {
    let mut records = Vec::with_capacity(estimates.len());
    for &(t, est) in estimates {
        let i = truths.partition_point(|(tt, _)| *tt < t);
        let best = [i.checked_sub(1), Some(i)]
            .into_iter()
            .flatten()
            .filter(|&j| j < truths.len())
            .min_by(|&a, &b| (truths[a].0 - t).abs().total_cmp(&(truths[b].0 - t).abs()));
        let Some(j) = best.filter(|&j| (truths[j].0 - t).abs() <= ALIGNMENT_TOLERANCE + 1e-9) else {
            return Err(EvalError::AlignmentGap { t });
        };
        records.push(pose_error(t, &est, &truths[j].1));
    }
    Ok(ErrorTrace { records })
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "never".to_string(), |v| format!("{v:.2}"))
}

impl ErrorTrace {
    /// Time from which every remaining record has position error below 0.2 m.
    pub fn convergence_time(&self) -> Option<f64> {
        let last_bad = self
            .records
            .iter()
            .rposition(|r| r.position_error() >= CONVERGENCE_THRESHOLD);
        match last_bad {
            None => self.records.first().map(|r| r.t),
            Some(i) => self.records.get(i + 1).map(|r| r.t),
        }
    }

    /// Records from the convergence time on (empty if never converged).
    pub fn post_convergence(&self) -> &[ErrorRecord] {
        match self.convergence_time() {
            Some(tc) => {
                let i = self.records.partition_point(|r| r.t < tc);
                &self.records[i..]
            }
            None => &[],
        }
    }

    pub fn summary(&self, post_convergence_only: bool) -> Summary {
        let recs = if post_convergence_only {
            self.post_convergence()
        } else {
            &self.records[..]
        };
        let n = recs.len();
        let mean = |f: &dyn Fn(&ErrorRecord) -> f64| {
            if n == 0 {
                f64::NAN
            } else {
                recs.iter().map(f).sum::<f64>() / n as f64
            }
        };
        let max = |f: &dyn Fn(&ErrorRecord) -> f64| recs.iter().map(f).fold(if n == 0 { f64::NAN } else { 0.0 }, f64::max);
        Summary {
            count: n,
            mean_abs_lon: mean(&|r| r.e_lon.abs()),
            mean_abs_lat: mean(&|r| r.e_lat.abs()),
            mean_abs_psi_deg: mean(&|r| r.e_psi_deg.abs()),
            max_abs_lon: max(&|r| r.e_lon.abs()),
            max_abs_lat: max(&|r| r.e_lat.abs()),
            max_abs_psi_deg: max(&|r| r.e_psi_deg.abs()),
            mean_position: mean(&|r| r.position_error()),
            max_position: max(&|r| r.position_error()),
            convergence_time: self.convergence_time(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.records.len() * 64);
        out.push_str(TRACE_HEADER);
        out.push('\n');
        for r in &self.records {
            let _ = writeln!(out, "{},{},{},{}", r.t, r.e_lon, r.e_lat, r.e_psi_deg);
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, EvalError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == TRACE_HEADER => {}
            _ => {
                return Err(EvalError::Parse {
                    line: 1,
                    message: format!("expected header `{TRACE_HEADER}`"),
                })
            }
        }
        let mut records = Vec::new();
        for (i, raw) in lines {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| EvalError::Parse { line: i + 1, message };
            let v: Vec<f64> = line
                .split(',')
                .map(|f| f.trim().parse::<f64>().map_err(|e| err(format!("bad number `{f}`: {e}"))))
                .collect::<Result<_, _>>()?;
            if v.len() != 4 {
                return Err(err(format!("expected 4 columns, got {}", v.len())));
            }
            if let Some(prev) = records.last().map(|r: &ErrorRecord| r.t) {
                if v[0] < prev {
                    return Err(err("records are not time-ordered".into()));
                }
            }
            records.push(ErrorRecord {
                t: v[0],
                e_lon: v[1],
                e_lat: v[2],
                e_psi_deg: v[3],
            });
        }
        Ok(Self { records })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), EvalError> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EvalError> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }

    /// Whitespace-aligned per-record columns for plotting.
    pub fn columns(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:>10} {:>10} {:>10} {:>10}", "t_s", "e_lon_m", "e_lat_m", "e_psi_deg");
        for r in &self.records {
            let _ = writeln!(out, "{:>10.2} {:>10.4} {:>10.4} {:>10.4}", r.t, r.e_lon, r.e_lat, r.e_psi_deg);
        }
        out
    }
}

impl Summary {
    /// Aligned text table: one row per error component, then counts.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<18} {:>10} {:>10}", "error", "mean |e|", "max |e|");
        let _ = writeln!(out, "{:<18} {:>10.4} {:>10.4}", "longitudinal [m]", self.mean_abs_lon, self.max_abs_lon);
        let _ = writeln!(out, "{:<18} {:>10.4} {:>10.4}", "lateral [m]", self.mean_abs_lat, self.max_abs_lat);
        let _ = writeln!(
            out,
            "{:<18} {:>10.4} {:>10.4}",
            "orientation [deg]", self.mean_abs_psi_deg, self.max_abs_psi_deg
        );
        let _ = writeln!(out, "{:<18} {:>10.4} {:>10.4}", "position [m]", self.mean_position, self.max_position);
        let _ = writeln!(out, "records: {}", self.count);
        let _ = writeln!(out, "convergence time [s]: {}", fmt_opt(self.convergence_time));
        out
    }
}
