//! Particle filter over robot poses: spread around an initial fix, dead-reckoned
//! with perturbed odometry, weighted by matched corner landmarks and resampled.

mod association;

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use thiserror::Error;

use crate::error::{ensure, ParamError};
use crate::geometry::{normalize_angle, transform_to_map, OdometrySample, Point2, Pose};
use crate::landmark_map::{Landmark, LandmarkMap, NNIndex};

pub use association::{
    associate, associate_particle, associate_with_index, heading_components, pair_likelihood, pair_log_likelihood, Association, Pair,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FilterError {
    #[error("no map landmark within {radius:.1} m of the estimate ({e:.2}, {n:.2})")]
    NoLandmarksVisible { e: f64, n: f64, radius: f64 },
    #[error("all particle weights are zero")]
    AllZeroWeights,
    #[error("empty particle set")]
    NoParticles,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Particle {
    pub pose: Pose,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FilterParams {
    pub n_particles: usize,
    /// Size of the initial particle set, drawn once around the fix and
    /// reduced to `n_particles` by the first resampling. Zero means N.
    pub init_particles: usize,
    pub sigma_init_pos: f64,
    pub sigma_init_heading: f64,
    pub sigma_lat: f64,
    pub sigma_lon: f64,
    pub gate_distance: f64,
    /// Speed noise added per particle and odometry sample (m/s).
    pub sigma_v: f64,
    /// Yaw-rate noise added per particle and odometry sample (rad/s).
    pub sigma_yaw_rate: f64,
    pub yaw_rate_epsilon: f64,
    /// Weight factor given to a particle that matched no landmark.
    pub weight_floor: f64,
    pub merge_frames: usize,
    /// Resample only when the effective sample size drops below this
    /// fraction of N. Zero resamples on every update.
    pub ess_threshold: f64,
    /// Landmarks are preselected within sensor range plus
    /// `max(margin_factor * particle spread, margin_floor)` of the estimate.
    pub landmark_range: f64,
    pub margin_factor: f64,
    pub margin_floor: f64,
}

impl Default for FilterParams {
    fn default() -> Self {
        Self {
            n_particles: 500,
            init_particles: 200_000,
            sigma_init_pos: 5.0 / crate::simulator::rayleigh_95(),
            sigma_init_heading: 2.0_f64.to_radians() / 1.96,
            sigma_lat: 0.1,
            sigma_lon: 0.1,
            gate_distance: 0.5,
            sigma_v: 0.05,
            sigma_yaw_rate: 0.01,
            yaw_rate_epsilon: 1e-6,
            weight_floor: 1e-30,
            merge_frames: 3,
            ess_threshold: 0.0,
            landmark_range: 30.0,
            margin_factor: 3.0,
            margin_floor: 2.0,
        }
    }
}

impl FilterParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        ensure(self.n_particles >= 10, "n_particles", "must be at least 10")?;
        for (v, name) in [
            (self.sigma_init_pos, "sigma_init_pos"),
            (self.sigma_init_heading, "sigma_init_heading"),
            (self.sigma_lat, "sigma_lat"),
            (self.sigma_lon, "sigma_lon"),
            (self.sigma_v, "sigma_v"),
            (self.sigma_yaw_rate, "sigma_yaw_rate"),
        ] {
            ensure(v > 0.0 && v.is_finite(), name, "must be positive")?;
        }
        ensure(self.gate_distance > 0.0, "gate_distance", "must be positive")?;
        ensure(self.yaw_rate_epsilon > 0.0, "yaw_rate_epsilon", "must be positive")?;
        ensure(
            self.weight_floor > 0.0 && self.weight_floor < 1.0,
            "weight_floor",
            "must be in (0, 1)",
        )?;
        ensure(self.merge_frames >= 1, "merge_frames", "must be at least 1")?;
        ensure(
            (0.0..=1.0).contains(&self.ess_threshold),
            "ess_threshold",
            "must be in [0, 1]",
        )?;
        ensure(self.landmark_range > 0.0, "landmark_range", "must be positive")?;
        ensure(self.margin_factor >= 0.0, "margin_factor", "must be non-negative")?;
        ensure(self.margin_floor >= 0.0, "margin_floor", "must be non-negative")
    }
}

fn normal(sigma: f64) -> Normal<f64> {
    Normal::new(0.0, sigma).unwrap_or_else(|_| Normal::new(0.0, 0.0).expect("zero sigma is valid"))
}

/// N particles drawn around `initial` with uniform weights.
pub fn initialize<R: Rng + ?Sized>(initial: &Pose, params: &FilterParams, rng: &mut R) -> Vec<Particle> {
    let n = params.n_particles.max(params.init_particles);
    let pos = normal(params.sigma_init_pos);
    let head = normal(params.sigma_init_heading);
    (0..n)
        .map(|_| {
            let e = initial.e + pos.sample(rng);
            let nn = initial.n + pos.sample(rng);
            let psi = initial.psi + head.sample(rng);
            Particle {
                pose: Pose::new(e, nn, psi),
                weight: 1.0 / n as f64,
            }
        })
        .collect()
}

/// Constant-twist dead reckoning over `dt`. Uses the exact arc when
/// `|yaw_rate| >= epsilon` and the straight-line limit otherwise.
#[inline]
pub fn dead_reckon(pose: &Pose, v: f64, yaw_rate: f64, dt: f64, epsilon: f64) -> Pose {
    let dpsi = yaw_rate * dt;
    if yaw_rate.abs() >= epsilon {
        let r = v / yaw_rate;
        let psi1 = pose.psi + dpsi;
        Pose::new(
            pose.e + r * (psi1.sin() - pose.psi.sin()),
            pose.n + r * (pose.psi.cos() - psi1.cos()),
            psi1,
        )
    } else {
        let (s, c) = pose.psi.sin_cos();
        Pose::new(pose.e + v * dt * c, pose.n + v * dt * s, pose.psi + dpsi)
    }
}

/// Propagates every particle with its own perturbed copy of `sample`.
/// Noise is drawn in particle order (speed, then yaw rate) so the result
/// depends only on the RNG state.
pub fn motion_update<R: Rng + ?Sized>(
    particles: &mut [Particle],
    sample: &OdometrySample,
    dt: f64,
    params: &FilterParams,
    rng: &mut R,
) {
    debug_assert!(dt > 0.0);
    for p in particles.iter_mut() {
        let nv: f64 = StandardNormal.sample(rng);
        let nw: f64 = StandardNormal.sample(rng);
        let v = sample.v + params.sigma_v * nv;
        let w = sample.yaw_rate + params.sigma_yaw_rate * nw;
        p.pose = dead_reckon(&p.pose, v, w, dt, params.yaw_rate_epsilon);
    }
}

/// Sensor-frame points of one scan plus the dead-reckoned pose it was taken from.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanFrame {
    pub points: Vec<Point2>,
    pub pose: Pose,
}

/// Re-expresses every buffered frame in the sensor frame of the newest one
/// (the last element) and concatenates them, newest first.
pub fn merge_frames(frames: &[ScanFrame]) -> Vec<Point2> {
    let Some(newest) = frames.last() else {
        return Vec::new();
    };
    let mut out: Vec<Point2> = newest.points.clone();
    for old in frames.iter().rev().skip(1) {
        let rel = newest.pose.between(&old.pose);
        out.extend(old.points.iter().map(|p| transform_to_map(&rel, p)));
    }
    out
}

/// Counters from one measurement update.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct UpdateStats {
    pub candidates: usize,
    pub observations: usize,
    /// Particles with at least one gated pair.
    pub matched_particles: usize,
    /// Pairs of the best particle.
    pub best_pairs: usize,
}

impl UpdateStats {
    /// True when the update carried information, i.e. some particle matched.
    pub fn informative(&self) -> bool {
        self.matched_particles > 0
    }
}

/// Weighted position spread: sqrt of the mean of the easting and northing variances.
pub fn position_spread(particles: &[Particle]) -> f64 {
    let total: f64 = particles.iter().map(|p| p.weight).sum();
    if particles.is_empty() || total <= 0.0 {
        return 0.0;
    }
    let (me, mn) = particles.iter().fold((0.0, 0.0), |(e, n), p| {
        (e + p.weight * p.pose.e, n + p.weight * p.pose.n)
    });
    let (me, mn) = (me / total, mn / total);
    let var = particles
        .iter()
        .map(|p| p.weight * ((p.pose.e - me).powi(2) + (p.pose.n - mn).powi(2)))
        .sum::<f64>()
        / total;
    (var / 2.0).sqrt()
}

/// Landmarks worth associating for the current belief.
pub fn candidate_landmarks(
    particles: &[Particle],
    map: &LandmarkMap,
    params: &FilterParams,
) -> Result<Vec<Landmark>, FilterError> {
    let center = estimate(particles)?;
    let margin = (params.margin_factor * position_spread(particles)).max(params.margin_floor);
    let found = map.select_visible(&center, params.landmark_range, margin);
    if found.is_empty() {
        return Err(FilterError::NoLandmarksVisible {
            e: center.e,
            n: center.n,
            radius: params.landmark_range + margin,
        });
    }
    Ok(found)
}

/// Reweights particles from sensor-frame corner observations.
///
/// Each particle's new weight is its previous weight times the product of pair
/// likelihoods over its gated matches, or times `weight_floor` when it has no
/// match; weights are then normalized. Computed in the log domain.
pub fn measurement_update(
    particles: &mut [Particle],
    observations: &[Point2],
    map: &LandmarkMap,
    params: &FilterParams,
) -> Result<UpdateStats, FilterError> {
    let candidates = candidate_landmarks(particles, map, params)?;
    Ok(weight_particles(particles, observations, &candidates, params))
}

/// Measurement update against an explicit candidate set.
pub fn weight_particles(
    particles: &mut [Particle],
    observations: &[Point2],
    candidates: &[Landmark],
    params: &FilterParams,
) -> UpdateStats {
    let mut stats = UpdateStats {
        candidates: candidates.len(),
        observations: observations.len(),
        ..Default::default()
    };
    if observations.is_empty() || particles.is_empty() {
        return stats;
    }

    let floor = params.weight_floor.ln();
    let mut log_w = Vec::with_capacity(particles.len());
    let mut pair_counts = Vec::with_capacity(particles.len());
    let index = NNIndex::build(observations);
    for p in particles.iter() {
        let assoc = associate_particle(&p.pose, &index, candidates, params.gate_distance);
        let lik = if assoc.is_empty() {
            floor
        } else {
            assoc
                .pairs
                .iter()
                .map(|q| pair_log_likelihood(q.d_lat, q.d_lon, params.sigma_lat, params.sigma_lon))
                .sum()
        };
        if !assoc.is_empty() {
            stats.matched_particles += 1;
        }
        pair_counts.push(assoc.len());
        log_w.push(p.weight.ln() + lik);
    }

    if stats.matched_particles == 0 {
        // every particle got the same factor: normalized weights are unchanged
        return stats;
    }
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (p, lw) in particles.iter_mut().zip(&log_w) {
        p.weight = (lw - max).exp();
        total += p.weight;
    }
    for p in particles.iter_mut() {
        p.weight /= total;
    }
    let best = argmax(particles);
    stats.best_pairs = pair_counts[best];
    stats
}

/// `1 / sum(w^2)` of the normalized weights.
pub fn effective_sample_size(particles: &[Particle]) -> f64 {
    let total: f64 = particles.iter().map(|p| p.weight).sum();
    if total <= 0.0 {
        return 0.0;
    }
    1.0 / particles.iter().map(|p| (p.weight / total).powi(2)).sum::<f64>()
}

/// Multinomial resampling: N independent draws with probability proportional
/// to weight; drawn particles get weight 1/N.
pub fn resample<R: Rng + ?Sized>(particles: &[Particle], rng: &mut R) -> Result<Vec<Particle>, FilterError> {
    resample_n(particles, particles.len(), rng)
}

/// [`resample`] drawing `n` particles instead of as many as the input holds.
pub fn resample_n<R: Rng + ?Sized>(
    particles: &[Particle],
    n: usize,
    rng: &mut R,
) -> Result<Vec<Particle>, FilterError> {
    if particles.is_empty() || n == 0 {
        return Err(FilterError::NoParticles);
    }
    let mut cumulative = Vec::with_capacity(n);
    let mut acc = 0.0;
    for p in particles {
        acc += p.weight;
        cumulative.push(acc);
    }
    if !(acc > 0.0) || !acc.is_finite() {
        return Err(FilterError::AllZeroWeights);
    }
    let w = 1.0 / n as f64;
    Ok((0..n)
        .map(|_| {
            let u = rng.random::<f64>() * acc;
            // first index whose cumulative weight exceeds u; zero-weight
            // particles have an empty interval and are never chosen
            let i = cumulative.partition_point(|&c| c <= u).min(particles.len() - 1);
            Particle {
                pose: particles[i].pose,
                weight: w,
            }
        })
        .collect())
}

fn argmax(particles: &[Particle]) -> usize {
    let mut best = 0;
    for (i, p) in particles.iter().enumerate().skip(1) {
        if p.weight > particles[best].weight {
            best = i;
        }
    }
    best
}

/// Pose of the highest-weight particle; the lowest index wins ties.
pub fn estimate(particles: &[Particle]) -> Result<Pose, FilterError> {
    if particles.is_empty() {
        return Err(FilterError::NoParticles);
    }
    Ok(particles[argmax(particles)].pose)
}

/// Whether the filter should resample after an informative update. The
/// oversized initial set is always reduced.
pub fn should_resample(particles: &[Particle], params: &FilterParams) -> bool {
    params.ess_threshold <= 0.0
        || particles.len() != params.n_particles
        || effective_sample_size(particles) < params.ess_threshold * particles.len() as f64
}

/// Heading difference folded into (-pi, pi].
pub fn heading_error(a: f64, b: f64) -> f64 {
    normalize_angle(a - b)
}
