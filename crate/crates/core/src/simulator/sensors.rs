use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::geometry::{OdometrySample, Pose};

use super::trajectory::{OdometryNoise, Twist};

/// Quality of the initial pose fix, one sigma per axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InitNoise {
    pub sigma_pos: f64,
    pub sigma_heading: f64,
}

/// Two-dimensional Gaussian radius quantile factor: P(|offset| <= k sigma) = 0.95.
pub fn rayleigh_95() -> f64 {
    (-2.0 * 0.05_f64.ln()).sqrt()
}

impl Default for InitNoise {
    /// A fix whose position is within 5 m and heading within 2 deg, 95% of the time.
    fn default() -> Self {
        Self {
            sigma_pos: 5.0 / rayleigh_95(),
            sigma_heading: 2.0_f64.to_radians() / 1.96,
        }
    }
}

impl InitNoise {
    pub fn exact() -> Self {
        Self {
            sigma_pos: 0.0,
            sigma_heading: 0.0,
        }
    }
}

fn gaussian<R: Rng + ?Sized>(sigma: f64, rng: &mut R) -> f64 {
    Normal::new(0.0, sigma).map_or(0.0, |n| n.sample(rng))
}

/// Noisy odometry reading of the true twist.
pub fn sample_odometry<R: Rng + ?Sized>(
    truth: &Twist,
    noise: &OdometryNoise,
    timestamp: f64,
    rng: &mut R,
) -> OdometrySample {
    let dv = gaussian(noise.sigma_v, rng);
    let dw = gaussian(noise.sigma_yaw_rate, rng);
    OdometrySample {
        timestamp,
        v: truth.v + dv,
        yaw_rate: truth.yaw_rate + dw,
    }
}

/// Perturbs the true pose the way a GPS / start-area fix would.
pub fn noisy_initial_fix<R: Rng + ?Sized>(truth: &Pose, noise: &InitNoise, rng: &mut R) -> Pose {
    let de = gaussian(noise.sigma_pos, rng);
    let dn = gaussian(noise.sigma_pos, rng);
    let dpsi = gaussian(noise.sigma_heading, rng);
    Pose::new(truth.e + de, truth.n + dn, truth.psi + dpsi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_noise_passthrough() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let tw = Twist { v: 1.2, yaw_rate: -0.3 };
        let zero = OdometryNoise { sigma_v: 0.0, sigma_yaw_rate: 0.0 };
        let s = sample_odometry(&tw, &zero, 0.01, &mut rng);
        assert_eq!((s.v, s.yaw_rate, s.timestamp), (1.2, -0.3, 0.01));

        let truth = Pose::new(3.0, 4.0, 0.5);
        assert_eq!(noisy_initial_fix(&truth, &InitNoise::exact(), &mut rng), truth);
    }

    #[test]
    fn seeded_reproducibility() {
        let tw = Twist { v: 1.0, yaw_rate: 0.1 };
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..10)
                .map(|k| sample_odometry(&tw, &OdometryNoise::default(), k as f64 / 100.0, &mut rng))
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(5), draw(5));
        assert_ne!(draw(5), draw(6));

        let fix = |seed| noisy_initial_fix(&Pose::default(), &InitNoise::default(), &mut ChaCha8Rng::seed_from_u64(seed));
        assert_eq!(fix(3), fix(3));
    }

    #[test]
    fn odometry_mean_is_unbiased() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let tw = Twist { v: 1.5, yaw_rate: 0.2 };
        let noise = OdometryNoise::default();
        let n = 10_000;
        let (mut sv, mut sw) = (0.0, 0.0);
        for k in 0..n {
            let s = sample_odometry(&tw, &noise, k as f64 / 100.0, &mut rng);
            sv += s.v;
            sw += s.yaw_rate;
        }
        // 3 sigma of the sample mean is 3 sigma / sqrt(n) = 3 sigma / 100
        assert!((sv / n as f64 - tw.v).abs() <= 3.0 * noise.sigma_v / 100.0);
        assert!((sw / n as f64 - tw.yaw_rate).abs() <= 3.0 * noise.sigma_yaw_rate / 100.0);
    }

    #[test]
    fn init_fix_95th_percentile_is_five_meters() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let noise = InitNoise::default();
        let mut radial: Vec<f64> = (0..10_000)
            .map(|_| noisy_initial_fix(&Pose::default(), &noise, &mut rng).position().norm())
            .collect();
        radial.sort_by(f64::total_cmp);
        let p95 = radial[9_500];
        assert!((p95 - 5.0).abs() <= 0.25, "95th percentile {p95}");
    }
}
