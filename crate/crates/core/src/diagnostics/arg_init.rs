//! Direct prediction of the GD output on a synthetic box landscape.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::stats::Moments;
use super::val_init::BLOCK;
use super::Verdict;
use crate::error::{Error, Result};
use crate::seed::{stream, SeededRng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArgNoise {
    /// Isotropic Gaussian spending the whole budget.
    Gaussian,
    /// Radius `2ηδ` with just enough probability to spend the budget.
    TwoPoint,
    Zero,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prop6Config {
    pub dim: usize,
    pub s: f64,
    pub epsilon: f64,
    pub eta: f64,
    /// Ball radius; defaults to the radius whose volume equals `epsilon`.
    pub delta: Option<f64>,
    pub noise: ArgNoise,
    pub trials: usize,
    pub seed: u64,
}

impl Prop6Config {
    pub fn new(dim: usize, s: f64, epsilon: f64, eta: f64) -> Self {
        Self {
            dim,
            s,
            epsilon,
            eta,
            delta: None,
            noise: ArgNoise::Gaussian,
            trials: 100_000,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prop6Report {
    pub delta: f64,
    /// Upper bound on `P(‖θ̂ − g†‖ ≤ δ)` under the uniform law on `[0,1]^d`.
    pub ball_mass: f64,
    pub noise_second_moment: f64,
    pub rate: f64,
    pub rate_se: f64,
    /// Rate of the weaker event `‖h − g†‖ ≤ ηδ` alone.
    pub eta_rate: f64,
    pub bound: f64,
    pub verdict: Verdict,
}

/// Volume of the unit ball in `d` dimensions.
pub fn unit_ball_volume(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    (h * std::f64::consts::PI.ln() - ln_gamma(h + 1.0)).exp()
}

fn gaussian_vec(d: usize, sd: f64, rng: &mut SeededRng) -> Vec<f64> {
    (0..d).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Samples `θ̂, g†` uniformly on the unit box and a predictor `h = g† + n`
/// with `E‖n‖² = s(1−ε)(δη)²`; estimates
/// `P(‖h − g†‖ ≤ ηδ, ‖θ̂ − g†‖ > δ)` against `(1−s)(1−ε)`.
pub fn check_prop6(cfg: &Prop6Config) -> Result<Prop6Report> {
    let d = cfg.dim;
    if d == 0 || cfg.trials < 2 {
        return Err(Error::input("need dim ≥ 1 and at least two trials"));
    }
    if !(cfg.s > 0.0 && cfg.s < 1.0) || !(cfg.epsilon > 0.0 && cfg.epsilon < 1.0) || !(cfg.eta > 0.0) {
        return Err(Error::config("need s, epsilon in (0, 1) and eta > 0"));
    }
    let vol = unit_ball_volume(d);
    let delta = match cfg.delta {
        Some(r) if r > 0.0 => r,
        Some(r) => return Err(Error::config(format!("delta must be > 0, got {r}"))),
        None => (cfg.epsilon / vol).powf(1.0 / d as f64),
    };
    let ball_mass = vol * delta.powi(d as i32);
    if ball_mass > cfg.epsilon * (1.0 + 1e-12) {
        return Err(Error::config(format!(
            "delta = {delta} gives ball mass {ball_mass} > epsilon = {}",
            cfg.epsilon
        )));
    }
    let radius = cfg.eta * delta;
    let budget = cfg.s * (1.0 - cfg.epsilon) * radius * radius;
    let far = 2.0 * radius;
    let blocks = cfg.trials.div_ceil(BLOCK);
    let parts: Vec<(Moments, Moments)> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(cfg.seed, &[b as u64]);
            let n = BLOCK.min(cfg.trials - b * BLOCK);
            let (mut hit, mut near) = (Moments::default(), Moments::default());
            for _ in 0..n {
                let theta: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
                let target: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
                let noise_norm = match cfg.noise {
                    ArgNoise::Zero => 0.0,
                    ArgNoise::Gaussian => {
                        let v = gaussian_vec(d, (budget / d as f64).sqrt(), &mut rng);
                        v.iter().map(|x| x * x).sum::<f64>().sqrt()
                    }
                    ArgNoise::TwoPoint => {
                        if rng.random::<f64>() < budget / (far * far) {
                            far
                        } else {
                            0.0
                        }
                    }
                };
                let close = noise_norm <= radius;
                near.push(f64::from(u8::from(close)));
                hit.push(f64::from(u8::from(close && dist(&theta, &target) > delta)));
            }
            (hit, near)
        })
        .collect();
    let (hit, near) = parts
        .into_iter()
        .fold((Moments::default(), Moments::default()), |a, p| (a.0.merge(p.0), a.1.merge(p.1)));
    let noise_second_moment = match cfg.noise {
        ArgNoise::Zero => 0.0,
        _ => budget,
    };
    let bound = (1.0 - cfg.s) * (1.0 - cfg.epsilon);
    let verdict = if hit.mean() >= bound - 3.0 * hit.se() {
        Verdict::Confirmed
    } else {
        Verdict::Violated
    };
    Ok(Prop6Report {
        delta,
        ball_mass,
        noise_second_moment,
        rate: hit.mean(),
        rate_se: hit.se(),
        eta_rate: near.mean(),
        bound,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ball_volumes() {
        assert_abs_diff_eq!(unit_ball_volume(1), 2.0, epsilon = 1e-13);
        assert_abs_diff_eq!(unit_ball_volume(2), std::f64::consts::PI, epsilon = 1e-13);
        assert_abs_diff_eq!(unit_ball_volume(3), 4.0 / 3.0 * std::f64::consts::PI, epsilon = 1e-12);
    }

    #[test]
    fn gaussian_and_two_point_meet_bound() {
        for (s, eps, eta) in [(0.5, 0.1, 0.5), (0.2, 0.05, 0.9)] {
            for noise in [ArgNoise::Gaussian, ArgNoise::TwoPoint] {
                let mut cfg = Prop6Config::new(2, s, eps, eta);
                cfg.noise = noise;
                cfg.trials = 20_000;
                let r = check_prop6(&cfg).unwrap();
                assert_eq!(r.verdict, Verdict::Confirmed, "{cfg:?} {r:?}");
                assert!(r.ball_mass <= eps * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn zero_noise_rate_is_far_mass() {
        let mut cfg = Prop6Config::new(3, 0.5, 0.1, 0.5);
        cfg.noise = ArgNoise::Zero;
        let r = check_prop6(&cfg).unwrap();
        assert_eq!(r.eta_rate, 1.0);
        assert!(r.rate >= 0.9 - 3.0 * r.rate_se);
    }

    #[test]
    fn oversized_ball_rejected() {
        let mut cfg = Prop6Config::new(2, 0.5, 0.1, 0.5);
        cfg.delta = Some(0.5);
        assert!(matches!(check_prop6(&cfg), Err(Error::Config(_))));
    }
}
