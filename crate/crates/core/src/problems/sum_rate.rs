use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Instance, ProblemFamily};
use crate::gd::StepRule;
use crate::seed::SeededRng;

/// Square channel matrix; `gain(i, j)` is the strength from sender i to receiver j.
#[derive(Clone, Debug, PartialEq)]
pub struct SumRateInstance {
    pub users: usize,
    pub channel: Vec<f64>,
}

impl SumRateInstance {
    pub fn new(users: usize, channel: Vec<f64>) -> Self {
        assert_eq!(channel.len(), users * users, "channel must be users×users");
        Self { users, channel }
    }

    pub fn from_instance(users: usize, inst: &Instance) -> Self {
        Self::new(users, inst.x.clone())
    }

    pub fn gain(&self, i: usize, j: usize) -> f64 {
        self.channel[i * self.users + j]
    }
}

/// Interference seen at each receiver: `I_i = Σ_{j≠i} x[j,i]·θ_j`.
fn interference(n: usize, ch: &[f64], theta: &[f64]) -> Vec<f64> {
    (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i)
                .map(|j| ch[j * n + i] * theta[j])
                .sum()
        })
        .collect()
}

fn sum_rate_raw(n: usize, ch: &[f64], theta: &[f64]) -> f64 {
    interference(n, ch, theta)
        .iter()
        .enumerate()
        .map(|(i, ii)| (1.0 + ch[i * n + i] * theta[i] / (1.0 + ii)).ln())
        .sum()
}

fn sum_rate_grad_raw(n: usize, ch: &[f64], theta: &[f64]) -> Vec<f64> {
    let inter = interference(n, ch, theta);
    // w_i = 1/D_i − 1/(1+I_i) with D_i = 1 + I_i + x[i,i]θ_i
    let inv_d: Vec<f64> = (0..n)
        .map(|i| 1.0 / (1.0 + inter[i] + ch[i * n + i] * theta[i]))
        .collect();
    let w: Vec<f64> = (0..n).map(|i| inv_d[i] - 1.0 / (1.0 + inter[i])).collect();
    (0..n)
        .map(|k| {
            let cross: f64 = (0..n).filter(|&i| i != k).map(|i| ch[k * n + i] * w[i]).sum();
            ch[k * n + k] * inv_d[k] + cross
        })
        .collect()
}

/// Total rate `Σ_i log(1 + x[i,i]θ_i / (1 + Σ_{j≠i} x[j,i]θ_j))`.
pub fn sum_rate(theta: &[f64], inst: &SumRateInstance) -> f64 {
    sum_rate_raw(inst.users, &inst.channel, theta)
}

/// Gradient of [`sum_rate`] (the rate, not its negation).
pub fn sum_rate_gradient(theta: &[f64], inst: &SumRateInstance) -> Vec<f64> {
    sum_rate_grad_raw(inst.users, &inst.channel, theta)
}

pub fn project_box(theta: &[f64]) -> Vec<f64> {
    theta.iter().map(|t| t.clamp(0.0, 1.0)).collect()
}

/// Power control over an interference channel, posed as minimising the
/// negative sum-rate on `[0, 1]^N`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SumRateFamily {
    pub users: usize,
    pub channel_max: f64,
}

impl SumRateFamily {
    pub fn new(users: usize, channel_max: f64) -> Self {
        Self { users, channel_max }
    }
}

impl Default for SumRateFamily {
    fn default() -> Self {
        Self::new(15, 10.0)
    }
}

impl ProblemFamily for SumRateFamily {
    fn name(&self) -> &str {
        "sum_rate"
    }

    fn decision_dim(&self) -> usize {
        self.users
    }

    fn instance_dim(&self) -> usize {
        self.users * self.users
    }

    fn objective(&self, theta: &[f64], inst: &Instance) -> f64 {
        -sum_rate_raw(self.users, &inst.x, theta)
    }

    fn gradient(&self, theta: &[f64], inst: &Instance) -> Vec<f64> {
        sum_rate_grad_raw(self.users, &inst.x, theta)
            .into_iter()
            .map(|g| -g)
            .collect()
    }

    fn project(&self, theta: &[f64], _inst: &Instance) -> Vec<f64> {
        project_box(theta)
    }

    fn project_shared(&self, theta: &[f64]) -> Vec<f64> {
        project_box(theta)
    }

    fn sample_instance(&self, rng: &mut SeededRng) -> Instance {
        let n = self.users * self.users;
        Instance::new((0..n).map(|_| rng.random_range(0.0..self.channel_max)).collect())
    }

    fn sample_init(&self, _inst: &Instance, rng: &mut SeededRng) -> Vec<f64> {
        (0..self.users).map(|_| rng.random_range(0.0..1.0)).collect()
    }

    fn default_step_rule(&self) -> StepRule {
        StepRule::new(1.0, 1.0).expect("constant step rule")
    }

    fn default_iters(&self) -> usize {
        100
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{finite_difference, relative_error};
    use crate::seed::seeded;
    use approx::assert_abs_diff_eq;

    #[test]
    fn single_user_no_interference() {
        let inst = SumRateInstance::new(1, vec![1.0]);
        assert_abs_diff_eq!(sum_rate(&[1.0], &inst), 2f64.ln(), epsilon = 1e-15);
    }

    #[test]
    fn silent_users_have_zero_rate() {
        let inst = SumRateInstance::new(3, (0..9).map(|v| v as f64).collect());
        assert_eq!(sum_rate(&[0.0; 3], &inst), 0.0);
    }

    #[test]
    fn two_user_all_ones() {
        // 2·ln 1.5, 21 digits via mpmath
        let inst = SumRateInstance::new(2, vec![1.0; 4]);
        assert_abs_diff_eq!(sum_rate(&[1.0, 1.0], &inst), 0.810930216216328764, epsilon = 1e-15);
    }

    #[test]
    fn orientation_of_cross_gains() {
        // Only sender 0 → receiver 1 interferes.
        let inst = SumRateInstance::new(2, vec![2.0, 3.0, 0.0, 5.0]);
        let expected = 3f64.ln() + (1.0f64 + 5.0 / 4.0).ln();
        assert_abs_diff_eq!(sum_rate(&[1.0, 1.0], &inst), expected, epsilon = 1e-15);
    }

    #[test]
    fn box_projection() {
        assert_eq!(project_box(&[-0.3, 0.5, 1.7]), vec![0.0, 0.5, 1.0]);
        let once = project_box(&[-2.0, 0.25, 3.0]);
        assert_eq!(project_box(&once), once);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let fam = SumRateFamily::default();
        let mut rng = seeded(23);
        for _ in 0..100 {
            let inst = fam.sample_instance(&mut rng);
            let theta = fam.sample_init(&inst, &mut rng);
            let g = fam.gradient(&theta, &inst);
            let fd = finite_difference(|t| fam.objective(t, &inst), &theta, 1e-5);
            assert!(relative_error(&g, &fd, 1e-8) < 1e-4);
        }
    }
}
