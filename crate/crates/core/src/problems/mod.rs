//! Parametric problem families.
//!
//! A family bundles everything the solver and the initializers need to know
//! about one class of problems `min_{θ ∈ Θ} f(θ, x)`: the objective, its
//! (sub)gradient, the projection onto Θ, and the sampling laws for instances
//! and random starts.

mod ackley;
mod convex;
mod sum_rate;
mod toy_adv;

pub use ackley::{ackley_gradient, ackley_value, AckleyFamily, AckleyParams};
pub use convex::{ConvexPerturbFamily, ConvexPerturbInstance};
pub use sum_rate::{project_box, sum_rate, sum_rate_gradient, SumRateFamily, SumRateInstance};
pub use toy_adv::{BlobConfig, ToyAdvFamily, ToyAdvInstance};

use serde::{Deserialize, Serialize};

use crate::gd::StepRule;
use crate::seed::SeededRng;

/// Parameters identifying one problem of a family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub x: Vec<f64>,
}

impl Instance {
    pub fn new(x: Vec<f64>) -> Self {
        Self { x }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// FNV-1a over the bit patterns of `x`.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for v in &self.x {
            for b in v.to_bits().to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        h
    }
}

pub trait ProblemFamily: Send + Sync {
    fn name(&self) -> &str;

    /// Dimension `m` of the decision variable θ.
    fn decision_dim(&self) -> usize;

    /// Dimension `n` of the instance vector x.
    fn instance_dim(&self) -> usize;

    fn objective(&self, theta: &[f64], inst: &Instance) -> f64;

    /// Gradient, or a subgradient where the objective is nonsmooth.
    fn gradient(&self, theta: &[f64], inst: &Instance) -> Vec<f64>;

    /// Euclidean projection onto Θ, which may depend on the instance.
    fn project(&self, theta: &[f64], inst: &Instance) -> Vec<f64>;

    /// Projection onto the part of Θ common to every instance.
    ///
    /// Used where a single point must serve all instances (the MAML outer
    /// update). Families whose feasible set depends on x return θ unchanged.
    fn project_shared(&self, theta: &[f64]) -> Vec<f64> {
        theta.to_vec()
    }

    fn sample_instance(&self, rng: &mut SeededRng) -> Instance;

    /// Random start θ̂ ~ ℙ_θ̂, already feasible for `inst`.
    fn sample_init(&self, inst: &Instance, rng: &mut SeededRng) -> Vec<f64>;

    fn default_step_rule(&self) -> StepRule;

    fn default_iters(&self) -> usize;

    /// Whether `gradient` returns subgradients at kinks the solver will hit.
    fn is_nonsmooth(&self) -> bool {
        false
    }

    /// `Some(true)` when θ satisfies the family's side constraint.
    fn constraint_check(&self, _theta: &[f64], _inst: &Instance) -> Option<bool> {
        None
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Central finite-difference gradient.
pub fn finite_difference(f: impl Fn(&[f64]) -> f64, theta: &[f64], h: f64) -> Vec<f64> {
    let mut probe = theta.to_vec();
    (0..theta.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + h;
            let up = f(&probe);
            probe[i] = orig - h;
            let down = f(&probe);
            probe[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Relative error `‖a − b‖ / max(‖a‖, ‖b‖, floor)`.
pub fn relative_error(a: &[f64], b: &[f64], floor: f64) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm2(&diff) / norm2(a).max(norm2(b)).max(floor)
}

/// Small families used by unit and integration tests.
#[doc(hidden)]
pub mod testing {
    use rand::Rng;

    use super::*;

    /// `f(θ) = ‖θ‖²` on ℝᵐ.
    pub struct Quadratic {
        m: usize,
    }

    impl Quadratic {
        pub fn new(m: usize) -> Self {
            Self { m }
        }
    }

    impl ProblemFamily for Quadratic {
        fn name(&self) -> &str {
            "quadratic"
        }
        fn decision_dim(&self) -> usize {
            self.m
        }
        fn instance_dim(&self) -> usize {
            self.m
        }
        fn objective(&self, theta: &[f64], _inst: &Instance) -> f64 {
            dot(theta, theta)
        }
        fn gradient(&self, theta: &[f64], _inst: &Instance) -> Vec<f64> {
            theta.iter().map(|t| 2.0 * t).collect()
        }
        fn project(&self, theta: &[f64], _inst: &Instance) -> Vec<f64> {
            theta.to_vec()
        }
        fn sample_instance(&self, _rng: &mut SeededRng) -> Instance {
            Instance::new(vec![0.0; self.m])
        }
        fn sample_init(&self, _inst: &Instance, rng: &mut SeededRng) -> Vec<f64> {
            (0..self.m).map(|_| rng.random_range(-1.0..1.0)).collect()
        }
        fn default_step_rule(&self) -> StepRule {
            StepRule::new(0.25, 1.0).unwrap()
        }
        fn default_iters(&self) -> usize {
            100
        }
    }

    /// `f(θ, x) = ‖θ − x‖²`, x ~ U[lo, hi]ᵐ, optionally boxed to [0, 1]ᵐ.
    pub struct Shifted {
        center: Vec<f64>,
        pub lo: f64,
        pub hi: f64,
        pub boxed: bool,
    }

    impl Shifted {
        pub fn new(center: Vec<f64>) -> Self {
            Self {
                center,
                lo: 0.0,
                hi: 1.0,
                boxed: false,
            }
        }

        pub fn uniform(m: usize, lo: f64, hi: f64) -> Self {
            Self {
                center: vec![0.0; m],
                lo,
                hi,
                boxed: false,
            }
        }

        pub fn instance(&self) -> Instance {
            Instance::new(self.center.clone())
        }
    }

    impl ProblemFamily for Shifted {
        fn name(&self) -> &str {
            "shifted"
        }
        fn decision_dim(&self) -> usize {
            self.center.len()
        }
        fn instance_dim(&self) -> usize {
            self.center.len()
        }
        fn objective(&self, theta: &[f64], inst: &Instance) -> f64 {
            theta.iter().zip(&inst.x).map(|(t, c)| (t - c) * (t - c)).sum()
        }
        fn gradient(&self, theta: &[f64], inst: &Instance) -> Vec<f64> {
            theta.iter().zip(&inst.x).map(|(t, c)| 2.0 * (t - c)).collect()
        }
        fn project(&self, theta: &[f64], _inst: &Instance) -> Vec<f64> {
            self.project_shared(theta)
        }
        fn project_shared(&self, theta: &[f64]) -> Vec<f64> {
            if self.boxed {
                project_box(theta)
            } else {
                theta.to_vec()
            }
        }
        fn sample_instance(&self, rng: &mut SeededRng) -> Instance {
            Instance::new((0..self.center.len()).map(|_| rng.random_range(self.lo..self.hi)).collect())
        }
        fn sample_init(&self, _inst: &Instance, rng: &mut SeededRng) -> Vec<f64> {
            let raw: Vec<f64> = (0..self.center.len()).map(|_| rng.random_range(-1.0..2.0)).collect();
            self.project_shared(&raw)
        }
        fn default_step_rule(&self) -> StepRule {
            StepRule::new(0.25, 1.0).unwrap()
        }
        fn default_iters(&self) -> usize {
            100
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fingerprint_separates_instances() {
        let a = Instance::new(vec![1.0, 2.0]);
        let b = Instance::new(vec![2.0, 1.0]);
        assert_ne!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.fingerprint(), a.clone().fingerprint());
    }

    #[test]
    fn finite_difference_of_cubic() {
        let g = finite_difference(|t| t[0].powi(3) + t[1], &[2.0, 5.0], 1e-5);
        assert!((g[0] - 12.0).abs() < 1e-6);
        assert!((g[1] - 1.0).abs() < 1e-6);
    }
}
