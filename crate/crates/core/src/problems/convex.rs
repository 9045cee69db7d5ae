use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{dot, Instance, ProblemFamily};
use crate::error::{Error, Result};
use crate::gd::StepRule;
use crate::seed::SeededRng;

/// Tolerance on `y·aᵀ(x+θ)` when deciding feasibility.
pub const CONSTRAINT_TOL: f64 = 1e-9;

/// View of one perturbation problem against a fixed linear classifier.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexPerturbInstance<'a> {
    pub a: &'a [f64],
    pub x: &'a [f64],
    pub y: f64,
    pub beta: f64,
}

impl ConvexPerturbInstance<'_> {
    pub fn objective(&self, theta: &[f64]) -> f64 {
        let l2: f64 = dot(theta, theta);
        let l1: f64 = theta.iter().map(|t| t.abs()).sum();
        l2 + self.beta * l1
    }

    /// `2θ + β·sign(θ)` with `sign(0) = 0`.
    pub fn subgradient(&self, theta: &[f64]) -> Vec<f64> {
        theta.iter().map(|&t| 2.0 * t + self.beta * sign0(t)).collect()
    }

    /// `y·aᵀ(x+θ)`; feasible when ≤ 0.
    pub fn margin(&self, theta: &[f64]) -> f64 {
        let s: f64 = self
            .a
            .iter()
            .zip(self.x)
            .zip(theta)
            .map(|((a, x), t)| a * (x + t))
            .sum();
        self.y * s
    }

    /// Euclidean projection onto `{θ : y·aᵀ(x+θ) ≤ 0}`.
    pub fn project(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let aa = dot(self.a, self.a);
        if aa == 0.0 {
            return Err(Error::input("classifier vector a is zero"));
        }
        let s = self.margin(theta);
        if s <= 0.0 {
            return Ok(theta.to_vec());
        }
        let k = s / aa * self.y;
        Ok(theta.iter().zip(self.a).map(|(t, a)| t - k * a).collect())
    }
}

fn sign0(t: f64) -> f64 {
    if t > 0.0 {
        1.0
    } else if t < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Minimum-norm perturbation that flips a fixed linear classifier.
///
/// The classifier `a` is shared by every instance; the label of an instance is
/// the classifier's own prediction `sign(aᵀx)` (zero maps to +1).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConvexPerturbFamily {
    a: Vec<f64>,
    pub beta: f64,
}

impl ConvexPerturbFamily {
    pub fn new(a: Vec<f64>, beta: f64) -> Result<Self> {
        if a.is_empty() || a.iter().all(|v| *v == 0.0) {
            return Err(Error::input("classifier vector a must be nonzero"));
        }
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::input(format!("beta must be finite and >= 0, got {beta}")));
        }
        Ok(Self { a, beta })
    }

    /// Draws the shared classifier from a standard normal.
    pub fn sample(m: usize, beta: f64, rng: &mut SeededRng) -> Result<Self> {
        if m == 0 {
            return Err(Error::input("dimension m must be >= 1"));
        }
        let a = (0..m).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        Self::new(a, beta)
    }

    pub fn classifier(&self) -> &[f64] {
        &self.a
    }

    pub fn label(&self, x: &[f64]) -> f64 {
        if dot(&self.a, x) < 0.0 {
            -1.0
        } else {
            1.0
        }
    }

    pub fn view<'a>(&'a self, inst: &'a Instance) -> ConvexPerturbInstance<'a> {
        ConvexPerturbInstance {
            a: &self.a,
            x: &inst.x,
            y: self.label(&inst.x),
            beta: self.beta,
        }
    }
}

impl ProblemFamily for ConvexPerturbFamily {
    fn name(&self) -> &str {
        "convex_perturb"
    }

    fn decision_dim(&self) -> usize {
        self.a.len()
    }

    fn instance_dim(&self) -> usize {
        self.a.len()
    }

    fn objective(&self, theta: &[f64], inst: &Instance) -> f64 {
        self.view(inst).objective(theta)
    }

    fn gradient(&self, theta: &[f64], inst: &Instance) -> Vec<f64> {
        self.view(inst).subgradient(theta)
    }

    fn project(&self, theta: &[f64], inst: &Instance) -> Vec<f64> {
        self.view(inst).project(theta).expect("classifier checked nonzero at construction")
    }

    fn sample_instance(&self, rng: &mut SeededRng) -> Instance {
        Instance::new((0..self.a.len()).map(|_| rng.sample(StandardNormal)).collect())
    }

    fn sample_init(&self, inst: &Instance, rng: &mut SeededRng) -> Vec<f64> {
        let raw: Vec<f64> = (0..self.a.len()).map(|_| rng.random_range(0.0..1.0)).collect();
        self.project(&raw, inst)
    }

    fn default_step_rule(&self) -> StepRule {
        StepRule::new(1.0, 25.0).expect("constant step rule")
    }

    fn default_iters(&self) -> usize {
        100
    }

    fn is_nonsmooth(&self) -> bool {
        true
    }

    fn constraint_check(&self, theta: &[f64], inst: &Instance) -> Option<bool> {
        Some(self.view(inst).margin(theta) <= CONSTRAINT_TOL)
    }
}
