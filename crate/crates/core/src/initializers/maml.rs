use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::ProblemFamily;
use crate::seed::{stream, SeededRng};

/// First-order MAML settings. `beta` defaults to `0.01 / batch`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MamlConfig {
    pub outer_iters: Option<usize>,
    pub batch: usize,
    pub alpha: f64,
    pub beta: Option<f64>,
}

impl Default for MamlConfig {
    fn default() -> Self {
        Self {
            outer_iters: None,
            batch: 32,
            alpha: 0.01,
            beta: None,
        }
    }
}

impl MamlConfig {
    pub fn beta(&self) -> f64 {
        self.beta.unwrap_or(0.01 / self.batch as f64)
    }
}

/// Single start point fitted across sampled instances.
///
/// Each outer step draws `batch` instances, takes one projected inner step
/// `θ_t = Π(θ − α∇f(θ, X_t))` per instance, then moves
/// `θ ← Π(θ − β Σ_t ∇f(θ_t, X_t))`. The outer projection is onto the part of
/// the feasible set shared by all instances. No second-order terms.
pub fn maml_train(family: &dyn ProblemFamily, config: &MamlConfig, outer_iters: usize, seed: u64) -> Result<Vec<f64>> {
    if config.batch == 0 {
        return Err(Error::config("MAML batch size must be >= 1"));
    }
    if !(config.alpha >= 0.0 && config.beta() >= 0.0) {
        return Err(Error::config("MAML step sizes must be >= 0"));
    }
    let mut rng = stream(seed, &[0]);
    let start_inst = family.sample_instance(&mut rng);
    let mut theta = family.project_shared(&family.sample_init(&start_inst, &mut rng));
    let (alpha, beta) = (config.alpha, config.beta());
    for it in 0..outer_iters {
        let mut rng: SeededRng = stream(seed, &[1, it as u64]);
        let mut total = vec![0.0; theta.len()];
        for _ in 0..config.batch {
            let inst = family.sample_instance(&mut rng);
            let g = family.gradient(&theta, &inst);
            let inner: Vec<f64> = theta.iter().zip(&g).map(|(t, g)| t - alpha * g).collect();
            let adapted = family.project(&inner, &inst);
            let g_t = family.gradient(&adapted, &inst);
            for (acc, v) in total.iter_mut().zip(g_t) {
                *acc += v;
            }
        }
        if total.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                quantity: "MAML gradient",
                iteration: it,
            });
        }
        let moved: Vec<f64> = theta.iter().zip(&total).map(|(t, g)| t - beta * g).collect();
        theta = family.project_shared(&moved);
    }
    Ok(theta)
}
