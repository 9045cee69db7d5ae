use std::f64::consts::{E, PI};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Instance, ProblemFamily};
use crate::gd::StepRule;
use crate::seed::SeededRng;

/// Shape parameters of a two-dimensional Ackley surface centred at (c, c).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AckleyParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl AckleyParams {
    pub fn sample(rng: &mut SeededRng) -> Self {
        Self {
            a: 20.0 + rng.random_range(0.0..10.0),
            b: 0.2 + rng.random_range(0.0..0.1),
            c: rng.random_range(0.0..2.0),
        }
    }

    pub fn from_instance(inst: &Instance) -> Self {
        Self {
            a: inst.x[0],
            b: inst.x[1],
            c: inst.x[2],
        }
    }

    pub fn to_instance(self) -> Instance {
        Instance::new(vec![self.a, self.b, self.c])
    }
}

pub fn ackley_value(pt: [f64; 2], p: &AckleyParams) -> f64 {
    let (u, v) = (pt[0] - p.c, pt[1] - p.c);
    let r = (u * u + v * v).sqrt();
    let radial = -p.a * (-p.b * r / 2.0).exp();
    let wave = -(((2.0 * PI * u).cos() + (2.0 * PI * v).cos()) / 2.0).exp();
    radial + wave + E + p.a
}

/// Analytic gradient; zero at the centre where the radial term has a kink.
pub fn ackley_gradient(pt: [f64; 2], p: &AckleyParams) -> [f64; 2] {
    let (u, v) = (pt[0] - p.c, pt[1] - p.c);
    let r = (u * u + v * v).sqrt();
    if r == 0.0 {
        return [0.0, 0.0];
    }
    let radial = p.a * p.b / 2.0 * (-p.b * r / 2.0).exp() / r;
    let wave = PI * (((2.0 * PI * u).cos() + (2.0 * PI * v).cos()) / 2.0).exp();
    [
        radial * u + wave * (2.0 * PI * u).sin(),
        radial * v + wave * (2.0 * PI * v).sin(),
    ]
}

/// Ackley surfaces with random shape and centre; starts uniform on `[−5, 5]²`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AckleyFamily {
    pub init_half_width: f64,
}

impl Default for AckleyFamily {
    fn default() -> Self {
        Self { init_half_width: 5.0 }
    }
}

impl ProblemFamily for AckleyFamily {
    fn name(&self) -> &str {
        "ackley"
    }

    fn decision_dim(&self) -> usize {
        2
    }

    fn instance_dim(&self) -> usize {
        3
    }

    fn objective(&self, theta: &[f64], inst: &Instance) -> f64 {
        ackley_value([theta[0], theta[1]], &AckleyParams::from_instance(inst))
    }

    fn gradient(&self, theta: &[f64], inst: &Instance) -> Vec<f64> {
        ackley_gradient([theta[0], theta[1]], &AckleyParams::from_instance(inst)).to_vec()
    }

    fn project(&self, theta: &[f64], _inst: &Instance) -> Vec<f64> {
        theta.to_vec()
    }

    fn sample_instance(&self, rng: &mut SeededRng) -> Instance {
        AckleyParams::sample(rng).to_instance()
    }

    fn sample_init(&self, _inst: &Instance, rng: &mut SeededRng) -> Vec<f64> {
        let w = self.init_half_width;
        vec![rng.random_range(-w..w), rng.random_range(-w..w)]
    }

    fn default_step_rule(&self) -> StepRule {
        StepRule::new(0.25, 1.0).expect("constant step rule")
    }

    fn default_iters(&self) -> usize {
        100
    }
}
