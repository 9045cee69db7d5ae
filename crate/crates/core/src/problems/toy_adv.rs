use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{norm2, Instance, ProblemFamily};
use crate::error::{Error, Result};
use crate::gd::StepRule;
use crate::neural::{train_classifier, LabeledData, Mlp, MlpSpec, TrainConfig};
use crate::seed::{derive_seed, seeded, splitmix_unit, SeededRng};

/// Two Gaussian blobs with means `±offset·(1, …, 1)` and isotropic spread.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BlobConfig {
    pub dim: usize,
    pub train_points: usize,
    pub holdout_points: usize,
    pub mean_offset: f64,
    pub std: f64,
    pub hidden: usize,
}

impl Default for BlobConfig {
    fn default() -> Self {
        Self {
            dim: 2,
            train_points: 1000,
            holdout_points: 1000,
            mean_offset: 1.0,
            std: 0.5,
            hidden: 16,
        }
    }
}

impl BlobConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.train_points < 2 || self.holdout_points == 0 || self.hidden == 0 {
            return Err(Error::config(format!("degenerate blob settings: {self:?}")));
        }
        if !(self.std > 0.0 && self.std.is_finite()) {
            return Err(Error::config(format!("blob std must be > 0, got {}", self.std)));
        }
        Ok(())
    }

    /// One point; the label is drawn with probability 1/2 each.
    pub fn sample_point(&self, rng: &mut SeededRng) -> (Vec<f64>, f64) {
        let y = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let x = (0..self.dim)
            .map(|_| y * self.mean_offset + self.std * rng.sample::<f64, _>(StandardNormal))
            .collect();
        (x, y)
    }

    pub fn sample(&self, n: usize, rng: &mut SeededRng) -> LabeledData {
        let mut data = LabeledData::default();
        for _ in 0..n {
            let (x, y) = self.sample_point(rng);
            data.points.push(x);
            data.labels.push(y);
        }
        data
    }
}

/// View of one attack problem.
#[derive(Clone, Debug, PartialEq)]
pub struct ToyAdvInstance<'a> {
    pub x: &'a [f64],
    /// The classifier's own prediction at x.
    pub y: f64,
    pub margin: f64,
    pub penalty: f64,
}

/// Penalized attack `‖θ‖₂ + λ·max(0, margin + y·u(x+θ))` on a small trained
/// classifier `u`, unconstrained in θ.
#[derive(Clone, Debug)]
pub struct ToyAdvFamily {
    classifier: Mlp,
    pub blobs: BlobConfig,
    pub margin: f64,
    pub penalty: f64,
    pub holdout_accuracy: f64,
}

/// Magnitude of the fixed offset applied at θ = 0 before differentiating.
const ZERO_JITTER: f64 = 1e-6;

impl ToyAdvFamily {
    pub fn from_classifier(classifier: Mlp, blobs: BlobConfig, margin: f64, penalty: f64) -> Result<Self> {
        if !(margin > 0.0) || !(penalty > 0.0) {
            return Err(Error::config(format!(
                "margin and penalty must be > 0, got {margin} and {penalty}"
            )));
        }
        if classifier.input_dim() != blobs.dim || classifier.output_dim() != 1 {
            return Err(Error::config("classifier shape does not match the blob dimension"));
        }
        Ok(Self {
            classifier,
            blobs,
            margin,
            penalty,
            holdout_accuracy: f64::NAN,
        })
    }

    /// Generates the blob data, trains `u`, and checks its held-out accuracy.
    pub fn train(blobs: BlobConfig, margin: f64, penalty: f64, train_cfg: &TrainConfig, seed: u64) -> Result<Self> {
        blobs.validate()?;
        let mut rng = seeded(derive_seed(seed, &[1]));
        let train_set = blobs.sample(blobs.train_points, &mut rng);
        let holdout = blobs.sample(blobs.holdout_points, &mut rng);
        let spec = MlpSpec::new(blobs.dim, 1, vec![blobs.hidden], derive_seed(seed, &[2]));
        let (model, _, acc) = train_classifier(&train_set, &holdout, spec, train_cfg)?;
        let mut fam = Self::from_classifier(model, blobs, margin, penalty)?;
        fam.holdout_accuracy = acc;
        Ok(fam)
    }

    pub fn classifier(&self) -> &Mlp {
        &self.classifier
    }

    pub fn logit(&self, point: &[f64]) -> f64 {
        self.classifier.forward(point).expect("dimension checked at construction")[0]
    }

    pub fn view<'a>(&self, inst: &'a Instance) -> ToyAdvInstance<'a> {
        let y = if self.logit(&inst.x) < 0.0 { -1.0 } else { 1.0 };
        ToyAdvInstance {
            x: &inst.x,
            y,
            margin: self.margin,
            penalty: self.penalty,
        }
    }

    fn shifted(x: &[f64], theta: &[f64]) -> Vec<f64> {
        x.iter().zip(theta).map(|(a, b)| a + b).collect()
    }
}

impl ProblemFamily for ToyAdvFamily {
    fn name(&self) -> &str {
        "toy_adv"
    }

    fn decision_dim(&self) -> usize {
        self.blobs.dim
    }

    fn instance_dim(&self) -> usize {
        self.blobs.dim
    }

    fn objective(&self, theta: &[f64], inst: &Instance) -> f64 {
        let v = self.view(inst);
        let u = self.logit(&Self::shifted(v.x, theta));
        norm2(theta) + v.penalty * (v.margin + v.y * u).max(0.0)
    }

    /// At θ = 0 the norm term is differentiated at a fixed pseudo-random
    /// offset of size 1e-6.
    fn gradient(&self, theta: &[f64], inst: &Instance) -> Vec<f64> {
        let v = self.view(inst);
        let at: Vec<f64> = if theta.iter().all(|t| *t == 0.0) {
            (0..theta.len())
                .map(|i| ZERO_JITTER * (2.0 * splitmix_unit(i as u64) - 1.0))
                .collect()
        } else {
            theta.to_vec()
        };
        let n = norm2(&at);
        let mut g: Vec<f64> = at.iter().map(|t| t / n).collect();
        let point = Self::shifted(v.x, &at);
        let u = self.logit(&point);
        if v.margin + v.y * u > 0.0 {
            let du = self.classifier.input_gradient(&point).expect("scalar classifier");
            for (gi, d) in g.iter_mut().zip(du) {
                *gi += v.penalty * v.y * d;
            }
        }
        g
    }

    fn project(&self, theta: &[f64], _inst: &Instance) -> Vec<f64> {
        theta.to_vec()
    }

    fn sample_instance(&self, rng: &mut SeededRng) -> Instance {
        Instance::new(self.blobs.sample_point(rng).0)
    }

    fn sample_init(&self, _inst: &Instance, rng: &mut SeededRng) -> Vec<f64> {
        (0..self.blobs.dim).map(|_| rng.random_range(0.0..1.0)).collect()
    }

    fn default_step_rule(&self) -> StepRule {
        StepRule::new(1.0, 5.0).expect("constant step rule")
    }

    fn default_iters(&self) -> usize {
        100
    }

    fn constraint_check(&self, theta: &[f64], inst: &Instance) -> Option<bool> {
        let v = self.view(inst);
        Some(v.y * self.logit(&Self::shifted(v.x, theta)) <= 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::Layer;
    use crate::problems::{finite_difference, relative_error};
    use ndarray::array;

    /// u(z) = z₀ + z₁, a linear classifier.
    fn linear_family() -> ToyAdvFamily {
        let mlp = Mlp::from_layers(
            vec![Layer {
                weight: array![[1.0, 1.0]],
                bias: array![0.0],
            }],
            0,
        )
        .unwrap();
        ToyAdvFamily::from_classifier(mlp, BlobConfig::default(), 0.2, 10.0).unwrap()
    }

    #[test]
    fn hinge_at_origin() {
        let fam = linear_family();
        let inst = Instance::new(vec![0.25, 0.25]);
        assert!((fam.objective(&[0.0, 0.0], &inst) - 7.0).abs() < 1e-12);
    }

    #[test]
    fn inactive_hinge_leaves_norm() {
        let fam = linear_family();
        let inst = Instance::new(vec![0.25, 0.25]);
        let theta = [-3.0, -4.0];
        assert_eq!(fam.objective(&theta, &inst), 5.0);
        assert_eq!(fam.constraint_check(&theta, &inst), Some(true));
        assert_eq!(fam.constraint_check(&[0.0, 0.0], &inst), Some(false));
    }

    #[test]
    fn gradient_at_zero_is_finite() {
        let fam = linear_family();
        let inst = Instance::new(vec![0.25, 0.25]);
        let g = fam.gradient(&[0.0, 0.0], &inst);
        assert!(g.iter().all(|v| v.is_finite()));
        assert_eq!(g, fam.gradient(&[0.0, 0.0], &inst));
    }

    #[test]
    fn trained_classifier_gradients() {
        let fam = ToyAdvFamily::train(BlobConfig::default(), 0.2, 10.0, &TrainConfig::default(), 3).unwrap();
        assert!(fam.holdout_accuracy >= 0.95);
        assert!(fam.logit(&[1.0, 1.0]) > 0.0);
        let mut rng = seeded(8);
        let mut checked = 0;
        while checked < 100 {
            let inst = fam.sample_instance(&mut rng);
            let theta = fam.sample_init(&inst, &mut rng);
            let v = fam.view(&inst);
            let hinge = v.margin + v.y * fam.logit(&ToyAdvFamily::shifted(v.x, &theta));
            if hinge.abs() < 1e-3 {
                continue;
            }
            let g = fam.gradient(&theta, &inst);
            let fd = finite_difference(|t| fam.objective(t, &inst), &theta, 1e-5);
            // ReLU kinks inside the difference stencil are rare; allow a retry budget.
            if relative_error(&g, &fd, 1e-8) >= 1e-4 {
                let near_kink = fam.classifier().layers()[0]
                    .weight
                    .outer_iter()
                    .zip(fam.classifier().layers()[0].bias.iter())
                    .any(|(w, b)| {
                        let p = ToyAdvFamily::shifted(v.x, &theta);
                        (w[0] * p[0] + w[1] * p[1] + b).abs() < 1e-4
                    });
                assert!(near_kink, "gradient mismatch away from kinks");
            }
            checked += 1;
        }
    }
}
