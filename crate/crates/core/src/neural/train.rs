use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::mlp::{AdamConfig, Mlp, MlpSpec};
use crate::error::{Error, Result};
use crate::seed::{derive_seed, seeded};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub validation_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            epochs: 100,
            batch_size: 32,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            validation_fraction: 0.1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config(format!("learning_rate must be > 0, got {}", self.learning_rate)));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::config(format!(
                "validation_fraction must be in [0, 1), got {}",
                self.validation_fraction
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size must be >= 1"));
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            eps: self.adam_eps,
        }
    }
}

/// Samples as rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub inputs: Array2<f64>,
    pub targets: Array2<f64>,
}

impl Dataset {
    pub fn new(inputs: Array2<f64>, targets: Array2<f64>) -> Result<Self> {
        if inputs.nrows() != targets.nrows() {
            return Err(Error::input(format!(
                "{} inputs but {} targets",
                inputs.nrows(),
                targets.nrows()
            )));
        }
        Ok(Self { inputs, targets })
    }

    pub fn from_rows(inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<Self> {
        Self::new(to_matrix(inputs)?, to_matrix(targets)?)
    }

    pub fn len(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn select(&self, idx: &[usize]) -> Dataset {
        Dataset {
            inputs: self.inputs.select(Axis(0), idx),
            targets: self.targets.select(Axis(0), idx),
        }
    }
}

pub(crate) fn to_matrix(rows: &[Vec<f64>]) -> Result<Array2<f64>> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::input("ragged rows"));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Array2::from_shape_vec((rows.len(), cols), flat).map_err(|e| Error::input(e.to_string()))
}

/// Per-epoch mean squared errors; `val_mse` is empty without a validation split.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub train_mse: Vec<f64>,
    pub val_mse: Vec<f64>,
}

impl TrainHistory {
    pub fn first_last_val(&self) -> Option<(f64, f64)> {
        Some((*self.val_mse.first()?, *self.val_mse.last()?))
    }
}

/// Mini-batch Adam on the batch MSE.
///
/// The data are shuffled once; the head `validation_fraction` becomes the
/// validation split and the rest is reshuffled every epoch. Shuffling draws
/// from a stream derived from the model's seed.
pub fn train(model: &mut Mlp, data: &Dataset, config: &TrainConfig) -> Result<TrainHistory> {
    config.validate()?;
    if data.len() < 2 {
        return Err(Error::input(format!("need at least 2 samples, got {}", data.len())));
    }
    if data.inputs.ncols() != model.input_dim() || data.targets.ncols() != model.output_dim() {
        return Err(Error::input(format!(
            "dataset is {}→{}, network is {}→{}",
            data.inputs.ncols(),
            data.targets.ncols(),
            model.input_dim(),
            model.output_dim()
        )));
    }
    let mut history = TrainHistory::default();
    if config.epochs == 0 {
        return Ok(history);
    }

    let mut rng = seeded(derive_seed(model.spec().seed, &[1]));
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut rng);
    let n_val = ((data.len() as f64) * config.validation_fraction).floor() as usize;
    let n_val = n_val.min(data.len() - 1);
    let val = data.select(&order[..n_val]);
    let fit = data.select(&order[n_val..]);

    let adam = config.adam();
    let mut idx: Vec<usize> = (0..fit.len()).collect();
    for epoch in 1..=config.epochs {
        idx.shuffle(&mut rng);
        for chunk in idx.chunks(config.batch_size) {
            let xb = fit.inputs.select(Axis(0), chunk);
            let yb = fit.targets.select(Axis(0), chunk);
            let (grads, loss) = model.backward(xb.view(), yb.view())?;
            if !loss.is_finite() {
                return Err(Error::TrainingDiverged { epoch });
            }
            model.adam_step(&grads, &adam)?;
        }
        if !model.all_finite() {
            return Err(Error::TrainingDiverged { epoch });
        }
        let train_mse = model.mse(fit.inputs.view(), fit.targets.view())?;
        if !train_mse.is_finite() {
            return Err(Error::TrainingDiverged { epoch });
        }
        history.train_mse.push(train_mse);
        if !val.is_empty() {
            history.val_mse.push(model.mse(val.inputs.view(), val.targets.view())?);
        }
    }
    Ok(history)
}

/// Column-wise affine normalization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    /// Columns with (near-)zero spread get unit scale.
    pub fn fit(data: ArrayView2<f64>) -> Self {
        let n = data.nrows().max(1) as f64;
        let mean: Array1<f64> = data.sum_axis(Axis(0)) / n;
        let std: Vec<f64> = data
            .axis_iter(Axis(1))
            .zip(mean.iter())
            .map(|(col, m)| {
                let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
                let s = var.sqrt();
                if s < 1e-12 {
                    1.0
                } else {
                    s
                }
            })
            .collect();
        Self {
            mean: mean.to_vec(),
            std,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            std: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        v.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((x, m), s)| (x - m) / s)
            .collect()
    }

    pub fn apply_matrix(&self, data: ArrayView2<f64>) -> Array2<f64> {
        let mut out = data.to_owned();
        for mut row in out.axis_iter_mut(Axis(0)) {
            for ((x, m), s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
                *x = (*x - m) / s;
            }
        }
        out
    }

    pub fn invert(&self, v: &[f64]) -> Vec<f64> {
        v.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((z, m), s)| z * s + m)
            .collect()
    }
}

/// An MLP wrapped in input and target standardization.
#[derive(Clone, Debug, PartialEq)]
pub struct Regressor {
    pub model: Mlp,
    pub input_scaling: Standardizer,
    pub target_scaling: Standardizer,
}

impl Regressor {
    /// Fits the scalings on `data`, then trains a fresh network from `spec`.
    ///
    /// Losses in the returned history are in the standardized target scale.
    pub fn fit(spec: MlpSpec, data: &Dataset, config: &TrainConfig) -> Result<(Self, TrainHistory)> {
        if spec.input_dim != data.inputs.ncols() || spec.output_dim != data.targets.ncols() {
            return Err(Error::input(format!(
                "spec is {}→{}, data is {}→{}",
                spec.input_dim,
                spec.output_dim,
                data.inputs.ncols(),
                data.targets.ncols()
            )));
        }
        let input_scaling = Standardizer::fit(data.inputs.view());
        let target_scaling = Standardizer::fit(data.targets.view());
        let scaled = Dataset {
            inputs: input_scaling.apply_matrix(data.inputs.view()),
            targets: target_scaling.apply_matrix(data.targets.view()),
        };
        let mut model = Mlp::new(spec)?;
        let history = train(&mut model, &scaled, config)?;
        Ok((
            Self {
                model,
                input_scaling,
                target_scaling,
            },
            history,
        ))
    }

    pub fn input_dim(&self) -> usize {
        self.model.input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.model.output_dim()
    }

    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        let z = self.model.forward(&self.input_scaling.apply(input))?;
        Ok(self.target_scaling.invert(&z))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::seeded;
    use rand::Rng;

    fn identity_data(n: usize, seed: u64) -> Dataset {
        let mut rng = seeded(seed);
        let xs: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random_range(-1.0..1.0)]).collect();
        Dataset::from_rows(&xs, &xs).unwrap()
    }

    #[test]
    fn learns_identity() {
        let data = identity_data(500, 1);
        let mut m = Mlp::new(MlpSpec::new(1, 1, vec![16, 16], 3)).unwrap();
        let h = train(&mut m, &data, &TrainConfig::default()).unwrap();
        assert!(*h.val_mse.last().unwrap() < 0.01, "{:?}", h.val_mse.last());
        assert!(h.train_mse.last().unwrap() < h.train_mse.first().unwrap());
    }

    #[test]
    fn zero_epochs_is_noop() {
        let data = identity_data(50, 2);
        let mut m = Mlp::new(MlpSpec::new(1, 1, vec![4], 3)).unwrap();
        let before = m.clone();
        let cfg = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        let h = train(&mut m, &data, &cfg).unwrap();
        assert!(h.train_mse.is_empty() && h.val_mse.is_empty());
        assert_eq!(m, before);
    }

    #[test]
    fn training_is_deterministic() {
        let data = identity_data(200, 4);
        let cfg = TrainConfig {
            epochs: 5,
            ..TrainConfig::default()
        };
        let run = || {
            let mut m = Mlp::new(MlpSpec::new(1, 1, vec![8], 9)).unwrap();
            train(&mut m, &data, &cfg).unwrap();
            m.params_flat()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn diverging_training_reports_epoch() {
        let data = identity_data(64, 5);
        let mut m = Mlp::new(MlpSpec::new(1, 1, vec![4], 1)).unwrap();
        let cfg = TrainConfig {
            learning_rate: 1e300,
            epochs: 3,
            ..TrainConfig::default()
        };
        let err = train(&mut m, &data, &cfg).unwrap_err();
        assert!(matches!(err, Error::TrainingDiverged { epoch: 1 }), "{err:?}");
    }

    #[test]
    fn rejects_tiny_and_bad_config() {
        let data = identity_data(1, 6);
        let mut m = Mlp::new(MlpSpec::new(1, 1, vec![4], 1)).unwrap();
        assert!(train(&mut m, &data, &TrainConfig::default()).is_err());
        let data = identity_data(10, 6);
        let cfg = TrainConfig {
            validation_fraction: 1.0,
            ..TrainConfig::default()
        };
        assert!(train(&mut m, &data, &cfg).is_err());
    }

    #[test]
    fn regressor_fits_constant() {
        let mut rng = seeded(7);
        let xs: Vec<Vec<f64>> = (0..1000)
            .map(|_| vec![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)])
            .collect();
        let ys: Vec<Vec<f64>> = xs.iter().map(|_| vec![7.0]).collect();
        let data = Dataset::from_rows(&xs, &ys).unwrap();
        let (reg, _) = Regressor::fit(MlpSpec::new(2, 1, vec![8], 0), &data, &TrainConfig::default()).unwrap();
        for x in xs.iter().take(20) {
            let p = reg.predict(x).unwrap()[0];
            assert!((p - 7.0).powi(2) < 0.01, "{p}");
        }
    }

    #[test]
    fn standardizer_round_trip() {
        let d = ndarray::array![[1.0, 5.0], [3.0, 5.0], [5.0, 5.0]];
        let s = Standardizer::fit(d.view());
        assert_eq!(s.std[1], 1.0);
        let z = s.apply(&[3.0, 5.0]);
        assert_eq!(z, vec![0.0, 0.0]);
        assert_eq!(s.invert(&s.apply(&[2.0, 7.0])), vec![2.0, 7.0]);
    }
}
