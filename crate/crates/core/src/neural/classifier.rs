use super::mlp::{Mlp, MlpSpec};
use super::train::{train, Dataset, TrainConfig, TrainHistory};
use crate::error::{Error, Result};

pub const REQUIRED_ACCURACY: f64 = 0.95;

/// Points with labels in {+1, −1}.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LabeledData {
    pub points: Vec<Vec<f64>>,
    pub labels: Vec<f64>,
}

impl LabeledData {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn validate(&self) -> Result<()> {
        if self.points.len() != self.labels.len() {
            return Err(Error::input("points and labels differ in length"));
        }
        if self.labels.iter().any(|y| *y != 1.0 && *y != -1.0) {
            return Err(Error::input("labels must be +1 or -1"));
        }
        Ok(())
    }
}

/// Fraction of points where `sign(u(x))` matches the label (zero counts as +1).
pub fn sign_accuracy(model: &Mlp, data: &LabeledData) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::input("accuracy of an empty set"));
    }
    let mut hits = 0usize;
    for (x, y) in data.points.iter().zip(&data.labels) {
        let u = model.forward(x)?[0];
        let pred = if u < 0.0 { -1.0 } else { 1.0 };
        if pred == *y {
            hits += 1;
        }
    }
    Ok(hits as f64 / data.len() as f64)
}

/// Fits a scalar logit to ±1 targets under MSE and checks held-out accuracy.
pub fn train_classifier(
    train_set: &LabeledData,
    holdout: &LabeledData,
    spec: MlpSpec,
    config: &TrainConfig,
) -> Result<(Mlp, TrainHistory, f64)> {
    train_set.validate()?;
    holdout.validate()?;
    if spec.output_dim != 1 {
        return Err(Error::input("classifier must have a scalar output"));
    }
    if !train_set.labels.contains(&1.0) || !train_set.labels.contains(&-1.0) {
        return Err(Error::input("classifier needs both classes"));
    }
    let targets: Vec<Vec<f64>> = train_set.labels.iter().map(|y| vec![*y]).collect();
    let data = Dataset::from_rows(&train_set.points, &targets)?;
    let mut model = Mlp::new(spec)?;
    let history = train(&mut model, &data, config)?;
    let accuracy = sign_accuracy(&model, holdout)?;
    if accuracy < REQUIRED_ACCURACY {
        return Err(Error::ClassifierUnderfit {
            accuracy,
            required: REQUIRED_ACCURACY,
        });
    }
    Ok((model, history, accuracy))
}
