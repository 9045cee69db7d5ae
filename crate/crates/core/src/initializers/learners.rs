use serde::{Deserialize, Serialize};

use super::phase1::{PairedRecord, Phase1Record};
use crate::error::{Error, Result};
use crate::neural::{Dataset, MlpSpec, Regressor, TrainConfig, TrainHistory};

/// Hidden widths and seed of a learned initializer's network.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnerSpec {
    pub hidden: Vec<usize>,
    pub seed: u64,
}

impl Default for LearnerSpec {
    fn default() -> Self {
        Self {
            hidden: vec![200, 200],
            seed: 0,
        }
    }
}

fn concat(parts: &[&[f64]]) -> Vec<f64> {
    parts.iter().flat_map(|p| p.iter().copied()).collect()
}

fn dims(records: &[Phase1Record]) -> Result<(usize, usize)> {
    if records.len() < 2 {
        return Err(Error::input(format!("need at least 2 records, got {}", records.len())));
    }
    let (m, n) = (records[0].init.len(), records[0].instance.dim());
    for (i, r) in records.iter().enumerate() {
        if r.init.len() != m || r.solution_arg.len() != m || r.instance.dim() != n {
            return Err(Error::input("record dimensions disagree").at_record(i));
        }
    }
    Ok((m, n))
}

/// Input layout shared by `h_val` and `h_arg`: `(θ̂, x)`.
pub fn learner_input(init: &[f64], x: &[f64]) -> Vec<f64> {
    concat(&[init, x])
}

/// Input layout of `Ψ`: `(θ̂₀, θ̂₁, x)`.
pub fn vanilla_input(init0: &[f64], init1: &[f64], x: &[f64]) -> Vec<f64> {
    concat(&[init0, init1, x])
}

/// Regression `(θ̂, x) ↦ Ŷ`.
pub fn train_val_init(
    records: &[Phase1Record],
    spec: &LearnerSpec,
    config: &TrainConfig,
) -> Result<(Regressor, TrainHistory)> {
    let (m, n) = dims(records)?;
    let xs: Vec<Vec<f64>> = records.iter().map(|r| learner_input(&r.init, &r.instance.x)).collect();
    let ys: Vec<Vec<f64>> = records.iter().map(|r| vec![r.solution_val]).collect();
    let data = Dataset::from_rows(&xs, &ys)?;
    let mlp = MlpSpec::new(m + n, 1, spec.hidden.clone(), spec.seed);
    let out = Regressor::fit(mlp, &data, config)?;
    debug_assert_eq!(out.0.input_dim(), m + n);
    Ok(out)
}

/// Regression `(θ̂, x) ↦ θ̂†`.
pub fn train_arg_init(
    records: &[Phase1Record],
    spec: &LearnerSpec,
    config: &TrainConfig,
) -> Result<(Regressor, TrainHistory)> {
    let (m, n) = dims(records)?;
    let xs: Vec<Vec<f64>> = records.iter().map(|r| learner_input(&r.init, &r.instance.x)).collect();
    let ys: Vec<Vec<f64>> = records.iter().map(|r| r.solution_arg.clone()).collect();
    let data = Dataset::from_rows(&xs, &ys)?;
    let mlp = MlpSpec::new(m + n, m, spec.hidden.clone(), spec.seed);
    let out = Regressor::fit(mlp, &data, config)?;
    debug_assert_eq!(out.0.output_dim(), m);
    Ok(out)
}

/// Regression `(θ̂₀, θ̂₁, x) ↦ Ŷ₁ − Ŷ₀`.
pub fn train_vanilla(
    paired: &[PairedRecord],
    spec: &LearnerSpec,
    config: &TrainConfig,
) -> Result<(Regressor, TrainHistory)> {
    if paired.len() < 2 {
        return Err(Error::input(format!("need at least 2 paired records, got {}", paired.len())));
    }
    let (m, n) = (paired[0].init0.len(), paired[0].instance.dim());
    for (i, r) in paired.iter().enumerate() {
        if r.init0.len() != m || r.init1.len() != m || r.instance.dim() != n {
            return Err(Error::input("paired record dimensions disagree").at_record(i));
        }
    }
    let xs: Vec<Vec<f64>> = paired
        .iter()
        .map(|r| vanilla_input(&r.init0, &r.init1, &r.instance.x))
        .collect();
    let ys: Vec<Vec<f64>> = paired.iter().map(|r| vec![r.val1 - r.val0]).collect();
    let data = Dataset::from_rows(&xs, &ys)?;
    let mlp = MlpSpec::new(2 * m + n, 1, spec.hidden.clone(), spec.seed);
    Regressor::fit(mlp, &data, config)
}
