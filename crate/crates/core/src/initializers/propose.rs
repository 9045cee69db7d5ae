use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::learners::{learner_input, vanilla_input};
use crate::error::{Error, Result};
use crate::neural::Regressor;
use crate::problems::{Instance, ProblemFamily};
use crate::seed::SeededRng;

/// Size of the uniform jitter added to the zero start.
pub const ZERO_NOISE: f64 = 1e-6;

/// Configuration-level choice of initializer.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitializerKind {
    Zero,
    Random,
    MultiStart {
        #[serde(default = "default_candidates")]
        candidates: usize,
    },
    Maml,
    ValInit {
        #[serde(default)]
        candidates: Option<usize>,
    },
    ArgInit,
    Vanilla,
}

fn default_candidates() -> usize {
    2
}

impl InitializerKind {
    pub fn label(&self) -> &'static str {
        match self {
            InitializerKind::Zero => "zero",
            InitializerKind::Random => "random",
            InitializerKind::MultiStart { .. } => "multi_start",
            InitializerKind::Maml => "maml",
            InitializerKind::ValInit { .. } => "val_init",
            InitializerKind::ArgInit => "arg_init",
            InitializerKind::Vanilla => "vanilla",
        }
    }

    /// Whether the method runs GD from a single start.
    pub fn is_single_start(&self) -> bool {
        !matches!(self, InitializerKind::MultiStart { .. })
    }
}

/// A ready-to-use initializer with any trained state attached.
#[derive(Clone, Debug)]
pub enum Initializer {
    Zero,
    Random,
    MultiStart { candidates: usize },
    Maml { theta: Vec<f64> },
    ValInit { h_val: Arc<Regressor>, candidates: usize },
    ArgInit { h_arg: Arc<Regressor> },
    Vanilla { psi: Arc<Regressor> },
}

/// Trained state from which initializers are assembled.
#[derive(Clone, Debug, Default)]
pub struct TrainedModels {
    pub h_val: Option<Arc<Regressor>>,
    pub h_arg: Option<Arc<Regressor>>,
    pub psi: Option<Arc<Regressor>>,
    pub maml_theta: Option<Vec<f64>>,
}

impl Initializer {
    pub fn build(kind: &InitializerKind, models: &TrainedModels, default_candidates: usize) -> Result<Self> {
        let missing = |what: &str| Error::config(format!("initializer `{}` needs a trained {what}", kind.label()));
        Ok(match kind {
            InitializerKind::Zero => Initializer::Zero,
            InitializerKind::Random => Initializer::Random,
            InitializerKind::MultiStart { candidates } => {
                if *candidates == 0 {
                    return Err(Error::config("multi-start needs at least one candidate"));
                }
                Initializer::MultiStart {
                    candidates: *candidates,
                }
            }
            InitializerKind::Maml => Initializer::Maml {
                theta: models.maml_theta.clone().ok_or_else(|| missing("MAML start"))?,
            },
            InitializerKind::ValInit { candidates } => {
                let candidates = candidates.unwrap_or(default_candidates);
                if candidates == 0 {
                    return Err(Error::config("val-init needs at least one candidate"));
                }
                Initializer::ValInit {
                    h_val: models.h_val.clone().ok_or_else(|| missing("value model"))?,
                    candidates,
                }
            }
            InitializerKind::ArgInit => Initializer::ArgInit {
                h_arg: models.h_arg.clone().ok_or_else(|| missing("argument model"))?,
            },
            InitializerKind::Vanilla => Initializer::Vanilla {
                psi: models.psi.clone().ok_or_else(|| missing("pairwise model"))?,
            },
        })
    }
}

/// Start point(s) handed to the solver. Only multi-start yields several.
#[derive(Clone, Debug, PartialEq)]
pub enum Proposal {
    Single(Vec<f64>),
    Multi(Vec<Vec<f64>>),
}

impl Proposal {
    pub fn starts(&self) -> Vec<&[f64]> {
        match self {
            Proposal::Single(t) => vec![t.as_slice()],
            Proposal::Multi(ts) => ts.iter().map(Vec::as_slice).collect(),
        }
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Scores `h_val(θ̂, x)` for each candidate.
pub fn val_init_scores(h_val: &Regressor, candidates: &[Vec<f64>], x: &[f64]) -> Result<Vec<f64>> {
    candidates
        .iter()
        .map(|c| Ok(h_val.predict(&learner_input(c, x))?[0]))
        .collect()
}

/// Index of the smallest score; the lowest index wins ties.
pub fn argmin_first(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s < scores[best] {
            best = i;
        }
    }
    best
}

/// Probability of keeping θ̂₀ under the pairwise model.
pub fn vanilla_probability(psi: &Regressor, init0: &[f64], init1: &[f64], x: &[f64]) -> Result<f64> {
    Ok(sigmoid(psi.predict(&vanilla_input(init0, init1, x))?[0]))
}

fn check_dims(reg: &Regressor, input: usize, output: usize, what: &str) -> Result<()> {
    if reg.input_dim() != input || reg.output_dim() != output {
        return Err(Error::config(format!(
            "{what} model is {}→{}, family needs {input}→{output}",
            reg.input_dim(),
            reg.output_dim()
        )));
    }
    Ok(())
}

pub fn propose(init: &Initializer, family: &dyn ProblemFamily, inst: &Instance, rng: &mut SeededRng) -> Result<Proposal> {
    let (m, n) = (family.decision_dim(), family.instance_dim());
    Ok(match init {
        Initializer::Zero => {
            let jitter: Vec<f64> = (0..m).map(|_| rng.random_range(-ZERO_NOISE..ZERO_NOISE)).collect();
            Proposal::Single(family.project(&jitter, inst))
        }
        Initializer::Random => Proposal::Single(family.sample_init(inst, rng)),
        Initializer::MultiStart { candidates } => {
            Proposal::Multi((0..*candidates).map(|_| family.sample_init(inst, rng)).collect())
        }
        Initializer::Maml { theta } => {
            if theta.len() != m {
                return Err(Error::config("MAML start has the wrong dimension"));
            }
            Proposal::Single(family.project(theta, inst))
        }
        Initializer::ValInit { h_val, candidates } => {
            check_dims(h_val, m + n, 1, "value")?;
            let pool: Vec<Vec<f64>> = (0..*candidates).map(|_| family.sample_init(inst, rng)).collect();
            let scores = val_init_scores(h_val, &pool, &inst.x)?;
            Proposal::Single(pool[argmin_first(&scores)].clone())
        }
        Initializer::ArgInit { h_arg } => {
            check_dims(h_arg, m + n, m, "argument")?;
            let start = family.sample_init(inst, rng);
            let pred = h_arg.predict(&learner_input(&start, &inst.x))?;
            Proposal::Single(family.project(&pred, inst))
        }
        Initializer::Vanilla { psi } => {
            check_dims(psi, 2 * m + n, 1, "pairwise")?;
            let init0 = family.sample_init(inst, rng);
            let init1 = family.sample_init(inst, rng);
            let p = vanilla_probability(psi, &init0, &init1, &inst.x)?;
            Proposal::Single(if rng.random::<f64>() < p { init0 } else { init1 })
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::{Layer, Mlp, Standardizer};
    use crate::problems::{AckleyFamily, SumRateFamily};
    use crate::seed::seeded;
    use ndarray::{Array1, Array2};

    /// Linear regressor `w·input + b`.
    fn linear(weights: Vec<f64>, bias: f64) -> Regressor {
        let d = weights.len();
        let mlp = Mlp::from_layers(
            vec![Layer {
                weight: Array2::from_shape_vec((1, d), weights).unwrap(),
                bias: Array1::from(vec![bias]),
            }],
            0,
        )
        .unwrap();
        Regressor {
            model: mlp,
            input_scaling: Standardizer::identity(d),
            target_scaling: Standardizer::identity(1),
        }
    }

    #[test]
    fn argmin_prefers_lowest_index_on_ties() {
        assert_eq!(argmin_first(&[3.0, 1.0]), 1);
        assert_eq!(argmin_first(&[1.0, 1.0, 0.5, 0.5]), 2);
        assert_eq!(argmin_first(&[2.0]), 0);
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
    }

    #[test]
    fn val_init_picks_lowest_score() {
        // Score = first coordinate of θ̂, so the smaller θ̂₀ wins.
        let fam = AckleyFamily::default();
        let h = Arc::new(linear(vec![1.0, 0.0, 0.0, 0.0, 0.0], 0.0));
        let init = Initializer::ValInit {
            h_val: h.clone(),
            candidates: 4,
        };
        let inst = fam.sample_instance(&mut seeded(0));
        let mut rng = seeded(1);
        let mut replay = seeded(1);
        let got = propose(&init, &fam, &inst, &mut rng).unwrap();
        let pool: Vec<Vec<f64>> = (0..4).map(|_| fam.sample_init(&inst, &mut replay)).collect();
        let best = pool.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
        assert_eq!(got, Proposal::Single(pool.into_iter().find(|p| p[0] == best).unwrap()));
    }

    #[test]
    fn vanilla_zero_score_is_a_fair_coin() {
        let fam = AckleyFamily::default();
        let psi = Arc::new(linear(vec![0.0; 7], 0.0));
        let init = Initializer::Vanilla { psi };
        let inst = fam.sample_instance(&mut seeded(0));
        let mut rng = seeded(2);
        let n = 10_000;
        let mut first = 0usize;
        for _ in 0..n {
            let mut replay = rng.clone();
            let a = fam.sample_init(&inst, &mut replay);
            if propose(&init, &fam, &inst, &mut rng).unwrap() == Proposal::Single(a) {
                first += 1;
            }
        }
        // χ² with one degree of freedom, 99.9% critical value 10.83.
        let e = n as f64 / 2.0;
        let chi2 = (first as f64 - e).powi(2) / e * 2.0;
        assert!(chi2 < 10.83, "{first}");
    }

    #[test]
    fn arg_init_output_is_feasible() {
        let fam = SumRateFamily::new(3, 10.0);
        // Pushes every coordinate far outside [0, 1].
        let mut w = Array2::zeros((3, 12));
        for i in 0..3 {
            w[[i, i]] = 10.0;
        }
        let mlp = Mlp::from_layers(
            vec![Layer {
                weight: w,
                bias: Array1::from(vec![-3.0, 2.0, 0.0]),
            }],
            0,
        )
        .unwrap();
        let h_arg = Arc::new(Regressor {
            model: mlp,
            input_scaling: Standardizer::identity(12),
            target_scaling: Standardizer::identity(3),
        });
        let init = Initializer::ArgInit { h_arg };
        let mut rng = seeded(3);
        for _ in 0..50 {
            let inst = fam.sample_instance(&mut rng);
            let Proposal::Single(t) = propose(&init, &fam, &inst, &mut rng).unwrap() else {
                panic!()
            };
            assert_eq!(fam.project(&t, &inst), t);
        }
    }

    #[test]
    fn missing_models_are_config_errors() {
        let err = Initializer::build(&InitializerKind::ArgInit, &TrainedModels::default(), 2).unwrap_err();
        assert!(err.is_config());
        let ok = Initializer::build(&InitializerKind::ValInit { candidates: None }, &TrainedModels {
            h_val: Some(Arc::new(linear(vec![0.0; 5], 0.0))),
            ..TrainedModels::default()
        }, 3)
        .unwrap();
        assert!(matches!(ok, Initializer::ValInit { candidates: 3, .. }));
    }

    #[test]
    fn zero_is_tiny() {
        let fam = AckleyFamily::default();
        let inst = fam.sample_instance(&mut seeded(0));
        let Proposal::Single(t) = propose(&Initializer::Zero, &fam, &inst, &mut seeded(4)).unwrap() else {
            panic!()
        };
        assert!(t.iter().all(|v| v.abs() <= ZERO_NOISE));
    }

    #[test]
    fn kinds_parse_from_json() {
        let k: InitializerKind = serde_json::from_str(r#"{"kind":"multi_start","candidates":5}"#).unwrap();
        assert_eq!(k, InitializerKind::MultiStart { candidates: 5 });
        let k: InitializerKind = serde_json::from_str(r#"{"kind":"val_init"}"#).unwrap();
        assert_eq!(k, InitializerKind::ValInit { candidates: None });
    }
}
