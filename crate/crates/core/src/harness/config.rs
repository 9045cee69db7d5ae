use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gd::{GdConfig, StepRule};
use crate::initializers::{InitializerKind, MamlConfig};
use crate::neural::TrainConfig;
use crate::problems::{AckleyFamily, BlobConfig, ConvexPerturbFamily, ProblemFamily, SumRateFamily, ToyAdvFamily};
use crate::seed::seeded;

/// Problem family and its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilyConfig {
    Ackley {
        #[serde(default = "five")]
        init_half_width: f64,
    },
    SumRate {
        #[serde(default = "fifteen")]
        users: usize,
        #[serde(default = "ten")]
        channel_max: f64,
    },
    ConvexPerturb {
        m: usize,
        #[serde(default = "one")]
        beta: f64,
    },
    ToyAdv {
        #[serde(default)]
        blobs: BlobConfig,
        #[serde(default = "toy_margin")]
        margin: f64,
        #[serde(default = "toy_penalty")]
        penalty: f64,
        #[serde(default)]
        classifier: TrainConfig,
    },
}

fn five() -> f64 {
    5.0
}
fn fifteen() -> usize {
    15
}
fn ten() -> f64 {
    10.0
}
fn one() -> f64 {
    1.0
}
fn toy_margin() -> f64 {
    0.2
}
fn toy_penalty() -> f64 {
    10.0
}

impl FamilyConfig {
    pub fn label(&self) -> &'static str {
        match self {
            FamilyConfig::Ackley { .. } => "ackley",
            FamilyConfig::SumRate { .. } => "sum_rate",
            FamilyConfig::ConvexPerturb { .. } => "convex_perturb",
            FamilyConfig::ToyAdv { .. } => "toy_adv",
        }
    }

    /// Builds the family. Shared random state (the convex classifier, the toy
    /// network) is drawn from `seed`.
    pub fn build(&self, seed: u64) -> Result<Arc<dyn ProblemFamily>> {
        Ok(match self {
            FamilyConfig::Ackley { init_half_width } => {
                if !(*init_half_width > 0.0) {
                    return Err(Error::config("init_half_width must be > 0"));
                }
                Arc::new(AckleyFamily {
                    init_half_width: *init_half_width,
                })
            }
            FamilyConfig::SumRate { users, channel_max } => {
                if *users == 0 || !(*channel_max > 0.0) {
                    return Err(Error::config("sum-rate needs users >= 1 and channel_max > 0"));
                }
                Arc::new(SumRateFamily::new(*users, *channel_max))
            }
            FamilyConfig::ConvexPerturb { m, beta } => {
                Arc::new(ConvexPerturbFamily::sample(*m, *beta, &mut seeded(seed))?)
            }
            FamilyConfig::ToyAdv {
                blobs,
                margin,
                penalty,
                classifier,
            } => Arc::new(ToyAdvFamily::train(blobs.clone(), *margin, *penalty, classifier, seed)?),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GdSettings {
    /// Iteration cap for Phase-1 solves.
    pub phase1_iters: usize,
    /// Test-phase iteration budgets; the curve is reported at each.
    pub budgets: Vec<usize>,
    pub epsilon: f64,
    /// Overrides the family's default step rule.
    pub step_rule: Option<StepRule>,
}

impl Default for GdSettings {
    fn default() -> Self {
        Self {
            phase1_iters: 100,
            budgets: vec![100],
            epsilon: 1e-6,
            step_rule: None,
        }
    }
}

impl GdSettings {
    pub fn rule(&self, family: &dyn ProblemFamily) -> StepRule {
        self.step_rule.unwrap_or_else(|| family.default_step_rule())
    }

    pub fn phase1(&self, family: &dyn ProblemFamily) -> GdConfig {
        GdConfig::new(self.phase1_iters, self.epsilon, self.rule(family))
    }

    pub fn max_budget(&self) -> usize {
        self.budgets.iter().copied().max().unwrap_or(0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnerSettings {
    pub hidden: Vec<usize>,
    pub train: TrainConfig,
}

impl Default for LearnerSettings {
    fn default() -> Self {
        Self {
            hidden: vec![200, 200],
            train: TrainConfig::default(),
        }
    }
}

pub fn default_methods() -> Vec<InitializerKind> {
    vec![
        InitializerKind::Zero,
        InitializerKind::Random,
        InitializerKind::MultiStart { candidates: 2 },
        InitializerKind::Maml,
        InitializerKind::ValInit { candidates: None },
        InitializerKind::ArgInit,
        InitializerKind::Vanilla,
    ]
}

/// Full description of one experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub family: FamilyConfig,
    /// Phase-1 size `N`.
    #[serde(default = "default_phase1")]
    pub phase1_size: usize,
    /// Paired Phase-1 size for the pairwise model; defaults to `N`.
    #[serde(default)]
    pub paired_size: Option<usize>,
    /// Test-instance count `T`.
    #[serde(default = "default_test")]
    pub test_size: usize,
    /// Val-Init candidate count `M`.
    #[serde(default = "default_m")]
    pub candidates: usize,
    #[serde(default)]
    pub gd: GdSettings,
    #[serde(default = "default_methods")]
    pub methods: Vec<InitializerKind>,
    #[serde(default)]
    pub maml: MamlConfig,
    #[serde(default)]
    pub learner: LearnerSettings,
    #[serde(default = "default_bins")]
    pub histogram_bins: usize,
    #[serde(default = "default_confidence")]
    pub confidence: f64,
    #[serde(default)]
    pub seed: u64,
    /// Load `h_val.mlp`, `h_arg.mlp`, `psi.mlp` from here instead of training.
    #[serde(default)]
    pub models_dir: Option<PathBuf>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn default_phase1() -> usize {
    1500
}
fn default_test() -> usize {
    500
}
fn default_m() -> usize {
    2
}
fn default_bins() -> usize {
    30
}
fn default_confidence() -> f64 {
    0.95
}

impl ExperimentConfig {
    pub fn new(family: FamilyConfig) -> Self {
        serde_json::from_value(serde_json::json!({ "family": family })).expect("defaults deserialize")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|source| Error::Json {
            context: "experiment config".into(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.phase1_size == 0 || self.test_size == 0 || self.candidates == 0 {
            return Err(Error::config("phase1_size, test_size and candidates must all be >= 1"));
        }
        if self.paired_size == Some(0) {
            return Err(Error::config("paired_size must be >= 1"));
        }
        if self.methods.is_empty() {
            return Err(Error::config("no initializers selected"));
        }
        if self.gd.budgets.is_empty() {
            return Err(Error::config("at least one iteration budget is required"));
        }
        if !(self.gd.epsilon >= 0.0) {
            return Err(Error::config("epsilon must be >= 0"));
        }
        if self.histogram_bins == 0 {
            return Err(Error::config("histogram_bins must be >= 1"));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::config("confidence must be in (0, 1)"));
        }
        let mut labels: Vec<String> = self.methods.iter().map(method_name).collect();
        labels.sort();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::config("initializer names must be unique"));
        }
        self.learner.train.validate()
    }

    pub fn needs_phase1(&self) -> bool {
        self.methods
            .iter()
            .any(|m| matches!(m, InitializerKind::ValInit { .. } | InitializerKind::ArgInit))
    }

    pub fn needs_paired(&self) -> bool {
        self.methods.contains(&InitializerKind::Vanilla)
    }

    pub fn needs_maml(&self) -> bool {
        self.methods.contains(&InitializerKind::Maml)
    }
}

/// Report name of a method; candidate counts other than the default are
/// spelled out.
pub fn method_name(kind: &InitializerKind) -> String {
    match kind {
        InitializerKind::MultiStart { candidates } => format!("multi_start_{candidates}"),
        InitializerKind::ValInit { candidates: Some(c) } => format!("val_init_{c}"),
        other => other.label().to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_defaults() {
        let cfg = ExperimentConfig::from_json_str(r#"{"family":{"kind":"ackley"}}"#).unwrap();
        assert_eq!(cfg.phase1_size, 1500);
        assert_eq!(cfg.test_size, 500);
        assert_eq!(cfg.candidates, 2);
        assert_eq!(cfg.histogram_bins, 30);
        assert_eq!(cfg.methods.len(), 7);
        assert_eq!(cfg, ExperimentConfig::new(FamilyConfig::Ackley { init_half_width: 5.0 }));
    }

    #[test]
    fn round_trips_through_json() {
        let mut cfg = ExperimentConfig::new(FamilyConfig::ConvexPerturb { m: 50, beta: 1.0 });
        cfg.gd.step_rule = Some(StepRule::new(1.0, 25.0).unwrap());
        cfg.gd.budgets = vec![10];
        assert_eq!(ExperimentConfig::from_json_str(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_sizes() {
        for text in [
            r#"{"family":{"kind":"ackley"},"test_size":0}"#,
            r#"{"family":{"kind":"ackley"},"phase1_size":0}"#,
            r#"{"family":{"kind":"ackley"},"candidates":0}"#,
            r#"{"family":{"kind":"ackley"},"methods":[{"kind":"zero"},{"kind":"zero"}]}"#,
        ] {
            assert!(ExperimentConfig::from_json_str(text).unwrap_err().is_config(), "{text}");
        }
        assert!(ExperimentConfig::from_json_str("{").unwrap_err().is_config());
    }
}
