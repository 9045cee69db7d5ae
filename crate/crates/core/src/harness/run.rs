use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{method_name, ExperimentConfig};
use super::report::{build_table, ComparisonTable};
use crate::error::{Error, Result};
use crate::gd::{pad_trace, run_gd, GdConfig};
use crate::initializers::{
    collect_paired_phase1, collect_phase1, maml_train, propose, train_arg_init, train_val_init, train_vanilla,
    Initializer, InitializerKind, LearnerSpec, PairedRecord, Phase1Record, TrainedModels,
};
use crate::neural::{load_regressor, Regressor, TrainHistory};
use crate::problems::{Instance, ProblemFamily};
use crate::seed::{derive_seed, stage, stream};

/// Phase-1 data sets.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Phase1Data {
    pub records: Vec<Phase1Record>,
    pub paired: Vec<PairedRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnerSummary {
    pub name: String,
    pub samples: usize,
    pub epochs: usize,
    pub first_val_mse: Option<f64>,
    pub last_val_mse: Option<f64>,
    pub loaded: bool,
}

impl LearnerSummary {
    fn trained(name: &str, samples: usize, h: &TrainHistory) -> Self {
        let fl = h.first_last_val();
        Self {
            name: name.into(),
            samples,
            epochs: h.train_mse.len(),
            first_val_mse: fl.map(|p| p.0),
            last_val_mse: fl.map(|p| p.1),
            loaded: false,
        }
    }

    fn loaded(name: &str) -> Self {
        Self {
            name: name.into(),
            samples: 0,
            epochs: 0,
            first_val_mse: None,
            last_val_mse: None,
            loaded: true,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub learners: Vec<LearnerSummary>,
    pub maml_outer_iters: Option<usize>,
}

/// Outcome of one method on one test instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub instance: usize,
    pub instance_hash: u64,
    pub method: String,
    /// Objective at each configured budget, in config order.
    pub curve: Vec<f64>,
    /// Objective at the largest budget.
    pub final_objective: f64,
    pub iterations_used: usize,
    pub violated: Option<bool>,
    /// Final objective reached from each start, in draw order.
    pub start_objectives: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub collect_seconds: f64,
    pub train_seconds: f64,
    pub evaluate_seconds: f64,
    /// Mean wall time per instance for each method, in roster order.
    pub per_instance_seconds: Vec<(String, f64)>,
}

#[derive(Clone, Debug)]
pub struct RunArtifacts {
    pub config: ExperimentConfig,
    pub table: ComparisonTable,
    pub records: Vec<InstanceRecord>,
    pub training: TrainingSummary,
    pub timing: Timing,
}

/// Phase-1 collection for whichever learners the roster needs.
pub fn collect(cfg: &ExperimentConfig, family: &dyn ProblemFamily) -> Result<Phase1Data> {
    let gd = cfg.gd.phase1(family);
    let mut data = Phase1Data::default();
    if cfg.needs_phase1() {
        let seed = derive_seed(cfg.seed, &[stage::PHASE1]);
        data.records =
            collect_phase1(family, cfg.phase1_size, &gd, seed).map_err(|e| e.in_stage("phase1", seed))?;
    }
    if cfg.needs_paired() {
        let seed = derive_seed(cfg.seed, &[stage::PAIRED]);
        let n = cfg.paired_size.unwrap_or(cfg.phase1_size);
        data.paired = collect_paired_phase1(family, n, &gd, seed).map_err(|e| e.in_stage("paired_phase1", seed))?;
    }
    Ok(data)
}

fn load_model(dir: &Path, file: &str) -> Result<Option<Arc<Regressor>>> {
    let path = dir.join(file);
    if path.exists() {
        Ok(Some(Arc::new(load_regressor(&path)?)))
    } else {
        Ok(None)
    }
}

/// Fits the learned initializers the roster needs, loading any found in
/// `models_dir` instead.
pub fn train_models(
    cfg: &ExperimentConfig,
    family: &dyn ProblemFamily,
    data: &Phase1Data,
) -> Result<(TrainedModels, TrainingSummary)> {
    let mut models = TrainedModels::default();
    let mut summary = TrainingSummary::default();
    let uses = |pred: fn(&InitializerKind) -> bool| cfg.methods.iter().any(pred);
    let spec = |stage_id: u64| LearnerSpec {
        hidden: cfg.learner.hidden.clone(),
        seed: derive_seed(cfg.seed, &[stage_id]),
    };
    let tc = &cfg.learner.train;

    let preloaded = |file: &str| match &cfg.models_dir {
        Some(dir) => load_model(dir, file),
        None => Ok(None),
    };

    if uses(|m| matches!(m, InitializerKind::ValInit { .. })) {
        if let Some(h) = preloaded("h_val.mlp")? {
            models.h_val = Some(h);
            summary.learners.push(LearnerSummary::loaded("h_val"));
        } else {
            let s = spec(stage::TRAIN_VAL);
            let (h, hist) = train_val_init(&data.records, &s, tc).map_err(|e| e.in_stage("train_h_val", s.seed))?;
            models.h_val = Some(Arc::new(h));
            summary.learners.push(LearnerSummary::trained("h_val", data.records.len(), &hist));
        }
    }
    if uses(|m| matches!(m, InitializerKind::ArgInit)) {
        if let Some(h) = preloaded("h_arg.mlp")? {
            models.h_arg = Some(h);
            summary.learners.push(LearnerSummary::loaded("h_arg"));
        } else {
            let s = spec(stage::TRAIN_ARG);
            let (h, hist) = train_arg_init(&data.records, &s, tc).map_err(|e| e.in_stage("train_h_arg", s.seed))?;
            models.h_arg = Some(Arc::new(h));
            summary.learners.push(LearnerSummary::trained("h_arg", data.records.len(), &hist));
        }
    }
    if uses(|m| matches!(m, InitializerKind::Vanilla)) {
        if let Some(h) = preloaded("psi.mlp")? {
            models.psi = Some(h);
            summary.learners.push(LearnerSummary::loaded("psi"));
        } else {
            let s = spec(stage::TRAIN_PSI);
            let (h, hist) = train_vanilla(&data.paired, &s, tc).map_err(|e| e.in_stage("train_psi", s.seed))?;
            models.psi = Some(Arc::new(h));
            summary.learners.push(LearnerSummary::trained("psi", data.paired.len(), &hist));
        }
    }
    if cfg.needs_maml() {
        if let Some(theta) = preloaded_maml(cfg)? {
            models.maml_theta = Some(theta);
            return Ok((models, summary));
        }
        let seed = derive_seed(cfg.seed, &[stage::MAML]);
        let iters = cfg.maml.outer_iters.unwrap_or(cfg.phase1_size);
        models.maml_theta = Some(maml_train(family, &cfg.maml, iters, seed).map_err(|e| e.in_stage("maml", seed))?);
        summary.maml_outer_iters = Some(iters);
    }
    Ok((models, summary))
}

/// File holding a trained MAML start inside a models directory.
pub const MAML_FILE: &str = "maml.json";

fn preloaded_maml(cfg: &ExperimentConfig) -> Result<Option<Vec<f64>>> {
    let Some(path) = cfg.models_dir.as_ref().map(|d| d.join(MAML_FILE)) else {
        return Ok(None);
    };
    if !path.exists() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map(Some).map_err(|source| Error::Json {
        context: path.display().to_string(),
        source,
    })
}

/// Key folded into each method's proposal stream. Random and multi-start
/// share a key so the first multi-start draw is Random's draw.
fn stream_key(kind: &InitializerKind) -> u64 {
    match kind {
        InitializerKind::Zero => 0,
        InitializerKind::Random | InitializerKind::MultiStart { .. } => 1,
        InitializerKind::Maml => 2,
        InitializerKind::ValInit { .. } => 3,
        InitializerKind::ArgInit => 4,
        InitializerKind::Vanilla => 5,
    }
}

/// The `i`-th test instance.
pub fn test_instance(cfg: &ExperimentConfig, family: &dyn ProblemFamily, i: usize) -> Instance {
    family.sample_instance(&mut stream(cfg.seed, &[stage::TEST_INSTANCES, i as u64]))
}

struct Solved {
    curve: Vec<f64>,
    final_objective: f64,
    iterations: usize,
    theta: Vec<f64>,
}

fn solve_traced(family: &dyn ProblemFamily, inst: &Instance, start: &[f64], gd: &GdConfig, budgets: &[usize]) -> Result<Solved> {
    let out = run_gd(family, inst, start, gd, family.is_nonsmooth())?;
    let initial = family.objective(start, inst);
    let trace = pad_trace(out.trace.as_deref().unwrap_or_default(), initial, gd.iter_max);
    let at = |b: usize| if b == 0 { initial } else { trace[b - 1] };
    Ok(Solved {
        curve: budgets.iter().map(|&b| at(b)).collect(),
        final_objective: at(gd.iter_max),
        iterations: out.iterations_used,
        theta: out.theta_star,
    })
}

/// Runs every initializer on the `T` test instances. Returns records ordered
/// by instance then roster position, and per-record wall times.
pub fn evaluate(
    cfg: &ExperimentConfig,
    family: &dyn ProblemFamily,
    models: &TrainedModels,
) -> Result<(Vec<InstanceRecord>, Vec<f64>)> {
    let inits: Vec<(String, u64, Initializer)> = cfg
        .methods
        .iter()
        .map(|k| Ok((method_name(k), stream_key(k), Initializer::build(k, models, cfg.candidates)?)))
        .collect::<Result<_>>()?;
    let budgets = &cfg.gd.budgets;
    let gd = GdConfig::new(cfg.gd.max_budget(), cfg.gd.epsilon, cfg.gd.rule(family)).with_trace();
    let per_instance: Vec<Vec<(InstanceRecord, f64)>> = (0..cfg.test_size)
        .into_par_iter()
        .map(|i| {
            let inst = test_instance(cfg, family, i);
            let hash = inst.fingerprint();
            inits
                .iter()
                .map(|(name, key, init)| {
                    let clock = Instant::now();
                    let mut rng = stream(cfg.seed, &[stage::PROPOSE, *key, i as u64]);
                    let proposal = propose(init, family, &inst, &mut rng)?;
                    let solved: Vec<Solved> = proposal
                        .starts()
                        .into_iter()
                        .map(|s| solve_traced(family, &inst, s, &gd, budgets))
                        .collect::<Result<_>>()?;
                    let best = (0..solved.len())
                        .min_by(|&a, &b| solved[a].final_objective.total_cmp(&solved[b].final_objective))
                        .expect("at least one start");
                    let curve = (0..budgets.len())
                        .map(|c| solved.iter().map(|s| s.curve[c]).fold(f64::INFINITY, f64::min))
                        .collect();
                    let rec = InstanceRecord {
                        instance: i,
                        instance_hash: hash,
                        method: name.clone(),
                        curve,
                        final_objective: solved[best].final_objective,
                        iterations_used: solved[best].iterations,
                        violated: family.constraint_check(&solved[best].theta, &inst).map(|ok| !ok),
                        start_objectives: solved.iter().map(|s| s.final_objective).collect(),
                    };
                    Ok((rec, clock.elapsed().as_secs_f64()))
                })
                .collect::<Result<Vec<_>>>()
                .map_err(|e| e.at_record(i))
        })
        .collect::<Result<_>>()
        .map_err(|e| e.in_stage("evaluate", cfg.seed))?;
    Ok(per_instance.into_iter().flatten().unzip())
}

/// End-to-end experiment: collect, train, evaluate, tabulate.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunArtifacts> {
    cfg.validate()?;
    let family_seed = derive_seed(cfg.seed, &[stage::FAMILY]);
    let family = cfg.family.build(family_seed).map_err(|e| e.in_stage("family", family_seed))?;
    let clock = Instant::now();
    let data = collect(cfg, family.as_ref())?;
    let collect_seconds = clock.elapsed().as_secs_f64();
    let clock = Instant::now();
    let (models, training) = train_models(cfg, family.as_ref(), &data)?;
    drop(data);
    let train_seconds = clock.elapsed().as_secs_f64();
    let clock = Instant::now();
    let (records, walls) = evaluate(cfg, family.as_ref(), &models)?;
    let evaluate_seconds = clock.elapsed().as_secs_f64();
    let table = build_table(cfg, family.name(), &records)?;
    let k = cfg.methods.len();
    let per_instance_seconds = cfg
        .methods
        .iter()
        .enumerate()
        .map(|(j, m)| {
            let total: f64 = walls.iter().skip(j).step_by(k).sum();
            (method_name(m), total / cfg.test_size as f64)
        })
        .collect();
    Ok(RunArtifacts {
        config: cfg.clone(),
        table,
        records,
        training,
        timing: Timing {
            collect_seconds,
            train_seconds,
            evaluate_seconds,
            per_instance_seconds,
        },
    })
}
