use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use initlearn_core::diagnostics::{run_checker, Checker};
use initlearn_core::error::Error;
use initlearn_core::gradcheck::run_gradcheck;
use initlearn_core::harness::{
    collect, emit_reports, load_config_or_manifest, run_experiment, train_models, Manifest, Phase1Data, MAML_FILE,
};
use initlearn_core::initializers::{read_paired_csv, read_phase1_csv, write_paired_csv, write_phase1_csv};
use initlearn_core::neural::save_regressor;
use initlearn_core::seed::{derive_seed, stage};
use initlearn_core::ExperimentConfig;

#[derive(Parser)]
#[command(name = "initlearn", version, about = "Learned initializers for repeated gradient-descent solves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Full experiment: collect, train, evaluate, write reports.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Phase-1 collection only.
    Collect {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Fits the learned initializers from a `collect` output directory.
    Train {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Runs one of the selection-condition checkers on a JSON request.
    Diagnose {
        #[arg(long, value_parser = ["prop1", "prop2", "prop3", "prop5", "prop6", "gamma"])]
        checker: String,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Finite-difference audit of every analytic gradient.
    Gradcheck {
        #[arg(long, default_value_t = 100)]
        points: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

enum Failure {
    Assertion(String),
    Error(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

type Outcome = std::result::Result<(), Failure>;

fn set_workers(workers: Option<usize>) -> Outcome {
    if let Some(k) = workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build_global()
            .map_err(|e| Error::Config(format!("cannot start {k} workers: {e}")))?;
    }
    Ok(())
}

fn load(path: &Path, common: &Common) -> Result<ExperimentConfig, Failure> {
    set_workers(common.workers)?;
    let mut cfg = load_config_or_manifest(path)?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn write(path: &Path, text: &str) -> Outcome {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(())
}

fn mkdir(dir: &Path) -> Outcome {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    Ok(())
}

fn pretty<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

fn cmd_run(config: &Path, out: &Path, common: &Common) -> Outcome {
    let cfg = load(config, common)?;
    let run = run_experiment(&cfg)?;
    emit_reports(&run, out)?;
    for m in &run.table.methods {
        println!("{:<16} final mean {:>14.6}", m.method, m.final_mean);
    }
    println!("reports written to {}", out.display());
    Ok(())
}

fn family_for(cfg: &ExperimentConfig) -> Result<std::sync::Arc<dyn initlearn_core::ProblemFamily>, Failure> {
    let seed = derive_seed(cfg.seed, &[stage::FAMILY]);
    Ok(cfg.family.build(seed)?)
}

fn cmd_collect(config: &Path, out: &Path, common: &Common) -> Outcome {
    let cfg = load(config, common)?;
    let family = family_for(&cfg)?;
    let data = collect(&cfg, family.as_ref())?;
    mkdir(out)?;
    if !data.records.is_empty() {
        write_phase1_csv(&out.join("phase1.csv"), &data.records)?;
    }
    if !data.paired.is_empty() {
        write_paired_csv(&out.join("paired.csv"), &data.paired)?;
    }
    write(&out.join("manifest.json"), &pretty(&Manifest::new(&cfg)))?;
    println!("{} phase-1 and {} paired records written to {}", data.records.len(), data.paired.len(), out.display());
    Ok(())
}

fn cmd_train(records: &Path, out: &Path, common: &Common) -> Outcome {
    let mut cfg = load(&records.join("manifest.json"), common)?;
    cfg.models_dir = None;
    let family = family_for(&cfg)?;
    let mut data = Phase1Data::default();
    let (p1, p2) = (records.join("phase1.csv"), records.join("paired.csv"));
    if p1.exists() {
        data.records = read_phase1_csv(&p1)?;
    }
    if p2.exists() {
        data.paired = read_paired_csv(&p2)?;
    }
    let (models, summary) = train_models(&cfg, family.as_ref(), &data)?;
    mkdir(out)?;
    for (model, file) in [(&models.h_val, "h_val.mlp"), (&models.h_arg, "h_arg.mlp"), (&models.psi, "psi.mlp")] {
        if let Some(m) = model {
            save_regressor(m, &out.join(file))?;
        }
    }
    if let Some(theta) = &models.maml_theta {
        write(&out.join(MAML_FILE), &pretty(theta))?;
    }
    write(&out.join("training.json"), &pretty(&summary))?;
    cfg.models_dir = Some(out.to_path_buf());
    write(&out.join("manifest.json"), &pretty(&Manifest::new(&cfg)))?;
    for l in &summary.learners {
        println!(
            "{:<6} validation MSE {:?} -> {:?}",
            l.name, l.first_val_mse, l.last_val_mse
        );
    }
    println!("models written to {}", out.display());
    Ok(())
}

fn cmd_diagnose(checker: &str, config: &Path, out: &Path) -> Outcome {
    let checker: Checker = checker.parse()?;
    let text = fs::read_to_string(config).map_err(|source| Error::Io {
        path: config.to_path_buf(),
        source,
    })?;
    let outcome = run_checker(checker, &text)?;
    mkdir(out)?;
    write(&out.join("report.json"), &pretty(&outcome.report))?;
    println!("{}", pretty(&outcome.report).trim_end());
    if outcome.passed {
        Ok(())
    } else {
        Err(Failure::Assertion(format!("{checker:?} check failed")))
    }
}

fn cmd_gradcheck(points: usize, seed: u64) -> Outcome {
    let report = run_gradcheck(points, seed)?;
    for s in &report.suites {
        println!(
            "{} {:<24} points {:>4} skipped {:>3} max rel err {:.3e} (tol {:.0e})",
            if s.passed { "PASS" } else { "FAIL" },
            s.name,
            s.points,
            s.skipped,
            s.max_rel_err,
            s.tolerance
        );
    }
    if report.passed {
        Ok(())
    } else {
        Err(Failure::Assertion("gradient check failed".into()))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run { config, out, common } => cmd_run(config, out, common),
        Command::Collect { config, out, common } => cmd_collect(config, out, common),
        Command::Train { records, out, common } => cmd_train(records, out, common),
        Command::Diagnose { checker, config, out } => cmd_diagnose(checker, config, out),
        Command::Gradcheck { points, seed } => cmd_gradcheck(*points, *seed),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Assertion(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}
