//! JSON-driven entry point for the checkers.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::arg_init::{check_prop6, Prop6Config};
use super::ordering::{check_prop1, check_prop2, estimate_gamma, DiscreteLandscape, OrderingModel, Selection};
use super::val_init::{check_prop5, NoisyPredictor};
use super::vanilla::check_prop3;
use super::Verdict;
use crate::error::{Error, Result};
use crate::seed::seeded;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Checker {
    Prop1,
    Prop2,
    Prop3,
    Prop5,
    Prop6,
    Gamma,
}

impl FromStr for Checker {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "prop1" => Checker::Prop1,
            "prop2" => Checker::Prop2,
            "prop3" => Checker::Prop3,
            "prop5" => Checker::Prop5,
            "prop6" => Checker::Prop6,
            "gamma" => Checker::Gamma,
            other => return Err(Error::config(format!("unknown checker `{other}`"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OrderingSpec {
    Oracle,
    Inverted,
    Coin,
    Gamma { gamma: f64 },
    /// Row `i`, column `j` is the probability of keeping start `i` over `j`.
    Table { table: Vec<Vec<f64>> },
    Random { seed: u64 },
}

impl OrderingSpec {
    pub fn build(&self, land: &DiscreteLandscape) -> Result<OrderingModel> {
        let n = land.starts();
        match self {
            OrderingSpec::Oracle => Ok(OrderingModel::oracle(land)),
            OrderingSpec::Inverted => Ok(OrderingModel::inverted(land)),
            OrderingSpec::Coin => Ok(OrderingModel::coin(n)),
            OrderingSpec::Gamma { gamma } => OrderingModel::with_gamma(land, *gamma),
            OrderingSpec::Table { table } => {
                if table.len() != n || table.iter().any(|r| r.len() != n) {
                    return Err(Error::config(format!("ordering table must be {n}×{n}")));
                }
                OrderingModel::from_fn(n, |i, j| table[i][j])
            }
            OrderingSpec::Random { seed } => Ok(OrderingModel::random(n, &mut seeded(*seed))),
        }
    }
}

#[derive(Deserialize)]
struct Prop1Request {
    landscape: DiscreteLandscape,
    ordering: OrderingSpec,
}

#[derive(Deserialize)]
struct Prop2Request {
    landscape: DiscreteLandscape,
    gammas: Vec<f64>,
}

#[derive(Deserialize)]
struct Prop3Request {
    val0: Vec<f64>,
    val1: Vec<f64>,
    p: Vec<f64>,
}

fn default_trials() -> usize {
    100_000
}

#[derive(Deserialize)]
struct Prop5Request {
    landscape: DiscreteLandscape,
    candidates: Vec<usize>,
    zeta: f64,
    e_tilde: f64,
    /// Defaults to bounded noise inside `Δ/2` that meets the error budget.
    #[serde(default)]
    predictor: Option<NoisyPredictor>,
    #[serde(default = "default_trials")]
    trials: usize,
    #[serde(default)]
    seed: u64,
}

#[derive(Deserialize)]
struct GammaRequest {
    samples: Vec<Selection>,
}

/// Checker output and whether it passed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckerOutcome {
    pub report: serde_json::Value,
    pub passed: bool,
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|source| Error::Json {
        context: format!("{what} request"),
        source,
    })
}

fn value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("report serializes")
}

pub fn run_checker(checker: Checker, request: &str) -> Result<CheckerOutcome> {
    match checker {
        Checker::Prop1 => {
            let r: Prop1Request = parse(request, "prop1")?;
            let rep = check_prop1(&r.landscape, &r.ordering.build(&r.landscape)?)?;
            Ok(CheckerOutcome {
                passed: rep.verdict,
                report: value(&rep),
            })
        }
        Checker::Prop2 => {
            let r: Prop2Request = parse(request, "prop2")?;
            let reps = r
                .gammas
                .iter()
                .map(|g| check_prop2(&r.landscape, *g))
                .collect::<Result<Vec<_>>>()?;
            Ok(CheckerOutcome {
                passed: reps.iter().all(|x| x.verdict),
                report: value(&reps),
            })
        }
        Checker::Prop3 => {
            let r: Prop3Request = parse(request, "prop3")?;
            let rep = check_prop3(&r.val0, &r.val1, &r.p)?;
            Ok(CheckerOutcome {
                passed: rep.verdict != Verdict::Violated,
                report: value(&rep),
            })
        }
        Checker::Prop5 => {
            let r: Prop5Request = parse(request, "prop5")?;
            let predictor = r
                .predictor
                .unwrap_or_else(|| NoisyPredictor::bounded_for(&r.landscape, r.zeta));
            let reps = r
                .candidates
                .iter()
                .map(|m| check_prop5(&r.landscape, *m, r.zeta, r.e_tilde, &predictor, r.trials, r.seed))
                .collect::<Result<Vec<_>>>()?;
            Ok(CheckerOutcome {
                passed: reps.iter().all(|x| x.verdict != Verdict::Violated),
                report: value(&reps),
            })
        }
        Checker::Prop6 => {
            let cfg: Prop6Config = parse(request, "prop6")?;
            let rep = check_prop6(&cfg)?;
            Ok(CheckerOutcome {
                passed: rep.verdict == Verdict::Confirmed,
                report: value(&rep),
            })
        }
        Checker::Gamma => {
            let r: GammaRequest = parse(request, "gamma")?;
            let gamma = estimate_gamma(&r.samples)?;
            Ok(CheckerOutcome {
                passed: true,
                report: serde_json::json!({ "gamma": gamma, "samples": r.samples.len() }),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prop2_request() {
        let req = r#"{"landscape":{"values":[0,1,3],"basin_map":[0,1,2],"init_weights":[0.2,0.3,0.5]},"gammas":[0.6,1.0]}"#;
        let out = run_checker(Checker::Prop2, req).unwrap();
        assert!(out.passed);
        assert_eq!(out.report.as_array().unwrap().len(), 2);
    }

    #[test]
    fn prop1_inverted_ordering_fails_improvement() {
        let req = r#"{"landscape":{"values":[0,1],"basin_map":[0,1],"init_weights":[0.5,0.5]},"ordering":{"kind":"inverted"}}"#;
        let out = run_checker(Checker::Prop1, req).unwrap();
        assert!(out.passed);
        assert_eq!(out.report["improves_on_random"], false);
    }

    #[test]
    fn bad_requests() {
        assert!("prop4".parse::<Checker>().is_err());
        assert!(run_checker(Checker::Prop6, "{}").unwrap_err().is_config());
    }
}
