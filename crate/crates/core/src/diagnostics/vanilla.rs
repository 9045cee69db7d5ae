//! Pairwise selection by a learned comparator.

use serde::{Deserialize, Serialize};

use super::stats::{fisher_z_interval, pearson, Interval};
use super::Verdict;
use crate::error::{Error, Result};

/// Minimum sample count for a correlation interval worth reporting.
pub const MIN_SAMPLES: usize = 30;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prop3Report {
    pub samples: usize,
    pub rho: Option<f64>,
    pub rho_ci: Option<Interval>,
    pub e_vanilla: f64,
    pub e_random: f64,
    /// The interval lies strictly above zero.
    pub condition_met: bool,
    pub improves: bool,
    pub verdict: Verdict,
}

/// `p[i]` is the probability of keeping start 0 on the pair `(val0[i], val1[i])`.
pub fn check_prop3(val0: &[f64], val1: &[f64], p: &[f64]) -> Result<Prop3Report> {
    let n = val0.len();
    if val1.len() != n || p.len() != n {
        return Err(Error::input("val0, val1 and p must have equal length"));
    }
    if n < MIN_SAMPLES {
        return Err(Error::input(format!("need at least {MIN_SAMPLES} samples, got {n}")));
    }
    if p.iter().any(|q| !(0.0..=1.0).contains(q)) {
        return Err(Error::input("probabilities must lie in [0, 1]"));
    }
    let diff: Vec<f64> = val1.iter().zip(val0).map(|(a, b)| a - b).collect();
    let nf = n as f64;
    let e_vanilla = (0..n).map(|i| p[i] * val0[i] + (1.0 - p[i]) * val1[i]).sum::<f64>() / nf;
    let e_random = (0..n).map(|i| 0.5 * (val0[i] + val1[i])).sum::<f64>() / nf;
    let improves = e_vanilla <= e_random;
    let rho = match pearson(p, &diff) {
        Ok(r) => Some(r),
        Err(Error::Undefined(_)) => None,
        Err(e) => return Err(e),
    };
    let rho_ci = rho.and_then(|r| fisher_z_interval(r, n, 0.95));
    let condition_met = rho_ci.is_some_and(|ci| ci.low > 0.0);
    let verdict = match (rho, condition_met) {
        (None, _) => Verdict::Skipped,
        (Some(_), false) => Verdict::PreconditionViolated,
        (Some(_), true) if improves => Verdict::Confirmed,
        _ => Verdict::Violated,
    };
    Ok(Prop3Report {
        samples: n,
        rho,
        rho_ci,
        e_vanilla,
        e_random,
        condition_met,
        improves,
        verdict,
    })
}
