//! Projected gradient descent with a diminishing step schedule.
//!
//! The solver iterates `θ_{k+1} = Π_Θ[θ_k − t_k ∇f(θ_k, x)]` with
//! `t_k = p / (q + k)` until the gradient norm drops below `epsilon` or
//! `iter_max` steps have been taken. The feasible set is owned by the
//! [`ProblemFamily`]; nothing here assumes its shape.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::{Instance, ProblemFamily};

/// Step length `p / (q + k)` at iteration `k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StepRuleRepr")]
pub struct StepRule {
    p: f64,
    q: f64,
}

#[derive(Deserialize)]
struct StepRuleRepr {
    p: f64,
    q: f64,
}

impl TryFrom<StepRuleRepr> for StepRule {
    type Error = Error;

    fn try_from(r: StepRuleRepr) -> Result<Self> {
        StepRule::new(r.p, r.q)
    }
}

impl StepRule {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        if !(p.is_finite() && p > 0.0 && q.is_finite() && q > 0.0) {
            return Err(Error::input(format!("step rule needs p > 0 and q > 0, got p={p}, q={q}")));
        }
        Ok(Self { p, q })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn step(&self, k: usize) -> f64 {
        self.p / (self.q + k as f64)
    }
}

/// Free-function form of [`StepRule::step`].
pub fn step_size(rule: &StepRule, k: usize) -> f64 {
    rule.step(k)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GdConfig {
    pub iter_max: usize,
    pub epsilon: f64,
    pub step_rule: StepRule,
    #[serde(default)]
    pub record_trace: bool,
}

impl GdConfig {
    pub fn new(iter_max: usize, epsilon: f64, step_rule: StepRule) -> Self {
        Self {
            iter_max,
            epsilon,
            step_rule,
            record_trace: false,
        }
    }

    pub fn with_trace(mut self) -> Self {
        self.record_trace = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0) {
            return Err(Error::config(format!("epsilon must be >= 0, got {}", self.epsilon)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GdOutcome {
    pub theta_star: Vec<f64>,
    pub value_star: f64,
    pub iterations_used: usize,
    pub converged_by_gradient: bool,
    /// Objective after each completed iteration.
    pub trace: Option<Vec<f64>>,
}

fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|g| g * g).sum::<f64>().sqrt()
}

/// Runs projected (sub)gradient descent from `theta_in`.
///
/// In `subgradient_mode` the gradient-norm stop is disabled and only
/// `iter_max` terminates the loop, since a subgradient need not vanish at a
/// nonsmooth optimum.
pub fn run_gd(
    family: &dyn ProblemFamily,
    instance: &Instance,
    theta_in: &[f64],
    config: &GdConfig,
    subgradient_mode: bool,
) -> Result<GdOutcome> {
    let m = family.decision_dim();
    if theta_in.len() != m {
        return Err(Error::input(format!(
            "initial point has dimension {}, family `{}` expects {m}",
            theta_in.len(),
            family.name()
        )));
    }
    if instance.dim() != family.instance_dim() {
        return Err(Error::input(format!(
            "instance has dimension {}, family `{}` expects {}",
            instance.dim(),
            family.name(),
            family.instance_dim()
        )));
    }

    let mut theta = theta_in.to_vec();
    let mut value = family.objective(&theta, instance);
    if !value.is_finite() {
        return Err(Error::NonFinite {
            quantity: "objective",
            iteration: 0,
        });
    }
    let mut trace = config.record_trace.then(|| Vec::with_capacity(config.iter_max));
    let mut iterations = 0;
    let mut converged = false;

    while iterations < config.iter_max {
        let grad = family.gradient(&theta, instance);
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite {
                quantity: "gradient",
                iteration: iterations,
            });
        }
        if !subgradient_mode && l2_norm(&grad) < config.epsilon {
            converged = true;
            break;
        }
        let t = config.step_rule.step(iterations);
        let moved: Vec<f64> = theta.iter().zip(&grad).map(|(th, g)| th - t * g).collect();
        theta = family.project(&moved, instance);
        value = family.objective(&theta, instance);
        iterations += 1;
        if !value.is_finite() {
            return Err(Error::NonFinite {
                quantity: "objective",
                iteration: iterations,
            });
        }
        if let Some(tr) = trace.as_mut() {
            tr.push(value);
        }
    }

    Ok(GdOutcome {
        theta_star: theta,
        value_star: value,
        iterations_used: iterations,
        converged_by_gradient: converged,
        trace,
    })
}

/// Extends a trace to `len` entries by repeating its last value, or
/// `initial` when the trace is empty.
pub fn pad_trace(trace: &[f64], initial: f64, len: usize) -> Vec<f64> {
    let fill = trace.last().copied().unwrap_or(initial);
    let mut out: Vec<f64> = trace.iter().copied().take(len).collect();
    out.resize(len, fill);
    out
}

/// Objective after each of iterations `1..=iter_max`, fixed length.
///
/// Subgradient mode follows the family's smoothness flag.
pub fn evaluate_curve(
    family: &dyn ProblemFamily,
    instance: &Instance,
    theta_in: &[f64],
    config: &GdConfig,
) -> Result<Vec<f64>> {
    let config = config.clone().with_trace();
    let outcome = run_gd(family, instance, theta_in, &config, family.is_nonsmooth())?;
    let initial = family.objective(theta_in, instance);
    Ok(pad_trace(
        outcome.trace.as_deref().unwrap_or_default(),
        initial,
        config.iter_max,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::testing::{Quadratic, Shifted};
    use crate::problems::AckleyFamily;
    use crate::problems::AckleyParams;
    use approx::assert_abs_diff_eq;

    fn rule(p: f64, q: f64) -> StepRule {
        StepRule::new(p, q).unwrap()
    }

    #[test]
    fn step_size_examples() {
        assert_eq!(step_size(&rule(1.0, 25.0), 0), 0.04);
        assert_eq!(step_size(&rule(1.0, 1.0), 0), 1.0);
        assert_eq!(step_size(&rule(0.25, 1.0), 3), 0.0625);
    }

    #[test]
    fn step_rule_rejects_nonpositive() {
        assert!(StepRule::new(0.0, 1.0).is_err());
        assert!(StepRule::new(1.0, -1.0).is_err());
        assert!(StepRule::new(f64::NAN, 1.0).is_err());
        let parsed: std::result::Result<StepRule, _> = serde_json::from_str(r#"{"p":1.0,"q":0.0}"#);
        assert!(parsed.is_err());
    }

    #[test]
    fn steps_strictly_decrease() {
        let r = rule(0.25, 1.0);
        for k in 0..10_000 {
            assert!(r.step(k) > r.step(k + 1));
            assert!(r.step(k) > 0.0);
        }
    }

    #[test]
    fn quadratic_contracts_by_known_factor() {
        // θ_K = Π_{k<K} (1 − 0.5/(1+k)) = Γ(K+½)/(√π·Γ(K+1)); mpmath, K = 100.
        let fam = Quadratic::new(1);
        let cfg = GdConfig::new(100, 1e-6, rule(0.25, 1.0));
        let out = run_gd(&fam, &Instance::new(vec![0.0]), &[1.0], &cfg, false).unwrap();
        assert_abs_diff_eq!(out.theta_star[0], 0.056348479009256422, epsilon = 1e-14);
        assert_eq!(out.iterations_used, 100);
    }

    #[test]
    fn quadratic_reaches_tolerance_with_larger_numerator() {
        // p = 0.5 makes the first step exact.
        let fam = Quadratic::new(1);
        let cfg = GdConfig::new(100, 1e-6, rule(0.5, 1.0));
        let out = run_gd(&fam, &Instance::new(vec![0.0]), &[1.0], &cfg, false).unwrap();
        assert!(out.theta_star[0].abs() < 1e-3);
        assert!(out.converged_by_gradient);
    }

    #[test]
    fn zero_iterations_is_identity() {
        let fam = Quadratic::new(1);
        let cfg = GdConfig::new(0, 1e-6, rule(0.25, 1.0));
        let out = run_gd(&fam, &Instance::new(vec![0.0]), &[1.5], &cfg, false).unwrap();
        assert_eq!(out.theta_star, vec![1.5]);
        assert_eq!(out.value_star, 2.25);
        assert_eq!(out.iterations_used, 0);
    }

    #[test]
    fn ackley_at_minimum_converges_at_start() {
        let fam = AckleyFamily::default();
        let inst = AckleyParams { a: 20.0, b: 0.2, c: 0.0 }.to_instance();
        let cfg = GdConfig::new(100, 1e-6, fam.default_step_rule());
        let out = run_gd(&fam, &inst, &[0.0, 0.0], &cfg, false).unwrap();
        assert!(out.converged_by_gradient);
        assert_eq!(out.iterations_used, 0);
        assert_abs_diff_eq!(out.value_star, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_input_error() {
        let fam = Quadratic::new(2);
        let cfg = GdConfig::new(5, 1e-6, rule(1.0, 1.0));
        let err = run_gd(&fam, &Instance::new(vec![0.0, 0.0]), &[1.0], &cfg, false).unwrap_err();
        assert!(matches!(err, Error::Input(_)));
    }

    #[test]
    fn non_finite_gradient_reports_iteration() {
        // f(θ) = θ² has gradient 2θ; a huge first step overflows on the second.
        let fam = Quadratic::new(1);
        let cfg = GdConfig::new(50, 0.0, rule(1e200, 1.0));
        let err = run_gd(&fam, &Instance::new(vec![0.0]), &[1e200], &cfg, false).unwrap_err();
        match err {
            Error::NonFinite { iteration, .. } => assert!(iteration <= 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn subgradient_mode_ignores_epsilon() {
        let fam = Quadratic::new(1);
        let cfg = GdConfig::new(7, 1e9, rule(0.25, 1.0));
        let smooth = run_gd(&fam, &Instance::new(vec![0.0]), &[1.0], &cfg, false).unwrap();
        assert_eq!(smooth.iterations_used, 0);
        let sub = run_gd(&fam, &Instance::new(vec![0.0]), &[1.0], &cfg, true).unwrap();
        assert_eq!(sub.iterations_used, 7);
        assert!(!sub.converged_by_gradient);
    }

    #[test]
    fn curve_pads_after_stationary_start() {
        let fam = Quadratic::new(1);
        let cfg = GdConfig::new(3, 1e-6, rule(0.25, 1.0));
        let curve = evaluate_curve(&fam, &Instance::new(vec![0.0]), &[0.0], &cfg).unwrap();
        assert_eq!(curve, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn curve_first_entry_hand_iterated() {
        // θ₁ = 1 − 0.25·2·1 = 0.5, f(θ₁) = 0.25.
        let fam = Quadratic::new(1);
        let cfg = GdConfig::new(4, 1e-6, rule(0.25, 1.0));
        let curve = evaluate_curve(&fam, &Instance::new(vec![0.0]), &[1.0], &cfg).unwrap();
        assert_eq!(curve.len(), 4);
        assert_eq!(curve[0], 0.25);
    }

    #[test]
    fn trace_tail_matches_value() {
        let fam = Shifted::new(vec![0.3, -0.7]);
        let cfg = GdConfig::new(25, 1e-9, rule(0.25, 1.0)).with_trace();
        let inst = fam.instance();
        let out = run_gd(&fam, &inst, &[2.0, 2.0], &cfg, false).unwrap();
        let tr = out.trace.unwrap();
        assert_eq!(tr.len(), out.iterations_used);
        assert_abs_diff_eq!(*tr.last().unwrap(), out.value_star, epsilon = 1e-12);
        assert_abs_diff_eq!(fam.objective(&out.theta_star, &inst), out.value_star, epsilon = 1e-12);
    }

    #[test]
    fn pad_trace_handles_empty_and_long() {
        assert_eq!(pad_trace(&[], 4.0, 2), vec![4.0, 4.0]);
        assert_eq!(pad_trace(&[1.0, 2.0, 3.0], 4.0, 2), vec![1.0, 2.0]);
        assert_eq!(pad_trace(&[1.0], 4.0, 3), vec![1.0, 1.0, 1.0]);
    }
}
