//! Finite-difference audits of every analytic gradient in the crate.

use std::cell::RefCell;

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neural::{Mlp, MlpSpec, TrainConfig};
use crate::problems::{
    finite_difference, relative_error, AckleyFamily, BlobConfig, ConvexPerturbFamily, Instance, ProblemFamily,
    SumRateFamily, ToyAdvFamily,
};
use crate::seed::{derive_seed, seeded, stream, SeededRng};

pub const FAMILY_TOL: f64 = 1e-4;
pub const BACKPROP_TOL: f64 = 1e-5;
const H: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradcheckSuite {
    pub name: String,
    pub points: usize,
    /// Draws rejected because the objective has a kink within the stencil.
    pub skipped: usize,
    pub max_rel_err: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradcheckReport {
    pub suites: Vec<GradcheckSuite>,
    pub passed: bool,
}

/// One-sided quotients disagree when a kink sits inside the stencil.
fn has_kink(f: &dyn Fn(&[f64]) -> f64, theta: &[f64]) -> bool {
    let f0 = f(theta);
    let mut probe = theta.to_vec();
    (0..theta.len()).any(|i| {
        let orig = probe[i];
        probe[i] = orig + H;
        let fwd = (f(&probe) - f0) / H;
        probe[i] = orig - H;
        let bwd = (f0 - f(&probe)) / H;
        probe[i] = orig;
        (fwd - bwd).abs() > 1e-3 * fwd.abs().max(bwd.abs()).max(1.0)
    })
}

/// Compares `gradient` with central differences at `points` draws from `draw`.
pub fn check_family(
    name: &str,
    family: &dyn ProblemFamily,
    points: usize,
    seed: u64,
    mut draw: impl FnMut(&Instance, &mut SeededRng) -> Vec<f64>,
) -> Result<GradcheckSuite> {
    let mut rng = seeded(seed);
    let (mut done, mut skipped, mut worst) = (0, 0, 0.0f64);
    while done < points {
        if skipped > 20 * points.max(1) {
            return Err(Error::input(format!("{name}: too many points rejected near kinks")));
        }
        let inst = family.sample_instance(&mut rng);
        let theta = draw(&inst, &mut rng);
        let f = |t: &[f64]| family.objective(t, &inst);
        if has_kink(&f, &theta) {
            skipped += 1;
            continue;
        }
        let fd = finite_difference(f, &theta, H);
        let g = family.gradient(&theta, &inst);
        worst = worst.max(relative_error(&g, &fd, 1e-6));
        done += 1;
    }
    Ok(GradcheckSuite {
        name: name.into(),
        points,
        skipped,
        max_rel_err: worst,
        tolerance: FAMILY_TOL,
        passed: worst < FAMILY_TOL,
    })
}

/// Backprop against central differences of the batch MSE for random
/// networks of the given widths.
pub fn check_backprop(widths: &[usize], batch: usize, nets: usize, seed: u64) -> Result<GradcheckSuite> {
    if widths.len() < 2 || batch == 0 {
        return Err(Error::input("need input and output widths and a nonempty batch"));
    }
    let (inp, out) = (widths[0], *widths.last().expect("nonempty"));
    let hidden = widths[1..widths.len() - 1].to_vec();
    let mut worst = 0.0f64;
    for k in 0..nets {
        let mut rng = stream(seed, &[k as u64]);
        let net = Mlp::new(MlpSpec::new(inp, out, hidden.clone(), derive_seed(seed, &[k as u64, 1])))?;
        let x = Array2::from_shape_fn((batch, inp), |_| rng.random_range(-1.0..1.0));
        let y = Array2::from_shape_fn((batch, out), |_| rng.random_range(-1.0..1.0));
        let (g, _) = net.backward(x.view(), y.view())?;
        let base = net.params_flat();
        let probe = RefCell::new(net.clone());
        let fd = finite_difference(
            |p| {
                let mut n = probe.borrow_mut();
                n.set_params_flat(p).expect("same length");
                n.mse(x.view(), y.view()).expect("shapes checked")
            },
            &base,
            1e-5,
        );
        worst = worst.max(relative_error(&g.flat(), &fd, 1e-8));
    }
    let name = widths.iter().map(usize::to_string).collect::<Vec<_>>().join("-");
    Ok(GradcheckSuite {
        name: format!("mlp_backprop_{name}"),
        points: nets,
        skipped: 0,
        max_rel_err: worst,
        tolerance: BACKPROP_TOL,
        passed: worst < BACKPROP_TOL,
    })
}

/// Runs every suite: the four families at `points` draws each, then backprop.
pub fn run_gradcheck(points: usize, seed: u64) -> Result<GradcheckReport> {
    let mut suites = Vec::new();
    let ackley = AckleyFamily::default();
    suites.push(check_family("ackley", &ackley, points, derive_seed(seed, &[1]), |_, rng| {
        loop {
            let t = vec![rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)];
            if t.iter().map(|v| v * v).sum::<f64>() > 1e-6 {
                break t;
            }
        }
    })?);
    let sum_rate = SumRateFamily::default();
    suites.push(check_family("sum_rate", &sum_rate, points, derive_seed(seed, &[2]), |_, rng| {
        (0..15).map(|_| rng.random_range(0.05..0.95)).collect()
    })?);
    let convex = ConvexPerturbFamily::sample(20, 1.0, &mut seeded(derive_seed(seed, &[3])))?;
    suites.push(check_family("convex_perturb", &convex, points, derive_seed(seed, &[4]), |_, rng| {
        (0..20).map(|_| rng.random_range(-1.0..1.0)).collect()
    })?);
    let toy = ToyAdvFamily::train(BlobConfig::default(), 0.2, 10.0, &TrainConfig::default(), derive_seed(seed, &[5]))?;
    suites.push(check_family("toy_adv", &toy, points, derive_seed(seed, &[6]), |_, rng| {
        (0..2).map(|_| rng.random_range(-1.5..1.5)).collect()
    })?);
    suites.push(check_backprop(&[3, 4, 2], 6, 10, derive_seed(seed, &[7]))?);
    suites.push(check_backprop(&[5, 8, 8, 3], 10, 10, derive_seed(seed, &[8]))?);
    let passed = suites.iter().all(|s| s.passed);
    Ok(GradcheckReport { suites, passed })
}
