use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gd::{run_gd, GdConfig};
use crate::problems::{Instance, ProblemFamily};
use crate::seed::stream;

/// One solved problem from a random start.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Phase1Record {
    pub instance: Instance,
    pub init: Vec<f64>,
    pub solution_arg: Vec<f64>,
    pub solution_val: f64,
}

/// One instance solved from two independent random starts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairedRecord {
    pub instance: Instance,
    pub init0: Vec<f64>,
    pub init1: Vec<f64>,
    pub val0: f64,
    pub val1: f64,
}

/// Solves `n` fresh instances from one random start each.
///
/// Record `i` draws its instance and start from the stream `(seed, i)`, so
/// the output does not depend on the thread count.
pub fn collect_phase1(family: &dyn ProblemFamily, n: usize, gd: &GdConfig, seed: u64) -> Result<Vec<Phase1Record>> {
    if n == 0 {
        return Err(Error::input("phase-1 size must be >= 1"));
    }
    gd.validate()?;
    let nonsmooth = family.is_nonsmooth();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, &[i as u64]);
            let instance = family.sample_instance(&mut rng);
            let init = family.sample_init(&instance, &mut rng);
            let out = run_gd(family, &instance, &init, gd, nonsmooth).map_err(|e| e.at_record(i))?;
            Ok(Phase1Record {
                instance,
                init,
                solution_arg: out.theta_star,
                solution_val: out.value_star,
            })
        })
        .collect()
}

/// Like [`collect_phase1`] with two independent starts per instance.
pub fn collect_paired_phase1(
    family: &dyn ProblemFamily,
    n: usize,
    gd: &GdConfig,
    seed: u64,
) -> Result<Vec<PairedRecord>> {
    if n == 0 {
        return Err(Error::input("phase-1 size must be >= 1"));
    }
    gd.validate()?;
    let nonsmooth = family.is_nonsmooth();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, &[i as u64]);
            let instance = family.sample_instance(&mut rng);
            let init0 = family.sample_init(&instance, &mut rng);
            let init1 = family.sample_init(&instance, &mut rng);
            let solve = |start: &[f64]| {
                run_gd(family, &instance, start, gd, nonsmooth)
                    .map(|o| o.value_star)
                    .map_err(|e| e.at_record(i))
            };
            let val0 = solve(&init0)?;
            let val1 = solve(&init1)?;
            Ok(PairedRecord {
                instance,
                init0,
                init1,
                val0,
                val1,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::AckleyFamily;

    #[test]
    fn records_are_consistent_and_deterministic() {
        let fam = AckleyFamily::default();
        let gd = GdConfig::new(30, 1e-6, fam.default_step_rule());
        let recs = collect_phase1(&fam, 20, &gd, 5).unwrap();
        assert_eq!(recs.len(), 20);
        for r in &recs {
            assert!((fam.objective(&r.solution_arg, &r.instance) - r.solution_val).abs() <= 1e-9);
        }
        assert_eq!(recs, collect_phase1(&fam, 20, &gd, 5).unwrap());
        assert!(collect_phase1(&fam, 0, &gd, 5).is_err());
    }

    #[test]
    fn thread_count_does_not_matter() {
        let fam = AckleyFamily::default();
        let gd = GdConfig::new(10, 1e-6, fam.default_step_rule());
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| collect_paired_phase1(&fam, 16, &gd, 9).unwrap());
        let b = four.install(|| collect_paired_phase1(&fam, 16, &gd, 9).unwrap());
        assert_eq!(a, b);
    }
}
