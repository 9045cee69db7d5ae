//! Candidate screening with an imperfect value predictor.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ordering::DiscreteLandscape;
use super::stats::{fisher_z_interval, pearson, Interval, Moments};
use super::Verdict;
use crate::error::{Error, Result};
use crate::initializers::argmin_first;
use crate::seed::{stream, SeededRng};

/// Trials per independently seeded block.
pub(crate) const BLOCK: usize = 4096;

/// Additive error of a synthetic value predictor `h = y + noise`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoisyPredictor {
    Exact,
    /// Uniform on `[−amplitude, amplitude]`.
    Bounded { amplitude: f64 },
    /// `±magnitude` with probability `prob`, zero otherwise.
    TwoPoint { prob: f64, magnitude: f64 },
    /// Reports `−y`, reversing every ordering.
    Inverting,
}

impl NoisyPredictor {
    /// Uniform noise strictly inside `Δ/2` that also meets the squared-error budget.
    pub fn bounded_for(land: &DiscreteLandscape, zeta: f64) -> Self {
        let delta = land.delta();
        let amp = ((3.0 * zeta).sqrt() / 2.0).min(0.499) * delta;
        NoisyPredictor::Bounded { amplitude: amp }
    }

    /// Rare large errors that spend the whole budget `Δ²ζ/4`.
    pub fn saturating_two_point(land: &DiscreteLandscape, zeta: f64, magnitude: f64) -> Result<Self> {
        let delta = land.delta();
        if !(magnitude > 0.0) {
            return Err(Error::input("magnitude must be > 0"));
        }
        let prob = delta * delta * zeta / (4.0 * magnitude * magnitude);
        if prob > 1.0 {
            return Err(Error::input("magnitude too small to spend the error budget"));
        }
        Ok(NoisyPredictor::TwoPoint { prob, magnitude })
    }

    /// Largest per-basin `E[(h − y)²]`.
    pub fn max_conditional_sq_error(&self, land: &DiscreteLandscape) -> f64 {
        match *self {
            NoisyPredictor::Exact => 0.0,
            NoisyPredictor::Bounded { amplitude } => amplitude * amplitude / 3.0,
            NoisyPredictor::TwoPoint { prob, magnitude } => prob * magnitude * magnitude,
            NoisyPredictor::Inverting => land.values.iter().map(|y| 4.0 * y * y).fold(0.0, f64::max),
        }
    }

    pub fn satisfies_bounded_error(&self, land: &DiscreteLandscape, zeta: f64) -> bool {
        let d = land.delta();
        let budget = if d.is_finite() { d * d * zeta / 4.0 } else { f64::INFINITY };
        self.max_conditional_sq_error(land) <= budget * (1.0 + 1e-12)
    }

    fn predict(&self, y: f64, rng: &mut SeededRng) -> f64 {
        match *self {
            NoisyPredictor::Exact => y,
            NoisyPredictor::Bounded { amplitude } => {
                if amplitude == 0.0 {
                    y
                } else {
                    y + rng.random_range(-amplitude..=amplitude)
                }
            }
            NoisyPredictor::TwoPoint { prob, magnitude } => {
                if rng.random::<f64>() < prob {
                    if rng.random_bool(0.5) {
                        y + magnitude
                    } else {
                        y - magnitude
                    }
                } else {
                    y
                }
            }
            NoisyPredictor::Inverting => -y,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prop5Report {
    pub candidates: usize,
    pub zeta: f64,
    pub e_tilde: f64,
    pub trials: usize,
    pub e_valinit: f64,
    pub e_multistart_min: f64,
    /// Mean of `Ỹ_val − min`, always ≥ 0.
    pub gap: f64,
    pub gap_se: f64,
    pub max_gap_sample: f64,
    pub bounded_error_holds: bool,
    pub bound_holds: bool,
    pub verdict: Verdict,
}

/// Monte-Carlo check that screening `candidates` starts with the noisy
/// predictor is within `e_tilde` of the best of them.
pub fn check_prop5(
    land: &DiscreteLandscape,
    candidates: usize,
    zeta: f64,
    e_tilde: f64,
    predictor: &NoisyPredictor,
    trials: usize,
    seed: u64,
) -> Result<Prop5Report> {
    land.validate()?;
    if candidates == 0 || trials < 2 {
        return Err(Error::input("need at least one candidate and two trials"));
    }
    if land.values.iter().any(|v| *v < 0.0) {
        return Err(Error::config("value set must be nonnegative"));
    }
    if !(e_tilde > 0.0) {
        return Err(Error::config("approximation target must be > 0"));
    }
    let f_sup = land.f_sup();
    let zeta_max = if f_sup > 0.0 {
        e_tilde / (candidates as f64 * f_sup)
    } else {
        f64::INFINITY
    };
    if !(zeta > 0.0 && zeta < zeta_max) {
        return Err(Error::config(format!(
            "zeta = {zeta} is outside (0, {zeta_max}); no predictor can meet the premise"
        )));
    }
    let bounded_error_holds = predictor.satisfies_bounded_error(land, zeta);

    let sampler = WeightedIndex::new(&land.init_weights).map_err(|e| Error::input(e.to_string()))?;
    let blocks = trials.div_ceil(BLOCK);
    let parts: Vec<(Moments, Moments, Moments, f64)> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(seed, &[b as u64]);
            let n = BLOCK.min(trials - b * BLOCK);
            let (mut sel, mut best, mut gap) = (Moments::default(), Moments::default(), Moments::default());
            let mut max_gap: f64 = 0.0;
            let mut ys = vec![0.0; candidates];
            let mut hs = vec![0.0; candidates];
            for _ in 0..n {
                for k in 0..candidates {
                    ys[k] = land.value_of(sampler.sample(&mut rng));
                    hs[k] = predictor.predict(ys[k], &mut rng);
                }
                let chosen = ys[argmin_first(&hs)];
                let min = ys.iter().copied().fold(f64::INFINITY, f64::min);
                sel.push(chosen);
                best.push(min);
                gap.push(chosen - min);
                max_gap = max_gap.max(chosen - min);
            }
            (sel, best, gap, max_gap)
        })
        .collect();
    let (sel, best, gap, max_gap) = parts.into_iter().fold(
        (Moments::default(), Moments::default(), Moments::default(), 0.0f64),
        |acc, p| (acc.0.merge(p.0), acc.1.merge(p.1), acc.2.merge(p.2), acc.3.max(p.3)),
    );
    let bound_holds = gap.mean() <= e_tilde + 3.0 * gap.se();
    let verdict = if !bounded_error_holds {
        Verdict::PreconditionViolated
    } else if bound_holds {
        Verdict::Confirmed
    } else {
        Verdict::Violated
    };
    Ok(Prop5Report {
        candidates,
        zeta,
        e_tilde,
        trials,
        e_valinit: sel.mean(),
        e_multistart_min: best.mean(),
        gap: gap.mean(),
        gap_se: gap.se(),
        max_gap_sample: max_gap,
        bounded_error_holds,
        bound_holds,
        verdict,
    })
}

/// Correlation between "candidate k was picked" and `Ŷ_{M−1} − Ŷ_k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionCorrelation {
    pub k: usize,
    pub samples: usize,
    pub rho: Option<f64>,
    pub rho_ci: Option<Interval>,
}

/// `values[i][c]` is the solved value from candidate `c` on instance `i`,
/// `selected[i]` the candidate Val-Init picked.
pub fn selection_correlation(values: &[Vec<f64>], selected: &[usize], k: usize) -> Result<SelectionCorrelation> {
    if values.len() != selected.len() || values.is_empty() {
        return Err(Error::input("need one selection per instance"));
    }
    let m = values[0].len();
    if k + 1 >= m || values.iter().any(|v| v.len() != m) {
        return Err(Error::input("k must index a candidate other than the last"));
    }
    let z: Vec<f64> = selected.iter().map(|&s| f64::from(u8::from(s == k))).collect();
    let d: Vec<f64> = values.iter().map(|v| v[m - 1] - v[k]).collect();
    let rho = pearson(&z, &d).ok();
    Ok(SelectionCorrelation {
        k,
        samples: values.len(),
        rho,
        rho_ci: rho.and_then(|r| fisher_z_interval(r, values.len(), 0.95)),
    })
}
