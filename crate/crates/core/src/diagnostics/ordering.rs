//! Two-candidate selection on finite landscapes, by exact enumeration.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::SeededRng;

/// Finite set of reachable values with a basin assignment for each start.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteLandscape {
    /// Distinct attainable objective values.
    pub values: Vec<f64>,
    /// Start index → index into `values`.
    pub basin_map: Vec<usize>,
    /// Probability of each start under the random initializer.
    pub init_weights: Vec<f64>,
}

impl DiscreteLandscape {
    pub fn new(values: Vec<f64>, basin_map: Vec<usize>, init_weights: Vec<f64>) -> Result<Self> {
        let land = Self {
            values,
            basin_map,
            init_weights,
        };
        land.validate()?;
        Ok(land)
    }

    /// One start per value, equally likely.
    pub fn uniform(values: Vec<f64>) -> Result<Self> {
        let k = values.len();
        Self::new(values, (0..k).collect(), vec![1.0 / k as f64; k])
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() || self.basin_map.is_empty() {
            return Err(Error::input("landscape needs at least one value and one start"));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("landscape values must be finite"));
        }
        if self.basin_map.len() != self.init_weights.len() {
            return Err(Error::input("basin map and weights differ in length"));
        }
        if self.basin_map.iter().any(|&b| b >= self.values.len()) {
            return Err(Error::input("basin map points past the value set"));
        }
        if self.init_weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::input("start weights must be nonnegative"));
        }
        let total: f64 = self.init_weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::input(format!("start weights sum to {total}, not 1")));
        }
        if self.values.len() > 1 && !(self.delta() > 0.0) {
            return Err(Error::input("values must be distinct"));
        }
        Ok(())
    }

    pub fn starts(&self) -> usize {
        self.basin_map.len()
    }

    /// Value reached from start `i`.
    pub fn value_of(&self, i: usize) -> f64 {
        self.values[self.basin_map[i]]
    }

    /// Minimum pairwise gap between values.
    pub fn delta(&self) -> f64 {
        let mut v = self.values.clone();
        v.sort_by(f64::total_cmp);
        v.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }

    pub fn f_sup(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `E[Ŷ]` under a single random start.
    pub fn expected_random(&self) -> f64 {
        (0..self.starts()).map(|i| self.init_weights[i] * self.value_of(i)).sum()
    }

    /// Random landscape: `k` values spaced at least `gap` apart in `[0, ∞)`,
    /// `starts` starts with Dirichlet(1) weights.
    pub fn random(k: usize, starts: usize, gap: f64, rng: &mut SeededRng) -> Result<Self> {
        if k == 0 || starts == 0 {
            return Err(Error::input("landscape needs at least one value and one start"));
        }
        let mut acc = rng.random_range(0.0..1.0);
        let mut values = Vec::with_capacity(k);
        for _ in 0..k {
            values.push(acc);
            acc += gap + rng.random_range(0.0..1.0);
        }
        // Shuffle so value order carries no information about the index.
        for i in (1..k).rev() {
            values.swap(i, rng.random_range(0..=i));
        }
        let basin_map: Vec<usize> = (0..starts).map(|i| if i < k { i } else { rng.random_range(0..k) }).collect();
        let raw: Vec<f64> = (0..starts).map(|_| -rng.random_range(f64::EPSILON..1.0).ln()).collect();
        let total: f64 = raw.iter().sum();
        Self::new(values, basin_map, raw.iter().map(|w| w / total).collect())
    }
}

/// Probability `p(i, j)` of keeping the first of two starts `(θ̂₀, θ̂₁) = (i, j)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderingModel {
    starts: usize,
    table: Vec<f64>,
    pub gamma: Option<f64>,
}

impl OrderingModel {
    pub fn from_fn(starts: usize, p: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let table: Vec<f64> = (0..starts * starts).map(|k| p(k / starts, k % starts)).collect();
        if table.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::input("selection probabilities must lie in [0, 1]"));
        }
        Ok(Self {
            starts,
            table,
            gamma: None,
        })
    }

    pub fn p(&self, i: usize, j: usize) -> f64 {
        self.table[i * self.starts + j]
    }

    /// `γ` toward the smaller value, `1 − γ` away from it, ½ on ties.
    pub fn with_gamma(land: &DiscreteLandscape, gamma: f64) -> Result<Self> {
        if !(gamma >= 0.0 && gamma <= 1.0) {
            return Err(Error::input(format!("gamma must lie in [0, 1], got {gamma}")));
        }
        let mut m = Self::from_fn(land.starts(), |i, j| {
            let (a, b) = (land.value_of(i), land.value_of(j));
            if a < b {
                gamma
            } else if a > b {
                1.0 - gamma
            } else {
                0.5
            }
        })?;
        m.gamma = Some(gamma);
        Ok(m)
    }

    pub fn oracle(land: &DiscreteLandscape) -> Self {
        Self::with_gamma(land, 1.0).expect("gamma in range")
    }

    pub fn inverted(land: &DiscreteLandscape) -> Self {
        Self::with_gamma(land, 0.0).expect("gamma in range")
    }

    pub fn coin(starts: usize) -> Self {
        Self::from_fn(starts, |_, _| 0.5).expect("constant in range")
    }

    /// Independent uniform probabilities, unrelated to the values.
    pub fn random(starts: usize, rng: &mut SeededRng) -> Self {
        let table: Vec<f64> = (0..starts * starts).map(|_| rng.random_range(0.0..=1.0)).collect();
        Self::from_fn(starts, |i, j| table[i * starts + j]).expect("uniform draws in range")
    }
}

/// Sign with a dead zone, for comparisons of enumerated sums.
fn sign_tol(v: f64, tol: f64) -> i8 {
    if v < -tol {
        -1
    } else if v > tol {
        1
    } else {
        0
    }
}

fn tolerance(land: &DiscreteLandscape) -> f64 {
    let scale = land.values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    1e-12 * scale
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prop1Report {
    /// `E[(p − ½)(Ŷ₀ − Ŷ₁)]`.
    pub lhs_assumption1: f64,
    pub e_tilde: f64,
    pub e_hat: f64,
    pub assumption_holds: bool,
    pub improves_on_random: bool,
    /// Both sides of the equivalence agree, including the zero case.
    pub verdict: bool,
}

/// Enumerates all start pairs and checks that the ordering condition holds
/// exactly when the two-candidate selector beats a single random start.
pub fn check_prop1(land: &DiscreteLandscape, ordering: &OrderingModel) -> Result<Prop1Report> {
    land.validate()?;
    if ordering.starts != land.starts() {
        return Err(Error::input("ordering model and landscape disagree on the number of starts"));
    }
    let k = land.starts();
    let (mut lhs, mut e_tilde) = (0.0, 0.0);
    for i in 0..k {
        for j in 0..k {
            let w = land.init_weights[i] * land.init_weights[j];
            let (y0, y1) = (land.value_of(i), land.value_of(j));
            let p = ordering.p(i, j);
            lhs += w * (p - 0.5) * (y0 - y1);
            e_tilde += w * (p * y0 + (1.0 - p) * y1);
        }
    }
    let e_hat = land.expected_random();
    let tol = tolerance(land);
    let s_lhs = sign_tol(lhs, tol);
    let s_diff = sign_tol(e_tilde - e_hat, tol);
    Ok(Prop1Report {
        lhs_assumption1: lhs,
        e_tilde,
        e_hat,
        assumption_holds: s_lhs < 0,
        improves_on_random: s_diff < 0,
        verdict: s_lhs == s_diff,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prop2Report {
    pub gamma: f64,
    pub e_min: f64,
    pub e_max: f64,
    pub e_tilde: f64,
    pub upper_bound: f64,
    pub verdict: bool,
}

/// Sandwich `E[min] ≤ E[Ỹ] ≤ γE[min] + (1−γ)E[max]` for the γ-selector.
pub fn check_prop2(land: &DiscreteLandscape, gamma: f64) -> Result<Prop2Report> {
    if !(gamma > 0.5 && gamma <= 1.0) {
        return Err(Error::input(format!("gamma must lie in (1/2, 1], got {gamma}")));
    }
    land.validate()?;
    let ordering = OrderingModel::with_gamma(land, gamma)?;
    let k = land.starts();
    let (mut e_min, mut e_max, mut e_tilde) = (0.0, 0.0, 0.0);
    for i in 0..k {
        for j in 0..k {
            let w = land.init_weights[i] * land.init_weights[j];
            let (y0, y1) = (land.value_of(i), land.value_of(j));
            let p = ordering.p(i, j);
            e_min += w * y0.min(y1);
            e_max += w * y0.max(y1);
            e_tilde += w * (p * y0 + (1.0 - p) * y1);
        }
    }
    let upper_bound = gamma * e_min + (1.0 - gamma) * e_max;
    let tol = tolerance(land);
    Ok(Prop2Report {
        gamma,
        e_min,
        e_max,
        e_tilde,
        upper_bound,
        verdict: e_min <= e_tilde + tol && e_tilde <= upper_bound + tol,
    })
}

/// One observed two-candidate decision.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub val0: f64,
    pub val1: f64,
    /// 0 or 1.
    pub selected: u8,
}

/// Fraction of decisive pairs where the smaller value was kept.
pub fn estimate_gamma(samples: &[Selection]) -> Result<f64> {
    let mut decisive = 0usize;
    let mut correct = 0usize;
    for s in samples {
        if s.val0 == s.val1 {
            continue;
        }
        decisive += 1;
        let kept_smaller = (s.selected == 0) == (s.val0 < s.val1);
        if kept_smaller {
            correct += 1;
        }
    }
    if decisive == 0 {
        return Err(Error::Undefined("every pair is tied".into()));
    }
    Ok(correct as f64 / decisive as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::seeded;
    use approx::assert_abs_diff_eq;

    fn two_basins() -> DiscreteLandscape {
        DiscreteLandscape::uniform(vec![0.0, 1.0]).unwrap()
    }

    #[test]
    fn oracle_selector_on_two_basins() {
        let land = two_basins();
        let r = check_prop1(&land, &OrderingModel::oracle(&land)).unwrap();
        assert_eq!(r.e_tilde, 0.25);
        assert_eq!(r.e_hat, 0.5);
        assert!(r.lhs_assumption1 < 0.0 && r.verdict && r.assumption_holds);
    }

    #[test]
    fn coin_selector_matches_random() {
        let land = two_basins();
        let r = check_prop1(&land, &OrderingModel::coin(2)).unwrap();
        assert_eq!(r.e_tilde, r.e_hat);
        assert_eq!(r.lhs_assumption1, 0.0);
        assert!(r.verdict && !r.assumption_holds && !r.improves_on_random);
    }

    #[test]
    fn inverted_selector_is_worse() {
        let land = two_basins();
        let r = check_prop1(&land, &OrderingModel::inverted(&land)).unwrap();
        assert_eq!(r.e_tilde, 0.75);
        assert!(r.verdict && !r.assumption_holds);
    }

    #[test]
    fn prop2_examples() {
        let land = two_basins();
        let r = check_prop2(&land, 0.8).unwrap();
        assert_abs_diff_eq!(r.e_tilde, 0.35, epsilon = 1e-15);
        assert_abs_diff_eq!(r.upper_bound, 0.35, epsilon = 1e-15);
        assert!(r.verdict);
        let r = check_prop2(&land, 1.0).unwrap();
        assert_eq!(r.e_tilde, r.e_min);
        let near = check_prop2(&land, 0.5 + 1e-9).unwrap();
        assert_abs_diff_eq!(near.e_tilde, land.expected_random(), epsilon = 1e-8);
        assert!(check_prop2(&land, 0.5).is_err());
        assert!(check_prop2(&land, 1.1).is_err());
    }

    #[test]
    fn gamma_estimates() {
        let mut rng = seeded(4);
        let oracle: Vec<Selection> = (0..100)
            .map(|_| {
                let (a, b): (f64, f64) = (rng.random(), rng.random());
                Selection {
                    val0: a,
                    val1: b,
                    selected: u8::from(b < a),
                }
            })
            .collect();
        assert_eq!(estimate_gamma(&oracle).unwrap(), 1.0);
        let coin: Vec<Selection> = (0..10_000)
            .map(|_| Selection {
                val0: rng.random(),
                val1: rng.random(),
                selected: u8::from(rng.random_bool(0.5)),
            })
            .collect();
        assert!((estimate_gamma(&coin).unwrap() - 0.5).abs() < 0.02);
        let ties = [Selection {
            val0: 1.0,
            val1: 1.0,
            selected: 0,
        }];
        assert!(matches!(estimate_gamma(&ties), Err(Error::Undefined(_))));
    }

    #[test]
    fn landscape_validation() {
        assert!(DiscreteLandscape::new(vec![1.0, 1.0], vec![0, 1], vec![0.5, 0.5]).is_err());
        assert!(DiscreteLandscape::new(vec![1.0, 2.0], vec![0, 2], vec![0.5, 0.5]).is_err());
        assert!(DiscreteLandscape::new(vec![1.0, 2.0], vec![0, 1], vec![0.5, 0.6]).is_err());
        let land = DiscreteLandscape::random(5, 12, 0.3, &mut seeded(1)).unwrap();
        assert!(land.delta() >= 0.3);
    }
}
