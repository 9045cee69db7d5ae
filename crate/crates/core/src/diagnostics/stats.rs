use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub low: f64,
    pub high: f64,
}

impl Interval {
    pub fn point(v: f64) -> Self {
        Self { low: v, high: v }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.low <= v && v <= self.high
    }

    pub fn excludes_zero(&self) -> bool {
        self.low > 0.0 || self.high < 0.0
    }

    pub fn width(&self) -> f64 {
        self.high - self.low
    }
}

/// Sample Pearson correlation.
pub fn pearson(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::input(format!("length mismatch: {} vs {}", u.len(), v.len())));
    }
    if u.len() < 2 {
        return Err(Error::input("correlation needs at least 2 samples"));
    }
    let n = u.len() as f64;
    let mu = u.iter().sum::<f64>() / n;
    let mv = v.iter().sum::<f64>() / n;
    let (mut suv, mut suu, mut svv) = (0.0, 0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        let (da, db) = (a - mu, b - mv);
        suv += da * db;
        suu += da * da;
        svv += db * db;
    }
    if suu == 0.0 || svv == 0.0 {
        return Err(Error::Undefined("correlation with a zero-variance sample".into()));
    }
    Ok((suv / (suu.sqrt() * svv.sqrt())).clamp(-1.0, 1.0))
}

/// Two-sided normal quantile `z_{(1+confidence)/2}`.
pub fn normal_quantile(confidence: f64) -> f64 {
    Normal::standard().inverse_cdf(0.5 + confidence / 2.0)
}

/// Fisher-z interval for a correlation from `n` pairs.
pub fn fisher_z_interval(rho: f64, n: usize, confidence: f64) -> Option<Interval> {
    if n <= 3 {
        return None;
    }
    let z = rho.clamp(-1.0 + 1e-15, 1.0 - 1e-15).atanh();
    let half = normal_quantile(confidence) / ((n - 3) as f64).sqrt();
    Some(Interval {
        low: (z - half).tanh(),
        high: (z + half).tanh(),
    })
}

/// Mean and standard error of the mean.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Student-t interval for the mean.
pub fn mean_ci(values: &[f64], confidence: f64) -> Result<Interval> {
    if values.len() < 2 {
        return Err(Error::input("confidence interval needs at least 2 values"));
    }
    let (mean, se) = mean_se(values);
    if se == 0.0 {
        return Ok(Interval::point(mean));
    }
    let df = (values.len() - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, df)
        .map_err(|e| Error::input(e.to_string()))?
        .inverse_cdf(0.5 + confidence / 2.0);
    Ok(Interval {
        low: mean - t * se,
        high: mean + t * se,
    })
}

/// Student-t interval on `mean(a − b)` over paired observations.
pub fn paired_ci(a: &[f64], b: &[f64], confidence: f64) -> Result<Interval> {
    if a.len() != b.len() {
        return Err(Error::input(format!("paired samples differ in length: {} vs {}", a.len(), b.len())));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::input(format!("confidence must be in (0, 1), got {confidence}")));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    mean_ci(&d, confidence)
}

/// Accumulates mean and variance in fixed-size blocks so the result does not
/// depend on how blocks were scheduled.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub(crate) struct Moments {
    pub n: f64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Moments {
    pub fn push(&mut self, v: f64) {
        self.n += 1.0;
        self.sum += v;
        self.sum_sq += v * v;
    }

    pub fn merge(mut self, o: Moments) -> Moments {
        self.n += o.n;
        self.sum += o.sum;
        self.sum_sq += o.sum_sq;
        self
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.n
    }

    pub fn se(&self) -> f64 {
        if self.n < 2.0 {
            return 0.0;
        }
        let var = ((self.sum_sq - self.sum * self.sum / self.n) / (self.n - 1.0)).max(0.0);
        (var / self.n).sqrt()
    }
}
