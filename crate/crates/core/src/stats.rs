//! Small statistics toolkit: running moments, chi-square goodness of fit and
//! log-log slope fits.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Welford accumulator for mean and variance.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningStats {
    n: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Chan et al. parallel combination.
    pub fn merge(&mut self, other: &RunningStats) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        self.mean += delta * other.n as f64 / n as f64;
        self.m2 += other.m2 + delta * delta * self.n as f64 * other.n as f64 / n as f64;
        self.n = n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    /// Standard error of the mean.
    pub fn sem(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

/// Outcome of a chi-square goodness-of-fit test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

impl ChiSquare {
    /// True when the fit is not rejected at significance `alpha`.
    pub fn passes(&self, alpha: f64) -> bool {
        self.p_value >= alpha
    }
}

/// Pearson chi-square of observed counts against expected probabilities.
///
/// Cells whose expected count falls below 5 are pooled into one cell; an
/// observation in a zero-probability cell fails the test outright.
pub fn chi_square_counts(observed: &[u64], probabilities: &[f64]) -> ChiSquare {
    assert_eq!(observed.len(), probabilities.len());
    let n: u64 = observed.iter().sum();
    let total_p: f64 = probabilities.iter().sum();
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut pooled_obs, mut pooled_exp) = (0.0, 0.0);
    let mut impossible = false;
    for (&o, &p) in observed.iter().zip(probabilities) {
        let e = n as f64 * p / total_p;
        if p <= 0.0 {
            impossible |= o > 0;
            continue;
        }
        if e < 5.0 {
            pooled_obs += o as f64;
            pooled_exp += e;
        } else {
            cells.push((o as f64, e));
        }
    }
    if pooled_exp > 0.0 {
        if pooled_exp < 5.0 && !cells.is_empty() {
            // fold a thin pooled cell into the smallest regular cell
            let k = cells
                .iter()
                .enumerate()
                .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
                .map(|(i, _)| i)
                .unwrap();
            cells[k].0 += pooled_obs;
            cells[k].1 += pooled_exp;
        } else {
            cells.push((pooled_obs, pooled_exp));
        }
    }
    if impossible {
        return ChiSquare {
            statistic: f64::INFINITY,
            dof: cells.len().saturating_sub(1),
            p_value: 0.0,
        };
    }
    let statistic: f64 = cells.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dof = cells.len().saturating_sub(1);
    let p_value = if dof == 0 {
        1.0
    } else {
        1.0 - ChiSquared::new(dof as f64).unwrap().cdf(statistic)
    };
    ChiSquare {
        statistic,
        dof,
        p_value,
    }
}

/// Equal-width histogram test that `samples` are uniform on `[0, 1)`.
pub fn chi_square_uniform(samples: &[f64], bins: usize) -> ChiSquare {
    let mut counts = vec![0u64; bins];
    for &x in samples {
        let b = ((x * bins as f64) as usize).min(bins - 1);
        counts[b] += 1;
    }
    chi_square_counts(&counts, &vec![1.0 / bins as f64; bins])
}

/// Least-squares slope of `log(y)` against `log(x)`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
