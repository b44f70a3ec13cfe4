//! Discrete sampling primitives with uniform sample reuse.

use super::rng::ONE_MINUS_EPSILON;
use crate::{Error, Result};

/// A sampled index and the uniform left over for further decisions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscreteSampleResult {
    pub index: usize,
    /// Remapped uniform, independent of `index`.
    pub xi: f64,
}

/// Makes a Bernoulli decision with probability `p` from `xi` and returns a
/// fresh uniform derived from the unused part of `xi`.
///
/// Accepts iff `xi < p`. For `p` of exactly 0 or 1 the outcome is forced and
/// `xi` passes through unchanged.
#[inline]
pub fn sample_reuse(xi: f64, p: f64) -> (bool, f64) {
    if p <= 0.0 {
        (false, xi)
    } else if p >= 1.0 {
        (true, xi)
    } else if xi < p {
        (true, (xi / p).min(ONE_MINUS_EPSILON))
    } else {
        (false, ((xi - p) / (1.0 - p)).min(ONE_MINUS_EPSILON))
    }
}

/// Linear interpolation estimator: `v0` when `xi > t`, otherwise `v1`.
#[inline]
pub fn stoch_lerp<T>(v0: T, v1: T, t: f64, xi: f64) -> T {
    if xi > t {
        v0
    } else {
        v1
    }
}

fn check_weights(weights: &[f64]) -> Result<f64> {
    if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
        return Err(Error::param(format!("sampling weight {w} is negative or not finite")));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::param("no positive sampling weight"));
    }
    Ok(total)
}

/// Samples index `j` with probability `w_j / sum(w)` by CDF inversion.
/// Weights need not be normalized.
pub fn sample_discrete(weights: &[f64], xi: f64) -> Result<DiscreteSampleResult> {
    let total = check_weights(weights)?;
    Ok(sample_discrete_with_total(weights, total, xi))
}

/// Unchecked CDF inversion for weights already known to be valid.
#[inline]
pub(crate) fn sample_discrete_with_total(weights: &[f64], total: f64, xi: f64) -> DiscreteSampleResult {
    let target = xi * total;
    let mut cdf = 0.0;
    let mut last = 0;
    for (j, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        last = j;
        let next = cdf + w;
        if target < next {
            return DiscreteSampleResult {
                index: j,
                xi: ((target - cdf) / w).clamp(0.0, ONE_MINUS_EPSILON),
            };
        }
        cdf = next;
    }
    // rounding pushed `target` past the accumulated total
    DiscreteSampleResult {
        index: last,
        xi: ONE_MINUS_EPSILON,
    }
}

/// Single-slot weighted reservoir driven by one reused uniform.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Reservoir {
    total: f64,
    selected: Option<usize>,
}

impl Reservoir {
    pub fn new() -> Self {
        Self::default()
    }

    /// Offers `index` with weight `weight`. Non-positive weights are
    /// skipped; the first positive weight is always taken.
    #[inline]
    pub fn push(&mut self, index: usize, weight: f64, xi: &mut f64) {
        if weight <= 0.0 {
            return;
        }
        self.total += weight;
        let (take, next) = sample_reuse(*xi, weight / self.total);
        *xi = next;
        if take {
            self.selected = Some(index);
        }
    }

    pub fn selected(&self) -> Option<usize> {
        self.selected
    }

    pub fn total(&self) -> f64 {
        self.total
    }
}

/// One-pass weighted reservoir sampling over a stream of weights. The
/// resulting distribution equals [`sample_discrete`] on the materialized
/// vector.
pub fn reservoir_sample(weights: impl IntoIterator<Item = f64>, xi: f64) -> Result<DiscreteSampleResult> {
    let mut res = Reservoir::new();
    let mut xi = xi;
    for (i, w) in weights.into_iter().enumerate() {
        if !w.is_finite() || w < 0.0 {
            return Err(Error::param(format!("sampling weight {w} is negative or not finite")));
        }
        res.push(i, w, &mut xi);
    }
    res.selected()
        .map(|index| DiscreteSampleResult { index, xi })
        .ok_or_else(|| Error::param("no positive sampling weight"))
}

/// Independent samples from the positive and negative parts of a signed
/// weight vector. The estimate `positive_sum * t[j+] - negative_sum * t[j-]`
/// is unbiased for `sum(w_i t_i)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositivizedSample {
    pub positive: DiscreteSampleResult,
    pub positive_sum: f64,
    /// Absent when no weight is negative.
    pub negative: Option<DiscreteSampleResult>,
    pub negative_sum: f64,
}

impl PositivizedSample {
    /// Combines the values at the sampled indices.
    pub fn estimate(&self, values: &[f64]) -> f64 {
        let mut v = self.positive_sum * values[self.positive.index];
        if let Some(neg) = self.negative {
            v -= self.negative_sum * values[neg.index];
        }
        v
    }
}

/// Positivized sampling with two reservoirs fed from one reused uniform.
pub fn positivized_sample(weights: &[f64], xi: f64) -> Result<PositivizedSample> {
    if let Some(w) = weights.iter().find(|w| !w.is_finite()) {
        return Err(Error::param(format!("sampling weight {w} is not finite")));
    }
    let mut pos = Reservoir::new();
    let mut neg = Reservoir::new();
    let mut xi = xi;
    for (i, &w) in weights.iter().enumerate() {
        if w < 0.0 {
            neg.push(i, -w, &mut xi);
        } else {
            pos.push(i, w, &mut xi);
        }
    }
    let positive = pos
        .selected()
        .ok_or_else(|| Error::param("positivized sampling needs a positive weight"))?;
    Ok(PositivizedSample {
        positive: DiscreteSampleResult { index: positive, xi },
        positive_sum: pos.total(),
        negative: neg.selected().map(|index| DiscreteSampleResult { index, xi }),
        negative_sum: neg.total(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{chi_square_uniform, RunningStats};
    use crate::RngStream;
    use proptest::prelude::*;

    #[test]
    fn reuse_formula() {
        assert_eq!(sample_reuse(0.3, 0.5), (true, 0.6));
        assert_eq!(sample_reuse(0.75, 0.5), (false, 0.5));
        assert_eq!(sample_reuse(0.5, 0.5), (false, 0.0));
        assert_eq!(sample_reuse(0.4, 0.0), (false, 0.4));
        assert_eq!(sample_reuse(0.4, 1.0), (true, 0.4));
    }

    #[test]
    fn reuse_acceptance_rate_and_uniformity() {
        let mut rng = RngStream::new(5);
        let p = 0.3;
        let n = 1_000_000;
        let mut accepted = 0usize;
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let (a, x) = sample_reuse(rng.uniform(), p);
            accepted += a as usize;
            out.push(x);
        }
        assert!((accepted as f64 / n as f64 - p).abs() < 0.002);
        assert!(chi_square_uniform(&out, 64).passes(0.01));
    }

    #[test]
    fn lerp_convention() {
        assert_eq!(stoch_lerp(1, 2, 0.0, 0.3), 1);
        assert_eq!(stoch_lerp(1, 2, 1.0, 0.3), 2);
        assert_eq!(stoch_lerp(1, 2, 0.5, 0.5), 2);
        let mut rng = RngStream::new(8);
        let mut stats = RunningStats::new();
        for _ in 0..1_000_000 {
            stats.push(stoch_lerp(3.0, 7.0, 0.25, rng.uniform()));
        }
        assert!((stats.mean() - 4.0).abs() < 4.0 * stats.sem());
    }

    #[test]
    fn discrete_basics() {
        for xi in [0.0, 0.5, 0.999] {
            assert_eq!(sample_discrete(&[1.0, 0.0, 0.0], xi).unwrap().index, 0);
        }
        assert_eq!(sample_discrete(&[2.0, 2.0, 2.0, 2.0], 0.1).unwrap().index, 0);
        let r = sample_discrete(&[2.0, 2.0, 2.0, 2.0], 0.6).unwrap();
        assert_eq!(r.index, 2);
        assert!((r.xi - 0.4).abs() < 1e-12);
        assert!(sample_discrete(&[0.0, 0.0], 0.5).is_err());
        assert!(sample_discrete(&[1.0, -1.0], 0.5).is_err());
        assert!(sample_discrete(&[], 0.5).is_err());
        assert_eq!(sample_discrete(&[0.0, 3.0], 0.0).unwrap().index, 1);
    }

    #[test]
    fn discrete_frequencies() {
        let mut rng = RngStream::new(11);
        let n = 1_000_000;
        let ones = (0..n)
            .filter(|_| sample_discrete(&[1.0, 3.0], rng.uniform()).unwrap().index == 1)
            .count();
        assert!((ones as f64 / n as f64 - 0.75).abs() < 0.002);
    }

    #[test]
    fn reservoir_basics() {
        assert_eq!(reservoir_sample([5.0], 0.9).unwrap().index, 0);
        for xi in [0.0, 0.3, 0.999] {
            assert_eq!(reservoir_sample([4.0, 0.0, 0.0, 0.0], xi).unwrap().index, 0);
        }
        assert!(reservoir_sample([0.0, 0.0], 0.5).is_err());
        assert!(reservoir_sample([1.0, -2.0], 0.5).is_err());
        assert!(reservoir_sample(std::iter::empty(), 0.5).is_err());
    }

    #[test]
    fn reservoir_matches_cdf_inversion() {
        let weights = [0.5, 2.0, 0.0, 1.25, 3.0, 0.25];
        let n = 1_000_000;
        let mut rng = RngStream::new(12);
        let mut a = [0usize; 6];
        let mut b = [0usize; 6];
        for _ in 0..n {
            a[reservoir_sample(weights, rng.uniform()).unwrap().index] += 1;
            b[sample_discrete(&weights, rng.uniform()).unwrap().index] += 1;
        }
        let tv: f64 = a
            .iter()
            .zip(&b)
            .map(|(x, y)| (*x as f64 - *y as f64).abs())
            .sum::<f64>()
            / (2.0 * n as f64);
        assert!(tv < 0.005, "total variation {tv}");
        assert_eq!(a[2], 0);
    }

    #[test]
    fn positivized() {
        let all_pos = positivized_sample(&[1.0, 2.0], 0.7).unwrap();
        assert!(all_pos.negative.is_none());
        assert_eq!(all_pos.positive.index, reservoir_sample([1.0, 2.0], 0.7).unwrap().index);

        let zero_neg = positivized_sample(&[0.0, 1.0, -0.0], 0.2).unwrap();
        assert!(zero_neg.negative.is_none());
        assert_eq!(zero_neg.negative_sum, 0.0);

        assert!(positivized_sample(&[-1.0, -2.0], 0.5).is_err());

        let weights = [-1.0, 2.0];
        let values = [5.0, 7.0];
        let mut rng = RngStream::new(13);
        let mut stats = RunningStats::new();
        for _ in 0..1_000_000 {
            let s = positivized_sample(&weights, rng.uniform()).unwrap();
            stats.push(s.estimate(&values));
        }
        // two-element parts are deterministic, so the estimate is exact
        assert!((stats.mean() - 9.0).abs() <= 4.0 * stats.sem() + 1e-12);

        let weights = [-0.25, 0.75, 1.0, -0.5, 0.3];
        let values = [1.0, -2.0, 4.0, 0.5, 3.0];
        let expect: f64 = weights.iter().zip(&values).map(|(w, v)| w * v).sum();
        let mut stats = RunningStats::new();
        for _ in 0..1_000_000 {
            stats.push(positivized_sample(&weights, rng.uniform()).unwrap().estimate(&values));
        }
        assert!((stats.mean() - expect).abs() < 4.0 * stats.sem());
    }

    proptest! {
        #[test]
        fn reuse_stays_in_unit_interval(xi in 0.0f64..1.0, p in 0.0f64..=1.0) {
            let (_, x) = sample_reuse(xi, p);
            prop_assert!((0.0..1.0).contains(&x));
        }

        #[test]
        fn discrete_picks_positive_weight(ws in proptest::collection::vec(0.0f64..4.0, 1..12), xi in 0.0f64..1.0) {
            prop_assume!(ws.iter().sum::<f64>() > 0.0);
            let r = sample_discrete(&ws, xi).unwrap();
            prop_assert!(ws[r.index] > 0.0);
            prop_assert!((0.0..1.0).contains(&r.xi));
            let res = reservoir_sample(ws.iter().copied(), xi).unwrap();
            prop_assert!(ws[res.index] > 0.0);
        }
    }
}
