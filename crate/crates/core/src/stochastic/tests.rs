use std::collections::HashMap;

use proptest::prelude::*;

use super::*;
use crate::stats::{chi_square_counts, RunningStats};
use crate::testutil::{random_grid, random_volume};
use crate::texture::{build_mip_pyramid, MipPyramid, TextureGrid};

type Key = (usize, [i64; 3]);

/// Reference tap probabilities split by sign, each part normalized.
fn reference_parts(taps: &[Tap]) -> (HashMap<Key, f64>, HashMap<Key, f64>) {
    let mut pos: HashMap<Key, f64> = HashMap::new();
    let mut neg: HashMap<Key, f64> = HashMap::new();
    for t in taps {
        if t.weight > 0.0 {
            *pos.entry((t.level, t.coord)).or_default() += t.weight;
        } else if t.weight < 0.0 {
            *neg.entry((t.level, t.coord)).or_default() -= t.weight;
        }
    }
    (pos, neg)
}

fn chi_square_against(observed: &HashMap<Key, u64>, expected: &HashMap<Key, f64>) -> f64 {
    let mut keys: Vec<Key> = expected.keys().chain(observed.keys()).copied().collect();
    keys.sort();
    keys.dedup();
    let counts: Vec<u64> = keys.iter().map(|k| observed.get(k).copied().unwrap_or(0)).collect();
    let probs: Vec<f64> = keys.iter().map(|k| expected.get(k).copied().unwrap_or(0.0)).collect();
    chi_square_counts(&counts, &probs).p_value
}

/// Draws `n` selections and checks the positive and negative tap
/// frequencies against the reference filter, and the signed weights
/// against the reference weight sums.
fn check_selection_law<S: TexelSource>(filter: StochFilter, src: &S, q: FilterQuery2D, n: usize, seed: u64) {
    let reference = filter.reference().taps(src, &q).unwrap();
    let (pos, neg) = reference_parts(&reference);
    let pos_sum: f64 = pos.values().sum();
    let neg_sum: f64 = neg.values().sum();
    let mut seen_pos: HashMap<Key, u64> = HashMap::new();
    let mut seen_neg: HashMap<Key, u64> = HashMap::new();
    for i in 0..n {
        let mut rng = RngStream::for_sample(seed, 0, i as u64);
        let sel = filter.select(src, &q, &mut rng).unwrap();
        for tap in sel.taps() {
            let key = (tap.level, tap.coord);
            if tap.weight > 0.0 {
                assert!(
                    (tap.weight - pos_sum).abs() < 1e-9,
                    "{filter:?}: W+ {} vs {pos_sum}",
                    tap.weight
                );
                *seen_pos.entry(key).or_default() += 1;
            } else {
                assert!(
                    (-tap.weight - neg_sum).abs() < 1e-9,
                    "{filter:?}: W- {} vs {neg_sum}",
                    tap.weight
                );
                *seen_neg.entry(key).or_default() += 1;
            }
        }
    }
    let p = chi_square_against(&seen_pos, &pos);
    assert!(p >= 0.01, "{filter:?} at {:?}: positive taps p = {p}", q.st);
    if !neg.is_empty() {
        assert_eq!(seen_neg.values().sum::<u64>(), n as u64);
        let p = chi_square_against(&seen_neg, &neg);
        assert!(p >= 0.01, "{filter:?} at {:?}: negative taps p = {p}", q.st);
    } else {
        assert!(seen_neg.is_empty());
    }
}

fn pyramid() -> MipPyramid {
    build_mip_pyramid(&random_grid(32, 32, 1, 5))
}

const QUERIES: [[f64; 2]; 4] = [[5.3, 7.8], [10.0, 4.0], [2.51, 3.49], [0.2, 30.9]];

#[test]
fn single_level_filters_sample_their_weights() {
    let g = random_grid(32, 32, 1, 4);
    let filters = [
        StochFilter::Bilinear,
        StochFilter::BicubicBSpline,
        StochFilter::BicubicKeys { a: -0.5 },
        StochFilter::BicubicKeys { a: -0.75 },
        StochFilter::Lanczos { lobes: 2 },
        StochFilter::DiscreteGaussian {
            sigma: 0.8,
            radius: 2.0,
        },
        StochFilter::DiscreteGaussian {
            sigma: 1.5,
            radius: 4.5,
        },
    ];
    for (k, f) in filters.into_iter().enumerate() {
        for (j, st) in QUERIES.into_iter().enumerate() {
            check_selection_law(f, &g, FilterQuery2D::at(st[0], st[1]), 40_000, (k * 10 + j) as u64);
        }
    }
}

#[test]
fn fis_filters_realize_their_reference() {
    let g = random_grid(32, 32, 1, 4);
    let filters = [
        StochFilter::FisGaussian { sigma: 0.7 },
        StochFilter::FisGaussian { sigma: 1.6 },
        StochFilter::FisBSpline { degree: 1 },
        StochFilter::FisBSpline { degree: 2 },
        StochFilter::FisBSpline { degree: 4 },
    ];
    for (k, f) in filters.into_iter().enumerate() {
        for (j, st) in QUERIES.into_iter().enumerate() {
            check_selection_law(
                f,
                &g,
                FilterQuery2D::at(st[0], st[1]),
                40_000,
                (100 + k * 10 + j) as u64,
            );
        }
    }
}

#[test]
fn mip_filters_sample_levels_and_taps() {
    let p = pyramid();
    let derivs = [
        ([1.7, 0.0], [0.0, 1.7]),
        ([3.0, 1.0], [-0.4, 0.9]),
        ([0.3, 0.2], [0.1, -0.25]),
        ([9.0, 0.0], [0.0, 0.5]),
        ([0.0, 0.0], [0.0, 0.0]),
    ];
    for f in [StochFilter::Ewa, StochFilter::TrilinearMip] {
        for (j, (d0, d1)) in derivs.into_iter().enumerate() {
            let q = FilterQuery2D::at(13.4, 9.7).with_derivatives(d0, d1);
            check_selection_law(f, &p, q, 40_000, 300 + j as u64);
        }
    }
    let biased = FilterQuery2D {
        mip_bias: 0.6,
        ..FilterQuery2D::at(7.25, 20.5).with_derivatives([2.0, 0.0], [0.0, 1.0])
    };
    check_selection_law(StochFilter::TrilinearMip, &p, biased, 40_000, 320);
    check_selection_law(StochFilter::Ewa, &p, biased, 40_000, 321);
}

#[test]
fn estimates_are_unbiased() {
    let g = random_grid(16, 16, 2, 8);
    let p = build_mip_pyramid(&g);
    let q = FilterQuery2D::at(6.3, 9.6).with_derivatives([2.2, 0.3], [0.1, 1.4]);
    let filters = [
        StochFilter::Bilinear,
        StochFilter::BicubicBSpline,
        StochFilter::BicubicKeys { a: -0.5 },
        StochFilter::Lanczos { lobes: 3 },
        StochFilter::DiscreteGaussian {
            sigma: 1.0,
            radius: 2.0,
        },
        StochFilter::Ewa,
        StochFilter::TrilinearMip,
        StochFilter::FisGaussian { sigma: 1.2 },
        StochFilter::FisBSpline { degree: 3 },
    ];
    for f in filters {
        let expect = f.reference().apply(&p, &q, &mut FetchCounter::new()).unwrap();
        let mut stats = [RunningStats::new(), RunningStats::new()];
        for i in 0..50_000 {
            let mut rng = RngStream::for_sample(17, 3, i);
            let est = f.estimate(&p, &q, &mut rng, &mut FetchCounter::new()).unwrap();
            for c in 0..2 {
                stats[c].push(est.value.as_slice()[c]);
            }
        }
        for c in 0..2 {
            let err = (stats[c].mean() - expect.as_slice()[c]).abs();
            assert!(
                err < 4.5 * stats[c].sem() + 1e-12,
                "{f:?} channel {c}: error {err}, sem {}",
                stats[c].sem()
            );
        }
    }
}

#[test]
fn fetches_per_lookup() {
    let p = pyramid();
    let q = FilterQuery2D::at(4.4, 6.6).with_derivatives([2.5, 0.0], [0.0, 2.5]);
    let filters = [
        StochFilter::Bilinear,
        StochFilter::BicubicBSpline,
        StochFilter::BicubicKeys { a: -0.5 },
        StochFilter::DiscreteGaussian {
            sigma: 1.0,
            radius: 2.0,
        },
        StochFilter::Ewa,
        StochFilter::TrilinearMip,
        StochFilter::FisGaussian { sigma: 1.0 },
    ];
    for f in filters {
        for i in 0..200 {
            let mut counter = FetchCounter::new();
            let est = f
                .estimate(&p, &q, &mut RngStream::for_sample(1, 0, i), &mut counter)
                .unwrap();
            assert_eq!(est.fetches, counter.count);
            assert!(
                est.fetches >= 1 && est.fetches <= f.max_fetches(),
                "{f:?}: {}",
                est.fetches
            );
        }
    }
    // away from integer positions Keys always has a negative lobe
    let mut counter = FetchCounter::new();
    let keys = StochFilter::BicubicKeys { a: -0.5 };
    let est = keys
        .estimate(&p, &FilterQuery2D::at(4.3, 6.6), &mut RngStream::new(3), &mut counter)
        .unwrap();
    assert_eq!(est.fetches, 2);
}

#[test]
fn selection_is_deterministic() {
    let p = pyramid();
    let q = FilterQuery2D::at(11.1, 3.3).with_derivatives([1.5, 0.5], [0.0, 2.0]);
    for f in [
        StochFilter::Ewa,
        StochFilter::BicubicKeys { a: -0.5 },
        StochFilter::FisBSpline { degree: 2 },
    ] {
        let a = f.select(&p, &q, &mut RngStream::for_sample(9, 4, 2)).unwrap();
        let b = f.select(&p, &q, &mut RngStream::for_sample(9, 4, 2)).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn rejects_bad_queries() {
    let g = random_grid(4, 4, 1, 1);
    let mut rng = RngStream::new(0);
    assert!(StochFilter::Bilinear
        .select(&g, &FilterQuery2D::at(f64::NAN, 0.0), &mut rng)
        .is_err());
    let gauss = StochFilter::FisGaussian { sigma: -1.0 };
    assert!(gauss.select(&g, &FilterQuery2D::at(1.0, 1.0), &mut rng).is_err());
    let spline = StochFilter::FisBSpline { degree: 0 };
    assert!(spline.select(&g, &FilterQuery2D::at(1.0, 1.0), &mut rng).is_err());
}

#[test]
fn mip_level_frequency_matches_fraction() {
    let n = 100_000;
    for (lod, levels) in [(1.3, 6), (0.0, 4), (2.75, 4), (-1.0, 3), (7.5, 3)] {
        let clamped = f64::clamp(lod, 0.0, (levels - 1) as f64);
        let lower = clamped.floor() as usize;
        let frac = clamped - lower as f64;
        let mut upper = 0u64;
        let mut rng = RngStream::new(lod.to_bits());
        for _ in 0..n {
            let (level, xi) = stoch_mip_level(lod, rng.uniform(), levels);
            assert!(level == lower || level == lower + 1);
            assert!((0.0..1.0).contains(&xi));
            upper += (level != lower) as u64;
        }
        let p = chi_square_counts(&[n - upper, upper], &[1.0 - frac, frac]).p_value;
        assert!(p >= 0.01, "lod {lod}: upper fraction {}", upper as f64 / n as f64);
    }
}

#[test]
fn mip_level_matches_floor_of_jittered_lod() {
    let mut rng = RngStream::new(12);
    for _ in 0..10_000 {
        let lod = 5.0 * rng.uniform();
        let xi = rng.uniform();
        let (level, _) = stoch_mip_level(lod, xi, 8);
        let expect = (lod + xi).floor() as usize;
        // the two forms split the unit interval at the same point up to rounding
        if ((lod + xi) - (lod + xi).round()).abs() > 1e-12 {
            assert_eq!(level, expect, "lod {lod} xi {xi}");
        }
    }
}

#[test]
fn box_muller_is_standard_normal() {
    let mut stats = [RunningStats::new(), RunningStats::new()];
    let mut cross = RunningStats::new();
    let mut rng = RngStream::new(44);
    for _ in 0..100_000 {
        let z = box_muller(rng.uniform(), rng.uniform());
        stats[0].push(z[0]);
        stats[1].push(z[1]);
        cross.push(z[0] * z[1]);
    }
    for s in &stats {
        assert!(s.mean().abs() < 4.0 * s.sem());
        assert!((s.variance() - 1.0).abs() < 0.02);
    }
    assert!(cross.mean().abs() < 4.0 * cross.sem());
    assert!(box_muller(0.0, 0.3)[0].is_finite());
}

#[test]
fn volume_selection_law() {
    let v = random_volume(8, 3);
    for (k, f) in [VolumeFilter::Trilinear, VolumeFilter::TricubicBSpline]
        .into_iter()
        .enumerate()
    {
        for (j, p) in [[3.2, 4.7, 1.1], [2.0, 5.5, 3.9]].into_iter().enumerate() {
            let (expected, _) = reference_parts(&f.taps(p));
            let mut seen: HashMap<Key, u64> = HashMap::new();
            let mut rng = RngStream::new((k * 2 + j) as u64);
            for _ in 0..60_000 {
                let sel = f.select(p, rng.uniform());
                assert_eq!(sel.taps().len(), 1);
                *seen.entry((0, sel.taps()[0].coord)).or_default() += 1;
            }
            let pv = chi_square_against(&seen, &expected);
            assert!(pv >= 0.01, "{f:?} at {p:?}: p = {pv}");
        }
        let mut counter = FetchCounter::new();
        f.estimate(&v, [1.5, 1.5, 1.5], 0.3, &mut counter);
        assert_eq!(counter.count, 1);
    }
}

#[test]
fn evaluate_mapped_applies_before_weighting() {
    let g = TextureGrid::new_2d(2, 1, 1, vec![1.0, 3.0]).unwrap();
    let p = PositivizedTaps {
        positive: [1, 0],
        positive_sum: 1.5,
        negative: Some([0, 0]),
        negative_sum: 0.5,
        xi: 0.0,
    };
    let sel = TapSelection::positivized(&p, 0);
    let est = sel.evaluate_mapped(&g, &mut FetchCounter::new(), |x| x * x);
    assert_eq!(est.value.x(), 1.5 * 9.0 - 0.5 * 1.0);
    assert_eq!(est.fetches, 2);
}

#[test]
fn filter_round_trip() {
    let filters = [
        Filter::Bilinear,
        Filter::BicubicKeys { a: -0.5 },
        Filter::Gaussian {
            sigma: 1.0,
            radius: 2.0,
        },
        Filter::Ewa,
        Filter::FisBSpline { degree: 2 },
    ];
    for f in filters {
        assert_eq!(StochFilter::from(f).reference(), f);
    }
}

proptest! {
    #[test]
    fn bilinear_stays_in_footprint(s in -50.0f64..50.0, t in -50.0f64..50.0, xi in 0.0f64..1.0) {
        let (c, rest) = stoch_bilinear([s, t], xi);
        prop_assert!(c[0] == s.floor() as i64 || c[0] == s.floor() as i64 + 1);
        prop_assert!(c[1] == t.floor() as i64 || c[1] == t.floor() as i64 + 1);
        prop_assert!((0.0..1.0).contains(&rest));
    }

    #[test]
    fn bspline_stays_in_footprint(s in -50.0f64..50.0, t in -50.0f64..50.0, xi in 0.0f64..1.0) {
        let (c, _) = stoch_bicubic_bspline([s, t], xi);
        prop_assert!((c[0] - s.floor() as i64).abs() <= 2 && c[0] >= s.floor() as i64 - 1);
        prop_assert!((c[1] - t.floor() as i64).abs() <= 2 && c[1] >= t.floor() as i64 - 1);
        let (c3, _) = stoch_tricubic_bspline([s, t, s + t], xi);
        prop_assert!(c3[0] >= s.floor() as i64 - 1 && c3[0] <= s.floor() as i64 + 2);
    }

    #[test]
    fn keys_weights_sum_to_one(s in -20.0f64..20.0, t in -20.0f64..20.0, xi in 0.0f64..1.0) {
        let p = stoch_bicubic_keys([s, t], -0.5, xi).unwrap();
        prop_assert!((p.positive_sum - p.negative_sum - 1.0).abs() < 1e-12);
        prop_assert!(p.positive_sum >= 1.0);
    }

    #[test]
    fn bspline_weights_partition_unity(t in 0.0f64..1.0) {
        let w = bspline_weights(t);
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(w.iter().all(|&x| x >= 0.0));
    }
}
