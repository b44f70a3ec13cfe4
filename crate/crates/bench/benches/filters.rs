use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use stochtex::fixtures::{high_contrast, puff};
use stochtex::texture::build_mip_pyramid;
use stochtex::{FetchCounter, Filter, FilterQuery2D, RngStream, StochFilter, VolumeFilter};

fn image_filters(c: &mut Criterion) {
    let tex = high_contrast();
    let pyr = build_mip_pyramid(&tex);
    let q = FilterQuery2D::at(101.3, 57.8).with_derivatives([2.5, 0.4], [-0.3, 1.7]);
    let mut group = c.benchmark_group("image");
    let filters = [
        ("bilinear", Filter::Bilinear),
        ("bicubic-bspline", Filter::BicubicBSpline),
        ("bicubic-keys", Filter::BicubicKeys { a: -0.5 }),
        ("ewa", Filter::Ewa),
        ("trilinear-mip", Filter::TrilinearMip),
    ];
    for (name, f) in filters {
        group.bench_function(BenchmarkId::new("det", name), |b| {
            b.iter(|| f.apply(&pyr, black_box(&q), &mut FetchCounter::new()).unwrap())
        });
        let s = StochFilter::from(f);
        let mut i = 0u64;
        group.bench_function(BenchmarkId::new("stoch", name), |b| {
            b.iter(|| {
                i += 1;
                let mut rng = RngStream::for_sample(7, 0, i);
                s.estimate(&pyr, black_box(&q), &mut rng, &mut FetchCounter::new())
                    .unwrap()
            })
        });
    }
    group.finish();
}

fn volume_filters(c: &mut Criterion) {
    let vol = puff();
    let p = [31.4, 17.9, 40.2];
    let mut group = c.benchmark_group("volume");
    for (name, f) in [
        ("trilinear", VolumeFilter::Trilinear),
        ("tricubic-bspline", VolumeFilter::TricubicBSpline),
    ] {
        group.bench_function(BenchmarkId::new("det", name), |b| {
            b.iter(|| f.apply(&vol, black_box(p), &mut FetchCounter::new()))
        });
        let mut rng = RngStream::new(7);
        group.bench_function(BenchmarkId::new("stoch", name), |b| {
            b.iter(|| f.estimate(&vol, black_box(p), rng.uniform(), &mut FetchCounter::new()))
        });
    }
    group.finish();
}

criterion_group!(benches, image_filters, volume_filters);
criterion_main!(benches);
