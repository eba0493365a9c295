use std::hint::black_box;

use bnav_core::geometry::{homography_between, Point2};
use bnav_core::sim::{run_session, SessionConfig};
use bnav_core::tipdetect::{curvature_profile, EdgeChain};
use criterion::{criterion_group, criterion_main, Criterion};

fn homography(c: &mut Criterion) {
    let from = [Point2::new(12.0, 20.0), Point2::new(610.0, 35.0), Point2::new(590.0, 420.0), Point2::new(30.0, 400.0)];
    let to = [Point2::new(0.0, 0.0), Point2::new(500.0, 0.0), Point2::new(500.0, 300.0), Point2::new(0.0, 300.0)];
    c.bench_function("homography_between", |b| b.iter(|| homography_between(black_box(&from), black_box(&to))));
    let h = homography_between(&from, &to).unwrap();
    c.bench_function("homography_apply", |b| b.iter(|| h.apply(black_box(Point2::new(300.0, 200.0)))));
}

fn curvature(c: &mut Criterion) {
    let points: Vec<Point2> = (0..400)
        .map(|i| {
            let a = i as f64 / 400.0 * std::f64::consts::TAU;
            Point2::new((100.0 * a.cos()).round() + 0.01 * i as f64, (60.0 * a.sin()).round())
        })
        .collect();
    let chain = EdgeChain::new(points, true).unwrap();
    c.bench_function("curvature_profile_400", |b| b.iter(|| curvature_profile(black_box(&chain), 5)));
}

fn session(c: &mut Criterion) {
    let cfg = SessionConfig::default().with_seed(1);
    let mut group = c.benchmark_group("session");
    group.sample_size(10);
    group.bench_function("two_targets", |b| b.iter(|| run_session(black_box(&cfg))));
    group.finish();
}

criterion_group!(benches, homography, curvature, session);
criterion_main!(benches);
