use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use initlearn_core::neural::{Mlp, MlpSpec};
use initlearn_core::problems::{sum_rate_gradient, AckleyFamily, ConvexPerturbFamily, SumRateFamily, SumRateInstance};
use initlearn_core::seed::seeded;
use initlearn_core::{run_gd, GdConfig, ProblemFamily};
use ndarray::Array2;

fn gd_runs(c: &mut Criterion) {
    let mut group = c.benchmark_group("run_gd_100");
    let mut rng = seeded(1);

    let ackley = AckleyFamily::default();
    let inst = ackley.sample_instance(&mut rng);
    let start = ackley.sample_init(&inst, &mut rng);
    let cfg = GdConfig::new(100, 0.0, ackley.default_step_rule());
    group.bench_function("ackley", |b| b.iter(|| run_gd(&ackley, &inst, black_box(&start), &cfg, false).unwrap()));

    let sr = SumRateFamily::new(15, 10.0);
    let inst = sr.sample_instance(&mut rng);
    let start = sr.sample_init(&inst, &mut rng);
    let cfg = GdConfig::new(100, 0.0, sr.default_step_rule());
    group.bench_function("sum_rate_15", |b| b.iter(|| run_gd(&sr, &inst, black_box(&start), &cfg, false).unwrap()));

    let cv = ConvexPerturbFamily::sample(75, 1.0, &mut rng).unwrap();
    let inst = cv.sample_instance(&mut rng);
    let start = cv.sample_init(&inst, &mut rng);
    let cfg = GdConfig::new(100, 0.0, cv.default_step_rule());
    group.bench_function("convex_75", |b| b.iter(|| run_gd(&cv, &inst, black_box(&start), &cfg, true).unwrap()));
    group.finish();
}

fn sum_rate_grad(c: &mut Criterion) {
    let sr = SumRateFamily::new(15, 10.0);
    let mut rng = seeded(2);
    let inst = sr.sample_instance(&mut rng);
    let view = SumRateInstance::new(15, inst.x.clone());
    let theta = sr.sample_init(&inst, &mut rng);
    c.bench_function("sum_rate_gradient_15", |b| b.iter(|| sum_rate_gradient(black_box(&theta), &view)));
}

fn mlp_passes(c: &mut Criterion) {
    let net = Mlp::new(MlpSpec::new(240, 15, vec![200, 200], 3)).unwrap();
    let batch = Array2::from_shape_fn((32, 240), |(i, j)| ((i * 240 + j) % 17) as f64 / 17.0);
    let targets = Array2::zeros((32, 15));
    c.bench_function("mlp_forward_32x240", |b| b.iter(|| net.forward_batch(black_box(batch.view())).unwrap()));
    c.bench_function("mlp_backward_32x240", |b| {
        b.iter(|| net.backward(black_box(batch.view()), targets.view()).unwrap())
    });
}

criterion_group!(benches, gd_runs, sum_rate_grad, mlp_passes);
criterion_main!(benches);
