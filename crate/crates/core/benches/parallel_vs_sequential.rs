use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use polydil::dilation::{self, DilationMode, DilationOptions};
use polydil::generators::{self, rng_from_seed};
use polydil::linalg;
use polydil::vn;
use polydil::{Execution, ToleranceConfig};

fn executions() -> Vec<(&'static str, Execution)> {
    vec![
        ("sequential", Execution::Sequential),
        #[cfg(feature = "parallel")]
        ("parallel", Execution::Parallel),
    ]
}

fn torus_sup(c: &mut Criterion) {
    let mut rng = rng_from_seed(7);
    let p = generators::random_polynomial(3, 4, &mut rng);
    let mut group = c.benchmark_group("torus_sup");
    for (name, exec) in executions() {
        group.bench_with_input(BenchmarkId::new(name, 128), &exec, |b, &exec| b.iter(|| vn::torus_sup(black_box(&p), 128, exec)));
    }
    group.finish();
}

fn verify(c: &mut Criterion) {
    let tol = ToleranceConfig::default();
    let t = generators::gen_diagonal(4, 4, 0.5, 11).unwrap();
    let probes = linalg::identity(t.dim());
    let mut group = c.benchmark_group("verify_dilation");
    group.sample_size(10);
    for (name, exec) in executions() {
        let opts = DilationOptions { exec, ..DilationOptions::default() };
        let pkg = dilation::build_dilation(DilationMode::General, &t, 0, 1, &tol, &opts).unwrap();
        group.bench_with_input(BenchmarkId::new(name, "n4_dim4"), &exec, |b, &exec| {
            b.iter(|| dilation::verify_dilation(black_box(&pkg), &t, &probes, &tol, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, torus_sup, verify);
criterion_main!(benches);
