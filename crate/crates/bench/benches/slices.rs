use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use rncmc::atlas::embed_slice;
use rncmc::{foliate_fixed, foliate_varied, solve_dirichlet, DirichletOptions, EmbedOptions};
use rncmc_bench::{case_specs, reference_params};

fn embed(c: &mut Criterion) {
    let p = reference_params();
    let opts = EmbedOptions::default();
    let mut group = c.benchmark_group("embed_slice");
    for (case, spec) in case_specs(&p) {
        group.bench_with_input(BenchmarkId::from_parameter(case), &spec, |b, spec| {
            b.iter(|| embed_slice(&p, black_box(spec), &opts).unwrap())
        });
    }
    group.finish();
}

fn dirichlet(c: &mut Criterion) {
    let p = reference_params();
    let opts = EmbedOptions::default();
    c.bench_function("dirichlet H=0.2 T0=0.3 X0=0.5", |b| {
        b.iter(|| {
            solve_dirichlet(
                &p,
                0.2,
                black_box(0.3),
                0.5,
                &DirichletOptions::default(),
                &opts,
            )
            .unwrap()
        })
    });
}

fn foliations(c: &mut Criterion) {
    let p = reference_params();
    let opts = EmbedOptions::default();
    let mut group = c.benchmark_group("foliate");
    group.sample_size(10);
    group.bench_function("fixed H=0.2 n=50", |b| {
        b.iter(|| foliate_fixed(&p, black_box(0.2), (0, 0), 50, &opts).unwrap())
    });
    group.bench_function("varied 4 segments", |b| {
        b.iter(|| foliate_varied(&p, black_box(4), 6, &opts).unwrap())
    });
    group.finish();
}

criterion_group!(benches, embed, dirichlet, foliations);
criterion_main!(benches);
