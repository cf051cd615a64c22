use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, Criterion};
use tsat_core::baselines::{fit_gbdt, GbdtParams};
use tsat_core::dataset::{
    encode_dataset, fit_encoding, synthesize, Dataset, FeatureMatrix, MarginalSpec, SynthSpec, VariableSchema,
};
use tsat_core::selection::{ks_two_sample, rank_support};

fn survey(n: usize) -> (Dataset, FeatureMatrix) {
    let d = synthesize(
        Arc::new(VariableSchema::default_survey()),
        &MarginalSpec::default_survey(),
        &SynthSpec {
            n,
            seed: 1,
            label_rule: "linear".into(),
            noise_sd: 0.3,
        },
    )
    .unwrap();
    let x = encode_dataset(&d, &fit_encoding(&d).unwrap()).unwrap();
    (d, x)
}

fn ranking(c: &mut Criterion) {
    let (d, x) = survey(874);
    let train: Vec<usize> = (0..699).collect();
    let test: Vec<usize> = (699..874).collect();
    let pool = d.subset(&train);
    let (tx, qx) = (x.select_rows(&train), x.select_rows(&test));
    c.bench_function("rank_support 699x175 k=18", |b| {
        b.iter(|| rank_support(&pool, &tx, &qx, black_box(18)).unwrap())
    });
}

fn gbdt(c: &mut Criterion) {
    let (d, x) = survey(874);
    let y = d.labels();
    let mut g = c.benchmark_group("gbdt");
    g.sample_size(10);
    g.bench_function("fit 874 rows, 200 trees", |b| {
        b.iter(|| fit_gbdt(&x, &y, &GbdtParams::default()).unwrap())
    });
    g.finish();
}

fn ks(c: &mut Criterion) {
    let (d, _) = survey(874);
    let col = d.schema().index_of("commuting_time").unwrap();
    let population = d.column(col);
    let sample: Vec<f64> = population.iter().step_by(9).copied().collect();
    c.bench_function("ks_two_sample 98 vs 874", |b| {
        b.iter(|| ks_two_sample("commuting_time", black_box(&sample), &population).unwrap())
    });
}

criterion_group!(benches, ranking, gbdt, ks);
criterion_main!(benches);
