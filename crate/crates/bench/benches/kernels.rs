use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use nncwo_bench::fixture;
use nncwo_core::neural::{build_mlp, train};
use nncwo_core::weights::frontdoor_stage_weights;
use nncwo_core::{build_scenario, fit_logistic, fit_wls, Hyperparams, ScenarioKind, ScenarioSpec, DEFAULT_CLIP_EPS};

fn glm(c: &mut Criterion) {
    let data = fixture(ScenarioKind::FrontDoor, 16, 10_000);
    let z = ScenarioKind::FrontDoor.z_block(1, 16);
    let x = data.select(&z).unwrap();
    let y = data.column("Y").unwrap();
    let treat = data.column("X").unwrap();
    let w = vec![1.0; data.n_rows()];
    c.bench_function("fit_wls n=1e4 d=16", |b| b.iter(|| fit_wls(x.view(), y, &w).unwrap()));
    c.bench_function("fit_logistic n=1e4 d=16", |b| {
        b.iter(|| fit_logistic(x.view(), treat, None, 1e-6).unwrap())
    });
    c.bench_function("frontdoor weights n=1e4 d=16", |b| {
        b.iter(|| frontdoor_stage_weights(&data, DEFAULT_CLIP_EPS).unwrap())
    });
}

fn training(c: &mut Criterion) {
    let data = fixture(ScenarioKind::FrontDoor, 16, 2_000);
    let x = data.select(&ScenarioKind::FrontDoor.z_block(1, 16)).unwrap();
    let y = data.column("Y").unwrap();
    let w = vec![1.0; data.n_rows()];
    let hp = Hyperparams {
        epochs: 1,
        ..Hyperparams::default()
    };
    let mlp = build_mlp(16, &hp, 3).unwrap();
    c.bench_function("train one epoch n=2000 d=16", |b| {
        b.iter(|| train(&mlp, x.view(), y, &w, &hp, 5).unwrap())
    });
}

fn sampling(c: &mut Criterion) {
    let scm = build_scenario(&ScenarioSpec::new(ScenarioKind::Msbd, 8, 7)).unwrap();
    c.bench_function("sample msbd n=1e4 d=8", |b| {
        b.iter_batched(|| 13, |seed| scm.sample(10_000, seed).unwrap(), BatchSize::SmallInput)
    });
}

criterion_group!(benches, glm, training, sampling);
criterion_main!(benches);
