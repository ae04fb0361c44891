use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, Criterion};
use seqval_core::{ModelConfig, PositionSequence, ValuationModel};

fn diagonal(cfg: &ModelConfig) -> PositionSequence {
    PositionSequence::parse("A1 B2 C3 D4 E5 F6", cfg.general.board).unwrap()
}

fn build(c: &mut Criterion) {
    let cfg = ModelConfig::default();
    let seq = diagonal(&cfg);
    c.bench_function("build_bank_default", |b| {
        b.iter(|| cfg.build_bank().unwrap())
    });
    let bank = cfg.build_bank().unwrap();
    c.bench_function("model_on_shared_bank", |b| {
        b.iter(|| ValuationModel::with_bank(Arc::clone(&bank), black_box(seq.clone())).unwrap())
    });
}

fn rank(c: &mut Criterion) {
    let cfg = ModelConfig::default();
    let seq = diagonal(&cfg);
    let model = ValuationModel::build(seq.clone(), &cfg).unwrap();
    c.bench_function("rank_continuations_144", |b| {
        b.iter(|| model.rank_continuations(black_box(&seq)).unwrap())
    });
    c.bench_function("reconstruct_diagonal", |b| {
        b.iter(|| model.reconstruct(2).unwrap())
    });
}

criterion_group!(benches, build, rank);
criterion_main!(benches);
