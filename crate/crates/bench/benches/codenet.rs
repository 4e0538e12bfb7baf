use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use codenet_core::cluster::{CostLedger, CostParams, FaultInjector, FaultSpec};
use codenet_core::dataset::synthetic;
use codenet_core::dnn::{self, layer_chain, Activation};
use codenet_core::runtime_model::{optimize_checkpoint_period, RuntimeModelParams, Scheme};
use codenet_core::strategies::{codenet_layer_cost, CodeNet, PlainGrid, StepContext, Strategy};
use codenet_core::{BlockVector, MdsCode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn codec(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for (k, t) in [(3, 1), (4, 2)] {
        let code = MdsCode::cauchy(k, t).unwrap();
        let msg: Vec<Vec<f64>> = (0..k)
            .map(|_| (0..64).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let mut word = code.encode(&msg).unwrap().into_blocks();
        for v in &mut word[1] {
            *v += 0.5;
        }
        let word = BlockVector::new(word).unwrap();
        c.bench_function(&format!("decode k={k} t={t}"), |b| {
            b.iter(|| code.decode(black_box(&word)).unwrap())
        });
    }
}

fn iterations(c: &mut Criterion) {
    let specs = layer_chain(&[784, 100, 100, 10], Activation::Sigmoid);
    let w0 = dnn::init_weights(&specs, 1);
    let sample = synthetic(1, 784, 10, 0.3, 1).remove(0);
    let mut run = |name: &str, mut s: Box<dyn Strategy>| {
        let mut inj = FaultInjector::new(FaultSpec::none());
        let mut ledger = CostLedger::new(CostParams::default());
        c.bench_function(name, |b| {
            b.iter(|| {
                let mut ctx = StepContext {
                    injector: &mut inj,
                    ledger: &mut ledger,
                    iteration: 0,
                    cursor: 0,
                };
                s.iterate(&mut ctx, &sample.x, &sample.y)
            })
        });
    };
    run(
        "codenet iteration 5x4 t=1",
        Box::new(CodeNet::new(specs.clone(), &w0, 5, 4, 1, 0.1).unwrap()),
    );
    run(
        "replication iteration 5x4",
        Box::new(PlainGrid::replication(specs.clone(), &w0, 5, 4, 0.1).unwrap()),
    );
    run(
        "uncoded iteration 5x8",
        Box::new(PlainGrid::uncoded(specs.clone(), &w0, 5, 8, 0.1).unwrap()),
    );
    c.bench_function("encode desk network", |b| {
        b.iter_batched(
            || w0.clone(),
            |w| CodeNet::new(specs.clone(), &w, 5, 4, 1, 0.1).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

fn models(c: &mut Criterion) {
    let params = RuntimeModelParams::poisson(1.0, 1.0, 1000.0, 1000.0, 1, 2000);
    c.bench_function("optimize checkpoint period M=2000", |b| {
        b.iter(|| optimize_checkpoint_period(black_box(&params), Scheme::CodeNet).unwrap())
    });
    c.bench_function("ledger dry run N=1e6", |b| {
        b.iter(|| {
            codenet_layer_cost(
                CostParams::default(),
                black_box(1_000_000),
                1_000_000,
                4,
                4,
                1,
                true,
                true,
            )
        })
    });
}

criterion_group!(benches, codec, iterations, models);
criterion_main!(benches);
