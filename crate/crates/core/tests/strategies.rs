use codenet_core::cluster::{
    ClockParams, CostLedger, CostParams, FaultInjector, FaultSpec, NodeId, NoiseKind, ScheduledFault, Step,
};
use codenet_core::dataset::{synthetic, Sample};
use codenet_core::dnn::{self, layer_chain, Activation, DnnState, LayerSpec};
use codenet_core::linalg::Matrix;
use codenet_core::strategies::{
    run_training, Checkpoint, CodeNet, ErrorFlag, Outcome, PlainGrid, RollbackCause, RunContext, Stage, StepContext,
    Strategy, TrainingConfig,
};
use codenet_core::MdsCode;

fn net() -> Vec<LayerSpec> {
    layer_chain(&[12, 9, 7, 4], Activation::Sigmoid)
}

fn data() -> Vec<Sample> {
    synthetic(16, 12, 4, 0.1, 3)
}

fn oracle(specs: &[LayerSpec], weights: &[Matrix], samples: &[Sample], steps: usize) -> Vec<Vec<Matrix>> {
    let mut s = DnnState::new(specs.to_vec(), weights.to_vec(), 0.1).unwrap();
    let mut out = Vec::new();
    for k in 0..steps {
        let smp = &samples[k % samples.len()];
        dnn::sgd_step(&mut s, &smp.x, &smp.y).unwrap();
        out.push(s.weights.clone());
    }
    out
}

fn dense() -> NoiseKind {
    NoiseKind::DenseGaussian { sigma: 1.0 }
}

fn schedule(faults: &[(u64, usize, Step, usize, usize)]) -> FaultInjector {
    let sched = faults
        .iter()
        .map(|&(iteration, layer, step, r, c)| ScheduledFault {
            iteration,
            layer,
            step,
            node: NodeId::new(r, c),
        })
        .collect();
    FaultInjector::new(FaultSpec::adversarial(sched, dense(), 11))
}

fn step(s: &mut dyn Strategy, inj: &mut FaultInjector, ledger: &mut CostLedger, k: u64, smp: &Sample) -> Outcome {
    let mut ctx = StepContext {
        injector: inj,
        ledger,
        iteration: k,
        cursor: k as u128,
    };
    s.iterate(&mut ctx, &smp.x, &smp.y).outcome
}

fn rel(a: &[Matrix], b: &[Matrix]) -> f64 {
    let scale = 1.0 + b.iter().map(Matrix::max_abs).fold(0.0, f64::max);
    dnn::weights_distance(a, b) / scale
}

#[test]
fn fault_free_strategies_follow_the_oracle() {
    let specs = net();
    let w0 = dnn::init_weights(&specs, 1);
    let samples = data();
    let expect = oracle(&specs, &w0, &samples, 12);
    let mut strategies: Vec<Box<dyn Strategy>> = vec![
        Box::new(CodeNet::new(specs.clone(), &w0, 3, 2, 1, 0.1).unwrap()),
        Box::new(CodeNet::new(specs.clone(), &w0, 2, 3, 2, 0.1).unwrap()),
        Box::new(PlainGrid::replication(specs.clone(), &w0, 2, 2, 0.1).unwrap()),
        Box::new(PlainGrid::uncoded(specs.clone(), &w0, 4, 3, 0.1).unwrap()),
    ];
    for s in &mut strategies {
        let mut inj = FaultInjector::new(FaultSpec::none());
        let mut ledger = CostLedger::new(CostParams::default());
        for (k, want) in expect.iter().enumerate() {
            let out = step(s.as_mut(), &mut inj, &mut ledger, k as u64, &samples[k % samples.len()]);
            assert_eq!(out, Outcome::Clean);
            assert!(
                dnn::weights_distance(&s.logical_weights(), want) < 1e-12,
                "{:?} at {k}",
                s.kind()
            );
        }
    }
}

#[test]
fn toy_codes_give_the_expected_parity_blocks() {
    let specs = layer_chain(&[4, 4], Activation::Identity);
    let w = Matrix::from_fn(4, 4, |r, c| (r * 4 + c) as f64 + 1.0);
    let gr = MdsCode::with_parity(Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, -1.0]])).unwrap();
    let gc = MdsCode::with_parity(Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 2.0]])).unwrap();
    let cn = CodeNet::with_codes(specs, std::slice::from_ref(&w), gr, gc, 0.1).unwrap();
    assert_eq!(cn.node_count(), 12);
    let g = cn.grid(0);
    let b = |i, j| g.get(i, j).clone();
    for j in 0..2 {
        let mut sum = b(0, j);
        sum.add_scaled(1.0, &b(1, j));
        assert_eq!(b(2, j), sum);
        let mut diff = b(0, j);
        diff.add_scaled(-1.0, &b(1, j));
        assert_eq!(b(3, j), diff);
    }
    for i in 0..2 {
        let mut s2 = b(i, 0);
        s2.add_scaled(1.0, &b(i, 1));
        assert_eq!(b(i, 2), s2);
        let mut s3 = b(i, 0);
        s3.add_scaled(2.0, &b(i, 1));
        assert_eq!(b(i, 3), s3);
    }
}

#[test]
fn single_o1_fault_is_corrected_and_regenerated() {
    let specs = net();
    let w0 = dnn::init_weights(&specs, 2);
    let samples = data();
    let expect = oracle(&specs, &w0, &samples, 3);
    let mut cn = CodeNet::new(specs, &w0, 2, 2, 1, 0.1).unwrap();
    let mut inj = schedule(&[(1, 1, Step::O1, 1, 0)]);
    let mut ledger = CostLedger::new(CostParams::default());
    let mut outcomes = Vec::new();
    for k in 0..3 {
        outcomes.push(step(&mut cn, &mut inj, &mut ledger, k, &samples[k as usize]));
    }
    assert_eq!(outcomes[0], Outcome::Clean);
    assert_eq!(
        outcomes[1],
        Outcome::Corrected(vec![ErrorFlag {
            layer: 1,
            stage: Stage::Feedforward,
            index: 1
        }])
    );
    assert_eq!(outcomes[2], Outcome::Clean);
    assert!(rel(&cn.logical_weights(), &expect[2]) < 1e-9);
    assert!(cn.parity_drift() < 1e-10);
}

#[test]
fn sparse_o1_fault_in_a_parity_row_is_corrected() {
    let specs = net();
    let w0 = dnn::init_weights(&specs, 3);
    let samples = data();
    let expect = oracle(&specs, &w0, &samples, 2);
    let mut cn = CodeNet::new(specs, &w0, 2, 2, 1, 0.1).unwrap();
    let sched = vec![ScheduledFault {
        iteration: 0,
        layer: 0,
        step: Step::O1,
        node: NodeId::new(3, 1),
    }];
    let noise = NoiseKind::SparseUniform {
        density: 0.5,
        lo: -5.0,
        hi: 5.0,
    };
    let mut inj = FaultInjector::new(FaultSpec::adversarial(sched, noise, 4));
    let mut ledger = CostLedger::new(CostParams::default());
    let first = step(&mut cn, &mut inj, &mut ledger, 0, &samples[0]);
    assert!(matches!(first, Outcome::Corrected(ref f) if f[0].index == 3));
    step(&mut cn, &mut inj, &mut ledger, 1, &samples[1]);
    assert!(rel(&cn.logical_weights(), &expect[1]) < 1e-9);
    assert!(cn.parity_drift() < 1e-10);
}

#[test]
fn o2_fault_flags_its_column() {
    let specs = net();
    let w0 = dnn::init_weights(&specs, 4);
    let samples = data();
    let expect = oracle(&specs, &w0, &samples, 1);
    let mut cn = CodeNet::new(specs, &w0, 2, 2, 1, 0.1).unwrap();
    let mut inj = schedule(&[(0, 2, Step::O2, 0, 1)]);
    let mut ledger = CostLedger::new(CostParams::default());
    let out = step(&mut cn, &mut inj, &mut ledger, 0, &samples[0]);
    assert_eq!(
        out,
        Outcome::Corrected(vec![ErrorFlag {
            layer: 2,
            stage: Stage::Backprop,
            index: 1
        }])
    );
    assert!(rel(&cn.logical_weights(), &expect[0]) < 1e-9);
}

#[test]
fn o3_fault_surfaces_next_iteration() {
    let specs = net();
    let w0 = dnn::init_weights(&specs, 5);
    let samples = data();
    let expect = oracle(&specs, &w0, &samples, 3);
    for (node, stage, index) in [
        ((1, 0), Stage::Feedforward, 1),
        ((3, 1), Stage::Feedforward, 3),
        ((0, 2), Stage::Backprop, 2),
    ] {
        let mut cn = CodeNet::new(specs.clone(), &w0, 2, 2, 1, 0.1).unwrap();
        let mut inj = schedule(&[(0, 1, Step::O3, node.0, node.1)]);
        let mut ledger = CostLedger::new(CostParams::default());
        assert_eq!(step(&mut cn, &mut inj, &mut ledger, 0, &samples[0]), Outcome::Clean);
        let second = step(&mut cn, &mut inj, &mut ledger, 1, &samples[1]);
        assert_eq!(
            second,
            Outcome::Corrected(vec![ErrorFlag { layer: 1, stage, index }]),
            "{node:?}"
        );
        step(&mut cn, &mut inj, &mut ledger, 2, &samples[2]);
        assert!(rel(&cn.logical_weights(), &expect[2]) < 1e-9);
    }
}

#[test]
fn too_many_errors_roll_back() {
    let specs = net();
    let w0 = dnn::init_weights(&specs, 6);
    let samples = data();
    let mut cn = CodeNet::new(specs, &w0, 2, 2, 1, 0.1).unwrap();
    let mut inj = schedule(&[(0, 0, Step::O1, 0, 0), (0, 0, Step::O1, 2, 1)]);
    let mut ledger = CostLedger::new(CostParams::default());
    let out = step(&mut cn, &mut inj, &mut ledger, 0, &samples[0]);
    assert_eq!(out, Outcome::RolledBack(RollbackCause::TooManyErrors));
}

#[test]
fn replication_mismatch_rolls_back() {
    let specs = net();
    let w0 = dnn::init_weights(&specs, 7);
    let samples = data();
    let mut rep = PlainGrid::replication(specs, &w0, 2, 2, 0.1).unwrap();
    let sched = vec![ScheduledFault {
        iteration: 0,
        layer: 1,
        step: Step::O2,
        node: NodeId::replica(1, 0, 0),
    }];
    let mut inj = FaultInjector::new(FaultSpec::adversarial(sched, dense(), 1));
    let mut ledger = CostLedger::new(CostParams::default());
    let out = step(&mut rep, &mut inj, &mut ledger, 0, &samples[0]);
    assert_eq!(out, Outcome::RolledBack(RollbackCause::ReplicaMismatch));
}

#[test]
fn mirrored_fault_goes_unnoticed_by_replication() {
    let specs = net();
    let w0 = dnn::init_weights(&specs, 8);
    let samples = data();
    let mut rep = PlainGrid::replication(specs, &w0, 2, 2, 0.1).unwrap();
    let sched = (0..2)
        .map(|r| ScheduledFault {
            iteration: 0,
            layer: 0,
            step: Step::O1,
            node: NodeId::replica(r, 1, 1),
        })
        .collect();
    let mut inj = FaultInjector::new(FaultSpec::adversarial(sched, dense(), 1));
    let mut ledger = CostLedger::new(CostParams::default());
    assert_eq!(step(&mut rep, &mut inj, &mut ledger, 0, &samples[0]), Outcome::Clean);
}

fn train(
    strategy: &mut dyn Strategy,
    inj: &mut FaultInjector,
    samples: &[Sample],
    config: &TrainingConfig,
    resume: Option<Checkpoint>,
) -> (codenet_core::strategies::RunSummary, Vec<String>) {
    let mut ledger = CostLedger::new(CostParams::default());
    let mut outcomes = Vec::new();
    let summary = run_training(
        strategy,
        RunContext {
            injector: inj,
            ledger: &mut ledger,
        },
        samples,
        samples,
        config,
        resume,
        |r| outcomes.push(r.outcome.clone()),
    )
    .unwrap();
    (summary, outcomes)
}

#[test]
fn loop_clock_follows_outcomes() {
    let specs = net();
    let w0 = dnn::init_weights(&specs, 9);
    let samples = data();
    let clock = ClockParams {
        tau_f: 1.0,
        tau_b: 50.0,
        tau_cpt: 20.0,
    };
    let config = TrainingConfig {
        clock,
        ..TrainingConfig::new(10, 5)
    };

    let mut cn = CodeNet::new(specs.clone(), &w0, 2, 2, 1, 0.1).unwrap();
    let (s, _) = train(
        &mut cn,
        &mut FaultInjector::new(FaultSpec::none()),
        &samples,
        &config,
        None,
    );
    assert_eq!((s.clean, s.checkpoints, s.attempts), (10, 2, 10));
    assert_eq!(s.coarse_time, 2.0 * 20.0 + 10.0);
    assert!(dnn::weights_distance(&cn.logical_weights(), oracle(&specs, &w0, &samples, 10).last().unwrap()) < 1e-12);

    let mut cn = CodeNet::new(specs.clone(), &w0, 2, 2, 1, 0.1).unwrap();
    let mut inj = schedule(&[(5, 0, Step::O1, 0, 1)]);
    let (s, outcomes) = train(&mut cn, &mut inj, &samples, &config, None);
    assert_eq!((s.clean, s.corrected, s.rollbacks), (9, 1, 0));
    assert_eq!(outcomes[5], "corrected");
    assert_eq!(s.coarse_time, 2.0 * 20.0 + 9.0 + 50.0);

    let mut rep = PlainGrid::replication(specs.clone(), &w0, 2, 2, 0.1).unwrap();
    let mut inj = schedule(&[(5, 0, Step::O1, 0, 1)]);
    let (s, _) = train(&mut rep, &mut inj, &samples, &config, None);
    assert_eq!((s.rollbacks, s.attempts, s.iterations), (1, 11, 10));
    assert!(
        dnn::weights_distance(
            &rep.logical_weights(),
            oracle(&specs, &w0, &samples, 10).last().unwrap()
        ) < 1e-12
    );
}

#[test]
fn resume_matches_uninterrupted_run() {
    let specs = net();
    let w0 = dnn::init_weights(&specs, 10);
    let samples = data();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.ckpt");
    let spec = FaultSpec::probabilistic(2e-3, NoiseKind::default_sparse(), 77);

    let mut full = CodeNet::new(specs.clone(), &w0, 2, 2, 1, 0.1).unwrap();
    let config = TrainingConfig::new(30, 10);
    train(
        &mut full,
        &mut FaultInjector::new(spec.clone()),
        &samples,
        &config,
        None,
    );

    let mut part = CodeNet::new(specs.clone(), &w0, 2, 2, 1, 0.1).unwrap();
    let crash = TrainingConfig {
        checkpoint_path: Some(path.clone()),
        ..TrainingConfig::new(21, 10)
    };
    train(&mut part, &mut FaultInjector::new(spec.clone()), &samples, &crash, None);
    let ck = Checkpoint::load(&path).unwrap();
    assert_eq!(ck.iteration, 20);

    let mut resumed = CodeNet::new(specs, &w0, 2, 2, 1, 0.1).unwrap();
    train(&mut resumed, &mut FaultInjector::new(spec), &samples, &config, Some(ck));
    assert_eq!(resumed.stored_blocks(), full.stored_blocks());
}
