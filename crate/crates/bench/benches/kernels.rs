use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use fpsolve_core::gridsolver::assemble_operator;
use fpsolve_core::neural::{forward, forward_jet, init_params, loss_and_grad_l1};
use fpsolve_core::sampler::Trajectory;
use fpsolve_core::{make_builtin, GridSpec, TrajectoryConfig};

fn em_steps(c: &mut Criterion) {
    for name in ["ring2d", "ring4d", "turb6d"] {
        let model = make_builtin(name).unwrap();
        let cfg = TrajectoryConfig { burn_in_time: 0.0, ..Default::default() };
        let mut traj = Trajectory::burned_in(&model, model.domain(), &cfg).unwrap();
        c.bench_function(&format!("em_1000_steps/{name}"), |b| {
            b.iter(|| black_box(traj.advance(1000).unwrap()[0]))
        });
    }
}

fn operator_assembly(c: &mut Criterion) {
    let model = make_builtin("ring2d").unwrap();
    for n in [50, 100] {
        let grid = GridSpec::new(model.domain().clone(), n).unwrap();
        c.bench_function(&format!("assemble_operator/ring2d_{n}"), |b| {
            b.iter(|| black_box(assemble_operator(&model, &grid).unwrap().rows()))
        });
    }
}

fn network(c: &mut Criterion) {
    let model = make_builtin("ring2d").unwrap();
    let params = init_params(&[2, 32, 32, 1], 1).unwrap();
    let x = [0.3, -0.7];
    c.bench_function("mlp/forward", |b| b.iter(|| black_box(forward(&params, black_box(&x)))));
    c.bench_function("mlp/forward_jet", |b| b.iter(|| black_box(forward_jet(&params, black_box(&x)).value)));
    let batch: Vec<Vec<f64>> = (0..128).map(|i| vec![(i as f64 / 64.0) - 1.0, 0.5]).collect();
    c.bench_function("mlp/residual_loss_grad_128", |b| {
        b.iter(|| black_box(loss_and_grad_l1(&model, &params, &batch).unwrap().0))
    });
}

criterion_group!(benches, em_steps, operator_assembly, network);
criterion_main!(benches);
