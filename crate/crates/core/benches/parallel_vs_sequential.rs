use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use teamcomp_core::escalation::{sweep, LoopConfig};
use teamcomp_core::inference::{run_trend, SamplingPlan, TrendConfig};
use teamcomp_core::mdp::{build_clinic_scenario, simulate_episodes_with, value_iteration, RewardSpec};
use teamcomp_core::signaling::{enumerate_equilibria_with, SignalingGame};
use teamcomp_core::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn equilibria(c: &mut Criterion) {
    let game = SignalingGame::appendix_default();
    let mut group = c.benchmark_group("enumerate_equilibria");
    for (name, exec) in MODES {
        group.bench_function(name, |b| b.iter(|| enumerate_equilibria_with(black_box(&game), exec).unwrap()));
    }
    group.finish();
}

fn episodes(c: &mut Criterion) {
    let mdp = build_clinic_scenario(10, 2, 0.0).unwrap();
    let policy = value_iteration(&mdp, 1e-9).unwrap().policy;
    let mut group = c.benchmark_group("simulate_episodes");
    for n in [10_000, 200_000] {
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, n), &n, |b, &n| {
                b.iter(|| simulate_episodes_with(&mdp, &policy, n, 7, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn escalation(c: &mut Criterion) {
    let configs: Vec<LoopConfig> = (0..16)
        .map(|i| {
            let mut cfg = LoopConfig::clinic(10, 2).unwrap();
            cfg.eta = i as f64 / 16.0;
            cfg
        })
        .collect();
    let mut group = c.benchmark_group("escalation_sweep");
    for (name, exec) in MODES {
        group.bench_function(name, |b| b.iter(|| sweep(black_box(&configs), exec).unwrap()));
    }
    group.finish();
}

fn inference(c: &mut Criterion) {
    let mdp = build_clinic_scenario(10, 2, 0.0).unwrap();
    let truth = RewardSpec::QuadraticH { target_shift: 2 };
    let configs: Vec<TrendConfig> = (0..8)
        .map(|i| TrendConfig { config_id: format!("c{i}"), sigma: 0.5 * (i + 1) as f64, kappa: 1.0, n: 2_000, seed: i })
        .collect();
    let mut group = c.benchmark_group("inference_trend");
    group.sample_size(20);
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| run_trend(&mdp, &truth, &configs, SamplingPlan::Uniform, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, equilibria, episodes, escalation, inference);
criterion_main!(benches);
