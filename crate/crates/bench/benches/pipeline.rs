use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dgsite::{
    build_state_set, cases, pso_optimize, solve, CandidateBuses, DgModels, Evaluator, InjectionSet, PenetrationSpec,
    PsoSettings, ScenarioSettings, SearchSpace, SizingRules, SweepSettings, VoltageLimits,
};

fn sweep(c: &mut Criterion) {
    let net = cases::ieee33();
    let inj = InjectionSet::from_loads(&net);
    let settings = SweepSettings::default();
    c.bench_function("sweep/ieee33_base", |b| b.iter(|| solve(black_box(&net), black_box(&inj), &settings).unwrap()));
}

fn states(c: &mut Criterion) {
    let (wind, solar) = (cases::wind_profile(), cases::solar_profile());
    let mut group = c.benchmark_group("state_set");
    for m in [1usize, 10, 100] {
        let settings = ScenarioSettings {
            samples_per_hour: m,
            ..Default::default()
        };
        group.bench_with_input(BenchmarkId::from_parameter(m), &settings, |b, s| {
            b.iter(|| build_state_set(&wind, &solar, s, 42).unwrap())
        });
    }
    group.finish();
}

fn evaluate(c: &mut Criterion) {
    let net = cases::ieee33();
    let states = build_state_set(&cases::wind_profile(), &cases::solar_profile(), &ScenarioSettings::default(), 42).unwrap();
    let models = DgModels::default();
    let eval = Evaluator::new(&net, &states, &models, VoltageLimits::default());
    let alloc = cases::reference_allocation();
    c.bench_function("evaluate/reference_240_states", |b| b.iter(|| eval.evaluate(black_box(&alloc)).unwrap()));
}

fn swarm(c: &mut Criterion) {
    let net = cases::ieee33();
    let states = build_state_set(
        &cases::wind_profile(),
        &cases::solar_profile(),
        &ScenarioSettings {
            samples_per_hour: 1,
            ..Default::default()
        },
        42,
    )
    .unwrap();
    let models = DgModels::default();
    let eval = Evaluator::new(&net, &states, &models, VoltageLimits::default());
    let space =
        SearchSpace::new(&net, PenetrationSpec::default(), SizingRules::default(), &CandidateBuses::default()).unwrap();
    let settings = PsoSettings {
        swarm_size: 20,
        iterations: 10,
        ..Default::default()
    };
    let mut group = c.benchmark_group("pso");
    group.sample_size(10);
    for threads in [1usize, 4] {
        group.bench_with_input(BenchmarkId::new("ieee33_24_states", threads), &threads, |b, &t| {
            b.iter(|| pso_optimize(&eval, &space, &settings, t).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, sweep, states, evaluate, swarm);
criterion_main!(benches);
