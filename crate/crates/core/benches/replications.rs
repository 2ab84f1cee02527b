use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use robust_aft::model::Hyperparams;
use robust_aft::numerics::{stream_id, RngStream};
use robust_aft::parallel::{effective_workers, map_indexed, map_indexed_sequential};
use robust_aft::sampler::{run_chain, McmcConfig, ModelKind};
use robust_aft::simulate::{generate_scenario, Scenario, ScenarioSpec, SCENARIO_STREAM_DOMAIN};

// One replication: generate a GA dataset and fit RGA to it.
fn replication(spec: &ScenarioSpec, mcmc: &McmcConfig, hyper: &Hyperparams, r: usize) -> f64 {
    let mut rng = RngStream::new(spec.seed, stream_id(SCENARIO_STREAM_DOMAIN, r as u64));
    let (data, _) = generate_scenario(&mut rng, spec).unwrap();
    let draws = run_chain(&data, hyper, &McmcConfig { seed: r as u64, ..mcmc.clone() }, ModelKind::Rga).unwrap();
    draws.alpha.iter().sum::<f64>()
}

fn bench_replications(c: &mut Criterion) {
    let mut spec = ScenarioSpec::new(Scenario::Ga, 0.1);
    spec.n = 100;
    let mcmc = McmcConfig { n_iter: 400, burn_in: 100, ..Default::default() };
    let hyper = Hyperparams::default_for(3);
    let reps = 8;
    let workers = effective_workers(0);

    let mut group = c.benchmark_group("replications");
    group.sample_size(10);
    group.bench_function(BenchmarkId::new("sequential", reps), |b| {
        b.iter(|| map_indexed_sequential(reps, |r| replication(&spec, &mcmc, &hyper, r)))
    });
    group.bench_function(BenchmarkId::new(format!("parallel_{workers}_workers"), reps), |b| {
        b.iter(|| map_indexed(reps, workers, |r| replication(&spec, &mcmc, &hyper, r)))
    });
    group.finish();
}

criterion_group!(benches, bench_replications);
criterion_main!(benches);
